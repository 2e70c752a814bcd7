#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "cfk/cross_validation.hpp"
#include "cfk/dataset.hpp"
#include "cfk/error.hpp"
#include "cfk/feature_matrix.hpp"
#include "cfk/features.hpp"
#include "cfk/model_io.hpp"
#include "cfk/occlusion.hpp"
#include "cfk/preprocess.hpp"
#include "cfk/report.hpp"
#include "cfk/responses.hpp"
#include "cfk/service.hpp"
#include "cfk/session.hpp"
#include "cfk/stats.hpp"
#include "cfk/synthetic.hpp"

namespace fs = std::filesystem;

namespace cfk::cli {

void log(const Global& g, const std::string& message) {
  if (!g.quiet) std::cerr << "[cfk] " << message << '\n';
}

RunLog::RunLog(const Global& g, std::string command) : g_(g), command_(std::move(command)) {}

void RunLog::arg(const std::string& key, nlohmann::json value) { args_[key] = std::move(value); }

void RunLog::output(const fs::path& path) {
  outputs_.push_back(fs::relative(path, g_.out).generic_string());
}

void RunLog::commit() {
  const fs::path path = g_.out / "run_manifest.json";
  nlohmann::json doc = {{"tool", "cfk"}, {"version", 1}, {"runs", nlohmann::json::object()}};
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception&) {
      // A damaged manifest is rebuilt from scratch.
    }
  }
  std::sort(outputs_.begin(), outputs_.end());
  outputs_.erase(std::unique(outputs_.begin(), outputs_.end()), outputs_.end());
  doc["runs"][command_] = {{"seed", g_.seed}, {"args", args_}, {"outputs", outputs_}};
  fs::create_directories(g_.out);
  std::ofstream out(path, std::ios::binary);
  out << doc.dump(2) << '\n';
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
}

fs::path manifest_path(const Global& g, const std::string& arg) {
  if (!arg.empty()) return arg;
  const fs::path p = g.out / "ingest" / "manifest.json";
  if (!fs::exists(p)) {
    throw Error(ErrorCode::MissingInputs, "no --manifest given and " + p.string() + " does not exist (run `cfk ingest`)");
  }
  return p;
}

DatasetManifest load(const Global& g, const std::string& arg) { return load_manifest(manifest_path(g, arg)); }

std::vector<FeatureFamily> parse_families(const std::vector<std::string>& names) {
  std::vector<FeatureFamily> out;
  for (const auto& n : names) {
    std::stringstream ss(n);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(parse_family(item));
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "at least one --family is required");
  return out;
}

std::vector<ResponseRecord> read_responses(const std::vector<std::string>& paths) {
  std::vector<ResponseRecord> all;
  for (const auto& p : paths) {
    std::vector<fs::path> files;
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().extension() == ".jsonl") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
    } else {
      files.push_back(p);
    }
    for (const auto& f : files) {
      auto r = read_jsonl(f);
      all.insert(all.end(), r.begin(), r.end());
    }
  }
  return all;
}

std::vector<ResponseRecord> filter_condition(const std::vector<ResponseRecord>& all, Condition c) {
  std::vector<ResponseRecord> out;
  for (const auto& r : all) {
    if (r.condition == c) out.push_back(r);
  }
  return out;
}

FeatureMatrix load_features(const Global& g, FeatureFamily f) {
  const fs::path p = g.out / "features" / (std::string(to_string(f)) + ".cfkm");
  if (!fs::exists(p)) {
    throw Error(ErrorCode::MissingInputs,
                "feature matrix " + p.string() + " is missing (run `cfk extract --family " + std::string(to_string(f)) + "`)");
  }
  return read_feature_matrix(p);
}

Eigen::MatrixXd rows_for(const FeatureMatrix& m, const std::vector<std::string>& ids) { return m.select(ids).values; }

ModelScore score_of(const std::string& name, const FeatureMatrix& m, std::size_t n, const CvResult& cv) {
  ModelScore s;
  s.name = name;
  s.dims = m.cols();
  s.n_faces = n;
  s.df = cv.mean_retained;
  s.mean = cv.mean;
  s.std = cv.std;
  s.per_split = cv.per_split_score;
  return s;
}

// Per-face out-of-fold columns keyed by face id.
struct OofTable {
  std::vector<std::string> ids;
  std::map<std::string, std::vector<double>> columns;

  std::vector<double> column(const std::string& name, const std::vector<std::string>& order) const {
    std::map<std::string, double> by_id;
    const auto& col = columns.at(name);
    for (std::size_t i = 0; i < ids.size(); ++i) by_id[ids[i]] = col[i];
    std::vector<double> out;
    for (const auto& id : order) {
      const auto it = by_id.find(id);
      out.push_back(it == by_id.end() ? std::numeric_limits<double>::quiet_NaN() : it->second);
    }
    return out;
  }
};

void write_oof(const fs::path& path, const std::vector<std::string>& ids,
               const std::vector<std::pair<std::string, std::vector<double>>>& cols) {
  std::ostringstream out;
  out << "face_id";
  for (const auto& [name, v] : cols) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (const auto& [name, v] : cols) out << ',' << fmt("%.17g", v[i]);
    out << '\n';
  }
  write_file(path, out.str());
}

OofTable read_oof(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  OofTable t;
  std::string line;
  std::vector<std::string> header;
  if (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  for (std::size_t c = 1; c < header.size(); ++c) t.columns[header[c]];
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    t.ids.push_back(cell);
    for (std::size_t c = 1; c < header.size(); ++c) {
      std::getline(ss, cell, ',');
      t.columns[header[c]].push_back(std::strtod(cell.c_str(), nullptr));
    }
  }
  return t;
}

std::vector<fs::path> files_with_suffix(const fs::path& dir, const std::string& suffix) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string stem_before(const fs::path& p, const std::string& suffix) {
  const std::string name = p.filename().string();
  return name.substr(0, name.size() - suffix.size());
}

std::map<std::string, double> read_accuracy_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::map<std::string, double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::SchemaViolation, path.string() + ": expected face_id,accuracy");
    const std::string id = line.substr(0, comma);
    if (id == "face_id") continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str() + comma + 1, &end);
    if (end == line.c_str() + comma + 1) throw Error(ErrorCode::SchemaViolation, path.string() + ": bad accuracy for " + id);
    out[id] = v;
  }
  return out;
}

}  // namespace

void run_ingest(const Global& g, const IngestArgs& a) {
  RunLog run(g, "ingest");
  LoadOptions opts;
  opts.check_images = !a.skip_image_check;
  DatasetManifest m;
  if (!a.cnsifd.empty()) {
    m = load_cnsifd(a.cnsifd, opts);
    run.arg("cnsifd", a.cnsifd);
  } else {
    if (a.manifest.empty()) throw Error(ErrorCode::InvalidArgument, "ingest needs --manifest or --cnsifd");
    m = load_manifest(a.manifest, opts);
    run.arg("manifest", a.manifest);
  }
  // Absolute image paths so the copy works from any directory.
  for (auto& f : m.faces) f.image_path = fs::absolute(m.resolve_image(f)).lexically_normal();
  const LabelCounts c = m.counts();
  nlohmann::json report;
  report["faces"] = c.total;
  report["race"] = nlohmann::json::object();
  for (const auto& [r, n] : c.race) report["race"][std::string(to_string(r))] = n;
  report["gender"] = nlohmann::json::object();
  for (const auto& [gd, n] : c.gender) report["gender"][std::string(to_string(gd))] = n;
  report["with_age"] = c.with_age;
  report["with_height"] = c.with_height;
  report["with_weight"] = c.with_weight;
  report["reference_face_id"] = m.reference_face_id;
  report["valid"] = true;
  const fs::path dir = g.out / "ingest";
  save_manifest(m, dir / "manifest.json");
  write_json(dir / "report.json", report);
  run.output(dir / "manifest.json");
  run.output(dir / "report.json");
  run.commit();
  log(g, "ingested " + std::to_string(c.total) + " faces");
}

void run_preprocess(const Global& g, const PreprocessArgs& a) {
  RunLog run(g, "preprocess");
  const DatasetManifest m = load(g, a.manifest);
  run.arg("manifest", manifest_path(g, a.manifest).string());
  run.arg("equalize", !a.no_equalize);
  const auto faces = preprocess_manifest(m, !a.no_equalize, g.jobs);
  const fs::path dir = g.out / "preprocess";
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "landmarks");
  nlohmann::json index = nlohmann::json::array();
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const std::string& id = m.faces[i].face_id;
    write_png(faces[i].image, dir / "images" / (id + ".png"));
    write_landmark_csv(faces[i].landmarks, dir / "landmarks" / (id + ".csv"));
    const auto& t = faces[i].transform;
    index.push_back({{"face_id", id},
                     {"rotation", t.rotation},
                     {"scale", t.scale},
                     {"dx", t.dx},
                     {"dy", t.dy},
                     {"chin_to_brow", chin_to_brow_distance(faces[i].landmarks, m.part_index_map)}});
    run.output(dir / "images" / (id + ".png"));
    run.output(dir / "landmarks" / (id + ".csv"));
  }
  write_json(dir / "index.json", index);
  run.output(dir / "index.json");
  run.commit();
  log(g, "normalized " + std::to_string(faces.size()) + " faces");
}

void run_extract(const Global& g, const ExtractArgs& a) {
  RunLog run(g, "extract");
  const DatasetManifest m = load(g, a.manifest);
  const auto families = parse_families(a.families);
  run.arg("manifest", manifest_path(g, a.manifest).string());
  run.arg("families", a.families);
  run.arg("equalize", !a.no_equalize);
  const fs::path dir = g.out / "features";
  fs::create_directories(dir);

  std::vector<std::string> ids;
  for (const auto& f : m.faces) ids.push_back(f.face_id);
  std::optional<std::vector<NormalizedFace>> faces;
  const ExtractionContext ctx = ExtractionContext::for_manifest(m);
  for (FeatureFamily fam : families) {
    const std::string name(to_string(fam));
    FeatureMatrix fm;
    if (is_ingested(fam)) {
      if (a.cnn_file.empty()) throw Error(ErrorCode::InvalidArgument, name + " vectors are ingested; pass --cnn-file");
      IngestResult r = ingest_cnn_features(a.cnn_file, fam, &m);
      for (const auto& w : r.warnings) log(g, "warning: " + w);
      if (!r.missing.empty()) log(g, "warning: " + std::to_string(r.missing.size()) + " faces have no " + name + " vector");
      fm = std::move(r.matrix);
      run.arg("cnn_file", a.cnn_file);
    } else {
      if (!faces) {
        log(g, "normalizing " + std::to_string(m.faces.size()) + " faces");
        faces = preprocess_manifest(m, !a.no_equalize, g.jobs);
      }
      fm = extract_matrix(fam, *faces, ids, ctx, g.jobs);
    }
    write_feature_matrix(fm, dir / (name + ".cfkm"));
    run.output(dir / (name + ".cfkm"));
    if (a.csv) {
      write_feature_csv(fm, dir / (name + ".csv"));
      run.output(dir / (name + ".csv"));
    }
    std::cout << name << " " << fm.rows() << "x" << fm.cols() << "\n";
    log(g, "extracted " + name + ": " + std::to_string(fm.rows()) + " faces x " + std::to_string(fm.cols()) + " dims");
  }
  run.commit();
}

void run_train(const Global& g, const TrainArgs& a) {
  RunLog run(g, "train:" + a.task);
  const DatasetManifest m = load(g, a.manifest);
  std::map<std::string, int> labels;
  if (a.task == "race") {
    labels = race_labels(m);
  } else if (a.task == "gender") {
    labels = gender_labels(m);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown task '" + a.task + "' (race|gender)");
  }
  run.arg("task", a.task);
  run.arg("families", a.families);
  run.arg("k", a.k);
  run.arg("repeats", a.repeats);
  run.arg("variance", a.variance);
  std::vector<std::string> ids;
  for (const auto& f : m.faces) {
    if (labels.count(f.face_id)) ids.push_back(f.face_id);
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) y(static_cast<Eigen::Index>(i)) = labels.at(ids[i]);

  CvOptions opts;
  opts.k = a.k;
  opts.repeats = a.repeats;
  opts.seed = g.seed;  // shared across families so splits are paired
  opts.variance_target = a.variance;
  opts.jobs = g.jobs;
  const fs::path dir = g.out / "train" / a.task;
  fs::create_directories(dir);
  for (FeatureFamily fam : parse_families(a.families)) {
    const std::string name(to_string(fam));
    const FeatureMatrix fm = load_features(g, fam);
    const Eigen::MatrixXd X = rows_for(fm, ids);
    const CvResult cv = cross_validate(X, y, Task::Classify, opts);
    write_json(dir / (name + ".score.json"), to_json(score_of(name, fm, ids.size(), cv)));
    write_cv_csv(cv, dir / (name + ".cv.csv"));

    std::vector<double> label(ids.size()), p_correct(ids.size(), 0.0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      label[i] = y(static_cast<Eigen::Index>(i));
      for (const auto& split : cv.predictions) p_correct[i] += split[i] == label[i] ? 1.0 : 0.0;
      p_correct[i] /= static_cast<double>(cv.predictions.size());
    }
    write_oof(dir / (name + ".oof.csv"), ids,
              {{"label", label}, {"mean_prediction", cv.mean_prediction()}, {"mean_score", cv.mean_score()},
               {"p_correct", p_correct}});

    TrainedModel tm;
    tm.family = fam;
    tm.target = a.task;
    tm.model = fit_fold_model(X, y, Task::Classify, opts, derive_seed(g.seed, 0xF17A1));
    tm.cv_k = a.k;
    tm.cv_repeats = a.repeats;
    tm.cv_seed = g.seed;
    tm.cv_mean = cv.mean;
    tm.cv_std = cv.std;
    tm.n_faces = ids.size();
    write_model(tm, dir / (name + ".model"));
    for (const char* ext : {".score.json", ".cv.csv", ".oof.csv", ".model"}) run.output(dir / (name + ext));
    std::cout << a.task << " " << name << " accuracy " << fmt("%.4f", cv.mean) << " +/- " << fmt("%.4f", cv.std)
              << " df " << fmt("%.1f", cv.mean_retained) << "\n";
    log(g, a.task + " " + name + ": " + fmt("%.2f%%", 100.0 * cv.mean));
  }
  run.commit();
}

void run_regress(const Global& g, const RegressArgs& a) {
  RunLog run(g, "regress:" + a.attribute);
  const DatasetManifest m = load(g, a.manifest);
  run.arg("attribute", a.attribute);
  run.arg("families", a.families);
  run.arg("k", a.k);
  run.arg("repeats", a.repeats);
  run.arg("variance", a.variance);
  CvOptions opts;
  opts.k = a.k;
  opts.repeats = a.repeats;
  opts.seed = g.seed;
  opts.variance_target = a.variance;
  opts.jobs = g.jobs;
  opts.lasso.inner_folds = a.inner_folds;
  const fs::path dir = g.out / "regress" / a.attribute;
  fs::create_directories(dir);

  if (a.attribute == "human-accuracy") {
    if (a.responses.empty()) throw Error(ErrorCode::MissingInputs, "human-accuracy regression needs --responses");
    run.arg("responses", a.responses);
    const auto resp = filter_condition(read_responses(a.responses), Condition::None);
    const PerFaceAccuracy acc = per_face_accuracy(resp);
    const auto labels = race_labels(m);
    std::vector<std::string> ids;
    std::vector<int> cls;
    for (const auto& f : m.faces) {
      if (labels.count(f.face_id) && acc.faces.count(f.face_id)) {
        ids.push_back(f.face_id);
        cls.push_back(labels.at(f.face_id));
      }
    }
    Eigen::VectorXd y(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) y(static_cast<Eigen::Index>(i)) = acc.faces.at(ids[i]).accuracy;
    for (FeatureFamily fam : parse_families(a.families)) {
      const std::string name(to_string(fam));
      const FeatureMatrix fm = load_features(g, fam);
      const auto pred = predict_human_accuracy(rows_for(fm, ids), y, cls, opts);
      ModelScore s;
      s.name = name;
      s.dims = fm.cols();
      s.n_faces = ids.size();
      s.mean = pred.mean_r;
      s.std = pred.std_r;
      s.per_split = pred.per_split_r;
      write_json(dir / (name + ".score.json"), to_json(s));
      std::vector<double> target(y.data(), y.data() + y.size());
      write_oof(dir / (name + ".oof.csv"), ids, {{"target", target}, {"mean_prediction", pred.mean_prediction()}});
      run.output(dir / (name + ".score.json"));
      run.output(dir / (name + ".oof.csv"));
      std::cout << "human-accuracy " << name << " r " << fmt("%.4f", pred.mean_r) << " +/- " << fmt("%.4f", pred.std_r)
                << "\n";
    }
    run.commit();
    return;
  }

  std::vector<std::string> ids;
  std::vector<double> values;
  for (const auto& f : m.faces) {
    std::optional<double> v;
    if (a.attribute == "age") {
      v = f.labels.age;
    } else if (a.attribute == "height") {
      v = f.labels.height;
    } else if (a.attribute == "weight") {
      v = f.labels.weight;
    } else {
      throw Error(ErrorCode::InvalidArgument,
                  "unknown attribute '" + a.attribute + "' (age|height|weight|human-accuracy)");
    }
    if (v) {
      ids.push_back(f.face_id);
      values.push_back(*v);
    }
  }
  if (ids.size() < static_cast<std::size_t>(a.k)) {
    throw Error(ErrorCode::TooFewFaces, std::to_string(ids.size()) + " faces carry " + a.attribute);
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  for (FeatureFamily fam : parse_families(a.families)) {
    const std::string name(to_string(fam));
    const FeatureMatrix fm = load_features(g, fam);
    const Eigen::MatrixXd X = rows_for(fm, ids);
    const CvResult cv = cross_validate(X, y, Task::Regress, opts);
    write_json(dir / (name + ".score.json"), to_json(score_of(name, fm, ids.size(), cv)));
    write_cv_csv(cv, dir / (name + ".cv.csv"));
    write_oof(dir / (name + ".oof.csv"), ids, {{"target", values}, {"mean_prediction", cv.mean_prediction()}});
    TrainedModel tm;
    tm.family = fam;
    tm.target = a.attribute;
    tm.model = fit_fold_model(X, y, Task::Regress, opts, derive_seed(g.seed, 0xF17A1));
    tm.cv_k = a.k;
    tm.cv_repeats = a.repeats;
    tm.cv_seed = g.seed;
    tm.cv_mean = cv.mean;
    tm.cv_std = cv.std;
    tm.n_faces = ids.size();
    write_model(tm, dir / (name + ".model"));
    for (const char* ext : {".score.json", ".cv.csv", ".oof.csv", ".model"}) run.output(dir / (name + ext));
    std::cout << a.attribute << " " << name << " r " << fmt("%.4f", cv.mean) << " +/- " << fmt("%.4f", cv.std) << "\n";
  }
  run.commit();
}

void run_analyze(const Global& g, const AnalyzeArgs& a) {
  RunLog run(g, "analyze");
  const fs::path dir = g.out / "analysis";
  fs::create_directories(dir);
  run.arg("responses", a.responses);
  run.arg("scheme", a.scheme);
  run.arg("draws", a.draws);
  run.arg("n_boot", a.n_boot);

  AnalysisSummary summary;
  std::optional<DatasetManifest> manifest;
  if (!a.manifest.empty() || fs::exists(g.out / "ingest" / "manifest.json")) manifest = load(g, a.manifest);
  if (manifest) summary.n_faces = manifest->faces.size();

  // Human side.
  std::vector<ResponseRecord> all_responses;
  std::vector<ResponseRecord> intact;
  std::optional<PerFaceAccuracy> human;
  if (!a.responses.empty()) {
    all_responses = read_responses(a.responses);
    intact = filter_condition(all_responses, Condition::None);
    AccuracyOptions ao;
    if (manifest) {
      for (const auto& [id, l] : race_labels(*manifest)) ao.expected_faces.push_back(id);
    }
    human = per_face_accuracy(intact, ao);
    for (const auto& w : human->warnings) log(g, "warning: " + w);
    summary.human_mean_accuracy = human->mean_accuracy();
    std::set<std::string> subjects;
    for (const auto& r : intact) subjects.insert(r.subject_id.empty() ? r.session_id : r.subject_id);
    summary.n_subjects = subjects.size();
    const SplitScheme scheme = a.scheme == "random" ? SplitScheme::Random : SplitScheme::EvenOdd;
    if (subjects.size() >= 2) summary.reliability = split_half_reliability(intact, scheme, a.draws, g.seed);

    std::ostringstream csv;
    csv << "face_id,n_responses,n_correct,accuracy\n";
    for (const auto& [id, fa] : human->faces) {
      csv << id << ',' << fa.n_responses << ',' << fa.n_correct << ',' << fmt("%.17g", fa.accuracy) << '\n';
    }
    write_file(dir / "human_accuracy.csv", csv.str());
    run.output(dir / "human_accuracy.csv");
  }

  // Race table: classifier accuracy, correlation with humans, human-accuracy regression.
  ScoreColumn race{"race", "accuracy", {}}, human_corr{"human", "corr", {}}, human_reg{"human-regress", "corr", {}};
  std::vector<ModelScore> race_scores, corr_scores;
  std::map<std::string, OofTable> race_oof;
  for (const auto& p : files_with_suffix(g.out / "train" / "race", ".score.json")) {
    race_scores.push_back(model_score_from_json(read_json(p)));
    const std::string name = stem_before(p, ".score.json");
    const fs::path oof = g.out / "train" / "race" / (name + ".oof.csv");
    if (fs::exists(oof)) race_oof[name] = read_oof(oof);
  }
  std::vector<std::string> human_ids;
  std::vector<double> human_acc;
  if (human) {
    for (const auto& [id, fa] : human->faces) {
      human_ids.push_back(id);
      human_acc.push_back(fa.accuracy);
    }
  }
  if (human && !race_scores.empty()) {
    ModelScore h;
    h.name = "Human";
    h.reference = true;
    h.n_faces = human_ids.size();
    h.mean = *summary.human_mean_accuracy;
    race_scores.push_back(h);
    if (summary.reliability) {
      ModelScore hr = h;
      hr.mean = summary.reliability->rc;
      corr_scores.push_back(hr);
    }
  }
  std::vector<std::string> entity_names;
  std::vector<std::vector<double>> entity_vectors;
  if (human && !race_oof.empty()) {
    std::uint64_t stream = 0;
    for (const auto& [name, t] : race_oof) {
      const std::vector<double> pc = t.column("p_correct", human_ids);
      std::vector<double> x, yv;
      for (std::size_t i = 0; i < pc.size(); ++i) {
        if (std::isfinite(pc[i])) {
          x.push_back(pc[i]);
          yv.push_back(human_acc[i]);
        }
      }
      if (x.size() < 3) continue;
      const auto bc = model_human_correlation(x, yv, a.n_boot, derive_seed(g.seed, stream++), g.jobs);
      ModelScore s;
      s.name = name;
      s.n_faces = x.size();
      s.mean = bc.r;
      s.std = bc.sem;
      for (const auto& rs : race_scores) {
        if (rs.name == name) {
          s.df = rs.df;
          s.dims = rs.dims;
        }
      }
      corr_scores.push_back(s);
      entity_names.push_back(name);
      entity_vectors.push_back(pc);
    }
    entity_names.push_back("Human");
    entity_vectors.push_back(human_acc);
    const CorrelationMatrix cm = correlation_matrix(entity_names, entity_vectors);
    write_correlation_csv(cm, dir / "correlation.csv");
    run.output(dir / "correlation.csv");
  }
  race.rows = rank_models(race_scores);
  human_corr.rows = rank_models(corr_scores);
  std::vector<ModelScore> reg_scores;
  for (const auto& p : files_with_suffix(g.out / "regress" / "human-accuracy", ".score.json")) {
    reg_scores.push_back(model_score_from_json(read_json(p)));
  }
  human_reg.rows = rank_models(reg_scores);
  for (auto* c : {&race, &human_corr, &human_reg}) {
    if (!c->rows.empty()) summary.classification.push_back(*c);
  }

  // Whole-face vs part predictions.
  {
    std::map<std::string, std::vector<double>> whole, parts;
    std::vector<std::string> ids;
    if (!race_oof.empty()) ids = race_oof.begin()->second.ids;
    for (const auto& [name, t] : race_oof) {
      const auto v = t.column("mean_prediction", ids);
      if (name == "E" || name == "N" || name == "M") {
        parts[name] = v;
      } else if (name != "C" && name != "IP" && name != "ENMC") {
        whole[name] = v;
      }
    }
    if (!whole.empty() && !parts.empty()) {
      std::ostringstream csv;
      csv << "model,part,r\n";
      for (const auto& pc : part_prediction_correlation(whole, parts)) {
        csv << pc.model << ',' << pc.part << ',' << fmt("%.6f", pc.r) << '\n';
      }
      write_file(dir / "part_correlation.csv", csv.str());
      run.output(dir / "part_correlation.csv");
    }
  }

  // Human-human vs model-model agreement of correct-response patterns.
  if (human && race_oof.size() >= 2) {
    std::map<std::string, std::map<std::string, double>> by_subject;
    for (const auto& r : effective_responses(intact)) {
      by_subject[r.subject_id.empty() ? r.session_id : r.subject_id][r.face_id] = *r.correct ? 1.0 : 0.0;
    }
    std::vector<std::vector<double>> humans, models;
    for (const auto& [s, faces] : by_subject) {
      std::vector<double> v;
      for (const auto& id : human_ids) {
        const auto it = faces.find(id);
        v.push_back(it == faces.end() ? std::numeric_limits<double>::quiet_NaN() : it->second);
      }
      humans.push_back(std::move(v));
    }
    for (const auto& [name, t] : race_oof) {
      const auto pred = t.column("mean_prediction", human_ids);
      const auto label = t.column("label", human_ids);
      std::vector<double> v;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        v.push_back(std::isfinite(pred[i]) ? ((pred[i] >= 0.5 ? 1.0 : 0.0) == label[i] ? 1.0 : 0.0)
                                           : std::numeric_limits<double>::quiet_NaN());
      }
      models.push_back(std::move(v));
    }
    if (humans.size() >= 2) {
      const AgreementResult ag = pairwise_agreement(humans, models);
      write_json(dir / "agreement.json", {{"human_human_mean_r", ag.mean_a},
                                          {"model_model_mean_r", ag.mean_b},
                                          {"human_pairs", ag.within_a.size()},
                                          {"model_pairs", ag.within_b.size()},
                                          {"rank_sum_p", ag.comparison.p_value}});
      run.output(dir / "agreement.json");
    }
  }

  // Attribute table.
  {
    std::vector<ModelScore> gender;
    for (const auto& p : files_with_suffix(g.out / "train" / "gender", ".score.json")) {
      gender.push_back(model_score_from_json(read_json(p)));
    }
    if (!gender.empty()) summary.attributes.push_back({"gender", "accuracy", rank_models(gender)});
    for (const char* attr : {"age", "height", "weight"}) {
      std::vector<ModelScore> s;
      for (const auto& p : files_with_suffix(g.out / "regress" / attr, ".score.json")) {
        s.push_back(model_score_from_json(read_json(p)));
      }
      if (!s.empty()) summary.attributes.push_back({attr, "corr", rank_models(s)});
    }
  }

  // Occlusion experiment.
  bool any_occluded = false;
  for (const auto& r : all_responses) any_occluded = any_occluded || r.condition != Condition::None;
  fs::path design_path = a.design;
  if (design_path.empty() && fs::exists(g.out / "occlusion" / "design.json")) design_path = g.out / "occlusion" / "design.json";
  if (any_occluded) {
    std::optional<ConditionDesign> design;
    if (!design_path.empty()) design = design_from_json(read_json(design_path));
    summary.occlusion = analyze_occlusion(all_responses, design ? &*design : nullptr);
  }

  write_score_table_csv(summary.classification, dir / "table_race.csv");
  write_score_table_csv(summary.attributes, dir / "table_attributes.csv");
  write_json(dir / "summary.json", to_json(summary));
  for (const char* f : {"table_race.csv", "table_attributes.csv", "summary.json"}) run.output(dir / f);
  run.commit();
  if (summary.human_mean_accuracy) log(g, "human mean accuracy " + fmt("%.4f", *summary.human_mean_accuracy));
  if (summary.reliability) {
    log(g, "split-half r " + fmt("%.4f", summary.reliability->r) + ", rc " + fmt("%.4f", summary.reliability->rc));
  }
}

void run_occlude(const Global& g, const OccludeArgs& a) {
  RunLog run(g, "occlude");
  const DatasetManifest m = load(g, a.manifest);
  std::map<std::string, double> accuracy;
  if (!a.accuracy.empty()) {
    accuracy = read_accuracy_csv(a.accuracy);
    run.arg("accuracy", a.accuracy);
  } else if (!a.responses.empty()) {
    for (const auto& [id, fa] : per_face_accuracy(filter_condition(read_responses(a.responses), Condition::None)).faces) {
      accuracy[id] = fa.accuracy;
    }
    run.arg("responses", a.responses);
  } else {
    throw Error(ErrorCode::MissingInputs, "occlude needs intact-face accuracy: --accuracy CSV or --responses");
  }
  const auto labels = race_labels(m);
  std::vector<DesignCandidate> candidates;
  for (const auto& f : m.faces) {
    const auto it = accuracy.find(f.face_id);
    if (it != accuracy.end() && labels.count(f.face_id)) candidates.push_back({f.face_id, it->second, labels.at(f.face_id)});
  }
  DesignOptions opts;
  opts.n_common = a.n_common;
  opts.n_unique = a.n_unique;
  opts.target = a.target;
  opts.tolerance = a.tolerance;
  opts.restarts = a.restarts;
  opts.seed = g.seed;
  run.arg("target", a.target ? nlohmann::json(*a.target) : nlohmann::json());
  run.arg("tolerance", a.tolerance);
  run.arg("margin", a.margin);
  const ConditionDesign design = build_design(candidates, opts);
  const fs::path dir = g.out / "occlusion";
  write_json(dir / "design.json", to_json(design));
  run.output(dir / "design.json");
  for (std::size_t c = 0; c < kConditionCount; ++c) {
    log(g, std::string(to_string(static_cast<Condition>(c))) + " mean intact accuracy " +
               fmt("%.4f", design.mean_accuracy[c]));
  }

  if (!a.no_stimuli) {
    std::set<std::string> members(design.common.begin(), design.common.end());
    std::map<std::string, std::string> membership;
    for (const auto& id : design.common) membership[id] = "common";
    for (std::size_t c = 0; c < kConditionCount; ++c) {
      for (const auto& id : design.unique[c]) {
        members.insert(id);
        membership[id] = "unique:" + std::string(to_string(static_cast<Condition>(c)));
      }
    }
    DatasetManifest subset = m;
    subset.faces.clear();
    for (const auto& f : m.faces) {
      if (members.count(f.face_id) || f.face_id == m.reference_face_id) subset.faces.push_back(f);
    }
    const auto faces = preprocess_manifest(subset, true, g.jobs);
    BandOptions bo;
    bo.margin = a.margin;
    fs::create_directories(dir / "stimuli");
    for (std::size_t i = 0; i < faces.size(); ++i) {
      const std::string& id = subset.faces[i].face_id;
      if (!members.count(id)) continue;
      std::array<OcclusionBand, kConditionCount> bands;
      try {
        bands = make_bands(faces[i].landmarks, m.part_index_map, bo);
      } catch (const Error& e) {
        throw Error(e.code(), id + ": " + e.what());
      }
      nlohmann::json side;
      side["face_id"] = id;
      side["membership"] = membership[id];
      side["conditions"] = nlohmann::json::array();
      side["bands"] = nlohmann::json::array();
      for (std::size_t c = 0; c < kConditionCount; ++c) {
        const Condition cond = static_cast<Condition>(c);
        const bool shown = membership[id] == "common" || membership[id] == "unique:" + std::string(to_string(cond));
        if (!shown) continue;
        const fs::path png = dir / "stimuli" / (id + "_" + std::string(to_string(cond)) + ".png");
        write_png(apply_band(faces[i].image, bands[c]), png);
        run.output(png);
        side["conditions"].push_back(to_string(cond));
        side["bands"].push_back(to_json(bands[c]));
      }
      write_json(dir / "stimuli" / (id + ".json"), side);
      run.output(dir / "stimuli" / (id + ".json"));
    }
  }
  run.commit();
}

void run_serve(const Global& g, const ServeArgs& a) {
  const DatasetManifest m = load(g, a.manifest);
  SessionConfig cfg;
  cfg.plain_trials = a.plain_trials;
  cfg.storage = a.storage.empty() ? g.out / "sessions" : fs::path(a.storage);
  fs::path design = a.design;
  if (design.empty() && fs::exists(g.out / "occlusion" / "design.json")) design = g.out / "occlusion" / "design.json";
  if (!design.empty()) cfg.occlusion = design_from_json(read_json(design));
  SessionManager sessions(m, cfg);
  StimulusStore stimuli(sessions.manifest());
  ServiceOptions so;
  so.host = a.host;
  so.port = a.port;
  std::string token = a.token;
  if (token.empty()) {
    if (const char* env = std::getenv("CFK_TOKEN")) token = env;
  }
  if (!token.empty()) so.token = token;
  ExperimentService service(sessions, stimuli, so);
  const int port = service.bind();
  log(g, "serving on http://" + a.host + ":" + std::to_string(port) + " (storage " + cfg.storage.string() + ")");
  std::cout << "listening " << port << std::endl;
  service.listen();
}

void run_synth(const Global& g, const SynthArgs& a) {
  RunLog run(g, "synth");
  SyntheticOptions opts;
  opts.n_per_class = a.n_per_class;
  opts.effect = a.effect;
  opts.seed = g.seed;
  opts.noise_sd = a.noise_sd;
  const PartIndexMap parts = PartIndexMap::defaults();
  bool found = false;
  for (FacePart p : {FacePart::LeftEye, FacePart::RightEye, FacePart::Nose, FacePart::Mouth, FacePart::Contour,
                     FacePart::LeftEyebrow, FacePart::RightEyebrow}) {
    if (to_string(p) == a.part) {
      opts.shifted_part = p;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::InvalidArgument, "unknown part '" + a.part + "'");
  run.arg("n_per_class", a.n_per_class);
  run.arg("effect", a.effect);
  run.arg("part", a.part);
  run.arg("noise_sd", a.noise_sd);
  run.arg("subjects", a.subjects);
  const SyntheticDataset data = generate_synthetic(opts);
  const fs::path dir = g.out / "synth";
  write_synthetic(data, dir);
  run.output(dir / "manifest.json");
  for (const auto& f : data.manifest.faces) run.output(dir / f.image_path);
  if (a.subjects > 0) {
    ResponseSimulation rs;
    rs.n_subjects = a.subjects;
    rs.mean_accuracy = a.mean_accuracy;
    rs.accuracy_sd = a.accuracy_sd;
    rs.seed = derive_seed(g.seed, 0x5057);
    const SimulatedResponses sim = simulate_responses(data.manifest, rs);
    write_jsonl(sim.records, dir / "responses.jsonl");
    std::ostringstream csv;
    csv << "face_id,accuracy\n";
    for (const auto& [id, p] : sim.true_accuracy) csv << id << ',' << fmt("%.17g", p) << '\n';
    write_file(dir / "true_accuracy.csv", csv.str());
    run.output(dir / "responses.jsonl");
    run.output(dir / "true_accuracy.csv");
  }
  run.commit();
  log(g, "wrote " + std::to_string(data.manifest.faces.size()) + " synthetic faces to " + dir.string());
}

void run_report(const Global& g, const ReportArgs& a) {
  RunLog run(g, "report");
  const fs::path analysis = a.analysis.empty() ? g.out / "analysis" : fs::path(a.analysis);
  const fs::path out = a.output.empty() ? g.out / "report.md" : fs::path(a.output);
  write_report(analysis, out);
  run.output(out);
  run.commit();
  log(g, "wrote " + out.string());
}

}  // namespace cfk::cli
