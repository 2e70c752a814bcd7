#include <CLI11.hpp>

#include <iostream>

#include <json.hpp>

#include "cfk/error.hpp"
#include "commands.hpp"

// Exit codes: 0 success, 1 usage error, 2 library error (structured JSON on
// stderr), 3 unexpected failure.
int main(int argc, char** argv) {
  using namespace cfk::cli;
  CLI::App app{"cfk: fine-grained face classification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Global g;
  std::string out = "out";
  app.add_option("--seed", g.seed, "Master seed for every stochastic step")->capture_default_str();
  app.add_option("--jobs,-j", g.jobs, "Worker threads (results do not depend on it)")->capture_default_str();
  app.add_option("--out,-o", out, "Output directory")->capture_default_str();
  app.add_flag("--quiet,-q", g.quiet, "Suppress progress logs");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate a manifest (or CNSIFD directory) and write a report");
  c_ingest->add_option("--manifest", ingest.manifest, "Manifest JSON");
  c_ingest->add_option("--cnsifd", ingest.cnsifd, "CNSIFD-style dataset root");
  c_ingest->add_flag("--skip-image-check", ingest.skip_image_check, "Do not require image files to exist");

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Write geometrically and photometrically normalized faces");
  c_pre->add_option("--manifest", pre.manifest, "Manifest JSON (default: <out>/ingest/manifest.json)");
  c_pre->add_flag("--no-equalize", pre.no_equalize, "Skip histogram matching");

  ExtractArgs ext;
  auto* c_ext = app.add_subcommand("extract", "Extract feature matrices");
  c_ext->add_option("--manifest", ext.manifest, "Manifest JSON (default: <out>/ingest/manifest.json)");
  c_ext->add_option("--family,-f", ext.families, "Feature families (repeat or comma-separate)")->required();
  c_ext->add_option("--cnn-file", ext.cnn_file, "CSV/CFKM file with precomputed CNN vectors");
  c_ext->add_flag("--csv", ext.csv, "Also write CSV copies");
  c_ext->add_flag("--no-equalize", ext.no_equalize, "Skip histogram matching");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Cross-validated PCA+LDA classification");
  c_train->add_option("--manifest", train.manifest, "Manifest JSON (default: <out>/ingest/manifest.json)");
  c_train->add_option("--task", train.task, "race or gender")->capture_default_str();
  c_train->add_option("--family,-f", train.families, "Feature families")->required();
  c_train->add_option("--k", train.k, "Folds")->capture_default_str();
  c_train->add_option("--repeats", train.repeats, "Cross-validation splits")->capture_default_str();
  c_train->add_option("--variance", train.variance, "PCA variance to keep")->capture_default_str();

  RegressArgs reg;
  auto* c_reg = app.add_subcommand("regress", "Cross-validated PCA+lasso regression");
  c_reg->add_option("--manifest", reg.manifest, "Manifest JSON (default: <out>/ingest/manifest.json)");
  c_reg->add_option("--attribute", reg.attribute, "age, height, weight or human-accuracy")->required();
  c_reg->add_option("--family,-f", reg.families, "Feature families")->required();
  c_reg->add_option("--responses", reg.responses, "Response JSONL files or directories");
  c_reg->add_option("--k", reg.k, "Folds")->capture_default_str();
  c_reg->add_option("--repeats", reg.repeats, "Cross-validation splits")->capture_default_str();
  c_reg->add_option("--variance", reg.variance, "PCA variance to keep")->capture_default_str();
  c_reg->add_option("--inner-folds", reg.inner_folds, "Folds for choosing lambda")->capture_default_str();

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze", "Human statistics, model comparisons and result tables");
  c_an->add_option("--manifest", an.manifest, "Manifest JSON (default: <out>/ingest/manifest.json if present)");
  c_an->add_option("--responses", an.responses, "Response JSONL files or directories");
  c_an->add_option("--design", an.design, "Occlusion design JSON (default: <out>/occlusion/design.json)");
  c_an->add_option("--scheme", an.scheme, "Split-half scheme: even_odd or random")
      ->check(CLI::IsMember({"even_odd", "random"}))
      ->capture_default_str();
  c_an->add_option("--draws", an.draws, "Random split-half draws")->capture_default_str();
  c_an->add_option("--bootstrap", an.n_boot, "Bootstrap resamples for model-human correlation")->capture_default_str();

  OccludeArgs occ;
  auto* c_occ = app.add_subcommand("occlude", "Build the occlusion design and its stimuli");
  c_occ->add_option("--manifest", occ.manifest, "Manifest JSON (default: <out>/ingest/manifest.json)");
  c_occ->add_option("--accuracy", occ.accuracy, "CSV face_id,accuracy of intact faces");
  c_occ->add_option("--responses", occ.responses, "Response JSONL files (intact-face accuracy)");
  c_occ->add_option("--target", occ.target, "Target mean accuracy (default: pool mean)");
  c_occ->add_option("--tolerance", occ.tolerance, "Allowed deviation from the target")->capture_default_str();
  c_occ->add_option("--restarts", occ.restarts, "Random restarts")->capture_default_str();
  c_occ->add_option("--margin", occ.margin, "Band margin in px")->capture_default_str();
  c_occ->add_option("--common", occ.n_common, "Faces shared by all conditions")->capture_default_str();
  c_occ->add_option("--unique", occ.n_unique, "Faces unique to each condition")->capture_default_str();
  c_occ->add_flag("--no-stimuli", occ.no_stimuli, "Only write the design");

  ServeArgs srv;
  std::size_t plain_trials = 0;
  auto* c_srv = app.add_subcommand("serve", "Run the experiment service");
  c_srv->add_option("--manifest", srv.manifest, "Manifest JSON (default: <out>/ingest/manifest.json)");
  c_srv->add_option("--storage", srv.storage, "Session storage directory (default: <out>/sessions)");
  c_srv->add_option("--design", srv.design, "Occlusion design JSON");
  c_srv->add_option("--host", srv.host, "Bind address")->capture_default_str();
  c_srv->add_option("--port", srv.port, "Port (0 = any)")->capture_default_str();
  c_srv->add_option("--token", srv.token, "Bearer token (or CFK_TOKEN)");
  auto* o_plain = c_srv->add_option("--plain-trials", plain_trials, "Faces per plain-race session");

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Generate a synthetic dataset");
  c_syn->add_option("--n-per-class", syn.n_per_class, "Faces per class")->capture_default_str();
  c_syn->add_option("--effect", syn.effect, "Class separation in landmark-noise SDs")->capture_default_str();
  c_syn->add_option("--part", syn.part, "Part carrying the class difference")->capture_default_str();
  c_syn->add_option("--noise-sd", syn.noise_sd, "Landmark noise (px)")->capture_default_str();
  c_syn->add_option("--subjects", syn.subjects, "Simulated subjects (0 = no responses)")->capture_default_str();
  c_syn->add_option("--mean-accuracy", syn.mean_accuracy, "Mean latent per-face accuracy")->capture_default_str();
  c_syn->add_option("--accuracy-sd", syn.accuracy_sd, "Spread of latent accuracy")->capture_default_str();

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Render the Markdown summary from analysis outputs");
  c_rep->add_option("--analysis", rep.analysis, "Analysis directory (default: <out>/analysis)");
  c_rep->add_option("--output", rep.output, "Markdown file (default: <out>/report.md)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  g.out = out;
  if (g.jobs < 1) g.jobs = 1;
  if (o_plain->count() > 0) srv.plain_trials = plain_trials;

  try {
    if (c_ingest->parsed()) run_ingest(g, ingest);
    if (c_pre->parsed()) run_preprocess(g, pre);
    if (c_ext->parsed()) run_extract(g, ext);
    if (c_train->parsed()) run_train(g, train);
    if (c_reg->parsed()) run_regress(g, reg);
    if (c_an->parsed()) run_analyze(g, an);
    if (c_occ->parsed()) run_occlude(g, occ);
    if (c_srv->parsed()) run_serve(g, srv);
    if (c_syn->parsed()) run_synth(g, syn);
    if (c_rep->parsed()) run_report(g, rep);
  } catch (const cfk::Error& e) {
    std::cerr << nlohmann::json{{"error", cfk::to_string(e.code())}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "Internal"}, {"message", e.what()}}.dump() << '\n';
    return 3;
  }
  return 0;
}
