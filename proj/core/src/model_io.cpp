#include "cfk/model_io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "cfk/error.hpp"

namespace cfk {

namespace {

constexpr char kMagic[4] = {'C', 'F', 'K', 'L'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof v);
  }
  void str(const std::string& s) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  void vec(const Eigen::VectorXd& v) {
    pod<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) pod<double>(v(i));
  }
  void mat(const Eigen::MatrixXd& m) {
    pod<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    pod<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) pod<double>(m(r, c));
    }
  }
  void doubles(const std::vector<double>& v) {
    pod<std::uint64_t>(v.size());
    for (double d : v) pod<double>(d);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  template <typename T>
  T pod() {
    if (pos_ + sizeof(T) > bytes_.size()) throw Error(ErrorCode::SchemaViolation, "truncated model file");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::SchemaViolation, "truncated model file");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint64_t count() {
    const auto n = pod<std::uint64_t>();
    if (n > bytes_.size()) throw Error(ErrorCode::SchemaViolation, "corrupt size in model file");
    return n;
  }
  Eigen::VectorXd vec() {
    const auto n = count();
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = pod<double>();
    return v;
  }
  Eigen::MatrixXd mat() {
    const auto r = count();
    const auto c = count();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = pod<double>();
    }
    return m;
  }
  std::vector<double> doubles() {
    const auto n = count();
    std::vector<double> v(n);
    for (auto& d : v) d = pod<double>();
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write_fold(Writer& w, const FoldModel& m) {
  w.pod<std::uint8_t>(m.task == Task::Classify ? 0 : 1);
  w.pod<std::uint8_t>(m.degenerate ? 1 : 0);
  w.pod<double>(m.fallback);
  if (m.degenerate) return;
  w.vec(m.pca.mean);
  w.mat(m.pca.components);
  w.vec(m.pca.eigenvalues);
  w.vec(m.pca.explained_variance_ratio);
  w.pod<std::uint64_t>(m.pca.retained);
  if (m.task == Task::Classify) {
    w.vec(m.lda.weights);
    w.pod<double>(m.lda.bias);
    w.pod<double>(m.lda.priors[0]);
    w.pod<double>(m.lda.priors[1]);
    w.vec(m.lda.means[0]);
    w.vec(m.lda.means[1]);
    w.pod<std::uint8_t>(m.lda.ridge_applied ? 1 : 0);
  } else {
    w.vec(m.lasso.x_mean);
    w.vec(m.lasso.x_scale);
    w.pod<double>(m.lasso.y_mean);
    w.pod<double>(m.lasso.y_scale);
    w.vec(m.lasso.beta);
    w.pod<double>(m.lasso.lambda);
    w.doubles(m.lasso.lambda_grid);
    w.doubles(m.lasso.cv_mse);
  }
}

FoldModel read_fold(Reader& r) {
  FoldModel m;
  const auto task = r.pod<std::uint8_t>();
  if (task > 1) throw Error(ErrorCode::SchemaViolation, "unknown task in model file");
  m.task = task == 0 ? Task::Classify : Task::Regress;
  m.degenerate = r.pod<std::uint8_t>() != 0;
  m.fallback = r.pod<double>();
  if (m.degenerate) return m;
  m.pca.mean = r.vec();
  m.pca.components = r.mat();
  m.pca.eigenvalues = r.vec();
  m.pca.explained_variance_ratio = r.vec();
  m.pca.retained = r.pod<std::uint64_t>();
  if (m.task == Task::Classify) {
    m.lda.weights = r.vec();
    m.lda.bias = r.pod<double>();
    m.lda.priors[0] = r.pod<double>();
    m.lda.priors[1] = r.pod<double>();
    m.lda.means[0] = r.vec();
    m.lda.means[1] = r.vec();
    m.lda.ridge_applied = r.pod<std::uint8_t>() != 0;
  } else {
    m.lasso.x_mean = r.vec();
    m.lasso.x_scale = r.vec();
    m.lasso.y_mean = r.pod<double>();
    m.lasso.y_scale = r.pod<double>();
    m.lasso.beta = r.vec();
    m.lasso.lambda = r.pod<double>();
    m.lasso.lambda_grid = r.doubles();
    m.lasso.cv_mse = r.doubles();
  }
  return m;
}

}  // namespace

std::vector<std::uint8_t> serialize_fold_model(const FoldModel& model) {
  Writer w;
  write_fold(w, model);
  return std::move(w.bytes);
}

std::vector<std::uint8_t> serialize_model(const TrainedModel& model) {
  Writer w;
  w.bytes.insert(w.bytes.end(), kMagic, kMagic + 4);
  w.pod<std::uint32_t>(kVersion);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(model.family));
  w.str(model.target);
  write_fold(w, model.model);
  w.pod<std::int32_t>(model.cv_k);
  w.pod<std::int32_t>(model.cv_repeats);
  w.pod<std::uint64_t>(model.cv_seed);
  w.pod<double>(model.cv_mean);
  w.pod<double>(model.cv_std);
  w.pod<std::uint64_t>(model.n_faces);
  return std::move(w.bytes);
}

TrainedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::SchemaViolation, "not a CFKL model file");
  }
  Reader r(bytes.subspan(4));
  const auto version = r.pod<std::uint32_t>();
  if (version != kVersion) throw Error(ErrorCode::SchemaViolation, "unsupported CFKL version " + std::to_string(version));
  TrainedModel m;
  const auto family = r.pod<std::uint32_t>();
  if (family >= kAllFamilies.size()) throw Error(ErrorCode::SchemaViolation, "unknown family in model file");
  m.family = static_cast<FeatureFamily>(family);
  m.target = r.str();
  m.model = read_fold(r);
  m.cv_k = r.pod<std::int32_t>();
  m.cv_repeats = r.pod<std::int32_t>();
  m.cv_seed = r.pod<std::uint64_t>();
  m.cv_mean = r.pod<double>();
  m.cv_std = r.pod<double>();
  m.n_faces = r.pod<std::uint64_t>();
  if (!r.done()) throw Error(ErrorCode::SchemaViolation, "trailing bytes in model file");
  return m;
}

void write_model(const TrainedModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = serialize_model(model);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

TrainedModel read_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  std::ifstream is(path, std::ios::binary);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace cfk
