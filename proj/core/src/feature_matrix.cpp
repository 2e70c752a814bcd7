#include "cfk/feature_matrix.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "cfk/error.hpp"
#include "cfk/parallel.hpp"
#include "text_util.hpp"

namespace cfk {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::optional<std::size_t> FeatureMatrix::row_of(const std::string& face_id) const {
  for (std::size_t r = 0; r < face_ids.size(); ++r) {
    if (face_ids[r] == face_id) return r;
  }
  return std::nullopt;
}

FeatureMatrix FeatureMatrix::select(const std::vector<std::string>& ids) const {
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < face_ids.size(); ++r) index.emplace(face_ids[r], r);
  FeatureMatrix out;
  out.family = family;
  out.names = names;
  out.face_ids = ids;
  out.values.resize(static_cast<Eigen::Index>(ids.size()), values.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto it = index.find(ids[k]);
    if (it == index.end()) throw Error(ErrorCode::UnknownFaceId, "no feature row for face '" + ids[k] + "'");
    out.values.row(static_cast<Eigen::Index>(k)) = values.row(static_cast<Eigen::Index>(it->second));
  }
  return out;
}

FeatureMatrix extract_matrix(FeatureFamily family, const std::vector<NormalizedFace>& faces,
                             const std::vector<std::string>& face_ids, const ExtractionContext& ctx, int jobs) {
  if (faces.size() != face_ids.size()) throw Error(ErrorCode::DimMismatch, "faces and face_ids differ in length");
  std::vector<FeatureVector> rows(faces.size());
  parallel_for(faces.size(), jobs, [&](std::size_t i) {
    try {
      rows[i] = extract(family, faces[i], ctx);
    } catch (const Error& e) {
      throw Error(e.code(), "face '" + face_ids[i] + "': " + e.what());
    }
  });
  FeatureMatrix m;
  m.family = family;
  m.face_ids = face_ids;
  m.names = feature_names(family, ctx);
  const std::size_t dim = rows.empty() ? m.names.size() : rows.front().dim();
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].dim() != dim) throw Error(ErrorCode::DimMismatch, "ragged feature rows");
    for (std::size_t c = 0; c < dim; ++c) {
      if (!std::isfinite(rows[r].values[c])) {
        throw Error(ErrorCode::NonFinite, "face '" + face_ids[r] + "' feature " + std::to_string(c) + " is not finite");
      }
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r].values[c];
    }
  }
  return m;
}

FeatureMatrix concat_columns(const std::vector<FeatureMatrix>& parts, FeatureFamily family) {
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to concatenate");
  FeatureMatrix out;
  out.family = family;
  out.face_ids = parts.front().face_ids;
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.face_ids != out.face_ids) throw Error(ErrorCode::DimMismatch, "concatenated matrices differ in rows");
    cols += p.values.cols();
  }
  out.values.resize(static_cast<Eigen::Index>(out.face_ids.size()), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.values.middleCols(at, p.values.cols()) = p.values;
    at += p.values.cols();
    out.names.insert(out.names.end(), p.names.begin(), p.names.end());
  }
  if (out.names.size() != static_cast<std::size_t>(cols)) out.names.clear();
  return out;
}

namespace {

constexpr char kMagic[4] = {'C', 'F', 'K', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is, const std::string& what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw Error(ErrorCode::SchemaViolation, "truncated feature matrix (" + what + ")");
  }
  return v;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(m.family));
  put<std::uint64_t>(os, m.rows());
  put<std::uint64_t>(os, m.cols());
  if (m.face_ids.size() != m.rows()) throw Error(ErrorCode::DimMismatch, "face_ids and rows differ");
  for (const auto& id : m.face_ids) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(id.size()));
    os.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) put<double>(os, m.values(r, c));
  }
  if (!os) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot read " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCode::SchemaViolation, path.string() + " is not a CFKM feature matrix");
  }
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kVersion) throw Error(ErrorCode::SchemaViolation, "unsupported CFKM version " + std::to_string(version));
  const auto tag = get<std::uint32_t>(is, "family");
  if (tag >= kAllFamilies.size()) throw Error(ErrorCode::SchemaViolation, "unknown family tag");
  const auto rows = get<std::uint64_t>(is, "rows");
  const auto cols = get<std::uint64_t>(is, "cols");
  FeatureMatrix m;
  m.family = static_cast<FeatureFamily>(tag);
  for (std::uint64_t r = 0; r < rows; ++r) {
    const auto len = get<std::uint32_t>(is, "face id length");
    std::string id(len, '\0');
    if (!is.read(id.data(), len)) throw Error(ErrorCode::SchemaViolation, "truncated face id table");
    m.face_ids.push_back(std::move(id));
  }
  m.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::uint64_t c = 0; c < cols; ++c) {
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = get<double>(is, "values");
    }
  }
  return m;
}

void write_feature_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::string out = "face_id";
  for (std::size_t c = 0; c < m.cols(); ++c) {
    out += ',';
    out += c < m.names.size() ? m.names[c] : "f" + std::to_string(c);
  }
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += m.face_ids[r];
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out += ',';
      out += format_double(m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
    out += '\n';
  }
  detail::write_text(path, out);
}

IngestResult ingest_cnn_features(const std::filesystem::path& path, FeatureFamily family,
                                 const DatasetManifest* manifest) {
  if (!is_ingested(family)) {
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(family)) + " is not an ingested family");
  }
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  const std::size_t dim = family_dim(family);

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::string head(4, '\0');
  {
    std::ifstream probe(path, std::ios::binary);
    probe.read(head.data(), 4);
    head.resize(static_cast<std::size_t>(probe.gcount()));
  }
  if (head == std::string(kMagic, 4)) {
    const FeatureMatrix m = read_feature_matrix(path);
    ids = m.face_ids;
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(m.values.cols()));
      for (Eigen::Index c = 0; c < m.values.cols(); ++c) row[static_cast<std::size_t>(c)] = m.values(r, c);
      rows.push_back(std::move(row));
    }
  } else {
    const auto lines = detail::read_lines(path);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      const auto line = detail::trim(lines[ln]);
      if (line.empty()) continue;
      auto cells = detail::split_csv(line);
      if (ids.empty() && rows.empty() && !cells.empty() && detail::trim(cells[0]) == "face_id") continue;
      std::vector<double> values;
      values.reserve(cells.size());
      for (std::size_t c = 1; c < cells.size(); ++c) {
        const auto v = detail::parse_double(cells[c]);
        if (!v) {
          throw Error(ErrorCode::SchemaViolation,
                      path.string() + ":" + std::to_string(ln + 1) + ": column " + std::to_string(c) + " is not a number");
        }
        values.push_back(*v);
      }
      ids.emplace_back(detail::trim(cells[0]));
      rows.push_back(std::move(values));
    }
  }

  IngestResult result;
  result.matrix.family = family;
  result.matrix.names = feature_names(family, ExtractionContext{});
  if (rows.empty()) {
    result.warnings.push_back(path.string() + " contains no feature vectors");
  }
  std::map<std::string, std::size_t> by_id;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != dim) {
      throw Error(ErrorCode::DimMismatch, "face '" + ids[r] + "' has " + std::to_string(rows[r].size()) + " values; " +
                                              std::string(to_string(family)) + " expects " + std::to_string(dim));
    }
    for (double v : rows[r]) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "face '" + ids[r] + "' has a non-finite value");
    }
    if (!by_id.emplace(ids[r], r).second) throw Error(ErrorCode::DuplicateFaceId, "duplicate feature row '" + ids[r] + "'");
    if (manifest != nullptr && !manifest->index_of(ids[r])) {
      throw Error(ErrorCode::UnknownFaceId, "feature row for unknown face '" + ids[r] + "'");
    }
  }

  std::vector<std::size_t> order;
  if (manifest != nullptr) {
    for (const auto& f : manifest->faces) {
      const auto it = by_id.find(f.face_id);
      if (it == by_id.end()) {
        result.missing.push_back(f.face_id);
      } else {
        order.push_back(it->second);
      }
    }
    if (!result.missing.empty()) {
      result.warnings.push_back(std::to_string(result.missing.size()) + " manifest faces have no " +
                                std::string(to_string(family)) + " vector");
    }
  } else {
    for (std::size_t r = 0; r < rows.size(); ++r) order.push_back(r);
  }
  result.matrix.values.resize(static_cast<Eigen::Index>(order.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < order.size(); ++k) {
    result.matrix.face_ids.push_back(ids[order[k]]);
    for (std::size_t c = 0; c < dim; ++c) {
      result.matrix.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = rows[order[k]][c];
    }
  }
  return result;
}

}  // namespace cfk
