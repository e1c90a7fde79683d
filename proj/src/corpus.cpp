#include "enclip/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace enclip::corpus {

namespace {

constexpr std::uint8_t kMagic[4] = {0x45, 0x4E, 0x43, 0x42};  // "ENCB"
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kFlagNormalized = 0x1;
constexpr double kNormTolerance = 1e-4;

const char* kind_name(StoreFormatError::Kind kind) {
  switch (kind) {
    case StoreFormatError::Kind::BadMagic: return "bad magic";
    case StoreFormatError::Kind::UnsupportedVersion: return "unsupported version";
    case StoreFormatError::Kind::Truncated: return "truncated file";
    case StoreFormatError::Kind::CountMismatch: return "count mismatch";
  }
  return "format error";
}

class Writer {
public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const std::string& s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void str16(const std::string& s) {
    if (s.size() > 0xFFFF) throw CorpusError("string longer than 65535 bytes: " + s.substr(0, 32));
    u16(static_cast<std::uint16_t>(s.size()));
    bytes(s);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

private:
  void le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::string str16() { return str(u16()); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) {
      throw StoreFormatError(StoreFormatError::Kind::Truncated,
                             "expected " + std::to_string(n) + " more bytes at offset " +
                                 std::to_string(pos_) + ", file has " +
                                 std::to_string(remaining()));
    }
  }

private:
  std::uint64_t le(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

double l2_norm(std::span<const float> v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sum);
}

}  // namespace

StoreFormatError::StoreFormatError(Kind kind, const std::string& what)
    : CorpusError(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}

EmbeddingMatrix::EmbeddingMatrix(std::string model_id, std::uint32_t epoch, std::uint32_t dim,
                                 std::vector<std::string> ids, std::vector<float> values,
                                 bool normalized)
    : model_id_(std::move(model_id)),
      epoch_(epoch),
      dim_(dim),
      normalized_(normalized),
      ids_(std::move(ids)),
      values_(std::move(values)) {
  if (dim_ == 0) throw CorpusError("dim must be positive");
  if (values_.size() != ids_.size() * dim_) {
    throw CorpusError("matrix has " + std::to_string(values_.size()) + " values for " +
                      std::to_string(ids_.size()) + " items of dim " + std::to_string(dim_));
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) throw CorpusError("duplicate item id: " + ids_[i]);
    const auto r = row(i);
    if (!std::all_of(r.begin(), r.end(), [](float x) { return std::isfinite(x); })) {
      throw CorpusError("non-finite value in item " + ids_[i]);
    }
    if (normalized_ && std::abs(l2_norm(r) - 1.0) > kNormTolerance) {
      throw CorpusError("item " + ids_[i] + " is not unit-norm in a normalized matrix");
    }
  }
}

std::span<const float> EmbeddingMatrix::row(std::size_t row) const {
  if (row >= ids_.size()) throw std::out_of_range("row " + std::to_string(row));
  return std::span<const float>(values_).subspan(row * dim_, dim_);
}

std::optional<std::size_t> EmbeddingMatrix::find(const std::string& item_id) const {
  const auto it = index_.find(item_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
  return model_id_ == other.model_id_ && epoch_ == other.epoch_ && dim_ == other.dim_ &&
         normalized_ == other.normalized_ && ids_ == other.ids_ && values_ == other.values_;
}

ModelSet::ModelSet(std::vector<MatrixPtr> models) : models_(std::move(models)) {
  if (models_.empty()) throw CorpusError("model set needs at least one store");
  std::stable_sort(models_.begin(), models_.end(),
                   [](const MatrixPtr& a, const MatrixPtr& b) { return a->epoch() < b->epoch(); });
  const auto& first = *models_.front();
  std::set<std::string> model_ids;
  for (std::size_t n = 0; n < models_.size(); ++n) {
    const auto& m = *models_[n];
    if (!model_ids.insert(m.model_id()).second) {
      throw CorpusError("duplicate model id: " + m.model_id());
    }
    if (n > 0 && m.epoch() == models_[n - 1]->epoch()) {
      throw CorpusError("duplicate epoch " + std::to_string(m.epoch()) + " (" +
                        models_[n - 1]->model_id() + ", " + m.model_id() + ")");
    }
    if (m.dim() != first.dim()) {
      throw CorpusError("dim mismatch: " + m.model_id() + " has " + std::to_string(m.dim()) +
                        ", " + first.model_id() + " has " + std::to_string(first.dim()));
    }
    if (n == 0) continue;
    for (const auto& id : first.ids()) {
      if (!m.find(id)) {
        throw CorpusError("item set mismatch: " + id + " present in " + first.model_id() +
                          " but missing from " + m.model_id());
      }
    }
    for (const auto& id : m.ids()) {
      if (!first.find(id)) {
        throw CorpusError("item set mismatch: " + id + " present in " + m.model_id() +
                          " but missing from " + first.model_id());
      }
    }
  }
}

std::optional<std::size_t> ModelSet::index_of(const std::string& model_id) const {
  for (std::size_t n = 0; n < models_.size(); ++n) {
    if (models_[n]->model_id() == model_id) return n;
  }
  return std::nullopt;
}

void normalize(std::span<float> values) {
  if (!std::all_of(values.begin(), values.end(), [](float x) { return std::isfinite(x); })) {
    throw CorpusError("non-finite value");
  }
  const double norm = l2_norm(values);
  if (norm == 0.0) throw CorpusError("zero-norm vector");
  for (float& x : values) x = static_cast<float>(static_cast<double>(x) / norm);
}

EmbeddingMatrix ingest_text(const std::filesystem::path& path, const std::string& model_id,
                            std::uint32_t epoch) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::optional<std::uint32_t> dim;
  std::vector<std::string> ids;
  std::vector<float> values;
  std::unordered_map<std::string, std::size_t> seen;

  auto fail = [&](const std::string& msg) -> CorpusError {
    return CorpusError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw fail(std::string("invalid JSON: ") + e.what());
    }
    if (!dim) {
      if (!rec.contains("dim") || !rec["dim"].is_number_unsigned() || rec["dim"].get<std::int64_t>() <= 0) {
        throw fail("header must carry a positive integer \"dim\"");
      }
      dim = rec["dim"].get<std::uint32_t>();
      continue;
    }
    if (!rec.contains("id") || !rec["id"].is_string()) throw fail("record without string \"id\"");
    if (!rec.contains("vec") || !rec["vec"].is_array()) throw fail("record without array \"vec\"");
    const auto id = rec["id"].get<std::string>();
    const auto& vec = rec["vec"];
    if (vec.size() != *dim) {
      throw fail("dimension mismatch: item " + id + " has " + std::to_string(vec.size()) +
                 " components, expected " + std::to_string(*dim));
    }
    if (!seen.emplace(id, line_no).second) {
      throw fail("duplicate id " + id + " (first seen on line " + std::to_string(seen[id]) + ")");
    }
    const std::size_t offset = values.size();
    for (const auto& x : vec) {
      if (!x.is_number()) throw fail("non-numeric component in item " + id);
      const double d = x.get<double>();
      if (!std::isfinite(d) || std::abs(d) > std::numeric_limits<float>::max()) {
        throw fail("non-finite component in item " + id);
      }
      values.push_back(static_cast<float>(d));
    }
    try {
      normalize(std::span<float>(values).subspan(offset, *dim));
    } catch (const CorpusError& e) {
      throw fail(std::string(e.what()) + " in item " + id);
    }
    ids.push_back(id);
  }
  if (!dim) throw CorpusError(path.string() + ": missing header line");
  return EmbeddingMatrix(model_id, epoch, *dim, std::move(ids), std::move(values), true);
}

void write_text(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write " + path.string());
  out << nlohmann::json{{"model_id", matrix.model_id()}, {"epoch", matrix.epoch()}, {"dim", matrix.dim()}}.dump()
      << '\n';
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    const auto r = matrix.row(i);
    out << nlohmann::json{{"id", matrix.id(i)}, {"vec", std::vector<float>(r.begin(), r.end())}}.dump()
        << '\n';
  }
}

std::vector<std::uint8_t> encode_store(const EmbeddingMatrix& matrix) {
  Writer w;
  for (auto b : kMagic) w.u8(b);
  w.u16(kVersion);
  w.u16(matrix.normalized() ? kFlagNormalized : 0);
  w.u32(matrix.dim());
  w.u64(matrix.size());
  w.str16(matrix.model_id());
  w.u32(matrix.epoch());
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    w.str16(matrix.id(i));
    for (float x : matrix.row(i)) w.f32(x);
  }
  return w.take();
}

EmbeddingMatrix decode_store(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.str(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic),
                  [](char c, std::uint8_t b) { return static_cast<std::uint8_t>(c) == b; })) {
    throw StoreFormatError(StoreFormatError::Kind::BadMagic, "not an ENCB store");
  }
  const auto version = r.u16();
  if (version != kVersion) {
    throw StoreFormatError(StoreFormatError::Kind::UnsupportedVersion,
                           "version " + std::to_string(version));
  }
  const auto flags = r.u16();
  const auto dim = r.u32();
  const auto count = r.u64();
  auto model_id = r.str16();
  const auto epoch = r.u32();

  // Each record needs at least its length prefix and payload.
  const std::uint64_t min_record = 2 + std::uint64_t{dim} * 4;
  if (count > r.remaining() / min_record) {
    throw StoreFormatError(StoreFormatError::Kind::Truncated,
                           "header declares " + std::to_string(count) + " records but only " +
                               std::to_string(r.remaining()) + " bytes follow");
  }
  std::vector<std::string> ids;
  std::vector<float> values;
  ids.reserve(count);
  values.reserve(count * dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    ids.push_back(r.str16());
    for (std::uint32_t d = 0; d < dim; ++d) values.push_back(r.f32());
  }
  if (r.remaining() != 0) {
    throw StoreFormatError(StoreFormatError::Kind::CountMismatch,
                           std::to_string(r.remaining()) + " trailing bytes after " +
                               std::to_string(count) + " records");
  }
  return EmbeddingMatrix(std::move(model_id), epoch, dim, std::move(ids), std::move(values),
                         (flags & kFlagNormalized) != 0);
}

void write_store(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  const auto bytes = encode_store(matrix);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CorpusError("write failed: " + path.string());
}

EmbeddingMatrix read_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_store(bytes);
  } catch (const StoreFormatError& e) {
    throw StoreFormatError(e.kind(), path.string() + ": " + e.what());
  }
}

ModelSet open_model_set(const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) throw CorpusError("no store paths given");
  std::vector<MatrixPtr> models;
  models.reserve(paths.size());
  for (const auto& p : paths) models.push_back(std::make_shared<const EmbeddingMatrix>(read_store(p)));
  return ModelSet(std::move(models));
}

ModelSet open_model_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw CorpusError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == kStoreExtension) {
      paths.push_back(entry.path());
    }
  }
  if (paths.empty()) throw CorpusError("no " + std::string(kStoreExtension) + " stores in " + dir.string());
  std::sort(paths.begin(), paths.end());
  return open_model_set(paths);
}

}  // namespace enclip::corpus
