/**
 * @file corpus.hpp
 * @brief Per-checkpoint embedding matrices, the ENCB binary store and the
 *        line-delimited JSON interchange format.
 *
 * One store file holds the image embeddings produced by one fine-tuned
 * checkpoint. A ModelSet groups the checkpoints that encode the same corpus,
 * ordered by training epoch so that the ensemble index of a model grows with
 * its epoch.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace enclip::corpus {

class CorpusError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parse failure of a binary store. Each failure mode has its own kind.
class StoreFormatError : public CorpusError {
public:
  enum class Kind { BadMagic, UnsupportedVersion, Truncated, CountMismatch };

  StoreFormatError(Kind kind, const std::string& what);

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// Immutable row-major matrix of item embeddings for one checkpoint.
class EmbeddingMatrix {
public:
  EmbeddingMatrix() = default;

  /// Validates every invariant: row count, finiteness, unique ids and unit
  /// norms when `normalized` is set. Throws CorpusError on violation.
  EmbeddingMatrix(std::string model_id, std::uint32_t epoch, std::uint32_t dim,
                  std::vector<std::string> ids, std::vector<float> values,
                  bool normalized);

  const std::string& model_id() const noexcept { return model_id_; }
  std::uint32_t epoch() const noexcept { return epoch_; }
  std::uint32_t dim() const noexcept { return dim_; }
  bool normalized() const noexcept { return normalized_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t row) const { return ids_.at(row); }
  std::span<const float> row(std::size_t row) const;
  std::span<const float> values() const noexcept { return values_; }

  std::optional<std::size_t> find(const std::string& item_id) const;

  bool operator==(const EmbeddingMatrix& other) const;

private:
  std::string model_id_;
  std::uint32_t epoch_ = 0;
  std::uint32_t dim_ = 0;
  bool normalized_ = false;
  std::vector<std::string> ids_;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

using MatrixPtr = std::shared_ptr<const EmbeddingMatrix>;

/// Checkpoints over one corpus, sorted by ascending epoch.
class ModelSet {
public:
  ModelSet() = default;

  /// Sorts by epoch and checks shared dim, identical id sets and distinct
  /// epochs. Throws CorpusError otherwise.
  explicit ModelSet(std::vector<MatrixPtr> models);

  std::size_t z() const noexcept { return models_.size(); }
  std::uint32_t dim() const noexcept { return models_.empty() ? 0 : models_.front()->dim(); }
  std::size_t corpus_size() const noexcept { return models_.empty() ? 0 : models_.front()->size(); }

  const EmbeddingMatrix& model(std::size_t n) const { return *models_.at(n); }
  const std::vector<MatrixPtr>& models() const noexcept { return models_; }

  /// Ensemble index of a model id, if present.
  std::optional<std::size_t> index_of(const std::string& model_id) const;

private:
  std::vector<MatrixPtr> models_;
};

/// L2-normalizes `values` in place. Throws CorpusError on a zero or
/// non-finite vector.
void normalize(std::span<float> values);

/// Reads the line-delimited JSON interchange format. `model_id` and `epoch`
/// take precedence over the header values; `dim` comes from the header.
EmbeddingMatrix ingest_text(const std::filesystem::path& path, const std::string& model_id,
                            std::uint32_t epoch);

/// Writes the interchange format (header line plus one record per item).
void write_text(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

void write_store(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix read_store(const std::filesystem::path& path);

/// In-memory variants used by the file functions.
std::vector<std::uint8_t> encode_store(const EmbeddingMatrix& matrix);
EmbeddingMatrix decode_store(std::span<const std::uint8_t> bytes);

ModelSet open_model_set(const std::vector<std::filesystem::path>& paths);

/// Opens every `*.encb` file of a directory.
ModelSet open_model_dir(const std::filesystem::path& dir);

inline constexpr const char* kStoreExtension = ".encb";

}  // namespace enclip::corpus
