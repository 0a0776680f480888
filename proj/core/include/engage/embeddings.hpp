#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "engage/common.hpp"

namespace engage::topics {

enum class Modality : std::uint8_t { kImage, kText };

std::string_view to_string(Modality modality);
Modality parse_modality(std::string_view text);
/// Likes are mined on image embeddings, comments on text embeddings.
Modality modality_for(Metric metric);

/// n x d embedding matrix with one post id per row.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  /// Throws ValidationError on duplicate ids, size mismatch or non-finite values.
  EmbeddingTable(std::vector<std::string> post_ids, Matrix vectors, Modality modality);

  const std::vector<std::string>& post_ids() const noexcept { return post_ids_; }
  const Matrix& vectors() const noexcept { return vectors_; }
  Modality modality() const noexcept { return modality_; }
  std::size_t size() const noexcept { return post_ids_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }

  std::optional<std::size_t> find(std::string_view post_id) const;
  /// Rows for the given ids, in the given order; ids without an embedding are skipped.
  EmbeddingTable select(std::span<const std::string> post_ids) const;

 private:
  std::vector<std::string> post_ids_;
  Matrix vectors_;
  Modality modality_ = Modality::kImage;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Binary little-endian float32 row-major matrix (`<stem>.bin` or any
/// non-.csv/.json name) with a JSON sidecar `<stem>.json`
/// {"post_ids": [...], "dim": d, "modality": "image"|"text"}; or CSV
/// `post_id,v0,v1,...` (modality from `csv_modality`).
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               Modality csv_modality = Modality::kImage);
void save_embeddings_binary(const EmbeddingTable& table, const std::filesystem::path& path);
void save_embeddings_csv(const EmbeddingTable& table, const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& matrix_path);

}  // namespace engage::topics
