#include "engage/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "engage/csv.hpp"

namespace engage::topics {

std::string_view to_string(Modality modality) {
  return modality == Modality::kImage ? "image" : "text";
}

Modality parse_modality(std::string_view text) {
  if (text == "image") return Modality::kImage;
  if (text == "text") return Modality::kText;
  throw ValidationError("unknown modality '" + std::string(text) + "'");
}

Modality modality_for(Metric metric) {
  return metric == Metric::kLikes ? Modality::kImage : Modality::kText;
}

EmbeddingTable::EmbeddingTable(std::vector<std::string> post_ids, Matrix vectors,
                               Modality modality)
    : post_ids_(std::move(post_ids)), vectors_(std::move(vectors)), modality_(modality) {
  if (static_cast<Eigen::Index>(post_ids_.size()) != vectors_.rows()) {
    throw ValidationError("embeddings: " + std::to_string(post_ids_.size()) + " ids for " +
                          std::to_string(vectors_.rows()) + " rows");
  }
  if (!vectors_.allFinite()) throw ValidationError("embeddings: non-finite values");
  for (std::size_t i = 0; i < post_ids_.size(); ++i) {
    if (!index_.emplace(post_ids_[i], i).second) {
      throw ValidationError("embeddings: duplicate post id '" + post_ids_[i] + "'");
    }
  }
}

std::optional<std::size_t> EmbeddingTable::find(std::string_view post_id) const {
  if (auto it = index_.find(std::string(post_id)); it != index_.end()) return it->second;
  return std::nullopt;
}

EmbeddingTable EmbeddingTable::select(std::span<const std::string> post_ids) const {
  std::vector<std::string> ids;
  std::vector<Eigen::Index> rows;
  for (const auto& id : post_ids) {
    if (auto r = find(id)) {
      ids.push_back(id);
      rows.push_back(static_cast<Eigen::Index>(*r));
    }
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), vectors_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = vectors_.row(rows[i]);
  return EmbeddingTable(std::move(ids), std::move(m), modality_);
}

std::filesystem::path sidecar_path(const std::filesystem::path& matrix_path) {
  auto p = matrix_path;
  return p.replace_extension(".json");
}

namespace {

float read_le_float(const unsigned char* bytes) {
  std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                       (static_cast<std::uint32_t>(bytes[1]) << 8) |
                       (static_cast<std::uint32_t>(bytes[2]) << 16) |
                       (static_cast<std::uint32_t>(bytes[3]) << 24);
  return std::bit_cast<float>(bits);
}

void write_le_float(std::ostream& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  const char bytes[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                         static_cast<char>((bits >> 16) & 0xFF),
                         static_cast<char>((bits >> 24) & 0xFF)};
  out.write(bytes, 4);
}

EmbeddingTable load_csv(const std::filesystem::path& path, Modality modality) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embeddings " + path.string());
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || header->size() < 2) throw ValidationError("embeddings CSV: bad header");
  std::vector<std::string> ids;
  std::vector<double> values;
  const std::size_t dim = header->size() - 1;
  while (auto row = reader.next()) {
    if (row->size() == 1 && row->front().empty()) continue;
    if (row->size() != dim + 1) {
      throw ValidationError("embeddings CSV line " + std::to_string(reader.line()) +
                            ": expected " + std::to_string(dim + 1) + " fields");
    }
    ids.push_back((*row)[0]);
    for (std::size_t c = 1; c <= dim; ++c) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod((*row)[c], &used));
      } catch (const std::exception&) {
        throw ValidationError("embeddings CSV line " + std::to_string(reader.line()) +
                              ": not a number");
      }
    }
  }
  Matrix m(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < values.size(); ++i) m.data()[i] = values[i];
  return EmbeddingTable(std::move(ids), std::move(m), modality);
}

}  // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path, Modality csv_modality) {
  if (path.extension() == ".csv") return load_csv(path, csv_modality);
  const auto meta_path = path.extension() == ".json" ? path : sidecar_path(path);
  const auto data_path = path.extension() == ".json" ? std::filesystem::path(path).replace_extension(".bin") : path;

  std::ifstream meta_in(meta_path);
  if (!meta_in) throw ValidationError("cannot open embeddings sidecar " + meta_path.string());
  std::vector<std::string> ids;
  std::size_t dim = 0;
  Modality modality = Modality::kImage;
  try {
    const auto meta = nlohmann::json::parse(meta_in);
    ids = meta.at("post_ids").get<std::vector<std::string>>();
    dim = meta.at("dim").get<std::size_t>();
    modality = parse_modality(meta.at("modality").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("embeddings sidecar " + meta_path.string() + ": " + e.what());
  }

  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw ValidationError("cannot open embeddings matrix " + data_path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::size_t expected = ids.size() * dim * 4;
  if (bytes.size() != expected) {
    throw ValidationError("embeddings matrix " + data_path.string() + ": " +
                          std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(expected));
  }
  Matrix m(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < ids.size() * dim; ++i) {
    m.data()[i] = static_cast<double>(read_le_float(&bytes[4 * i]));
  }
  return EmbeddingTable(std::move(ids), std::move(m), modality);
}

void save_embeddings_binary(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto& m = table.vectors();
  for (Eigen::Index i = 0; i < m.size(); ++i) write_le_float(out, static_cast<float>(m.data()[i]));
  const nlohmann::json meta{{"post_ids", table.post_ids()},
                            {"dim", table.dim()},
                            {"modality", to_string(table.modality())}};
  std::ofstream meta_out(sidecar_path(path));
  meta_out << meta.dump() << '\n';
}

void save_embeddings_csv(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "post_id";
  for (std::size_t c = 0; c < table.dim(); ++c) out << ",v" << c;
  out << '\n';
  const auto& m = table.vectors();
  for (std::size_t r = 0; r < table.size(); ++r) {
    out << csv::escape(table.post_ids()[r]);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << ',' << csv::format_double(m(static_cast<Eigen::Index>(r), c));
    }
    out << '\n';
  }
}

}  // namespace engage::topics
