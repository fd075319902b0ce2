#pragma once

// EMBV1 embedding file:
//
//   "EMBV1\n"
//   {"count":<n>,"dim":<d>,"dtype":"f32le","labels_present":<bool>}\n
//   [n newline-terminated UTF-8 labels]           (only if labels_present)
//   n*d IEEE-754 binary32 little-endian, row-major
//
// The header line is compact JSON with keys in lexicographic order. Readers
// reject anything that is not in this canonical form, so every accepted file
// is re-emitted byte-for-byte by the writer.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "repdis/embedding.hpp"

namespace repdis {

inline constexpr std::string_view kEmbeddingMagic = "EMBV1\n";

struct EmbeddingTable {
  std::vector<EmbeddingVector> vectors;
  std::optional<std::vector<std::string>> labels;

  std::size_t count() const noexcept { return vectors.size(); }
  std::size_t dim() const noexcept { return vectors.empty() ? 0 : vectors.front().dim(); }
};

/// Serialises to the canonical byte form. Values are narrowed to binary32;
/// any value that is not finite after narrowing is rejected.
std::string encode_embeddings(std::span<const EmbeddingVector> vectors,
                              const std::vector<std::string>* labels = nullptr);

/// Strict parse. Throws FormatError with detail "magic", "header", "labels",
/// "payload size" or "non-finite at row r, col c".
EmbeddingTable decode_embeddings(std::string_view bytes);

/// Validates before writing anything, then writes atomically.
void write_embeddings(const std::filesystem::path& path, std::span<const EmbeddingVector> vectors,
                      const std::vector<std::string>* labels = nullptr);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

/// Parses "path:index" (index is the last ':'-separated field).
struct EmbeddingRef {
  std::filesystem::path path;
  std::size_t index = 0;
};
EmbeddingRef parse_embedding_ref(const std::string& ref);
EmbeddingVector read_embedding_at(const EmbeddingRef& ref);

// Shared file helpers.
std::string read_file(const std::filesystem::path& path);
/// Writes to a temporary sibling, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

void append_f32le(std::string& out, float v);
float load_f32le(const char* p);

}  // namespace repdis
