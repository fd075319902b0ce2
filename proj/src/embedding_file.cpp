#include "repdis/embedding_file.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "repdis/error.hpp"

namespace repdis {
namespace {

using nlohmann::json;

std::string header_line(std::size_t count, std::size_t dim, bool labels_present) {
  json h = {{"count", count}, {"dim", dim}, {"dtype", "f32le"}, {"labels_present", labels_present}};
  return h.dump();
}

struct Header {
  std::size_t count = 0;
  std::size_t dim = 0;
  bool labels_present = false;
};

Header parse_header(std::string_view line) {
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception&) {
    throw FormatError("header");
  }
  if (!h.is_object() || h.size() != 4 || !h.contains("count") || !h.contains("dim") ||
      !h.contains("dtype") || !h.contains("labels_present")) {
    throw FormatError("header");
  }
  const auto& c = h["count"];
  const auto& d = h["dim"];
  if (!c.is_number_unsigned() || !d.is_number_unsigned() || !h["labels_present"].is_boolean() ||
      h["dtype"] != "f32le") {
    throw FormatError("header");
  }
  Header out{c.get<std::size_t>(), d.get<std::size_t>(), h["labels_present"].get<bool>()};
  if (out.count < 1 || out.dim < 1) throw FormatError("header");
  if (header_line(out.count, out.dim, out.labels_present) != line) throw FormatError("header");
  return out;
}

// Splits `block` into newline-terminated lines; false if the last line is
// unterminated.
bool split_lines(std::string_view block, std::vector<std::string>& lines) {
  lines.clear();
  while (!block.empty()) {
    const auto nl = block.find('\n');
    if (nl == std::string_view::npos) return false;
    lines.emplace_back(block.substr(0, nl));
    block.remove_prefix(nl + 1);
  }
  return true;
}

}  // namespace

void append_f32le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

float load_f32le(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return std::bit_cast<float>(bits);
}

std::string encode_embeddings(std::span<const EmbeddingVector> vectors,
                              const std::vector<std::string>* labels) {
  if (vectors.empty()) throw EmptyDatasetError("cannot write an embedding file with no rows");
  const std::size_t dim = vectors.front().dim();
  for (const auto& v : vectors) require_same_dim(dim, v.dim(), "write_embeddings");
  if (labels != nullptr) {
    if (labels->size() != vectors.size()) {
      throw DimensionError("write_embeddings: " + std::to_string(labels->size()) +
                           " labels for " + std::to_string(vectors.size()) + " rows");
    }
    for (const auto& l : *labels) {
      if (l.find('\n') != std::string::npos) {
        throw InvalidArgumentError("labels must not contain newlines");
      }
    }
  }

  std::string out(kEmbeddingMagic);
  out += header_line(vectors.size(), dim, labels != nullptr);
  out += '\n';
  if (labels != nullptr) {
    for (const auto& l : *labels) {
      out += l;
      out += '\n';
    }
  }
  out.reserve(out.size() + vectors.size() * dim * 4);
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      const auto f = static_cast<float>(vectors[r][c]);
      if (!std::isfinite(f)) {
        throw NumericalError("non-finite at row " + std::to_string(r) + ", col " +
                             std::to_string(c) + " after conversion to f32");
      }
      append_f32le(out, f);
    }
  }
  return out;
}

EmbeddingTable decode_embeddings(std::string_view bytes) {
  if (!bytes.starts_with(kEmbeddingMagic)) throw FormatError("magic");
  bytes.remove_prefix(kEmbeddingMagic.size());
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw FormatError("header");
  const Header h = parse_header(bytes.substr(0, nl));
  bytes.remove_prefix(nl + 1);

  if (h.count > std::numeric_limits<std::size_t>::max() / 4 / h.dim) {
    throw FormatError("payload size");
  }
  const std::size_t payload = h.count * h.dim * 4;

  EmbeddingTable table;
  if (h.labels_present) {
    std::vector<std::string> lines;
    // The label block is whatever precedes a correctly sized payload. If it
    // is a clean run of lines, its line count decides; otherwise fall back
    // to reading `count` lines from the front.
    if (bytes.size() >= payload && split_lines(bytes.substr(0, bytes.size() - payload), lines)) {
      if (lines.size() != h.count) throw FormatError("labels");
    } else {
      std::string_view rest = bytes;
      for (std::size_t i = 0; i < h.count; ++i) {
        const auto e = rest.find('\n');
        if (e == std::string_view::npos) throw FormatError("labels");
        rest.remove_prefix(e + 1);
      }
      throw FormatError("payload size");
    }
    std::size_t used = 0;
    for (const auto& l : lines) used += l.size() + 1;
    bytes.remove_prefix(used);
    table.labels = std::move(lines);
  }
  if (bytes.size() != payload) throw FormatError("payload size");

  table.vectors.reserve(h.count);
  for (std::size_t r = 0; r < h.count; ++r) {
    std::vector<double> row(h.dim);
    for (std::size_t c = 0; c < h.dim; ++c) {
      const float f = load_f32le(bytes.data() + (r * h.dim + c) * 4);
      if (!std::isfinite(f)) {
        throw FormatError("non-finite at row " + std::to_string(r) + ", col " + std::to_string(c));
      }
      row[c] = static_cast<double>(f);
    }
    table.vectors.emplace_back(std::move(row));
  }
  return table;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

void write_embeddings(const std::filesystem::path& path, std::span<const EmbeddingVector> vectors,
                      const std::vector<std::string>* labels) {
  write_file_atomic(path, encode_embeddings(vectors, labels));
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  try {
    return decode_embeddings(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(std::string(e.what()) + " (in '" + path.string() + "')");
  }
}

EmbeddingRef parse_embedding_ref(const std::string& ref) {
  const auto colon = ref.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == ref.size()) {
    throw InvalidArgumentError("expected <file>:<index>, got '" + ref + "'");
  }
  const std::string idx = ref.substr(colon + 1);
  if (!std::all_of(idx.begin(), idx.end(), [](unsigned char ch) { return std::isdigit(ch); })) {
    throw InvalidArgumentError("embedding index must be a non-negative integer in '" + ref + "'");
  }
  return EmbeddingRef{ref.substr(0, colon), std::stoull(idx)};
}

EmbeddingVector read_embedding_at(const EmbeddingRef& ref) {
  auto table = read_embeddings(ref.path);
  if (ref.index >= table.count()) {
    throw DimensionError("index " + std::to_string(ref.index) + " out of range for '" +
                         ref.path.string() + "' with " + std::to_string(table.count()) + " rows");
  }
  return std::move(table.vectors[ref.index]);
}

}  // namespace repdis
