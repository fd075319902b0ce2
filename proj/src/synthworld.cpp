#include "repdis/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "repdis/error.hpp"

namespace repdis {
namespace {

using Eigen::Index;

// Orthonormal basis (as rows) of span(leading) extended with smooth random
// fields until `rows` directions are available.
Eigen::MatrixXd orthonormal_rows(const ImageShape& shape, std::size_t rows,
                                 const std::vector<const std::vector<double>*>& leading,
                                 std::uint64_t seed) {
  const auto P = static_cast<Index>(shape.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(P, static_cast<Index>(rows));
  std::size_t col = 0;
  for (const auto* v : leading) {
    A.col(static_cast<Index>(col++)) = Eigen::Map<const Eigen::VectorXd>(v->data(), P);
  }
  std::uniform_real_distribution<double> pos_x(0.0, static_cast<double>(shape.width - 1));
  std::uniform_real_distribution<double> pos_y(0.0, static_cast<double>(shape.height - 1));
  std::uniform_real_distribution<double> width(1.5, 4.0);
  std::normal_distribution<double> amp(0.0, 1.0);
  std::vector<double> amplitude(shape.channels);
  for (; col < rows; ++col) {
    auto rng = derive_stream(seed, {0x66696cULL, col});
    std::span<double> c(A.col(static_cast<Index>(col)).data(), shape.size());
    for (int b = 0; b < 4; ++b) {
      const double cx = pos_x(rng), cy = pos_y(rng), w = width(rng);
      for (auto& a : amplitude) a = amp(rng);
      add_gaussian_bump(c, shape, cx, cy, w, amplitude);
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(P, static_cast<Index>(rows));
  return q.transpose();
}

std::vector<StylePart> default_styles(const WorldParams& p, const ImageShape& shape) {
  std::vector<StylePart> out;
  std::uniform_real_distribution<double> tint(-1.0, 1.0);
  std::uniform_real_distribution<double> freq(0.2, 0.9);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (std::size_t j = 0; j < p.style_labels.size(); ++j) {
    auto rng = derive_stream(p.seed, {0x737479ULL, j});
    std::vector<double> px(shape.size());
    std::vector<double> tints(shape.channels);
    for (auto& t : tints) t = tint(rng);
    const double fx = freq(rng), fy = freq(rng), ph = phase(rng);
    for (std::size_t y = 0; y < shape.height; ++y) {
      for (std::size_t x = 0; x < shape.width; ++x) {
        const double texture =
            0.25 * std::sin(fx * static_cast<double>(x) + fy * static_cast<double>(y) + ph);
        for (std::size_t c = 0; c < shape.channels; ++c) {
          px[shape.index(x, y, c)] = tints[c] + texture;
        }
      }
    }
    out.push_back({p.style_labels[j], std::move(px)});
  }
  return out;
}

std::vector<std::vector<double>> default_content(const WorldParams& p, const ImageShape& shape) {
  std::vector<std::vector<double>> out;
  std::uniform_real_distribution<double> pos_x(0.0, static_cast<double>(shape.width - 1));
  std::uniform_real_distribution<double> pos_y(0.0, static_cast<double>(shape.height - 1));
  std::uniform_real_distribution<double> width(2.0, 4.0);
  std::normal_distribution<double> amp(0.0, 1.0);
  std::vector<double> amplitude(shape.channels);
  for (std::size_t m = 0; m < p.content_parts; ++m) {
    auto rng = derive_stream(p.seed, {0x636f6eULL, m});
    std::vector<double> px(shape.size(), 0.0);
    const double cx = pos_x(rng), cy = pos_y(rng), w = width(rng);
    for (auto& a : amplitude) a = amp(rng);
    add_gaussian_bump(px, shape, cx, cy, w, amplitude);
    double n2 = 0.0;
    for (double v : px) n2 += v * v;
    const double inv = 1.0 / std::sqrt(n2);
    for (double& v : px) v *= inv;
    out.push_back(std::move(px));
  }
  return out;
}

}  // namespace

std::string to_string(EncoderKind kind) {
  return kind == EncoderKind::Linear ? "linear" : "linear_tanh";
}

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "linear") return EncoderKind::Linear;
  if (s == "linear_tanh") return EncoderKind::LinearTanh;
  throw InvalidArgumentError("unknown encoder kind '" + s + "' (expected linear|linear_tanh)");
}

// ---------------------------------------------------------------------------

WorldEncoder::WorldEncoder(EncoderSpec spec, ImageShape image,
                           const std::vector<StylePart>& styles,
                           const std::vector<std::vector<double>>& content_basis)
    : spec_(spec), image_(image) {
  const std::size_t parts = styles.size() + content_basis.size();
  if (spec_.out_dim < parts) {
    throw InvalidArgumentError("encoder out_dim " + std::to_string(spec_.out_dim) +
                               " must be >= content parts + style domains = " +
                               std::to_string(parts));
  }
  if (spec_.out_dim > image_.size()) {
    throw InvalidArgumentError("encoder out_dim " + std::to_string(spec_.out_dim) +
                               " exceeds the pixel count " + std::to_string(image_.size()));
  }
  std::vector<const std::vector<double>*> leading;
  for (const auto& c : content_basis) leading.push_back(&c);
  for (const auto& s : styles) leading.push_back(&s.pixels);
  matrix_ = orthonormal_rows(image_, spec_.out_dim, leading, spec_.matrix_seed);
  if (spec_.kind == EncoderKind::LinearTanh) {
    const auto seed2 = derive_stream(spec_.matrix_seed, {0x74616eULL})();
    nonlinear_matrix_ = orthonormal_rows(image_, spec_.out_dim, {}, seed2);
  }
}

std::string WorldEncoder::name() const { return "world_encoder_" + to_string(spec_.kind); }

std::vector<double> WorldEncoder::forward(std::span<const double> x) const {
  if (x.size() != image_.size()) {
    throw DimensionError("encoder expects " + std::to_string(image_.size()) + " pixels, got " +
                         std::to_string(x.size()));
  }
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Index>(x.size()));
  Eigen::VectorXd r = matrix_ * xv;
  if (spec_.kind == EncoderKind::LinearTanh) {
    r += spec_.nonlinearity_gain * (nonlinear_matrix_ * xv).array().tanh().matrix();
  }
  return {r.data(), r.data() + r.size()};
}

std::vector<double> WorldEncoder::vjp(std::span<const double> x,
                                      std::span<const double> cotangent) const {
  if (x.size() != image_.size() || cotangent.size() != spec_.out_dim) {
    throw DimensionError("encoder vjp: shape mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> w(cotangent.data(), static_cast<Index>(cotangent.size()));
  Eigen::VectorXd g = matrix_.transpose() * w;
  if (spec_.kind == EncoderKind::LinearTanh) {
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Index>(x.size()));
    const Eigen::ArrayXd t = (nonlinear_matrix_ * xv).array().tanh();
    const Eigen::VectorXd inner = (w.array() * (1.0 - t * t)).matrix();
    g += spec_.nonlinearity_gain * (nonlinear_matrix_.transpose() * inner);
  }
  return {g.data(), g.data() + g.size()};
}

Eigen::MatrixXd WorldEncoder::encode_batch(const Eigen::MatrixXd& images) const {
  if (static_cast<std::size_t>(images.rows()) != image_.size()) {
    throw DimensionError("encode_batch expects " + std::to_string(image_.size()) +
                         " rows, got " + std::to_string(images.rows()));
  }
  const Index n = images.cols();
  const auto d = static_cast<Index>(spec_.out_dim);
  Eigen::MatrixXd out(d, n);
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(images.rows(), kBatchBlock);
  Eigen::MatrixXd r(d, kBatchBlock);
  for (Index start = 0; start < n; start += kBatchBlock) {
    const Index width = std::min(kBatchBlock, n - start);
    block.leftCols(width) = images.middleCols(start, width);
    if (width < kBatchBlock) block.rightCols(kBatchBlock - width).setZero();
    r.noalias() = matrix_ * block;
    if (spec_.kind == EncoderKind::LinearTanh) {
      r += spec_.nonlinearity_gain * (nonlinear_matrix_ * block).array().tanh().matrix();
    }
    out.middleCols(start, width) = r.leftCols(width);
  }
  return out;
}

// ---------------------------------------------------------------------------

World::World(ImageShape shape, std::vector<StylePart> styles,
             std::vector<std::vector<double>> content_basis, double sigma, EncoderSpec encoder,
             std::uint64_t seed)
    : shape_(shape),
      styles_(std::move(styles)),
      content_basis_(std::move(content_basis)),
      sigma_(sigma),
      seed_(seed) {
  if (shape_.size() == 0) throw InvalidArgumentError("world image shape must be non-empty");
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) {
    throw InvalidArgumentError("sigma must be finite and >= 0");
  }
  if (styles_.empty()) throw InvalidArgumentError("world needs at least one style part");
  if (content_basis_.empty()) throw InvalidArgumentError("world needs at least one content part");

  std::set<std::string> seen;
  for (const auto& s : styles_) {
    if (s.label.empty()) throw InvalidArgumentError("style labels must be non-empty");
    if (!seen.insert(s.label).second) {
      throw InvalidArgumentError("duplicate style label '" + s.label + "'");
    }
    if (s.pixels.size() != shape_.size()) {
      throw DimensionError("style part '" + s.label + "' does not match the world shape " +
                           to_string(shape_));
    }
  }
  for (const auto& c : content_basis_) {
    if (c.size() != shape_.size()) {
      throw DimensionError("content part does not match the world shape " + to_string(shape_));
    }
  }

  const auto P = static_cast<Index>(shape_.size());
  const auto k = static_cast<Index>(content_basis_.size());
  Eigen::MatrixXd basis(P, k);
  for (Index m = 0; m < k; ++m) {
    basis.col(m) = Eigen::Map<const Eigen::VectorXd>(content_basis_[static_cast<std::size_t>(m)].data(), P);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  if (qr.rank() < k) {
    throw InvalidArgumentError("content basis has rank " + std::to_string(qr.rank()) + " < " +
                               std::to_string(k) + " parts");
  }

  encoder_ = std::make_shared<const WorldEncoder>(encoder, shape_, styles_, content_basis_);
}

World World::from_params(const WorldParams& p) {
  const ImageShape shape{p.image_width, p.image_height, p.channels};
  if (shape.size() == 0) throw InvalidArgumentError("world image shape must be non-empty");
  return World(shape, default_styles(p, shape), default_content(p, shape), p.sigma, p.encoder,
               p.seed);
}

bool World::has_style(const std::string& label) const {
  return std::any_of(styles_.begin(), styles_.end(),
                     [&](const StylePart& s) { return s.label == label; });
}

const StylePart& World::style(const std::string& label) const {
  for (const auto& s : styles_) {
    if (s.label == label) return s;
  }
  std::string known;
  for (const auto& s : styles_) known += (known.empty() ? "" : ",") + s.label;
  throw UnknownDomainError("unknown style domain '" + label + "' (known: " + known + ")");
}

std::vector<double> World::sample_content(Rng& rng) const {
  std::vector<double> c(content_basis_.size(), 0.0);
  if (sigma_ == 0.0) return c;
  std::normal_distribution<double> normal(0.0, sigma_);
  for (auto& v : c) v = normal(rng);
  return c;
}

void World::form_into(const StylePart& style, std::span<const double> content,
                      std::span<double> out) const {
  std::copy(style.pixels.begin(), style.pixels.end(), out.begin());
  for (std::size_t m = 0; m < content.size(); ++m) {
    const double cm = content[m];
    const auto& b = content_basis_[m];
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += cm * b[p];
  }
}

SynthImage World::form_image(const std::string& style_label,
                             std::span<const double> content) const {
  const auto& s = style(style_label);
  if (content.size() != content_basis_.size()) {
    throw DimensionError("content has " + std::to_string(content.size()) +
                         " coefficients, world has " + std::to_string(content_basis_.size()) +
                         " parts");
  }
  std::vector<double> px(shape_.size());
  form_into(s, content, px);
  return SynthImage(shape_, std::move(px),
                    Provenance{style_label, std::vector<double>(content.begin(), content.end())});
}

EmbeddingVector World::encode(const SynthImage& x) const {
  if (!(x.shape() == shape_)) {
    throw DimensionError("image shape " + to_string(x.shape()) + " does not match world " +
                         to_string(shape_));
  }
  return EmbeddingVector(encoder_->forward(x.pixels()));
}

StyleRepresentation World::true_style(const std::string& style_label) const {
  const auto& s = style(style_label);
  const Eigen::MatrixXd img =
      Eigen::Map<const Eigen::VectorXd>(s.pixels.data(), static_cast<Index>(s.pixels.size()));
  const Eigen::MatrixXd r = encoder_->encode_batch(img);
  return StyleRepresentation{EmbeddingVector(std::vector<double>(r.data(), r.data() + r.size())),
                             style_label, 1};
}

SynthDataset World::make_dataset(const std::string& style_label, std::size_t n,
                                 std::uint64_t seed) const {
  return generate(style_label, n, seed, true);
}

SynthDataset World::sample_embeddings(const std::string& style_label, std::size_t n,
                                      std::uint64_t seed) const {
  return generate(style_label, n, seed, false);
}

SynthDataset World::generate(const std::string& style_label, std::size_t n, std::uint64_t seed,
                             bool keep_images) const {
  if (n == 0) throw EmptyDatasetError("dataset size must be >= 1");
  const auto& s = style(style_label);
  SynthDataset out{{}, {}, {}, true_style(style_label)};
  out.embeddings.reserve(n);
  out.contents.reserve(n);
  if (keep_images) out.images.reserve(n);

  const auto P = static_cast<Index>(shape_.size());
  const Index block = WorldEncoder::kBatchBlock * 8;
  Eigen::MatrixXd pixels(P, block);
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(block)) {
    const auto width = static_cast<Index>(std::min<std::size_t>(block, n - start));
    for (Index j = 0; j < width; ++j) {
      const std::size_t i = start + static_cast<std::size_t>(j);
      auto rng = derive_stream(seed, {i});
      auto c = sample_content(rng);
      std::span<double> col(pixels.col(j).data(), shape_.size());
      form_into(s, c, col);
      if (keep_images) {
        out.images.emplace_back(shape_, std::vector<double>(col.begin(), col.end()),
                                Provenance{style_label, c});
      }
      out.contents.push_back(std::move(c));
    }
    const Eigen::MatrixXd r = encoder_->encode_batch(pixels.leftCols(width));
    for (Index j = 0; j < width; ++j) {
      out.embeddings.emplace_back(
          std::vector<double>(r.col(j).data(), r.col(j).data() + r.rows()));
    }
  }
  return out;
}

}  // namespace repdis
