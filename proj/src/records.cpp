#include "repdis/records.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "repdis/embedding_file.hpp"
#include "repdis/error.hpp"

namespace repdis {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string encode_grid(const SynthImage& image) {
  const auto& s = image.shape();
  nlohmann::json h = {
      {"channels", s.channels}, {"dtype", "f32le"}, {"height", s.height}, {"width", s.width}};
  std::string out(kGridMagic);
  out += h.dump();
  out += '\n';
  for (double v : image.pixels()) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) throw NumericalError("grid value not representable as f32");
    append_f32le(out, f);
  }
  return out;
}

SynthImage decode_grid(std::string_view bytes) {
  if (!bytes.starts_with(kGridMagic)) throw FormatError("magic");
  bytes.remove_prefix(kGridMagic.size());
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw FormatError("header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception&) {
    throw FormatError("header");
  }
  if (!h.is_object() || h.value("dtype", "") != "f32le") throw FormatError("header");
  ImageShape shape;
  try {
    shape = {h.at("width").get<std::size_t>(), h.at("height").get<std::size_t>(),
             h.at("channels").get<std::size_t>()};
  } catch (const nlohmann::json::exception&) {
    throw FormatError("header");
  }
  bytes.remove_prefix(nl + 1);
  if (shape.size() == 0 || bytes.size() != shape.size() * 4) throw FormatError("payload size");
  std::vector<double> px(shape.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = load_f32le(bytes.data() + 4 * i);
  return SynthImage(shape, std::move(px));
}

std::string format_trace(const GuidanceTrace& trace) {
  std::string out = "step\tobjective\tgrad_norm\tmillis\n";
  for (const auto& r : trace.records) {
    out += std::to_string(r.step) + '\t' + format_double(r.objective) + '\t' +
           format_double(r.grad_norm) + '\t' + format_double(r.millis) + '\n';
  }
  return out;
}

std::string format_ablation(const AblationReport& report) {
  std::string out = "size\treplicate\terror\n";
  for (const auto& c : report.cells) {
    out += std::to_string(c.size) + '\t' + std::to_string(c.replicate) + '\t' +
           format_double(c.error) + '\n';
  }
  out += "# summary\n# size\tmean\tstd\n";
  for (const auto& s : report.summary) {
    out += "# " + std::to_string(s.size) + '\t' + format_double(s.mean) + '\t' +
           format_double(s.std) + '\n';
  }
  out += std::string("# strictly_decreasing\t") + (report.strictly_decreasing ? "true" : "false") +
         '\n';
  out += "# flattening_ratio\t" +
         (report.flattening_ratio ? format_double(*report.flattening_ratio) : "nan") + '\n';
  out += "# loglog_slope\t" +
         (report.loglog_slope ? format_double(*report.loglog_slope) : "nan") + '\n';
  return out;
}

}  // namespace repdis
