#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "repdis/cli.hpp"
#include "repdis/config.hpp"
#include "repdis/disentangle.hpp"
#include "repdis/embedding_file.hpp"
#include "repdis/error.hpp"
#include "repdis/synthworld.hpp"

namespace py = pybind11;
using namespace repdis;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<EmbeddingVector> rows_from(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-d array, got " + std::to_string(a.ndim()) + "-d");
  const auto r = a.unchecked<2>();
  std::vector<EmbeddingVector> rows;
  rows.reserve(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) {
    rows.emplace_back(std::vector<double>(r.data(i, 0), r.data(i, 0) + r.shape(1)));
  }
  return rows;
}

EmbeddingVector vector_from(const Array& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-d array, got " + std::to_string(a.ndim()) + "-d");
  return EmbeddingVector(std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array(const std::vector<EmbeddingVector>& rows) {
  const auto n = static_cast<py::ssize_t>(rows.size());
  const auto d = static_cast<py::ssize_t>(rows.empty() ? 0 : rows[0].dim());
  py::array_t<double> out({n, d});
  auto w = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i) {
    for (py::ssize_t j = 0; j < d; ++j) w(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

py::tuple table_tuple(const EmbeddingTable& t) {
  return py::make_tuple(to_array(t.vectors), t.labels ? py::cast(*t.labels) : py::none());
}

const std::vector<std::string>* labels_ptr(const std::optional<std::vector<std::string>>& l) {
  return l ? &*l : nullptr;
}

}  // namespace

PYBIND11_MODULE(_repdis, m) {
  m.doc() = "Embedding-space style/content disentanglement core";
  m.attr("__version__") = std::string(kVersion);

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<DegenerateVectorError>(m, "DegenerateVectorError", base.ptr());
  py::register_exception<EmptyDatasetError>(m, "EmptyDatasetError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<UnknownDomainError>(m, "UnknownDomainError", base.ptr());
  py::register_exception<InvalidArgumentError>(m, "InvalidArgumentError", base.ptr());

  m.def(
      "encode_embeddings",
      [](const Array& rows, std::optional<std::vector<std::string>> labels) {
        return py::bytes(encode_embeddings(rows_from(rows), labels_ptr(labels)));
      },
      py::arg("rows"), py::arg("labels") = py::none(),
      "Canonical EMBV1 bytes of a (count, dim) array.");
  m.def(
      "decode_embeddings",
      [](const py::bytes& data) { return table_tuple(decode_embeddings(std::string(data))); },
      py::arg("data"), "Parses EMBV1 bytes into (rows, labels or None).");
  m.def(
      "write_embeddings",
      [](const std::filesystem::path& path, const Array& rows,
         std::optional<std::vector<std::string>> labels) {
        write_embeddings(path, rows_from(rows), labels_ptr(labels));
      },
      py::arg("path"), py::arg("rows"), py::arg("labels") = py::none());
  m.def(
      "read_embeddings",
      [](const std::filesystem::path& path) { return table_tuple(read_embeddings(path)); },
      py::arg("path"), "Reads an EMBV1 file into (rows, labels or None).");

  m.def(
      "cosine_similarity",
      [](const Array& u, const Array& v) { return cosine_similarity(vector_from(u), vector_from(v)); },
      py::arg("u"), py::arg("v"));
  m.def(
      "mean_embedding",
      [](const Array& rows) { return to_array(mean_embedding(rows_from(rows)).values()); },
      py::arg("rows"));
  m.def(
      "translate",
      [](const Array& input, const Array& source_pool, const Array& target_pool) {
        const auto t = translate(vector_from(input), rows_from(source_pool), rows_from(target_pool));
        return to_array(t.vector.values());
      },
      py::arg("input"), py::arg("source_pool"), py::arg("target_pool"),
      "input - mean(source_pool) + mean(target_pool).");

  m.def(
      "simulate",
      [](const std::string& domain, std::size_t n, std::uint64_t seed,
         std::optional<std::filesystem::path> world_config) {
        const auto params = world_config ? load_world_params(*world_config) : WorldParams{};
        const auto ds = World::from_params(params).sample_embeddings(domain, n, seed);
        return py::make_tuple(to_array(ds.embeddings), to_array(ds.ground_truth.vector.values()));
      },
      py::arg("domain"), py::arg("n"), py::arg("seed") = 0, py::arg("world_config") = py::none(),
      "Synthetic embeddings of one style domain and its true style vector.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (code, stdout, stderr).");
}
