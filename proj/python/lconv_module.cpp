#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "lconv/discovery.hpp"
#include "lconv/error.hpp"
#include "lconv/gconv_approx.hpp"
#include "lconv/groups.hpp"
#include "lconv/layer.hpp"
#include "lconv/loss_theory.hpp"
#include "lconv/numerics.hpp"
#include "lconv/version.hpp"

namespace py = pybind11;
using namespace lieconv;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    Matrix m(static_cast<std::size_t>(a.shape(0)), 1);
    std::memcpy(m.data().data(), a.data(), sizeof(double) * m.data().size());
    return m;
  }
  if (a.ndim() != 2) throw DimensionError("expected a 1-D or 2-D array, got " + std::to_string(a.ndim()) + " dimensions");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::memcpy(m.data().data(), a.data(), sizeof(double) * m.data().size());
  return m;
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::memcpy(out.mutable_data(), m.data().data(), sizeof(double) * m.data().size());
  return out;
}

LConvLayer build_layer(const Array& w0, const std::vector<Array>& eps, const std::vector<Array>& generators) {
  LConvLayer layer;
  layer.w0 = to_matrix(w0);
  for (const auto& e : eps) layer.eps.push_back(to_matrix(e));
  for (const auto& g : generators) layer.generators.push_back(Generator::dense(to_matrix(g)));
  layer.validate();
  return layer;
}

OptimizerConfig make_optimizer(double lr, std::size_t batch_size, std::size_t epochs) {
  OptimizerConfig o;
  o.lr = lr;
  o.batch_size = batch_size;
  o.epochs = epochs;
  o.validate();
  return o;
}

py::dict report_dict(const TrainReport& r) {
  py::dict out;
  out["metrics"] = py::module_::import("json").attr("loads")(r.metrics.dump());
  std::vector<double> train, test;
  for (const auto& e : r.curve) {
    train.push_back(e.train_mse);
    test.push_back(e.test_mse);
  }
  out["train_mse"] = train;
  out["test_mse"] = test;
  out["learned_generator"] = to_array(r.learned_generator);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lie algebra convolution layers, shift approximations and loss diagnostics";
  m.attr("__version__") = kVersion;

  // Most specific exceptions are registered last so they are tried first.
  static py::exception<Error> base(m, "LconvError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<UnsupportedGroupError>(m, "UnsupportedGroupError", base.ptr());
  py::register_exception<TrainingFailure>(m, "TrainingFailure", base.ptr());

  m.def("sw_shift_matrix", [](std::size_t d, double z) { return to_array(sw_shift_matrix(d, z).matrix); },
        py::arg("d"), py::arg("z"), "Band-limited periodic shift by z grid steps.");
  m.def("sw_shift_generator", [](std::size_t d) { return to_array(materialize(sw_shift_generator(d))); },
        py::arg("d"));
  m.def("sw_rotation_generator",
        [](std::size_t w, std::size_t h) { return to_array(materialize(sw_rotation_generator(w, h))); },
        py::arg("width"), py::arg("height"));
  m.def("rotation_matrix_bilinear",
        [](std::size_t w, std::size_t h, double theta) { return to_array(rotation_matrix_bilinear(w, h, theta).matrix); },
        py::arg("width"), py::arg("height"), py::arg("theta"));

  m.def(
      "lconv_forward",
      [](const Array& f, const Array& w0, const std::vector<Array>& eps, const std::vector<Array>& generators) {
        return to_array(lconv_forward(to_matrix(f), build_layer(w0, eps, generators)));
      },
      py::arg("f"), py::arg("w0"), py::arg("eps"), py::arg("generators"),
      "f (d×m_in) ↦ f·W0ᵀ + Σ_i (L_i f)·ε_iᵀ·W0ᵀ.");

  m.def(
      "approx_group_element",
      [](const Array& l, double z, unsigned n) {
        return to_array(approx_group_element(Generator::dense(to_matrix(l)), z, n).matrix);
      },
      py::arg("generator"), py::arg("z"), py::arg("n"), "(I + (z/n)·L)^n");
  m.def(
      "shift_approximation_sweep",
      [](std::size_t d, double z, const std::vector<unsigned>& ns) {
        py::list rows;
        for (const auto& r : shift_approximation_sweep(d, z, ns)) {
          py::dict row;
          row["n"] = r.n;
          row["eta"] = r.eta;
          row["frobenius_error"] = r.frobenius_error;
          row["correlation"] = r.correlation;
          rows.append(row);
        }
        return rows;
      },
      py::arg("d"), py::arg("z"), py::arg("ns"));
  m.def(
      "single_step_errors",
      [](std::size_t d, const std::vector<double>& eps) { return single_step_errors(d, eps); }, py::arg("d"),
      py::arg("eps"));
  m.def(
      "cnn_equivalence_check",
      [](const std::vector<double>& w, std::size_t d, std::uint64_t seed) { return cnn_equivalence_check(w, d, seed); },
      py::arg("kernel_weights"), py::arg("d"), py::arg("seed") = 0);
  m.def(
      "cosine_correlation", [](const Array& a, const Array& b) { return cosine_correlation(to_matrix(a), to_matrix(b)); },
      py::arg("a"), py::arg("b"));

  m.def(
      "gen_fixed_angle_dataset",
      [](std::size_t width, std::size_t height, double theta, std::size_t n_train, std::size_t n_test,
         std::uint64_t seed) {
        FixedAngleTask t;
        t.width = width;
        t.height = height;
        t.theta = theta;
        t.n_train = n_train;
        t.n_test = n_test;
        t.seed = seed;
        t.validate();
        const auto data = gen_fixed_angle_dataset(t);
        py::dict out;
        out["x_train"] = to_array(data.train.x);
        out["y_train"] = to_array(data.train.y);
        out["x_test"] = to_array(data.test.x);
        out["y_test"] = to_array(data.test.y);
        return out;
      },
      py::arg("width") = 7, py::arg("height") = 7, py::arg("theta") = FixedAngleTask{}.theta,
      py::arg("n_train") = 50000, py::arg("n_test") = 10000, py::arg("seed") = 0,
      "Column-per-sample pairs (x, R(θ)x).");
  m.def(
      "train_fixed_angle",
      [](std::size_t width, std::size_t height, double theta, std::size_t n_train, std::size_t n_test,
         std::uint64_t seed, double lr, std::size_t batch_size, std::size_t epochs) {
        FixedAngleTask t;
        t.width = width;
        t.height = height;
        t.theta = theta;
        t.n_train = n_train;
        t.n_test = n_test;
        t.seed = seed;
        t.validate();
        const auto opt = make_optimizer(lr, batch_size, epochs);
        TrainReport r;
        {
          py::gil_scoped_release release;
          r = train_fixed_angle(t, gen_fixed_angle_dataset(t), opt);
        }
        return report_dict(r);
      },
      py::arg("width") = 7, py::arg("height") = 7, py::arg("theta") = FixedAngleTask{}.theta,
      py::arg("n_train") = 50000, py::arg("n_test") = 10000, py::arg("seed") = 0, py::arg("lr") = 1e-2,
      py::arg("batch_size") = 64, py::arg("epochs") = 20);

  m.def(
      "loss_decomposition",
      [](const Array& phi, const Array& w0, const std::vector<Array>& eps, std::size_t width, std::size_t height) {
        const GridSpec grid = height == 0 ? GridSpec::line(width) : GridSpec::image(width, height, true);
        const auto gens = translation_generators(grid);
        LConvLayer layer;
        layer.w0 = to_matrix(w0);
        for (const auto& e : eps) layer.eps.push_back(to_matrix(e));
        layer.generators = gens;
        layer.validate();
        const FieldSample field{grid, to_matrix(phi), 1.0};
        const LossBreakdown b = mse_loss_decomposed(field, field_terms(layer), gens);
        py::dict out;
        out["direct"] = mse_loss_direct(field, layer);
        out["mass"] = b.mass;
        out["kinetic"] = b.kinetic;
        out["divergence"] = b.divergence;
        out["antisymmetric"] = b.antisymmetric;
        out["total"] = b.total();
        return out;
      },
      py::arg("phi"), py::arg("w0"), py::arg("eps"), py::arg("width"), py::arg("height") = 0,
      "MSE of an L-conv layer with translation generators on a periodic line (height 0) or image, split into "
      "mass, kinetic, divergence and antisymmetric parts.");
  m.def(
      "helmholtz_convergence",
      [](const std::vector<std::size_t>& sizes, double eps_bar) {
        py::list rows;
        for (const auto& r : helmholtz_convergence(sizes, eps_bar)) {
          py::dict row;
          row["grid_size"] = r.grid_size;
          row["spacing"] = r.spacing;
          row["el_residual"] = r.el_residual;
          row["noether_divergence"] = r.noether_divergence;
          rows.append(row);
        }
        return rows;
      },
      py::arg("sizes"), py::arg("eps_bar") = 1.0);
}
