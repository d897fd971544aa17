// Python bindings for the main operations.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ssum/channel_model.hpp"
#include "ssum/dictlearn.hpp"
#include "ssum/experiment.hpp"
#include "ssum/hermitian.hpp"
#include "ssum/property_suite.hpp"
#include "ssum/sg.hpp"
#include "ssum/wmmse.hpp"

namespace py = pybind11;
using namespace ssum;

namespace {

sg::SmoothProblem problem_by_name(const std::string& name, int dim, double row_norm,
                                  double lambda) {
  sg::SmoothProblem p;
  if (name == "quadratic_mean") p = sg::quadratic_mean_problem(dim);
  else if (name == "least_squares") p = sg::least_squares_problem(dim, row_norm);
  else if (name == "logistic") p = sg::logistic_problem(dim, row_norm);
  else if (name == "cauchy") p = sg::cauchy_problem(dim, row_norm);
  else throw ConfigError("unknown problem '" + name + "'");
  p.lambda = lambda;
  return p;
}

// Iterates x^0..x^r_max as rows.
Eigen::MatrixXd stack(const std::vector<Eigen::VectorXd>& xs) {
  if (xs.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), xs.front().size());
  for (std::size_t i = 0; i < xs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = xs[i].transpose();
  return m;
}

}  // namespace

PYBIND11_MODULE(_ssum, m) {
  m.doc() = "Stochastic successive upper-bound minimization";

  static py::exception<Error> base(m, "SsumError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", base.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());

  // Hermitian kernels
  m.def("chol_logdet", [](const CMatrix& a) { return chol_logdet(a); }, py::arg("m"));
  m.def("hermitian_solve", [](const CMatrix& a, const CMatrix& b) {
    return hermitian_solve(HermitianPD(a), b);
  }, py::arg("a"), py::arg("b"));
  m.def("power_bisection", [](const CMatrix& a, const CMatrix& b, double p, double tol) {
    auto s = power_bisection(a, b, p, tol);
    return py::make_tuple(s.mu, s.v);
  }, py::arg("a"), py::arg("b"), py::arg("power"), py::arg("tol") = -1.0);

  // WMMSE
  py::class_<wmmse::NetworkConfig>(m, "NetworkConfig")
      .def_static("uniform", &wmmse::NetworkConfig::uniform, py::arg("cells"),
                  py::arg("users_per_cell"), py::arg("tx_antennas"), py::arg("rx_antennas"),
                  py::arg("streams"), py::arg("power"), py::arg("noise"), py::arg("rho") = -1.0)
      .def_readonly("cells", &wmmse::NetworkConfig::cells)
      .def_readonly("rho", &wmmse::NetworkConfig::rho)
      .def_property_readonly("num_users", &wmmse::NetworkConfig::num_users)
      .def("set_csi", [](wmmse::NetworkConfig& c, double eta_db, double gamma_csi, double snr_db) {
        c.csi = {eta_db, gamma_csi, snr_db};
      }, py::arg("eta_db"), py::arg("gamma_csi"), py::arg("snr_db"));

  py::class_<wmmse::ChannelRealization>(m, "ChannelRealization")
      .def(py::init<int, int>())
      .def("__getitem__", [](const wmmse::ChannelRealization& h, std::pair<int, int> ij) {
        return h(ij.first, ij.second);
      })
      .def("__setitem__", [](wmmse::ChannelRealization& h, std::pair<int, int> ij,
                             const CMatrix& v) { h(ij.first, ij.second) = v; })
      .def_property_readonly("users", &wmmse::ChannelRealization::users)
      .def_property_readonly("cells", &wmmse::ChannelRealization::cells);

  py::class_<wmmse::ChannelModel>(m, "ChannelModel")
      .def_static("generate", [](const wmmse::NetworkConfig& cfg, std::uint64_t seed) {
        RngStream rng(seed);
        return wmmse::ChannelModel::generate(cfg, rng);
      }, py::arg("config"), py::arg("seed"))
      .def("sample", [](const wmmse::ChannelModel& mdl, std::uint64_t seed, std::uint64_t id) {
        RngStream rng(seed, id);
        return mdl.sample(rng);
      }, py::arg("seed"), py::arg("stream") = 0)
      .def("estimated_fraction", &wmmse::ChannelModel::estimated_fraction);

  m.def("random_precoders", [](const wmmse::NetworkConfig& cfg, std::uint64_t seed) {
    RngStream rng(seed);
    return wmmse::random_precoders(cfg, rng);
  }, py::arg("config"), py::arg("seed"));
  m.def("mmse_receiver", &wmmse::mmse_receiver);
  m.def("mse_matrix", &wmmse::mse_matrix);
  m.def("rate", &wmmse::rate);
  m.def("sum_rate", &wmmse::sum_rate);
  m.def("cell_powers", &wmmse::cell_powers);
  m.def("deterministic_wmmse", [](const wmmse::NetworkConfig& cfg,
                                  const wmmse::ChannelRealization& h, const wmmse::Precoders& v0,
                                  int n_iter) {
    auto r = wmmse::deterministic_wmmse(cfg, h, v0, n_iter);
    return py::make_tuple(r.v, r.sum_rates);
  });
  m.def("stochastic_wmmse", [](const wmmse::ChannelModel& mdl, const wmmse::Precoders& x0,
                               int r_max, std::uint64_t seed) {
    RngStream rng(seed);
    RunOptions opts;
    opts.r_max = r_max;
    auto t = wmmse::stochastic_wmmse(mdl, x0, rng, opts);
    std::vector<double> steps;
    for (const auto& rec : t.records) steps.push_back(rec.step_norm);
    return py::make_tuple(t.final_point, steps);
  }, py::arg("model"), py::arg("x0"), py::arg("r_max"), py::arg("seed"));
  m.def("ergodic_sum_rate", [](const wmmse::Precoders& v, const wmmse::ChannelModel& mdl,
                               int n_mc, std::uint64_t seed) {
    double se = 0.0;
    double mean = wmmse::ergodic_sum_rate(v, mdl, n_mc, RngStream(seed), &se);
    return py::make_tuple(mean, se);
  }, py::arg("v"), py::arg("model"), py::arg("n_mc"), py::arg("seed"));

  // Dictionary learning
  m.def("lasso", [](const Eigen::MatrixXd& d, const Eigen::VectorXd& y, double lambda) {
    return dict::lasso(d, y, lambda);
  }, py::arg("d"), py::arg("y"), py::arg("lam"));
  m.def("lasso_kkt_residual", &dict::lasso_kkt_residual);
  m.def("fitting_loss", &dict::fitting_loss);
  m.def("learn_dictionary", [](const Eigen::MatrixXd& signals, const Eigen::MatrixXd& d0,
                               double lambda, double gamma, int r_max, std::uint64_t seed) {
    dict::CorpusSource src(signals);
    RngStream rng(seed);
    RunOptions opts;
    opts.r_max = r_max;
    opts.trace_every = r_max;
    return dict::online_dictionary_learning(src, d0, lambda, gamma, rng, opts).final_point;
  }, py::arg("signals"), py::arg("d0"), py::arg("lam"), py::arg("gamma"), py::arg("r_max"),
     py::arg("seed"));

  // SG variants
  m.def("shrink", [](const Eigen::VectorXd& z, double tau) { return sg::shrink(z, tau); });
  m.def("sg_variant", [](const std::string& method, const std::string& problem,
                         const Eigen::MatrixXd& samples, const Eigen::VectorXd& x0,
                         double row_norm, double lambda) {
    auto p = problem_by_name(problem, static_cast<int>(x0.size()), row_norm, lambda);
    Eigen::Index next = 0;
    sg::Sampler sampler = [&] { return Eigen::VectorXd(samples.row(next++).transpose()); };
    const int r = static_cast<int>(samples.rows());
    if (method == "sg") return stack(sg::sg_run(p, x0, r, sampler).iterates);
    if (method == "l1_ssum_sg") return stack(sg::l1_ssum_sg(p, x0, r, sampler).iterates);
    if (method == "ssum_sg") {
      sg::SgModel model(p);
      RunOptions opts;
      opts.r_max = r;
      std::vector<Eigen::VectorXd> xs{x0};
      run_ssum(model, sampler, x0, opts, [&](int, const Eigen::VectorXd& x) { xs.push_back(x); });
      return stack(xs);
    }
    throw ConfigError("unknown method '" + method + "'");
  }, py::arg("method"), py::arg("problem"), py::arg("samples"), py::arg("x0"),
     py::arg("row_norm") = 1.0, py::arg("lam") = 0.0);

  // Experiments
  m.def("run_experiment", [](const std::string& config_text, const std::string& out_dir) {
    auto cfg = exp::ExperimentConfig::from(ConfigFile::parse(config_text));
    auto table = exp::run_experiment(cfg);
    if (!out_dir.empty()) exp::emit_plot_data(table, cfg, out_dir);
    py::list rows;
    for (const auto& r : table.rows) {
      rows.append(py::make_tuple(r.method, r.iteration, r.value, r.stderr_value));
    }
    return rows;
  }, py::arg("config_text"), py::arg("out_dir") = "");
  m.def("config_hash", [](const std::string& config_text) {
    return exp::ExperimentConfig::from(ConfigFile::parse(config_text)).hash();
  });
  m.def("property_suite", [](const std::string& config_text) {
    auto rep = props::property_suite(exp::ExperimentConfig::from(ConfigFile::parse(config_text)));
    return py::make_tuple(rep.all_passed(), rep.text());
  });
}
