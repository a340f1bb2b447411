#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "traject/cli.hpp"
#include "traject/emos.hpp"
#include "traject/error.hpp"
#include "traject/raft.hpp"
#include "traject/verify.hpp"

namespace py = pybind11;
using namespace traject;

namespace {

std::vector<emos::TrainingPair> make_pairs(const std::vector<double>& means, const std::vector<double>& variances,
                                           const std::vector<double>& observations) {
  if (means.size() != variances.size() || means.size() != observations.size()) {
    throw ConfigError("means, variances and observations must have equal length");
  }
  std::vector<emos::TrainingPair> pairs;
  pairs.reserve(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) pairs.push_back({{means[i], variances[i]}, observations[i]});
  return pairs;
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"traject"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_traject, m) {
  m.doc() = "EMOS post-processing and rapid adjustment of forecast trajectories";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base);
  auto data = py::register_exception<DataError>(m, "DataError", base);
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", data);
  py::register_exception<MissingArtifactError>(m, "MissingArtifactError", base);

  m.attr("MEMBERS") = kMembers;
  m.attr("MAX_LEAD") = kMaxLead;

  m.def("crps_gaussian", &emos::crps_gaussian, py::arg("mu"), py::arg("sigma"), py::arg("y"));
  m.def(
      "crps_ensemble", [](const std::vector<double>& members, double y) { return verify::crps_ensemble(members, y); },
      py::arg("members"), py::arg("y"));
  m.def(
      "rmse",
      [](const std::vector<double>& f, const std::vector<double>& y) { return verify::rmse(f, y); },
      py::arg("forecasts"), py::arg("observations"));
  m.def(
      "pit", [](double mu, double sigma2, double y) { return verify::pit({mu, sigma2}, y); }, py::arg("mu"),
      py::arg("sigma2"), py::arg("y"));
  m.def("skill_score", &verify::skill_score, py::arg("score"), py::arg("reference"));
  m.def(
      "bootstrap_ci",
      [](const std::vector<double>& scores, int n_resamples, double level, std::uint64_t seed) {
        const auto ci = verify::bootstrap_ci(scores, n_resamples, level, seed);
        return py::make_tuple(ci.low, ci.mean, ci.high);
      },
      py::arg("scores"), py::arg("n_resamples") = 1000, py::arg("level") = 0.90, py::arg("seed") = 1);

  py::class_<emos::EmosParams>(m, "EmosParams")
      .def_readonly("a", &emos::EmosParams::a)
      .def_readonly("b", &emos::EmosParams::b)
      .def_readonly("c", &emos::EmosParams::c)
      .def_readonly("d", &emos::EmosParams::d)
      .def_readonly("n_train", &emos::EmosParams::n_train)
      .def_readonly("iterations", &emos::EmosParams::iterations)
      .def_readonly("converged", &emos::EmosParams::converged)
      .def_property_readonly("status", [](const emos::EmosParams& p) { return std::string(emos::to_string(p.status)); })
      .def("predict", [](const emos::EmosParams& p, double mean, double variance) {
        const auto f = emos::predict_emos(p, {mean, variance});
        return py::make_tuple(f.mu, f.sigma2);
      });
  m.def(
      "fit_emos",
      [](const std::vector<double>& means, const std::vector<double>& variances,
         const std::vector<double>& observations) {
        const auto pairs = make_pairs(means, variances, observations);
        return emos::fit_emos(pairs);
      },
      py::arg("ensemble_means"), py::arg("ensemble_variances"), py::arg("observations"),
      "Minimum-CRPS EMOS fit from ensemble means, variances (divisor m) and observations.");

  py::class_<raft::RaftLink>(m, "RaftLink")
      .def_readonly("alpha", &raft::RaftLink::alpha)
      .def_readonly("beta", &raft::RaftLink::beta)
      .def_readonly("p_value", &raft::RaftLink::p_value)
      .def_readonly("residual_sd", &raft::RaftLink::residual_sd)
      .def_readonly("n_train", &raft::RaftLink::n_train)
      .def_readonly("usable", &raft::RaftLink::usable)
      .def("significant", &raft::RaftLink::significant, py::arg("level"))
      .def("predict", &raft::RaftLink::predict, py::arg("observed_error"));
  m.def(
      "fit_link",
      [](const std::vector<double>& predictor, const std::vector<double>& target, int target_lead,
         int predictor_lead) { return raft::fit_link(predictor, target, target_lead, predictor_lead); },
      py::arg("predictor"), py::arg("target"), py::arg("target_lead") = 3, py::arg("predictor_lead") = 1);
  m.def(
      "select_adjustment_period",
      [](int target_lead, const std::map<int, double>& p_values) {
        raft::CellLinks links;
        for (const auto& [predictor, p] : p_values) {
          raft::RaftLink link;
          link.target_lead = target_lead;
          link.predictor_lead = predictor;
          link.p_value = p;
          link.n_train = 100;
          link.usable = true;
          links[target_lead][predictor] = link;
        }
        const auto plan = raft::select_adjustment_period(links, target_lead);
        py::dict out;
        out["period"] = plan.period;
        out["rule"] = std::string(raft::to_string(plan.rule));
        out["first_execution"] = plan.first_execution();
        out["last_execution"] = plan.last_execution();
        return out;
      },
      py::arg("target_lead"), py::arg("p_values"),
      "Adjustment period for a lead from predictor-lead p-values; missing predictors count as non-significant.");

  m.def("run_cli", &run_cli, py::arg("args"), "Runs a CLI subcommand; returns (exit_code, stdout, stderr).");
}
