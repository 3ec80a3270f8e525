#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "perturbmax/bounds.hpp"
#include "perturbmax/concentration.hpp"
#include "perturbmax/entropy.hpp"
#include "perturbmax/errors.hpp"
#include "perturbmax/io.hpp"
#include "perturbmax/learning.hpp"
#include "perturbmax/oracle.hpp"
#include "perturbmax/sampler.hpp"
#include "perturbmax/solvers.hpp"

namespace py = pybind11;
using namespace perturbmax;

namespace {

py::dict summary_dict(const ExactSummary& s) {
  py::dict d;
  d["log_partition"] = s.log_partition;
  d["entropy"] = s.entropy;
  d["marginals"] = s.marginals;
  if (s.gibbs_table) d["gibbs_table"] = *s.gibbs_table;
  return d;
}

SubsetFamily subsets_or_singletons(const PairwiseModel& m, const std::optional<SubsetFamily>& subsets) {
  return subsets ? *subsets : singleton_subsets(m.num_variables());
}

}  // namespace

PYBIND11_MODULE(_perturbmax, m) {
  m.doc() = "Perturb-and-MAP partition-function bounds, sampling, entropy and learning";

  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_OverflowError);
  py::register_exception<SolverRejected>(m, "SolverRejected", PyExc_RuntimeError);

  py::class_<PairwiseModel>(m, "PairwiseModel")
      .def(py::init<std::vector<int>>(), py::arg("cardinalities"))
      .def("set_unary", [](PairwiseModel& self, int i, const std::vector<double>& v) { self.set_unary(i, v); })
      .def("add_edge", [](PairwiseModel& self, int i, int j, const std::vector<double>& t) { return self.add_edge(i, j, t); })
      .def("set_offset", &PairwiseModel::set_offset)
      .def("set_grid", [](PairwiseModel& self, int h, int w) { self.set_grid({h, w}); })
      .def("evaluate", [](const PairwiseModel& self, const std::vector<int>& x) { return self.evaluate(x); })
      .def_property_readonly("num_variables", &PairwiseModel::num_variables)
      .def_property_readonly("cardinalities", [](const PairwiseModel& self) {
        return std::vector<int>(self.cardinalities().begin(), self.cardinalities().end());
      })
      .def_property_readonly("num_edges", [](const PairwiseModel& self) { return self.edges().size(); })
      .def("to_json", [](const PairwiseModel& self) { return model_to_json(self).dump(); })
      .def_static("from_json", [](const std::string& s) { return model_from_json(Json::parse(s)); });

  m.def(
      "generate_spin_glass",
      [](int height, int width, double f, double c, const std::string& mode, std::uint64_t seed) {
        SpinGlassSpec spec{height, width, f, c, coupling_mode_from_string(mode), seed};
        return generate_spin_glass(spec);
      },
      py::arg("height"), py::arg("width"), py::arg("f") = 1.0, py::arg("c") = 1.0, py::arg("mode") = "attractive",
      py::arg("seed") = 0);

  m.def("exact_summary", [](const PairwiseModel& model) { return summary_dict(exact_summary(model)); });
  m.def("exact_bruteforce", [](const PairwiseModel& model) { return summary_dict(exact_bruteforce(model)); });
  m.def("exact_transfer_matrix", [](const PairwiseModel& model) { return summary_dict(exact_transfer_matrix(model)); });
  m.def("exact_gibbs_sample", &exact_gibbs_sample, py::arg("model"), py::arg("count"), py::arg("seed") = 0);

  m.def(
      "map_solve",
      [](const PairwiseModel& model, const std::string& strategy) {
        const auto r = solve(model, nullptr, strategy_from_string(strategy));
        return py::make_tuple(r.argmax, r.value, to_string(r.solver));
      },
      py::arg("model"), py::arg("strategy") = "automatic");

  py::class_<BoundEstimate>(m, "BoundEstimate")
      .def_property_readonly("kind", [](const BoundEstimate& b) { return to_string(b.kind); })
      .def_readonly("mean", &BoundEstimate::mean)
      .def_readonly("samples", &BoundEstimate::samples)
      .def_readonly("per_sample", &BoundEstimate::per_sample)
      .def_readonly("std_error", &BoundEstimate::std_error)
      .def_readonly("deviation_radius", &BoundEstimate::deviation_radius)
      .def_readonly("delta", &BoundEstimate::delta)
      .def_readonly("failure_probability", &BoundEstimate::failure_probability)
      .def("__repr__", [](const BoundEstimate& b) {
        return "<BoundEstimate " + to_string(b.kind) + " mean=" + format_double(b.mean) + ">";
      });

  m.def(
      "upper_bound_logz",
      [](const PairwiseModel& model, std::size_t M, std::uint64_t seed, std::optional<SubsetFamily> subsets, int jobs) {
        BoundOptions o;
        o.jobs = jobs;
        return upper_bound_logz(model, subsets_or_singletons(model, subsets), M, seed, o);
      },
      py::arg("model"), py::arg("M") = 100, py::arg("seed") = 0, py::arg("subsets") = py::none(), py::arg("jobs") = 1);

  m.def(
      "lower_bound_logz",
      [](const PairwiseModel& model, int replication, std::uint64_t seed, double epsilon) {
        return lower_bound_logz(model, uniform_replication(model, replication), seed, epsilon);
      },
      py::arg("model"), py::arg("replication") = 100, py::arg("seed") = 0, py::arg("epsilon") = 0.0);

  m.def(
      "entropy_upper_bound",
      [](const PairwiseModel& model, std::size_t M, std::uint64_t seed, std::optional<SubsetFamily> subsets) {
        return entropy_upper_bound(model, subsets_or_singletons(model, subsets), M, seed);
      },
      py::arg("model"), py::arg("M") = 1000, py::arg("seed") = 0, py::arg("subsets") = py::none());

  m.def(
      "perturbmax_distribution",
      [](const PairwiseModel& model, std::size_t M, std::uint64_t seed, std::optional<SubsetFamily> subsets) {
        return perturbmax_distribution(model, subsets_or_singletons(model, subsets), M, seed).frequencies();
      },
      py::arg("model"), py::arg("M") = 10000, py::arg("seed") = 0, py::arg("subsets") = py::none());

  m.def("marginal_entropy_bound",
        [](const std::vector<std::vector<double>>& marginals) { return marginal_entropy_bound(marginals); });
  m.def("plugin_entropy_miller_madow",
        [](const std::vector<std::uint64_t>& counts) { return plugin_entropy_miller_madow(counts); });
  m.def("total_variation", [](const std::vector<double>& p, const std::vector<double>& q) { return total_variation(p, q); });

  m.def(
      "gibbs_sample",
      [](const PairwiseModel& model, std::size_t count, std::size_t M_phi, std::uint64_t seed) {
        SamplerConfig cfg;
        cfg.M_phi = M_phi;
        cfg.seed = seed;
        GibbsSampler sampler(model, cfg);
        py::list out;
        for (std::size_t k = 0; k < count; ++k) {
          const auto t = sampler.sample(k);
          if (t.sample) out.append(*t.sample);
          else out.append(py::none());
        }
        return out;
      },
      py::arg("model"), py::arg("count"), py::arg("M_phi") = 200, py::arg("seed") = 0);

  m.def(
      "acceptance_rate",
      [](const PairwiseModel& model, std::size_t trials, std::size_t M_phi, std::uint64_t seed) {
        SamplerConfig cfg;
        cfg.M_phi = M_phi;
        cfg.seed = seed;
        const auto a = acceptance_rate(model, trials, cfg);
        py::dict d;
        d["rate"] = a.rate;
        d["lower"] = a.lower;
        d["upper"] = a.upper;
        d["phi0"] = a.phi0;
        d["clamped_rounds"] = a.clamped_rounds;
        return d;
      },
      py::arg("model"), py::arg("trials"), py::arg("M_phi") = 200, py::arg("seed") = 0);

  m.def("mgf_bound_poincare", &mgf_bound_poincare, py::arg("lam"), py::arg("a"));
  m.def("mgf_bound_sobolev", &mgf_bound_sobolev, py::arg("lam"), py::arg("a"));
  m.def("deviation_radius_poincare", &deviation_radius_poincare, py::arg("a"), py::arg("M"), py::arg("delta"));
  m.def("deviation_radius_sobolev", &deviation_radius_sobolev, py::arg("a"), py::arg("M"), py::arg("delta"));
  m.def("best_deviation", &best_deviation, py::arg("a"), py::arg("M"), py::arg("delta"));
  m.def(
      "product_lemma_check",
      [](double lam, double a, double C, int terms) {
        const auto r = product_lemma_check(lam, a, C, terms);
        return py::make_tuple(r.lhs, r.rhs);
      },
      py::arg("lam"), py::arg("a"), py::arg("C"), py::arg("terms") = 40);

  py::class_<DenoisingExample>(m, "DenoisingExample")
      .def_readonly("observed", &DenoisingExample::observed)
      .def_readonly("clean", &DenoisingExample::clean);
  py::class_<DenoisingDataset>(m, "DenoisingDataset")
      .def_readonly("height", &DenoisingDataset::height)
      .def_readonly("width", &DenoisingDataset::width)
      .def_readonly("train", &DenoisingDataset::train)
      .def_readonly("test", &DenoisingDataset::test);
  py::class_<LearnedParams>(m, "LearnedParams")
      .def_readonly("height", &LearnedParams::height)
      .def_readonly("width", &LearnedParams::width)
      .def_readonly("theta", &LearnedParams::theta)
      .def_property_readonly("objective_trace", [](const LearnedParams& p) {
        std::vector<double> v;
        for (const auto& r : p.trace) v.push_back(r.objective);
        return v;
      });

  m.def(
      "make_silhouette_dataset",
      [](int height, int width, std::size_t train, std::size_t test, double noise, std::uint64_t seed) {
        return make_silhouette_dataset({height, width, train, test, noise, seed});
      },
      py::arg("height") = 20, py::arg("width") = 20, py::arg("train") = 10, py::arg("test") = 10, py::arg("noise") = 0.1,
      py::arg("seed") = 0);
  m.def(
      "train",
      [](const DenoisingDataset& data, int iterations, std::size_t M, double step, std::uint64_t seed) {
        TrainOptions o;
        o.iterations = iterations;
        o.M = M;
        o.step = step;
        o.seed = seed;
        return train(data, o);
      },
      py::arg("dataset"), py::arg("iterations") = 30, py::arg("M") = 5, py::arg("step") = 1.0, py::arg("seed") = 0);
  m.def("predict", &predict, py::arg("params"), py::arg("observed"));
  m.def("pixel_error", &pixel_error, py::arg("prediction"), py::arg("truth"));
  m.def("mean_pixel_error", &mean_pixel_error, py::arg("params"), py::arg("examples"));
}
