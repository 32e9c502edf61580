#include "ldl/cli.hpp"
#include "ldl/dataset.hpp"
#include "ldl/dynamics.hpp"
#include "ldl/eigen_solver.hpp"
#include "ldl/errors.hpp"
#include "ldl/graph.hpp"
#include "ldl/model.hpp"
#include "ldl/stats.hpp"
#include "ldl/training.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace ldl;
using nlohmann::json;

namespace {

using EdgeList = std::vector<std::pair<Index, Index>>;

graph::Graph make_graph(Index n, const EdgeList& edges) {
  std::vector<graph::Edge> e;
  e.reserve(edges.size());
  for (auto [u, v] : edges) e.push_back({u, v});
  return graph::Graph::simple(n, e);
}

EdgeList edge_list(const graph::Graph& g) {
  EdgeList out;
  for (const auto& e : g.edges()) out.emplace_back(e.u, e.v);
  return out;
}

json to_json_obj(const py::object& o) {
  if (o.is_none()) return json::object();
  return json::parse(py::str(py::module_::import("json").attr("dumps")(o)).cast<std::string>());
}

py::dict trajectory_dict(const dynamics::Trajectory& t) {
  Matrix states(static_cast<Index>(t.times.size()), t.dimension());
  for (std::size_t k = 0; k < t.times.size(); ++k) states.row(static_cast<Index>(k)) = t.states[k].transpose();
  py::dict d;
  d["times"] = t.times;
  d["states"] = states;
  d["solver"] = std::string(dynamics::to_string(t.solver));
  return d;
}

data::Trial trial_from(const py::dict& d) {
  return {d["train"].cast<std::vector<Index>>(), d["val"].cast<std::vector<Index>>(),
          d["test"].cast<std::vector<Index>>()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lying-GCN lab core";

  static py::exception<Error> base(m, "Error");
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<DimensionError> dimension_error(m, "DimensionError", base.ptr());
  static py::exception<ContractError> contract_error(m, "ContractError", base.ptr());
  static py::exception<NumericalError> numerical_error(m, "NumericalError", base.ptr());
  static py::exception<EvaluationError> evaluation_error(m, "EvaluationError", base.ptr());
  static py::exception<ParseError> parse_error(m, "ParseError", base.ptr());
  static py::exception<ValidationError> validation_error(m, "ValidationError", base.ptr());
  static py::exception<IoError> io_error(m, "IoError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      parse_error(e.what());
    } catch (const ValidationError& e) {
      validation_error(e.what());
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const DimensionError& e) {
      dimension_error(e.what());
    } catch (const ContractError& e) {
      contract_error(e.what());
    } catch (const NumericalError& e) {
      numerical_error(e.what());
    } catch (const EvaluationError& e) {
      evaluation_error(e.what());
    } catch (const IoError& e) {
      io_error(e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  py::class_<data::Dataset>(m, "Dataset")
      .def_readwrite("name", &data::Dataset::name)
      .def_readwrite("features", &data::Dataset::features)
      .def_readwrite("labels", &data::Dataset::labels)
      .def_readwrite("num_classes", &data::Dataset::num_classes)
      .def_property_readonly("n_nodes", &data::Dataset::n_nodes)
      .def_property_readonly("edges", [](const data::Dataset& d) { return edge_list(d.graph); })
      .def("homophily", [](const data::Dataset& d) { return graph::edge_homophily(d.graph, d.labels); })
      .def("__repr__", [](const data::Dataset& d) {
        return "<Dataset " + d.name + " n=" + std::to_string(d.n_nodes()) + " C=" + std::to_string(d.num_classes) +
               ">";
      });

  m.def(
      "generate_multipartite",
      [](int partitions, Index nodes, double avg_degree, Index feat_dim, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return data::generate_multipartite(partitions, nodes, avg_degree, feat_dim, rng);
      },
      py::arg("partitions"), py::arg("nodes") = 1600, py::arg("avg_degree") = 5.0, py::arg("feat_dim") = 50,
      py::arg("seed") = 0);

  m.def(
      "random_splits",
      [](Index n, std::array<double, 3> fractions, int trials, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        py::list out;
        for (const auto& t : data::make_random_splits(n, fractions, trials, rng).trials) {
          py::dict d;
          d["train"] = t.train;
          d["val"] = t.val;
          d["test"] = t.test;
          out.append(d);
        }
        return out;
      },
      py::arg("n"), py::arg("fractions") = std::array<double, 3>{0.6, 0.2, 0.2}, py::arg("trials") = 10,
      py::arg("seed") = 0);

  m.def(
      "load_canonical",
      [](const std::filesystem::path& path) {
        auto loaded = data::load_canonical(path);
        py::list splits;
        if (loaded.splits)
          for (const auto& t : loaded.splits->trials) {
            py::dict d;
            d["train"] = t.train;
            d["val"] = t.val;
            d["test"] = t.test;
            splits.append(d);
          }
        return py::make_tuple(std::move(loaded.dataset), splits, loaded.warnings);
      },
      py::arg("path"));

  m.def(
      "save_canonical",
      [](const std::filesystem::path& path, const data::Dataset& ds, const std::optional<py::list>& splits) {
        if (!splits) return data::save_canonical(path, ds);
        data::SplitSet s;
        for (const auto& t : *splits) s.trials.push_back(trial_from(t.cast<py::dict>()));
        data::save_canonical(path, ds, &s);
      },
      py::arg("path"), py::arg("dataset"), py::arg("splits") = py::none());

  m.def(
      "normalize_adjacency",
      [](Index n, const EdgeList& edges) {
        const auto ops = graph::normalize_adjacency(make_graph(n, edges));
        return py::make_tuple(ops.adjacency.to_dense(), ops.laplacian.to_dense());
      },
      py::arg("n"), py::arg("edges"), "Dense (S, L) for the self-loop augmented, symmetrically normalized graph.");

  m.def("eigvals", [](const Matrix& a) { return numerics::eig_dense(a, {.compute_vectors = false}).eigenvalues; },
        py::arg("a"));

  m.def(
      "lying_matrix",
      [](Index n, const EdgeList& edges, const Matrix& z) {
        return dynamics::build_lying_E(graph::normalize_adjacency(make_graph(n, edges)), z);
      },
      py::arg("n"), py::arg("edges"), py::arg("z"));

  m.def(
      "random_opinion_weights",
      [](Index n, const EdgeList& edges, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return dynamics::random_opinion_weights(make_graph(n, edges), rng);
      },
      py::arg("n"), py::arg("edges"), py::arg("seed") = 0);

  m.def(
      "spectral_check",
      [](Index n, const EdgeList& edges, const Matrix& z) {
        const auto r = dynamics::verify_proposition1(make_graph(n, edges), z);
        py::dict d;
        d["eigenvalues"] = r.eigenvalues;
        d["min_real_part"] = r.min_real_part;
        d["min_nonzero_real_part"] = r.min_nonzero_real_part;
        d["zero_eigenvalues"] = r.zero_eigenvalues;
        d["complex_eigenvalues"] = r.complex_eigenvalues;
        d["spectrum_ok"] = r.spectrum_ok;
        d["gershgorin_ok"] = r.gershgorin_ok;
        d["pass"] = r.pass;
        d["violations"] = r.violations;
        return d;
      },
      py::arg("n"), py::arg("edges"), py::arg("z"));

  m.def(
      "simulate",
      [](const Matrix& coefficients, const dynamics::Vector& h0, const std::vector<double>& times, double rate,
         const std::string& solver, double max_dt) {
        const dynamics::DiffusionSystem sys{dynamics::SystemKind::lying, coefficients, rate};
        if (solver == "closed_form") return trajectory_dict(dynamics::solve_closed_form(sys, h0, times));
        if (solver == "rk4") return trajectory_dict(dynamics::solve_rk4_at(sys, h0, times, max_dt));
        throw ConfigError("solver must be closed_form or rk4");
      },
      py::arg("coefficients"), py::arg("h0"), py::arg("times"), py::arg("rate") = 1.0,
      py::arg("solver") = "closed_form", py::arg("max_dt") = 1e-3, "Integrates dh/dt = -rate * E h.");

  m.def(
      "train",
      [](const data::Dataset& ds, const py::dict& trial, const py::object& model, const py::object& spec,
         int trial_index) {
        const json mj = to_json_obj(model);
        const auto cfg = layers::model_config_from_json(mj);
        const auto ts = experiments::train_spec_from_json(to_json_obj(spec));
        const auto ops = graph::normalize_adjacency(ds.graph);
        const auto tm = experiments::train_model(cfg, ts, ds, ops, trial_from(trial), trial_index);
        const auto& r = tm.result;
        py::dict d;
        d["config_id"] = r.config_id;
        d["trial"] = r.trial;
        d["best_val_acc"] = r.best_val_acc;
        d["test_acc"] = r.test_acc;
        d["train_acc"] = r.train_acc;
        d["best_epoch"] = r.best_epoch;
        d["epochs"] = r.epochs;
        d["seconds"] = r.seconds;
        d["failed"] = r.failed;
        d["failure"] = r.failure;
        d["parameter_count"] = tm.params.parameter_count();
        return d;
      },
      py::arg("dataset"), py::arg("trial"), py::arg("model") = py::none(), py::arg("spec") = py::none(),
      py::arg("trial_index") = 0);

  m.def(
      "welch_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = experiments::welch_t_test(a, b);
        return py::make_tuple(r.t, r.df, r.p_value);
      },
      py::arg("a"), py::arg("b"), "Returns (t, df, two-sided p).");
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) {
    return experiments::spearman(x, y);
  });

  m.def(
      "cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "ldl");
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
