#include "ldl/cli.hpp"

#include "ldl/dynamics.hpp"
#include "ldl/errors.hpp"
#include "ldl/grid.hpp"
#include "ldl/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace ldl::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using experiments::TrainSpec;
using layers::ModelConfig;

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

json parse_json_arg(const std::string& text, const char* what) {
  std::string body = text;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw ConfigError(std::string(what) + " is empty");
  if (text[first] != '{' && text[first] != '[' && text[first] != '"') {
    std::ifstream in(text);
    if (!in) throw ConfigError(std::string("cannot read ") + what + " file " + text);
    std::ostringstream buf;
    buf << in.rdbuf();
    body = buf.str();
  }
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed ") + what + ": " + e.what());
  }
}

void mkdirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

// Resolved configuration: every option value (given or defaulted) and the
// argument vector that replays the run through `ldl rerun`.
json resolved_config(const CLI::App& sub) {
  json options = json::object();
  json argv = json::array({sub.get_name()});
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    std::vector<std::string> values;
    if (opt->count() > 0) {
      values = opt->results();
    } else if (!opt->get_default_str().empty()) {
      values = {opt->get_default_str()};
    } else {
      continue;
    }
    options[name] = values.size() == 1 ? json(values.front()) : json(values);
    argv.push_back("--" + name);
    for (const auto& v : values) argv.push_back(v);
  }
  return {{"command", sub.get_name()}, {"options", options}, {"argv", argv}};
}

void write_json(const fs::path& path, const json& j) { experiments::write_text(path, j.dump(2) + "\n"); }

struct LoadedData {
  data::Dataset ds;
  data::SplitSet splits;
};

LoadedData load_dataset(const std::string& path, std::uint64_t seed, int max_trials, std::ostream& err) {
  auto loaded = data::load_canonical(path);
  for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
  LoadedData out{std::move(loaded.dataset), {}};
  if (loaded.splits) {
    out.splits = std::move(*loaded.splits);
  } else {
    err << "warning: " << path << " has no splits; drawing 10 random 60/20/20 splits\n";
    std::mt19937_64 rng(seed);
    out.splits = data::make_random_splits(out.ds.n_nodes(), {0.6, 0.2, 0.2}, 10, rng);
  }
  if (max_trials > 0 && static_cast<int>(out.splits.trials.size()) > max_trials)
    out.splits.trials.resize(static_cast<std::size_t>(max_trials));
  return out;
}

const std::set<std::string>& model_keys() {
  static const std::set<std::string> keys{"model", "layers", "hidden", "activation", "p_input", "p_layer", "alpha",
                                          "lambda"};
  return keys;
}

const std::set<std::string>& train_keys() {
  static const std::set<std::string> keys{"optimizer", "lr", "weight_decay", "max_epochs", "patience", "seed"};
  return keys;
}

// Splits a run configuration into its model and training halves; unknown keys are errors.
void read_run_config(const json& j, ModelConfig& cfg, TrainSpec& spec) {
  if (!j.is_object()) throw ConfigError("run configuration must be a JSON object");
  json m = json::object(), t = json::object();
  for (const auto& [key, value] : j.items()) {
    if (model_keys().contains(key)) {
      m[key] = value;
    } else if (train_keys().contains(key)) {
      t[key] = value;
    } else {
      throw ConfigError("unknown configuration key '" + key + "'");
    }
  }
  cfg = layers::model_config_from_json(m, cfg);
  spec = experiments::train_spec_from_json(t, spec);
}

struct TrainOverrides {
  std::optional<std::string> optimizer;
  std::optional<double> lr;
  std::optional<double> weight_decay;
  std::optional<int> max_epochs;
  std::optional<int> patience;

  void add_to(CLI::App* sub) {
    sub->add_option("--optimizer", optimizer, "adam or adamw");
    sub->add_option("--lr", lr, "Learning rate");
    sub->add_option("--weight-decay", weight_decay, "Weight decay");
    sub->add_option("--max-epochs", max_epochs, "Epoch budget");
    sub->add_option("--patience", patience, "Early-stopping patience on validation accuracy");
  }

  void apply(TrainSpec& spec) const {
    if (optimizer) spec.optimizer = experiments::parse_optimizer(*optimizer);
    if (lr) spec.lr = *lr;
    if (weight_decay) spec.weight_decay = *weight_decay;
    if (max_epochs) spec.max_epochs = *max_epochs;
    if (patience) spec.patience = *patience;
  }
};

int default_workers() {
  if (const char* env = std::getenv("LDL_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("LDL_WORKERS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string kind;
  long nodes = 1600;
  double avg_degree = 5.0;
  long feat_dim = kDefaultFeatDim;
  std::uint64_t seed = 0;
  int trials = 10;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, const CLI::App& sub, std::ostream& out) {
  int k = 0;
  if (a.kind == "bipartite") {
    k = 2;
  } else if (a.kind == "tripartite") {
    k = 3;
  } else {
    throw ConfigError("--kind must be bipartite or tripartite");
  }
  std::mt19937_64 rng(a.seed);
  const auto ds = data::generate_multipartite(k, a.nodes, a.avg_degree, a.feat_dim, rng);
  const auto splits = data::make_random_splits(ds.n_nodes(), {0.6, 0.2, 0.2}, a.trials, rng);
  const fs::path path(a.out);
  if (path.has_parent_path()) mkdirs(path.parent_path());
  data::save_canonical(path, ds, &splits);
  fs::path cfg_path = path;
  cfg_path.replace_extension(".config.json");
  write_json(cfg_path, resolved_config(sub));
  out << ds.name << ": " << ds.n_nodes() << " nodes, " << ds.graph.n_edges() << " edges, mean degree "
      << fmt("%.3f", 2.0 * static_cast<double>(ds.graph.n_edges()) / static_cast<double>(ds.n_nodes())) << ", "
      << ds.num_classes << " classes, " << splits.trials.size() << " splits -> " << path.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string dataset;
  std::string model;
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int trials = 0;
  std::optional<int> layers;
  std::optional<int> hidden;
  std::optional<std::string> activation;
  std::optional<double> p_input;
  std::optional<double> p_layer;
  std::optional<double> alpha;
  std::optional<double> lambda;
  std::optional<int> embeddings;
  TrainOverrides train;
};

int cmd_train(const TrainArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  ModelConfig cfg;
  cfg.kind = layers::parse_model_kind(a.model);
  TrainSpec spec;
  if (!a.config.empty()) read_run_config(parse_json_arg(a.config, "--config"), cfg, spec);
  cfg.kind = layers::parse_model_kind(a.model);
  if (a.layers) cfg.depth = *a.layers;
  if (a.hidden) cfg.width = *a.hidden;
  if (a.activation) cfg.activation = numerics::parse_activation(*a.activation);
  if (a.p_input) cfg.p_input = *a.p_input;
  if (a.p_layer) cfg.p_layer = *a.p_layer;
  if (a.alpha) cfg.alpha = *a.alpha;
  if (a.lambda) cfg.lambda = *a.lambda;
  a.train.apply(spec);
  spec.seed = a.seed;
  cfg.validate();
  spec.validate();

  const auto data = load_dataset(a.dataset, a.seed, a.trials, err);
  const auto ops = graph::normalize_adjacency(data.ds.graph);
  const fs::path dir(a.out);
  mkdirs(dir);

  std::vector<experiments::ResultRow> rows;
  std::vector<double> tests;
  bool diverged = false;
  for (std::size_t t = 0; t < data.splits.trials.size(); ++t) {
    const int ti = static_cast<int>(t);
    auto trained = experiments::train_model(cfg, spec, data.ds, ops, data.splits.trials[t], ti);
    const auto& r = trained.result;
    if (r.failed) {
      diverged = true;
      err << "trial " << t << " failed: " << r.failure << '\n';
      rows.push_back({data.ds.name, std::string(layers::to_string(cfg.kind)), cfg.id(), ti, NAN, NAN, r.epochs,
                      r.seconds});
      continue;
    }
    out << "trial " << t << ": val " << fmt("%.4f", r.best_val_acc) << " test " << fmt("%.4f", r.test_acc)
        << " epochs " << r.epochs << " (best " << r.best_epoch << ")\n";
    rows.push_back({data.ds.name, std::string(layers::to_string(cfg.kind)), cfg.id(), ti, r.best_val_acc, r.test_acc,
                    r.epochs, r.seconds});
    tests.push_back(r.test_acc);
    if (a.embeddings && t == 0)
      experiments::export_embeddings(trained.params, data.ds, *a.embeddings,
                                     dir / ("embeddings_layer" + std::to_string(*a.embeddings) + ".csv"));
  }

  experiments::SummaryRow summary{data.ds.name, std::string(layers::to_string(cfg.kind)), NAN, NAN,
                                  static_cast<int>(tests.size())};
  if (!tests.empty()) {
    summary.mean_test_acc = experiments::mean(tests);
    summary.std_test_acc = experiments::stddev(tests);
  }
  experiments::write_results(dir / "results.csv", rows);
  experiments::write_summary(dir / "summary.csv", {summary});
  json resolved = resolved_config(sub);
  resolved["model_config"] = layers::to_json(cfg);
  resolved["train_spec"] = experiments::to_json(spec);
  write_json(dir / "config.json", resolved);
  out << summary.model << " on " << summary.dataset << ": " << fmt("%.2f", 100.0 * summary.mean_test_acc) << " +- "
      << fmt("%.2f", 100.0 * summary.std_test_acc) << " over " << summary.trials << " trials\n";
  return diverged ? kNumerical : kOk;
}

// ---------------------------------------------------------------- grid

struct GridArgs {
  std::string dataset;
  std::string model;
  std::string grid;
  std::string config;
  std::string out;
  int workers = 1;
  std::uint64_t seed = 0;
  int trials = 0;
  bool quiet = false;
  TrainOverrides train;
};

experiments::HyperGrid resolve_grid(const std::string& text, layers::ModelKind kind) {
  if (text == "synthetic") return experiments::synthetic_grid(kind);
  if (text == "realworld") return experiments::realworld_grid(kind);
  return experiments::hyper_grid_from_json(parse_json_arg(text, "--grid"), kind);
}

TrainSpec resolve_train_spec(const std::string& config, const TrainOverrides& overrides, std::uint64_t seed) {
  TrainSpec spec;
  if (!config.empty()) {
    const json j = parse_json_arg(config, "--config");
    if (!j.is_object()) throw ConfigError("--config must be a JSON object");
    for (const auto& [key, _] : j.items())
      if (!train_keys().contains(key)) throw ConfigError("unknown training key '" + key + "'");
    spec = experiments::train_spec_from_json(j);
  }
  overrides.apply(spec);
  spec.seed = seed;
  spec.validate();
  return spec;
}

int cmd_grid(const GridArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  const auto kind = layers::parse_model_kind(a.model);
  const auto grid = resolve_grid(a.grid, kind);
  const TrainSpec spec = resolve_train_spec(a.config, a.train, a.seed);
  const auto data = load_dataset(a.dataset, a.seed, a.trials, err);
  const fs::path dir(a.out);
  mkdirs(dir);

  json resolved = resolved_config(sub);
  resolved["grid"] = experiments::to_json(grid);
  resolved["train_spec"] = experiments::to_json(spec);
  write_json(dir / "config.json", resolved);

  experiments::GridOptions options;
  options.train = spec;
  options.workers = a.workers;
  options.dataset_name = data.ds.name;
  options.results_path = dir / "results.csv";
  const std::size_t total = grid.size() * data.splits.trials.size();
  std::size_t finished = 0;
  if (!a.quiet) {
    options.on_cell = [&](const experiments::ResultRow& r) {
      out << "[" << ++finished << "] " << r.config_id << " trial " << r.trial << ": val " << fmt("%.4f", r.val_acc)
          << " test " << fmt("%.4f", r.test_acc) << '\n';
    };
  }
  out << grid.size() << " configurations x " << data.splits.trials.size() << " trials = " << total << " cells\n";
  const auto report = experiments::grid_search(grid, data.ds, data.splits, options);
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  if (report.resumed_cells > 0) out << "resumed " << report.resumed_cells << " cells from " << options.results_path.string() << '\n';

  experiments::write_results(dir / "results.csv", report.rows);
  experiments::write_summary(dir / "summary.csv", {report.summary()});
  std::string sel = "trial,config_id,val_acc,test_acc\n";
  for (const auto& s : report.selections) {
    sel += std::to_string(s.trial) + "," + s.config_id + "," + fmt("%.17g", s.val_acc) + "," +
           fmt("%.17g", s.test_acc) + "\n";
    out << "trial " << s.trial << ": " << s.config_id << " val " << fmt("%.4f", s.val_acc) << " test "
        << fmt("%.4f", s.test_acc) << '\n';
  }
  experiments::write_text(dir / "selections.csv", sel);
  out << report.model << " on " << report.dataset << ": " << fmt("%.2f", 100.0 * report.mean_test_acc) << " +- "
      << fmt("%.2f", 100.0 * report.std_test_acc) << " over " << report.selections.size() << " trials\n";
  return std::isfinite(report.mean_test_acc) ? kOk : kNumerical;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  std::string dataset;
  std::vector<std::string> models;
  std::string config;
  std::string depths = "1,2,3,4,5,6,7,8,9,10";
  std::string out;
  int workers = 1;
  std::uint64_t seed = 0;
  int trials = 0;
  TrainOverrides train;
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("not an integer list: " + text);
    }
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

int cmd_sweep(const SweepArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  const auto depths = parse_int_list(a.depths);
  ModelConfig base_cfg;
  TrainSpec spec;
  if (!a.config.empty()) read_run_config(parse_json_arg(a.config, "--config"), base_cfg, spec);
  a.train.apply(spec);
  spec.seed = a.seed;
  spec.validate();
  std::vector<experiments::GridPoint> bases;
  for (const auto& m : a.models) {
    experiments::GridPoint gp{base_cfg, spec.weight_decay};
    gp.model.kind = layers::parse_model_kind(m);
    gp.model.validate();
    bases.push_back(gp);
  }
  const auto data = load_dataset(a.dataset, a.seed, a.trials, err);
  const fs::path dir(a.out);
  mkdirs(dir);
  write_json(dir / "config.json", resolved_config(sub));

  experiments::GridOptions options;
  options.train = spec;
  options.workers = a.workers;
  options.dataset_name = data.ds.name;
  options.results_path = dir / "results.csv";
  const auto rows = experiments::layer_sweep(bases, depths, data.ds, data.splits, options);
  experiments::write_sweep(dir / "sweep.csv", rows);
  for (const auto& r : rows)
    out << r.model << " depth " << r.depth << ": val " << fmt("%.4f", r.mean_val_acc) << " +- "
        << fmt("%.4f", r.std_val_acc) << " test " << fmt("%.4f", r.mean_test_acc) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string system;
  std::string graph = "chain3";
  std::string z_spec;
  std::string sheaf_spec;
  std::string h0;
  double t_max = 10.0;
  double dt = 1e-3;
  long samples = 1001;
  double rate = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

Matrix opinion_weights_from_spec(const std::string& spec, const graph::Graph& g, std::mt19937_64& rng) {
  if (spec == "ones") return dynamics::unit_opinion_weights(g);
  if (spec == "random") return dynamics::random_opinion_weights(g, rng);
  const json j = parse_json_arg(spec, "--z-spec");
  if (!j.is_array()) throw ConfigError("--z-spec must be ones, random, or a list of [receiver, sender, z]");
  Matrix z = dynamics::unit_opinion_weights(g);
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto& e = j[k];
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
        !e[2].is_number())
      throw ConfigError("--z-spec entry " + std::to_string(k) + " must be [receiver, sender, z]");
    const Index u = e[0].get<Index>(), v = e[1].get<Index>();
    const double value = e[2].get<double>();
    if (u < 0 || v < 0 || u >= g.n_nodes() || v >= g.n_nodes() || u == v || z(u, v) == 0.0)
      throw ConfigError("--z-spec entry " + std::to_string(k) + " is not an edge of the graph");
    if (!(value >= -1.0 && value <= 1.0))
      throw ConfigError("--z-spec entry " + std::to_string(k) + ": z = " + fmt("%g", value) + " lies outside [-1, 1]");
    z(u, v) = value;
  }
  return z;
}

std::vector<dynamics::SheafEdge> sheaf_edges_from_spec(const std::string& spec, const graph::Graph& g) {
  const json j = parse_json_arg(spec, "--sheaf-spec");
  if (!j.is_array()) throw ConfigError("--sheaf-spec must be a list of [u, v, F_u, F_v]");
  std::vector<dynamics::SheafEdge> edges;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto& e = j[k];
    if (!e.is_array() || e.size() != 4) throw ConfigError("--sheaf-spec entry " + std::to_string(k) + " must be [u, v, F_u, F_v]");
    try {
      edges.push_back({e[0].get<Index>(), e[1].get<Index>(), e[2].get<double>(), e[3].get<double>()});
    } catch (const json::exception&) {
      throw ConfigError("--sheaf-spec entry " + std::to_string(k) + " has non-numeric fields");
    }
    if (edges.back().u < 0 || edges.back().v < 0 || edges.back().u >= g.n_nodes() || edges.back().v >= g.n_nodes())
      throw ConfigError("--sheaf-spec entry " + std::to_string(k) + " has an endpoint outside the graph");
  }
  return edges;
}

int cmd_simulate(const SimulateArgs& a, const CLI::App& sub, std::ostream& out) {
  if (a.t_max < 0.0) throw ConfigError("--t-max must be non-negative");
  if (!(a.dt > 0.0)) throw ConfigError("--dt must be positive");
  if (a.samples < 2) throw ConfigError("--samples must be at least 2");
  const bool chain = a.graph == "chain3";
  std::mt19937_64 rng(a.seed);

  graph::Graph g;
  dynamics::Vector h0;
  if (chain) {
    g = dynamics::chain3_preset(dynamics::default_chain3_h0()).graph;
    h0 = dynamics::default_chain3_h0();
  } else {
    g = data::load_canonical(a.graph).dataset.graph;
    std::normal_distribution<double> normal;
    h0 = dynamics::Vector(g.n_nodes());
    for (Index i = 0; i < h0.size(); ++i) h0(i) = normal(rng);
  }
  if (!a.h0.empty()) {
    const json j = parse_json_arg(a.h0, "--h0");
    if (!j.is_array() || static_cast<Index>(j.size()) != g.n_nodes())
      throw ConfigError("--h0 must list one value per node (" + std::to_string(g.n_nodes()) + ")");
    for (Index i = 0; i < g.n_nodes(); ++i) h0(i) = j[static_cast<std::size_t>(i)].get<double>();
  }

  dynamics::DiffusionSystem sys;
  if (a.system == "heat") {
    sys = dynamics::heat_system(g, a.rate);
  } else if (a.system == "heat-norm") {
    sys = dynamics::normalized_heat_system(g, a.rate);
  } else if (a.system == "sheaf") {
    std::vector<dynamics::SheafEdge> edges;
    if (!a.sheaf_spec.empty()) {
      edges = sheaf_edges_from_spec(a.sheaf_spec, g);
    } else if (chain) {
      edges = dynamics::chain3_preset(h0).sheaf_edges;
    } else {
      throw ConfigError("--system sheaf on a dataset graph needs --sheaf-spec");
    }
    sys = dynamics::sheaf_system(g.n_nodes(), edges, a.rate);
  } else if (a.system == "lying") {
    Matrix z;
    if (!a.z_spec.empty()) {
      z = opinion_weights_from_spec(a.z_spec, g, rng);
    } else if (chain) {
      z = dynamics::chain3_preset(h0).z;
    } else {
      throw ConfigError("--system lying on a dataset graph needs --z-spec");
    }
    sys = dynamics::lying_system(graph::normalize_adjacency(g), z, a.rate);
  } else {
    throw ConfigError("--system must be heat, heat-norm, sheaf, or lying");
  }

  std::vector<double> times;
  if (a.t_max == 0.0) {
    times = {0.0};
  } else {
    for (long k = 0; k < a.samples; ++k)
      times.push_back(a.t_max * static_cast<double>(k) / static_cast<double>(a.samples - 1));
  }
  std::vector<std::string> warnings;
  const auto closed = dynamics::solve_closed_form(sys, h0, times, &warnings);
  const auto rk = dynamics::solve_rk4_at(sys, h0, times, a.dt);
  const double gap = dynamics::max_gap(closed, rk);
  const bool agree = gap <= 1e-6;

  const fs::path dir(a.out);
  mkdirs(dir);
  dynamics::write_trajectory_csv(closed, dir / "closed_form.csv");
  dynamics::write_trajectory_csv(rk, dir / "rk4.csv");

  json summary{{"system", a.system},
               {"nodes", g.n_nodes()},
               {"t_max", a.t_max},
               {"rows", times.size()},
               {"closed_form_solver", std::string(dynamics::to_string(closed.solver))},
               {"imaginary_residue", closed.imaginary_residue},
               {"solver_gap", gap},
               {"solvers_agree", agree},
               {"final_norm_ratio", h0.norm() > 0.0 ? closed.states.back().norm() / h0.norm() : 0.0},
               {"warnings", warnings}};
  out << a.system << " on " << (chain ? "chain3" : a.graph) << ": " << times.size() << " samples, solver gap "
      << fmt("%.3e", gap) << (agree ? " (agree)" : " (DISAGREE)") << '\n';
  for (const auto& w : warnings) out << "warning: " << w << '\n';

  bool figure_ok = true;
  if (chain && a.h0.empty() && a.t_max > 0.0) {
    dynamics::Figure1Options fo;
    fo.t_max = a.t_max;
    fo.dt = a.dt;
    const auto fig = dynamics::reproduce_figure1(dir / "figure1", fo);
    figure_ok = fig.pass();
    summary["figure1"] = {{"heat_consensus", fig.heat_consensus},
                          {"heat_sign_uniform", fig.heat_sign_uniform},
                          {"heat_spread_at_check", fig.heat_spread_at_check},
                          {"sheaf_sign_divergence", fig.sheaf_sign_divergence},
                          {"sheaf_discourse_gap", fig.sheaf_discourse_gap},
                          {"lying_decay", fig.lying_decay},
                          {"lying_final_ratio", fig.lying_final_ratio},
                          {"lying_oscillation", fig.lying_oscillation},
                          {"lying_every_node_leads", fig.lying_every_node_leads},
                          {"solver_gap", fig.solver_gap},
                          {"solvers_agree", fig.solvers_agree},
                          {"pass", figure_ok}};
    out << "chain3 checks: heat consensus " << (fig.heat_consensus ? "yes" : "no") << ", sheaf sign divergence "
        << (fig.sheaf_sign_divergence ? "yes" : "no") << ", lying decay " << (fig.lying_decay ? "yes" : "no")
        << " (ratio " << fmt("%.2e", fig.lying_final_ratio) << "), lying oscillation "
        << (fig.lying_oscillation ? "yes" : "no") << ", solver gap " << fmt("%.3e", fig.solver_gap) << '\n';
  }
  write_json(dir / "summary.json", summary);
  write_json(dir / "config.json", resolved_config(sub));
  if (!agree) return kNumerical;
  return figure_ok ? kOk : kViolation;
}

// ---------------------------------------------------------------- spectra

struct SpectraArgs {
  std::string graph = "random";
  std::string z = "random";
  long samples = 1;
  std::uint64_t seed = 0;
  long min_nodes = 2;
  long max_nodes = 30;
  std::string out;
};

int cmd_spectra(const SpectraArgs& a, const CLI::App& sub, std::ostream& out) {
  if (a.samples < 1) throw ConfigError("--samples must be positive");
  if (a.min_nodes < 1 || a.max_nodes < a.min_nodes) throw ConfigError("need 1 <= --min-nodes <= --max-nodes");
  std::mt19937_64 rng(a.seed);
  std::optional<graph::Graph> fixed;
  if (a.graph == "chain3") {
    fixed = dynamics::chain3_preset(dynamics::default_chain3_h0()).graph;
  } else if (a.graph != "random") {
    fixed = data::load_canonical(a.graph).dataset.graph;
  }

  long prop_pass = 0, gersh_pass = 0, real_pass = 0;
  json samples = json::array();
  for (long s = 0; s < a.samples; ++s) {
    graph::Graph g;
    if (fixed) {
      g = *fixed;
    } else {
      std::uniform_int_distribution<long> n_dist(a.min_nodes, a.max_nodes);
      std::uniform_real_distribution<double> p_dist(0.05, 0.9);
      const long n = n_dist(rng);
      g = graph::random_graph(n, p_dist(rng), rng);
    }
    Matrix z;
    if (a.z == "random") {
      z = dynamics::random_opinion_weights(g, rng);
    } else if (a.z == "ones") {
      z = dynamics::unit_opinion_weights(g);
    } else if (a.graph == "chain3" && a.z == "preset") {
      z = dynamics::chain3_preset(dynamics::default_chain3_h0()).z;
    } else {
      z = opinion_weights_from_spec(a.z, g, rng);
    }
    const auto rep = dynamics::verify_proposition1(g, z);
    prop_pass += rep.spectrum_ok;
    gersh_pass += rep.gershgorin_ok;
    bool real_ok = true;
    if (a.z == "ones") {
      for (const auto& l : rep.eigenvalues)
        real_ok = real_ok && std::abs(l.imag()) <= 1e-9 && l.real() >= -1e-9 && l.real() <= 2.0 + 1e-9;
      real_pass += real_ok;
    }
    out << "sample " << s << ": n=" << g.n_nodes() << " edges=" << g.n_edges() << " min Re "
        << fmt("%.3e", rep.min_real_part) << " min nonzero Re " << fmt("%.3e", rep.min_nonzero_real_part)
        << " zero " << rep.zero_eigenvalues << " complex " << rep.complex_eigenvalues << " prop1 "
        << (rep.spectrum_ok ? "PASS" : "FAIL") << " gershgorin " << (rep.gershgorin_ok ? "PASS" : "FAIL");
    if (a.z == "ones") out << " real-in-[0,2] " << (real_ok ? "PASS" : "FAIL");
    out << '\n';
    for (const auto& v : rep.violations) out << "  violation: " << v << '\n';
    json ev = json::array();
    for (const auto& l : rep.eigenvalues) ev.push_back({l.real(), l.imag()});
    samples.push_back({{"n", g.n_nodes()},
                       {"edges", g.n_edges()},
                       {"eigenvalues", ev},
                       {"prop1", rep.spectrum_ok},
                       {"gershgorin", rep.gershgorin_ok}});
  }
  const bool ok = prop_pass == a.samples && gersh_pass == a.samples && (a.z != "ones" || real_pass == a.samples);
  out << "Proposition 1: " << prop_pass << "/" << a.samples << " pass; diagonal dominance: " << gersh_pass << "/"
      << a.samples << " pass";
  if (a.z == "ones") out << "; real spectrum in [0,2]: " << real_pass << "/" << a.samples;
  out << "\n" << (ok ? "PASS" : "FAIL") << '\n';
  if (!a.out.empty()) {
    const fs::path dir(a.out);
    mkdirs(dir);
    write_json(dir / "spectra.json", {{"samples", samples}, {"pass", ok}});
    write_json(dir / "config.json", resolved_config(sub));
  }
  return ok ? kOk : kViolation;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth);

int cmd_rerun(const std::string& path, std::ostream& out, std::ostream& err, int depth) {
  if (depth > 0) throw ConfigError("rerun cannot replay another rerun");
  const json j = parse_json_arg(path, "resolved configuration");
  if (!j.is_object() || !j.contains("argv") || !j.at("argv").is_array())
    throw ConfigError(path + " is not a resolved configuration (missing argv)");
  std::vector<std::string> args{"ldl"};
  for (const auto& v : j.at("argv")) args.push_back(v.get<std::string>());
  return dispatch(args, out, err, depth + 1);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth) {
  CLI::App app{"Lying graph convolution lab"};
  app.name(args.empty() ? "ldl" : args.front());
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a synthetic multipartite dataset with random splits");
  g->add_option("--kind", gen.kind, "bipartite or tripartite")->required();
  g->add_option("--nodes", gen.nodes, "Number of nodes");
  g->add_option("--avg-degree", gen.avg_degree, "Target mean degree");
  g->add_option("--feat-dim", gen.feat_dim, "Feature width");
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--trials", gen.trials, "Number of random 60/20/20 splits");
  g->add_option("--out", gen.out, "Output dataset JSON")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one configuration on every split");
  t->add_option("--dataset", tr.dataset, "Canonical dataset JSON")->required();
  t->add_option("--model", tr.model, "GCN, GCNII, Lying-GCN, Lying-GCNII, or MLP")->required();
  t->add_option("--config", tr.config, "Run configuration (JSON text or file)");
  t->add_option("--seed", tr.seed, "Random seed");
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--trials", tr.trials, "Use only the first N splits (0 = all)");
  t->add_option("--layers", tr.layers, "Number of propagation layers");
  t->add_option("--hidden", tr.hidden, "Hidden width");
  t->add_option("--activation", tr.activation, "tanh, relu, elu, or identity");
  t->add_option("--p-input", tr.p_input, "Input dropout");
  t->add_option("--p-layer", tr.p_layer, "Per-layer dropout");
  t->add_option("--alpha", tr.alpha, "GCNII restart weight");
  t->add_option("--lambda", tr.lambda, "GCNII identity-map strength");
  t->add_option("--embeddings", tr.embeddings, "Export this layer's embeddings for the first split");
  tr.train.add_to(t);

  GridArgs gr;
  gr.workers = default_workers();
  auto* gs = app.add_subcommand("grid", "Grid search with per-split model selection on validation accuracy");
  gs->add_option("--dataset", gr.dataset, "Canonical dataset JSON")->required();
  gs->add_option("--model", gr.model, "Model kind")->required();
  gs->add_option("--grid", gr.grid, "Grid JSON (text or file), or synthetic / realworld")->required();
  gs->add_option("--config", gr.config, "Training configuration JSON");
  gs->add_option("--out", gr.out, "Output directory")->required();
  gs->add_option("--workers", gr.workers, "Worker threads (default LDL_WORKERS or 1)");
  gs->add_option("--seed", gr.seed, "Random seed");
  gs->add_option("--trials", gr.trials, "Use only the first N splits (0 = all)");
  gs->add_flag("--quiet", gr.quiet, "No per-cell progress");
  gr.train.add_to(gs);

  SweepArgs sw;
  sw.workers = default_workers();
  auto* sp = app.add_subcommand("sweep", "Accuracy versus depth with the other hyperparameters fixed");
  sp->add_option("--dataset", sw.dataset, "Canonical dataset JSON")->required();
  sp->add_option("--model", sw.models, "Model kind (repeatable)")->required();
  sp->add_option("--config", sw.config, "Base run configuration JSON");
  sp->add_option("--depths", sw.depths, "Comma-separated depths");
  sp->add_option("--out", sw.out, "Output directory")->required();
  sp->add_option("--workers", sw.workers, "Worker threads (default LDL_WORKERS or 1)");
  sp->add_option("--seed", sw.seed, "Random seed");
  sp->add_option("--trials", sw.trials, "Use only the first N splits (0 = all)");
  sw.train.add_to(sp);

  SimulateArgs si;
  auto* sm = app.add_subcommand("simulate", "Integrate a diffusion system with both solvers");
  sm->add_option("--system", si.system, "heat, heat-norm, sheaf, or lying")->required();
  sm->add_option("--graph", si.graph, "chain3 or a canonical dataset JSON");
  sm->add_option("--z-spec", si.z_spec, "ones, random, or [[receiver, sender, z], ...]");
  sm->add_option("--sheaf-spec", si.sheaf_spec, "[[u, v, F_u, F_v], ...]");
  sm->add_option("--h0", si.h0, "Initial state as a JSON list");
  sm->add_option("--t-max", si.t_max, "Final time");
  sm->add_option("--dt", si.dt, "Largest RK4 step");
  sm->add_option("--samples", si.samples, "Output time points");
  sm->add_option("--rate", si.rate, "Diffusion rate");
  sm->add_option("--seed", si.seed, "Random seed");
  sm->add_option("--out", si.out, "Output directory")->required();

  SpectraArgs sa;
  auto* sc = app.add_subcommand("spectra", "Check the spectrum of the lying coefficient matrix");
  sc->add_option("--graph", sa.graph, "random, chain3, or a canonical dataset JSON");
  sc->add_option("--z", sa.z, "random, ones, preset (chain3), or [[receiver, sender, z], ...]");
  sc->add_option("--samples", sa.samples, "Number of samples");
  sc->add_option("--seed", sa.seed, "Random seed");
  sc->add_option("--min-nodes", sa.min_nodes, "Smallest random graph");
  sc->add_option("--max-nodes", sa.max_nodes, "Largest random graph");
  sc->add_option("--out", sa.out, "Optional output directory");

  std::string rerun_path;
  auto* rr = app.add_subcommand("rerun", "Replay a run from its resolved config.json");
  rr->add_option("config", rerun_path, "Resolved configuration file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, r;
    const int code = app.exit(e, o, r);
    out << o.str();
    err << r.str();
    return code == 0 ? kOk : kUsage;
  }

  if (g->parsed()) return cmd_generate(gen, *g, out);
  if (t->parsed()) return cmd_train(tr, *t, out, err);
  if (gs->parsed()) return cmd_grid(gr, *gs, out, err);
  if (sp->parsed()) return cmd_sweep(sw, *sp, out, err);
  if (sm->parsed()) return cmd_simulate(si, *sm, out);
  if (sc->parsed()) return cmd_spectra(sa, *sc, out);
  if (rr->parsed()) return cmd_rerun(rerun_path, out, err, depth);
  return kUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err, 0);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const EvaluationError& e) {
    err << "evaluation error: " << e.what() << '\n';
    return kNumerical;
  } catch (const ParseError& e) {
    err << "parse error at " << e.path() << ": " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace ldl::cli
