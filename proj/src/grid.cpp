#include "ldl/grid.hpp"

#include "ldl/errors.hpp"
#include "ldl/stats.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace ldl::experiments {

using layers::ModelKind;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

template <class T, class Get>
std::vector<T> read_axis(const nlohmann::json& j, const char* key, std::vector<T> fallback, Get get) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  std::vector<T> out;
  try {
    if (v.is_array()) {
      for (const auto& e : v) out.push_back(get(e));
    } else {
      out.push_back(get(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid key '") + key + "': " + e.what());
  }
  if (out.empty()) throw ConfigError(std::string("grid key '") + key + "' is an empty list");
  return out;
}

struct Cell {
  std::size_t point;
  int trial;
};

// Trains the cells not already present in `done` and returns every row in
// (point, trial) order. Rows are appended to options.results_path as they finish.
std::vector<ResultRow> run_cells(const std::vector<GridPoint>& points, const data::Dataset& ds,
                                 const data::SplitSet& splits, const GridOptions& options, const std::string& model,
                                 int& resumed) {
  const int trials = static_cast<int>(splits.trials.size());
  std::map<std::pair<std::string, int>, ResultRow> done;
  if (!options.results_path.empty()) {
    for (auto& r : read_results(options.results_path))
      if (r.dataset == options.dataset_name && r.model == model) done[{r.config_id, r.trial}] = r;
  }

  std::vector<ResultRow> rows(points.size() * trials);
  std::vector<Cell> todo;
  resumed = 0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const std::string id = points[p].id();
    for (int t = 0; t < trials; ++t) {
      auto it = done.find({id, t});
      if (it != done.end()) {
        rows[p * trials + t] = it->second;
        ++resumed;
      } else {
        todo.push_back({p, t});
      }
    }
  }
  if (todo.empty()) return rows;

  const auto ops = graph::normalize_adjacency(ds.graph);
  std::ofstream sink;
  if (!options.results_path.empty()) {
    const bool fresh = !std::filesystem::exists(options.results_path) ||
                       std::filesystem::file_size(options.results_path) == 0;
    sink.open(options.results_path, std::ios::app);
    if (!sink) throw IoError("cannot append to " + options.results_path.string());
    if (fresh) sink << kResultsHeader << '\n' << std::flush;
  }

  std::mutex collector;
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      {
        std::lock_guard lock(collector);
        if (first_error) return;
      }
      const Cell cell = todo[k];
      const GridPoint& gp = points[cell.point];
      try {
        TrainSpec spec = options.train;
        spec.weight_decay = gp.weight_decay;
        const auto trained = train_model(gp.model, spec, ds, ops, splits.trials[cell.trial], cell.trial);
        const auto& res = trained.result;
        ResultRow row{options.dataset_name, model,          gp.id(),     cell.trial,
                      res.failed ? kNaN : res.best_val_acc, res.failed ? kNaN : res.test_acc,
                      res.epochs,           res.seconds};
        std::lock_guard lock(collector);
        rows[cell.point * trials + cell.trial] = row;
        if (sink.is_open()) sink << format_result_row(row) << '\n' << std::flush;
        if (options.on_cell) options.on_cell(row);
      } catch (...) {
        std::lock_guard lock(collector);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(todo.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  return rows;
}

}  // namespace

std::string GridPoint::id() const { return model.id() + "|wd=" + format_number(weight_decay); }

std::vector<GridPoint> HyperGrid::expand() const {
  const bool gcnii = layers::is_gcnii(kind);
  const std::vector<double> no_axis{0.1};
  const auto& as = gcnii ? alphas : no_axis;
  const auto& ls = gcnii ? lambdas : std::vector<double>{1.0};
  std::vector<GridPoint> out;
  for (int depth : depths)
    for (int width : widths)
      for (auto act : activations)
        for (double pi : p_inputs)
          for (double pl : p_layers)
            for (double wd : weight_decays)
              for (double a : as)
                for (double lam : ls) {
                  GridPoint gp;
                  gp.model.kind = kind;
                  gp.model.depth = depth;
                  gp.model.width = width;
                  gp.model.activation = act;
                  gp.model.p_input = pi;
                  gp.model.p_layer = pl;
                  gp.model.alpha = a;
                  gp.model.lambda = lam;
                  gp.weight_decay = wd;
                  gp.model.validate();
                  out.push_back(gp);
                }
  return out;
}

std::size_t HyperGrid::size() const {
  std::size_t n = depths.size() * widths.size() * activations.size() * p_inputs.size() * p_layers.size() *
                  weight_decays.size();
  if (layers::is_gcnii(kind)) n *= alphas.size() * lambdas.size();
  return n;
}

HyperGrid hyper_grid_from_json(const nlohmann::json& j, ModelKind kind) {
  if (!j.is_object()) throw ConfigError("grid must be a JSON object");
  static const std::set<std::string> known{"model",   "layers",       "hidden", "activation", "p_input",
                                           "p_layer", "weight_decay", "alpha",  "lambda"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown grid key '" + key + "'");
  if (j.contains("model") && layers::parse_model_kind(j["model"].get<std::string>()) != kind)
    throw ConfigError("grid is for model " + j["model"].get<std::string>() + ", not " +
                      std::string(layers::to_string(kind)));
  HyperGrid g;
  g.kind = kind;
  auto as_int = [](const nlohmann::json& e) { return e.get<int>(); };
  auto as_double = [](const nlohmann::json& e) { return e.get<double>(); };
  g.depths = read_axis<int>(j, "layers", g.depths, as_int);
  g.widths = read_axis<int>(j, "hidden", g.widths, as_int);
  g.activations = read_axis<layers::Activation>(
      j, "activation", g.activations, [](const nlohmann::json& e) { return numerics::parse_activation(e.get<std::string>()); });
  g.p_inputs = read_axis<double>(j, "p_input", g.p_inputs, as_double);
  g.p_layers = read_axis<double>(j, "p_layer", g.p_layers, as_double);
  g.weight_decays = read_axis<double>(j, "weight_decay", g.weight_decays, as_double);
  g.alphas = read_axis<double>(j, "alpha", g.alphas, as_double);
  g.lambdas = read_axis<double>(j, "lambda", g.lambdas, as_double);
  g.expand();  // validates every point
  return g;
}

nlohmann::json to_json(const HyperGrid& g) {
  nlohmann::json acts = nlohmann::json::array();
  for (auto a : g.activations) acts.push_back(std::string(numerics::to_string(a)));
  nlohmann::json j{{"model", std::string(layers::to_string(g.kind))},
                   {"layers", g.depths},
                   {"hidden", g.widths},
                   {"activation", acts},
                   {"p_input", g.p_inputs},
                   {"p_layer", g.p_layers},
                   {"weight_decay", g.weight_decays}};
  if (layers::is_gcnii(g.kind)) {
    j["alpha"] = g.alphas;
    j["lambda"] = g.lambdas;
  }
  return j;
}

HyperGrid synthetic_grid(ModelKind kind) {
  HyperGrid g;
  g.kind = kind;
  g.depths = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  g.widths = {5, 10, 20};
  g.activations = {layers::Activation::tanh, layers::Activation::relu};
  if (layers::is_gcnii(kind)) {
    g.alphas = {0.1};
    g.lambdas = {1.0};
  }
  return g;
}

HyperGrid realworld_grid(ModelKind kind) {
  HyperGrid g;
  g.kind = kind;
  g.depths = {2, 3, 4, 5, 10, 20, 30};
  g.widths = {16, 32, 64};
  g.weight_decays = {0.0, 0.01, 0.1};
  g.p_inputs = {0.4, 0.6, 0.95};
  g.p_layers = {0.2, 0.4, 0.6, 0.8};
  if (layers::is_gcnii(kind)) {
    g.activations = {layers::Activation::relu};
    g.alphas = {0.1, 0.2, 0.5};
    g.lambdas = {0.5, 1.0, 1.5};
  } else {
    g.activations = {layers::Activation::tanh, layers::Activation::relu, layers::Activation::elu};
  }
  return g;
}

std::vector<long> select_per_trial(std::span<const ValidationScore> scores, int trials) {
  std::vector<long> best(trials, -1);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    if (s.trial < 0 || s.trial >= trials) throw ContractError("trial index out of range in selection");
    if (!std::isfinite(s.val_acc)) continue;
    long& b = best[s.trial];
    if (b < 0 || s.val_acc > scores[b].val_acc) b = static_cast<long>(i);
  }
  return best;
}

std::vector<double> GridReport::test_accuracies() const {
  std::vector<double> out;
  for (const auto& s : selections) out.push_back(s.test_acc);
  return out;
}

SummaryRow GridReport::summary() const {
  return {dataset, model, mean_test_acc, std_test_acc, static_cast<int>(selections.size())};
}

GridReport grid_search(const HyperGrid& grid, const data::Dataset& ds, const data::SplitSet& splits,
                       const GridOptions& options) {
  const auto points = grid.expand();
  if (points.empty()) throw ConfigError("empty hyperparameter grid");
  if (splits.trials.empty()) throw ConfigError("no trials to run");
  splits.validate(ds.n_nodes(), false);
  const int trials = static_cast<int>(splits.trials.size());

  GridReport report;
  report.dataset = options.dataset_name;
  report.model = std::string(layers::to_string(grid.kind));
  report.rows = run_cells(points, ds, splits, options, report.model, report.resumed_cells);

  // Configurations that failed on every trial drop out of selection.
  std::vector<ValidationScore> scores;
  std::vector<const ResultRow*> origin;
  for (std::size_t p = 0; p < points.size(); ++p) {
    bool any = false;
    for (int t = 0; t < trials; ++t) any = any || std::isfinite(report.rows[p * trials + t].val_acc);
    if (!any) {
      report.warnings.push_back("configuration " + points[p].id() + " failed on every trial; excluded");
      continue;
    }
    for (int t = 0; t < trials; ++t) {
      const ResultRow& r = report.rows[p * trials + t];
      scores.push_back({r.config_id, r.trial, r.val_acc});
      origin.push_back(&r);
    }
  }

  const auto chosen = select_per_trial(scores, trials);
  for (int t = 0; t < trials; ++t) {
    if (chosen[t] < 0) {
      report.warnings.push_back("trial " + std::to_string(t) + " has no successful configuration");
      continue;
    }
    const ResultRow& r = *origin[chosen[t]];
    report.selections.push_back({t, r.config_id, r.val_acc, r.test_acc});
  }
  const auto acc = report.test_accuracies();
  if (acc.empty()) {
    report.mean_test_acc = report.std_test_acc = kNaN;
  } else {
    report.mean_test_acc = mean(acc);
    report.std_test_acc = stddev(acc);
  }
  return report;
}

std::vector<SweepRow> layer_sweep(std::span<const GridPoint> bases, std::span<const int> depths,
                                  const data::Dataset& ds, const data::SplitSet& splits, const GridOptions& options) {
  const int trials = static_cast<int>(splits.trials.size());
  if (trials == 0) throw ConfigError("no trials to run");
  std::vector<SweepRow> out;
  for (const auto& base : bases) {
    std::vector<GridPoint> points;
    for (int depth : depths) {
      GridPoint gp = base;
      gp.model.depth = depth;
      gp.model.validate();
      points.push_back(gp);
    }
    const std::string model(layers::to_string(base.model.kind));
    int resumed = 0;
    const auto rows = run_cells(points, ds, splits, options, model, resumed);
    for (std::size_t p = 0; p < points.size(); ++p) {
      std::vector<double> val, test;
      for (int t = 0; t < trials; ++t) {
        const auto& r = rows[p * trials + t];
        if (std::isfinite(r.val_acc)) {
          val.push_back(r.val_acc);
          test.push_back(r.test_acc);
        }
      }
      SweepRow row{model, points[p].model.depth, kNaN, kNaN, kNaN};
      if (!val.empty()) {
        row.mean_val_acc = mean(val);
        row.std_val_acc = stddev(val);
        row.mean_test_acc = mean(test);
      }
      out.push_back(row);
    }
  }
  return out;
}

void write_sweep(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::string text = "model,depth,mean_val_acc,std_val_acc,mean_test_acc\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%d,%.4f,%.4f,%.4f\n", r.depth, 100.0 * r.mean_val_acc, 100.0 * r.std_val_acc,
                  100.0 * r.mean_test_acc);
    text += r.model + buf;
  }
  write_text(path, text);
}

}  // namespace ldl::experiments
