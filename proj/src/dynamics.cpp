#include "ldl/dynamics.hpp"

#include "ldl/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace ldl::dynamics {

using numerics::eig_dense;
using numerics::EigOptions;

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::heat: return "heat";
    case SystemKind::heat_normalized: return "heat-norm";
    case SystemKind::sheaf_scalar: return "sheaf";
    case SystemKind::lying: return "lying";
  }
  return "unknown";
}

std::string_view to_string(Solver solver) { return solver == Solver::rk4 ? "rk4" : "closed-form"; }

DiffusionSystem heat_system(const graph::Graph& g, double rate) {
  const Matrix a = graph::dense_adjacency(g);
  Matrix l = -a;
  for (Index i = 0; i < a.rows(); ++i) l(i, i) = a.row(i).sum();
  return {SystemKind::heat, std::move(l), rate};
}

DiffusionSystem normalized_heat_system(const graph::Graph& g, double rate) {
  const auto ops = graph::normalize_adjacency(g);
  return {SystemKind::heat_normalized, ops.laplacian.to_dense(), rate};
}

DiffusionSystem sheaf_system(Index n_nodes, std::span<const SheafEdge> edges, double rate) {
  Matrix l = Matrix::Zero(n_nodes, n_nodes);
  for (const SheafEdge& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= n_nodes || e.v >= n_nodes || e.u == e.v)
      throw ValidationError("sheaf edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ") is invalid");
    l(e.u, e.u) += e.restriction_u * e.restriction_u;
    l(e.v, e.v) += e.restriction_v * e.restriction_v;
    l(e.u, e.v) -= e.restriction_u * e.restriction_v;
    l(e.v, e.u) -= e.restriction_u * e.restriction_v;
  }
  return {SystemKind::sheaf_scalar, std::move(l), rate};
}

void validate_opinion_weights(const graph::NormalizedOperators& ops, const Matrix& z) {
  const Index n = ops.n_nodes();
  if (z.rows() != n || z.cols() != n)
    throw DimensionError("opinion weights must be " + shape_string(n, n) + ", got " + shape_string(z.rows(), z.cols()));
  for (Index u = 0; u < n; ++u) {
    if (z(u, u) != 0.0) throw ContractError("opinion weights must vanish on the diagonal (node " + std::to_string(u) + ")");
    for (Index v = 0; v < n; ++v) {
      const double x = z(u, v);
      if (!(x >= -1.0 && x <= 1.0))
        throw ContractError("opinion weight Z(" + std::to_string(u) + ", " + std::to_string(v) + ") = " +
                            std::to_string(x) + " outside [-1, 1]");
      if (x != 0.0 && u != v && ops.adjacency.coeff(u, v) == 0.0)
        throw ContractError("opinion weight on non-edge (" + std::to_string(u) + ", " + std::to_string(v) + ")");
    }
  }
}

Matrix random_opinion_weights(const graph::Graph& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix z = Matrix::Zero(g.n_nodes(), g.n_nodes());
  for (const auto& e : g.edges()) {
    z(e.u, e.v) = unif(rng);
    z(e.v, e.u) = unif(rng);
  }
  return z;
}

Matrix unit_opinion_weights(const graph::Graph& g) {
  Matrix z = Matrix::Zero(g.n_nodes(), g.n_nodes());
  for (const auto& e : g.edges()) z(e.u, e.v) = z(e.v, e.u) = 1.0;
  return z;
}

Matrix build_lying_E(const graph::NormalizedOperators& ops, const Matrix& z) {
  validate_opinion_weights(ops, z);
  Matrix e = ops.laplacian.to_dense();
  for (Index u = 0; u < e.rows(); ++u)
    for (Index v = 0; v < e.cols(); ++v)
      if (u != v) e(u, v) *= z(u, v);
  return e;
}

DiffusionSystem lying_system(const graph::NormalizedOperators& ops, const Matrix& z, double rate) {
  return {SystemKind::lying, build_lying_E(ops, z), rate};
}

SpectralReport verify_proposition1(const graph::Graph& g, const Matrix& z, double zero_tol) {
  const auto ops = graph::normalize_adjacency(g);
  const Matrix e = build_lying_E(ops, z);

  SpectralReport report;
  report.eigenvalues = eig_dense(e, EigOptions{.compute_vectors = false}).eigenvalues;
  report.min_real_part = std::numeric_limits<double>::infinity();
  report.min_nonzero_real_part = std::numeric_limits<double>::infinity();
  report.spectrum_ok = true;
  for (const auto& lam : report.eigenvalues) {
    report.min_real_part = std::min(report.min_real_part, lam.real());
    if (std::abs(lam.imag()) > zero_tol) ++report.complex_eigenvalues;
    if (std::abs(lam) <= zero_tol) {
      ++report.zero_eigenvalues;
    } else {
      report.min_nonzero_real_part = std::min(report.min_nonzero_real_part, lam.real());
      if (!(lam.real() > zero_tol)) {
        report.spectrum_ok = false;
        report.violations.push_back("non-zero eigenvalue " + std::to_string(lam.real()) + "+" +
                                    std::to_string(lam.imag()) + "i has non-positive real part");
      }
    }
    if (lam.real() < -zero_tol) {
      report.spectrum_ok = false;
      report.violations.push_back("eigenvalue with negative real part " + std::to_string(lam.real()));
    }
  }
  if (report.eigenvalues.empty()) report.min_real_part = 0.0;

  // B = (D - A) (.) (Z + I): diagonal g_u, off-diagonal -A_uv Z_uv.
  report.gershgorin_ok = true;
  const auto deg = g.degrees();
  std::vector<double> off(g.n_nodes(), 0.0);
  for (const auto& edge : g.edges()) {
    off[edge.u] += std::abs(z(edge.u, edge.v));
    off[edge.v] += std::abs(z(edge.v, edge.u));
  }
  for (Index u = 0; u < g.n_nodes(); ++u) {
    if (off[u] > static_cast<double>(deg[u]) * (1.0 + 1e-12)) {
      report.gershgorin_ok = false;
      report.violations.push_back("row " + std::to_string(u) + " of B is not diagonally dominant");
    }
  }
  report.pass = report.spectrum_ok && report.gershgorin_ok;
  return report;
}

namespace {

void require_state(const DiffusionSystem& sys, const Vector& h0) {
  if (sys.coefficients.rows() != sys.coefficients.cols())
    throw DimensionError("diffusion coefficient matrix must be square");
  if (h0.size() != sys.size())
    throw DimensionError("initial state has " + std::to_string(h0.size()) + " entries for a system of size " +
                         std::to_string(sys.size()));
}

void require_increasing(std::span<const double> times) {
  if (times.empty()) throw ConfigError("time grid is empty");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ConfigError("time grid must be strictly increasing");
}

// One classical RK4 step of dh/dt = -rate M h.
Vector rk4_step(const Matrix& m, double rate, const Vector& h, double dt) {
  auto f = [&](const Vector& x) -> Vector { return -rate * (m * x); };
  const Vector k1 = f(h);
  const Vector k2 = f(h + 0.5 * dt * k1);
  const Vector k3 = f(h + 0.5 * dt * k2);
  const Vector k4 = f(h + dt * k3);
  return h + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory solve_rk4(const DiffusionSystem& sys, const Vector& h0, double dt, Index steps) {
  require_state(sys, h0);
  if (!(dt > 0.0)) throw ConfigError("RK4 step size must be positive");
  if (steps < 0) throw ConfigError("RK4 step count must be non-negative");
  Trajectory traj;
  traj.solver = Solver::rk4;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(h0);
  Vector h = h0;
  for (Index k = 1; k <= steps; ++k) {
    h = rk4_step(sys.coefficients, sys.rate, h, dt);
    if (!h.allFinite()) throw NumericalError("RK4 state became non-finite at step " + std::to_string(k));
    traj.times.push_back(static_cast<double>(k) * dt);
    traj.states.push_back(h);
  }
  return traj;
}

Trajectory solve_rk4_at(const DiffusionSystem& sys, const Vector& h0, std::span<const double> times, double max_dt) {
  require_state(sys, h0);
  require_increasing(times);
  if (!(max_dt > 0.0)) throw ConfigError("RK4 step size must be positive");
  if (times.front() < 0.0) throw ConfigError("time grid must start at t >= 0");
  Trajectory traj;
  traj.solver = Solver::rk4;
  Vector h = h0;
  double t = 0.0;
  Index step = 0;
  for (double target : times) {
    const double span = target - t;
    const auto n = static_cast<Index>(std::ceil(span / max_dt - 1e-12));
    const double dt = n > 0 ? span / static_cast<double>(n) : 0.0;
    for (Index k = 0; k < n; ++k) {
      h = rk4_step(sys.coefficients, sys.rate, h, dt);
      ++step;
      if (!h.allFinite()) throw NumericalError("RK4 state became non-finite at step " + std::to_string(step));
    }
    t = target;
    traj.times.push_back(target);
    traj.states.push_back(h);
  }
  return traj;
}

Trajectory solve_closed_form(const DiffusionSystem& sys, const Vector& h0, std::span<const double> times,
                             std::vector<std::string>* warnings, const ClosedFormOptions& options) {
  require_state(sys, h0);
  require_increasing(times);
  const Index n = sys.size();
  const auto spectrum = eig_dense(sys.coefficients);
  const auto& u = *spectrum.eigenvectors;

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(u);
  const Eigen::MatrixXcd u_inv = lu.inverse();
  const double cond = u.cwiseAbs().colwise().sum().maxCoeff() * u_inv.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(cond) || cond >= options.max_condition) {
    if (warnings)
      warnings->push_back("eigenvector matrix condition number " + std::to_string(cond) +
                          " too large; falling back to RK4");
    return solve_rk4_at(sys, h0, times, options.fallback_dt);
  }

  const Eigen::VectorXcd c = lu.solve(h0.cast<std::complex<double>>());
  Eigen::VectorXcd lambda(n);
  for (Index i = 0; i < n; ++i) lambda(i) = spectrum.eigenvalues[i];

  Trajectory traj;
  traj.solver = Solver::closed_form;
  for (double t : times) {
    if (t == 0.0) {
      traj.times.push_back(t);
      traj.states.push_back(h0);
      continue;
    }
    const Eigen::VectorXcd growth = (-sys.rate * t * lambda.array()).exp().matrix();
    const Eigen::VectorXcd state = u * c.cwiseProduct(growth);
    traj.imaginary_residue = std::max(traj.imaginary_residue, state.imag().cwiseAbs().maxCoeff());
    traj.times.push_back(t);
    traj.states.push_back(state.real());
  }
  return traj;
}

double max_gap(const Trajectory& a, const Trajectory& b) {
  if (a.times.size() != b.times.size()) throw DimensionError("trajectories have different time grids");
  double gap = 0.0;
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    if (std::abs(a.times[k] - b.times[k]) > 1e-9 * std::max(1.0, std::abs(a.times[k])))
      throw DimensionError("trajectories have different time grids");
    gap = std::max(gap, (a.states[k] - b.states[k]).cwiseAbs().maxCoeff());
  }
  return gap;
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trajectory file " + path.string());
  out << "t";
  for (Index i = 0; i < traj.dimension(); ++i) out << ",h_" << (i + 1);
  out << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out << traj.times[k];
    for (Index i = 0; i < traj.states[k].size(); ++i) out << ',' << traj.states[k](i);
    out << '\n';
  }
  if (!out) throw IoError("failed while writing " + path.string());
}

Vector default_chain3_h0() { return Vector{{1.0, 0.5, -0.5}}; }

ChainPreset chain3_preset(const Vector& h0) {
  if (h0.size() != 3) throw DimensionError("chain3 initial state needs 3 entries");
  ChainPreset p;
  p.graph = graph::Graph(3, {{0, 1}, {1, 2}});
  p.h0 = h0;
  p.heat = heat_system(p.graph);
  p.sheaf_edges = {{0, 1, 1.0, -1.0}, {1, 2, 1.0, 1.0}};
  p.sheaf = sheaf_system(3, p.sheaf_edges);
  p.z = Matrix::Zero(3, 3);
  // u2 lies to u1. With the honest weights at exactly 1 the spectrum is a
  // defective double root and carries no oscillation, hence 0.5.
  p.z(0, 1) = -1.0;
  p.z(1, 0) = 0.5;
  p.z(1, 2) = 0.5;
  p.z(2, 1) = 0.5;
  p.lying = lying_system(graph::normalize_adjacency(p.graph), p.z);
  return p;
}

bool has_crossing(const Trajectory& traj) {
  if (traj.states.empty()) return false;
  const Vector& first = traj.states.front();
  for (Index i = 0; i < first.size(); ++i)
    for (Index j = 0; j < first.size(); ++j) {
      if (i == j || !(first(i) < first(j))) continue;
      for (const auto& s : traj.states)
        if (s(i) > s(j)) return true;
    }
  return false;
}

namespace {

bool every_node_leads(const Trajectory& traj) {
  const Index n = traj.dimension();
  for (Index i = 0; i < n; ++i) {
    bool leads = false;
    for (const auto& s : traj.states) {
      bool strict = true;
      for (Index j = 0; j < n && strict; ++j)
        if (j != i && !(s(i) > s(j))) strict = false;
      if (strict) {
        leads = true;
        break;
      }
    }
    if (!leads) return false;
  }
  return true;
}

}  // namespace

Figure1Report reproduce_figure1(const std::filesystem::path& out_dir, const Figure1Options& options) {
  if (!(options.t_max > 0.0) || !(options.dt > 0.0)) throw ConfigError("figure simulation needs t_max, dt > 0");
  const ChainPreset preset = chain3_preset(options.h0);
  const auto steps = static_cast<Index>(std::llround(options.t_max / options.dt));

  Figure1Report report;
  auto simulate = [&](const DiffusionSystem& sys, Trajectory& closed) {
    const Trajectory rk = solve_rk4(sys, preset.h0, options.dt, steps);
    closed = solve_closed_form(sys, preset.h0, rk.times, &report.notes);
    report.solver_gap = std::max(report.solver_gap, max_gap(closed, rk));
    return rk;
  };
  const Trajectory heat_rk = simulate(preset.heat, report.heat);
  const Trajectory sheaf_rk = simulate(preset.sheaf, report.sheaf);
  const Trajectory lying_rk = simulate(preset.lying, report.lying);
  report.solvers_agree = report.solver_gap <= 1e-6;

  const std::vector<double> late{options.heat_check_time};
  const Vector heat_late = solve_closed_form(preset.heat, preset.h0, late).states.front();
  report.heat_spread_at_check = heat_late.maxCoeff() - heat_late.minCoeff();
  report.heat_consensus = report.heat_spread_at_check <= 1e-6;
  report.heat_sign_uniform = (heat_late.array() > 0.0).all() || (heat_late.array() < 0.0).all();

  const Vector sheaf_late = solve_closed_form(preset.sheaf, preset.h0, late).states.front();
  for (const auto& e : preset.sheaf_edges)
    report.sheaf_discourse_gap = std::max(
        report.sheaf_discourse_gap, std::abs(e.restriction_u * sheaf_late(e.u) - e.restriction_v * sheaf_late(e.v)));
  report.sheaf_sign_divergence = sheaf_late(0) * sheaf_late(1) < 0.0;

  report.lying_final_ratio = report.lying.states.back().norm() / preset.h0.norm();
  report.lying_decay = report.lying_final_ratio < 1e-2;
  report.lying_oscillation = has_crossing(report.lying);
  report.lying_every_node_leads = every_node_leads(report.lying);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_trajectory_csv(report.heat, out_dir / "heat_closed_form.csv");
    write_trajectory_csv(heat_rk, out_dir / "heat_rk4.csv");
    write_trajectory_csv(report.sheaf, out_dir / "sheaf_closed_form.csv");
    write_trajectory_csv(sheaf_rk, out_dir / "sheaf_rk4.csv");
    write_trajectory_csv(report.lying, out_dir / "lying_closed_form.csv");
    write_trajectory_csv(lying_rk, out_dir / "lying_rk4.csv");
  }
  return report;
}

}  // namespace ldl::dynamics
