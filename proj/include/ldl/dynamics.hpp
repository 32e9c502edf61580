#pragma once

#include "ldl/eigen_solver.hpp"
#include "ldl/graph.hpp"

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ldl::dynamics {

using Vector = Eigen::VectorXd;

enum class SystemKind { heat, heat_normalized, sheaf_scalar, lying };
std::string_view to_string(SystemKind kind);

/// Linear system dh/dt = -rate * coefficients * h.
struct DiffusionSystem {
  SystemKind kind = SystemKind::heat;
  Matrix coefficients;
  double rate = 1.0;

  Index size() const noexcept { return coefficients.rows(); }
};

/// Scalar restriction maps of one edge: F_{u<e} and F_{v<e}.
struct SheafEdge {
  Index u;
  Index v;
  double restriction_u = 1.0;
  double restriction_v = 1.0;
};

/// L = D - A.
DiffusionSystem heat_system(const graph::Graph& g, double rate = 1.0);
/// L~sym = I - S~.
DiffusionSystem normalized_heat_system(const graph::Graph& g, double rate = 1.0);
/// (L_F x)_v = sum_e F_{v<e} (F_{v<e} x_v - F_{u<e} x_u).
DiffusionSystem sheaf_system(Index n_nodes, std::span<const SheafEdge> edges, double rate = 1.0);

/// Dense opinion-weight matrix with Z(u, v) = z_{v->u}. Entries must lie in
/// [-1, 1]; the diagonal and non-edges must be zero.
void validate_opinion_weights(const graph::NormalizedOperators& ops, const Matrix& z);

/// Independent uniform(-1, 1) weight for each direction of every edge.
Matrix random_opinion_weights(const graph::Graph& g, std::mt19937_64& rng);
/// All-ones opinion weights on the edges (truthful propagation).
Matrix unit_opinion_weights(const graph::Graph& g);

/// E = L~sym (.) (Z + I).
Matrix build_lying_E(const graph::NormalizedOperators& ops, const Matrix& z);
DiffusionSystem lying_system(const graph::NormalizedOperators& ops, const Matrix& z, double rate = 1.0);

struct SpectralReport {
  std::vector<std::complex<double>> eigenvalues;
  double min_real_part = 0.0;
  /// Smallest real part among eigenvalues with |lambda| > zero_tol (+inf if none).
  double min_nonzero_real_part = 0.0;
  Index zero_eigenvalues = 0;
  Index complex_eigenvalues = 0;
  bool spectrum_ok = false;
  /// Every row of B = (D - A) (.) (Z + I) has off-diagonal mass <= its diagonal.
  bool gershgorin_ok = false;
  bool pass = false;
  std::vector<std::string> violations;
};

/// Spectral check of the lying coefficient matrix: Re(lambda) >= -zero_tol for
/// all eigenvalues and Re(lambda) > zero_tol for every |lambda| > zero_tol,
/// plus an independent diagonal-dominance check of the unnormalized form.
SpectralReport verify_proposition1(const graph::Graph& g, const Matrix& z, double zero_tol = 1e-9);

enum class Solver { closed_form, rk4 };
std::string_view to_string(Solver solver);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  Solver solver = Solver::closed_form;
  /// Largest imaginary residue seen while reconstructing real states.
  double imaginary_residue = 0.0;

  Index dimension() const noexcept { return states.empty() ? 0 : states.front().size(); }
};

struct ClosedFormOptions {
  /// Eigenvector matrices with a larger 1-norm condition number fall back to RK4.
  double max_condition = 1e8;
  /// Step size of the RK4 fallback.
  double fallback_dt = 1e-3;
};

/// h(t) = sum_i c_i exp(-rate lambda_i t) u_i with U c = h0. `times` must be
/// strictly increasing. Appends to `warnings` when falling back to RK4.
Trajectory solve_closed_form(const DiffusionSystem& sys, const Vector& h0, std::span<const double> times,
                             std::vector<std::string>* warnings = nullptr, const ClosedFormOptions& options = {});

/// Classical fourth-order Runge-Kutta with `steps` steps of size `dt`.
Trajectory solve_rk4(const DiffusionSystem& sys, const Vector& h0, double dt, Index steps);

/// RK4 that lands exactly on each requested time with steps no larger than `max_dt`.
Trajectory solve_rk4_at(const DiffusionSystem& sys, const Vector& h0, std::span<const double> times, double max_dt);

/// Maximum absolute state difference at matching time points.
double max_gap(const Trajectory& a, const Trajectory& b);

/// Header `t,h_1,...,h_n`, values at full precision.
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

// Three-node chain experiment of the lying diffusion paper figure.

struct ChainPreset {
  graph::Graph graph;
  Vector h0;
  DiffusionSystem heat;
  DiffusionSystem sheaf;
  std::vector<SheafEdge> sheaf_edges;
  DiffusionSystem lying;
  Matrix z;
};

/// Chain u1 - u2 - u3 with sheaf edge weights -1 (u1-u2) and +1 (u2-u3) and a
/// single negative opinion weight (-1) on u2 -> u1; the other directed
/// weights are 0.5.
ChainPreset chain3_preset(const Vector& h0);
Vector default_chain3_h0();

struct Figure1Options {
  Vector h0 = default_chain3_h0();
  double t_max = 10.0;
  double dt = 1e-3;
  /// Time at which heat consensus is checked.
  double heat_check_time = 50.0;
  Index samples = 1001;
};

struct Figure1Report {
  Trajectory heat;
  Trajectory sheaf;
  Trajectory lying;
  double heat_spread_at_check = 0.0;
  bool heat_sign_uniform = false;
  bool heat_consensus = false;
  double sheaf_discourse_gap = 0.0;
  bool sheaf_sign_divergence = false;
  double lying_final_ratio = 0.0;
  bool lying_decay = false;
  bool lying_oscillation = false;
  /// Each node is the strict maximum at some sampled time.
  bool lying_every_node_leads = false;
  double solver_gap = 0.0;
  bool solvers_agree = false;
  std::vector<std::string> notes;

  bool pass() const noexcept {
    return heat_consensus && heat_sign_uniform && sheaf_sign_divergence && lying_decay && lying_oscillation &&
           solvers_agree;
  }
};

/// Simulates the three chain systems with both solvers and machine-checks the
/// qualitative behaviour. Writes CSV traces into `out_dir` when it is non-empty.
Figure1Report reproduce_figure1(const std::filesystem::path& out_dir, const Figure1Options& options = {});

/// Does some component start below another and later exceed it?
bool has_crossing(const Trajectory& traj);

}  // namespace ldl::dynamics
