#include "support.hpp"

#include "ldl/dynamics.hpp"
#include "ldl/errors.hpp"

#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <fstream>

using namespace ldl;
using namespace ldl::dynamics;

namespace {

std::vector<double> grid(double t_max, int samples) {
  std::vector<double> t(samples);
  for (int i = 0; i < samples; ++i) t[i] = t_max * i / (samples - 1);
  return t;
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("build_lying_E examples") {
    std::mt19937_64 rng(51);
    const auto g = test::connected_random_graph(9, 0.3, rng);
    const auto ops = graph::normalize_adjacency(g);
    const Matrix l = ops.laplacian.to_dense();
    CHECK(build_lying_E(ops, unit_opinion_weights(g)) == l);

    const Matrix liar = -unit_opinion_weights(g);
    const Matrix e = build_lying_E(ops, liar);
    CHECK(e == Matrix(Matrix(2.0 * l.diagonal().asDiagonal()) - l));

    const Matrix z = random_opinion_weights(g, rng);
    const Matrix ez = build_lying_E(ops, z);
    const Matrix s = ops.adjacency.to_dense();
    for (Index u = 0; u < 9; ++u) {
      CHECK(ez(u, u) == doctest::Approx(1.0 - s(u, u)));
      for (Index v = 0; v < 9; ++v)
        if (u != v) CHECK(ez(u, v) == doctest::Approx(-s(u, v) * z(u, v)));
    }

    Matrix diag = z;
    diag(0, 0) = 0.5;
    CHECK_THROWS_AS(build_lying_E(ops, diag), ContractError);
    Matrix big = z;
    big(g.edges()[0].u, g.edges()[0].v) = 1.5;
    CHECK_THROWS_AS(build_lying_E(ops, big), ContractError);
  }

  TEST_CASE("chain preset is non-symmetric with a conjugate pair") {
    const auto preset = chain3_preset(default_chain3_h0());
    const Matrix& e = preset.lying.coefficients;
    CHECK((e - e.transpose()).cwiseAbs().maxCoeff() > 0.1);
    const auto spec = numerics::eig_dense(e);
    int complex_count = 0;
    for (auto l : spec.eigenvalues) complex_count += std::abs(l.imag()) > 1e-6;
    CHECK(complex_count == 2);
    CHECK(spec.conjugate_pairs_ok());
  }

  TEST_CASE("Proposition 1 on random graphs and weights") {
    std::mt19937_64 rng(52);
    std::uniform_int_distribution<Index> n(2, 30);
    std::uniform_real_distribution<double> p(0.05, 0.6);
    for (int k = 0; k < 200; ++k) {
      const auto g = graph::random_graph(n(rng), p(rng), rng);
      const auto report = verify_proposition1(g, random_opinion_weights(g, rng));
      CHECK(report.pass);
      CHECK(report.gershgorin_ok);
      CHECK(report.min_real_part >= -1e-9);
    }
    const auto g = test::connected_random_graph(12, 0.3, rng);
    const auto truthful = verify_proposition1(g, unit_opinion_weights(g));
    CHECK(truthful.pass);
    CHECK(truthful.complex_eigenvalues == 0);
    CHECK(truthful.zero_eigenvalues == 1);
    for (auto l : truthful.eigenvalues) CHECK(l.real() <= 2.0 + 1e-9);
  }

  TEST_CASE("closed form: initial condition, heat mean, lying decay, expm oracle") {
    const Vector h0 = (Vector(3) << 1.0, 0.5, 0.0).finished();
    const auto g = test::chain(3);
    const auto heat = heat_system(g);
    const auto traj = solve_closed_form(heat, h0, std::vector<double>{0.0, 1.0, 60.0});
    CHECK((traj.states[0] - h0).norm() < 1e-12);
    CHECK((traj.states[2].array() - 0.5).abs().maxCoeff() < 1e-9);

    std::mt19937_64 rng(53);
    const auto rg = test::connected_random_graph(10, 0.3, rng);
    const auto ops = graph::normalize_adjacency(rg);
    const auto sys = lying_system(ops, random_opinion_weights(rg, rng), 0.7);
    const Vector x0 = Vector::Random(10);
    const auto times = grid(3.0, 7);
    const auto cf = solve_closed_form(sys, x0, times);
    REQUIRE(cf.solver == Solver::closed_form);
    CHECK(cf.imaginary_residue <= 1e-8);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const Eigen::MatrixXd m = -sys.rate * times[i] * Eigen::MatrixXd(sys.coefficients);
      const Vector ref = m.exp() * x0;
      CHECK((cf.states[i] - ref).cwiseAbs().maxCoeff() < 1e-10);
    }
    const auto late = solve_closed_form(sys, x0, std::vector<double>{0.0, 200.0});
    CHECK(late.states[1].norm() < 1e-6 * x0.norm());
  }

  TEST_CASE("rk4") {
    DiffusionSystem scalar{SystemKind::heat, Matrix::Ones(1, 1), 1.0};
    const auto t = solve_rk4(scalar, Vector::Ones(1), 1e-3, 1000);
    CHECK(std::abs(t.states.back()(0) - std::exp(-1.0)) < 1e-8);
    CHECK(t.times.back() == doctest::Approx(1.0));

    DiffusionSystem null{SystemKind::heat, Matrix::Zero(3, 3), 1.0};
    const Vector h0 = Vector::Random(3);
    for (const auto& s : solve_rk4(null, h0, 0.1, 10).states) CHECK(s == h0);

    DiffusionSystem blow{SystemKind::heat, -1e3 * Matrix::Identity(2, 2), 1.0};
    CHECK_THROWS_AS(solve_rk4(blow, Vector::Ones(2), 1.0, 400), NumericalError);
    CHECK_THROWS_AS(solve_rk4(null, h0, 0.0, 10), ConfigError);
  }

  TEST_CASE("closed form and rk4 agree on the chain systems") {
    const auto preset = chain3_preset(default_chain3_h0());
    const auto times = grid(10.0, 201);
    for (const auto* sys : {&preset.heat, &preset.sheaf, &preset.lying}) {
      std::vector<std::string> warnings;
      const auto cf = solve_closed_form(*sys, preset.h0, times, &warnings);
      CHECK(cf.solver == Solver::closed_form);
      CHECK(warnings.empty());
      const auto rk = solve_rk4_at(*sys, preset.h0, times, 1e-3);
      CHECK(max_gap(cf, rk) <= 1e-6);
    }
  }

  TEST_CASE("defective systems fall back to rk4") {
    Matrix jordan(2, 2);
    jordan << 1, 1, 0, 1;
    DiffusionSystem sys{SystemKind::lying, jordan, 1.0};
    std::vector<std::string> warnings;
    const auto traj = solve_closed_form(sys, Vector::Ones(2), std::vector<double>{0.0, 1.0}, &warnings);
    CHECK(traj.solver == Solver::rk4);
    CHECK_FALSE(warnings.empty());
    const Vector ref = (-Eigen::MatrixXd(jordan)).exp() * Vector::Ones(2);
    CHECK((traj.states[1] - ref).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("symmetric kinds dissipate energy") {
    const auto preset = chain3_preset(default_chain3_h0());
    std::mt19937_64 rng(54);
    const auto g = test::connected_random_graph(8, 0.3, rng);
    for (const auto& sys : {preset.heat, preset.sheaf, heat_system(g), normalized_heat_system(g)}) {
      const Vector h0 = Vector::Random(sys.size());
      const auto traj = solve_rk4(sys, h0, 1e-2, 500);
      for (std::size_t i = 1; i < traj.states.size(); ++i)
        CHECK(traj.states[i].squaredNorm() <= traj.states[i - 1].squaredNorm() + 1e-14);
    }
  }

  TEST_CASE("sheaf laplacian") {
    const std::vector<SheafEdge> edges{{0, 1, 1.0, -1.0}, {1, 2, 1.0, 1.0}};
    const auto sys = sheaf_system(3, edges);
    CHECK((sys.coefficients - sys.coefficients.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Vector kernel = (Vector(3) << 1.0, -1.0, -1.0).finished();
    CHECK((sys.coefficients * kernel).norm() < 1e-15);
  }

  TEST_CASE("figure reproduction checks") {
    test::TempDir dir("fig1");
    const auto report = reproduce_figure1(dir.path());
    CHECK(report.pass());
    CHECK(report.heat_consensus);
    CHECK(report.heat_spread_at_check <= 1e-6);
    CHECK(report.sheaf_sign_divergence);
    CHECK(report.sheaf_discourse_gap <= 1e-6);
    CHECK(report.lying_final_ratio < 1e-2);
    CHECK(report.lying_oscillation);
    CHECK(report.solver_gap <= 1e-6);

    for (const char* name : {"heat", "sheaf", "lying"}) {
      CHECK(std::filesystem::exists(dir / (std::string(name) + "_closed_form.csv")));
      CHECK(std::filesystem::exists(dir / (std::string(name) + "_rk4.csv")));
    }
    std::ifstream in(dir / "lying_closed_form.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,h_1,h_2,h_3");
  }

  TEST_CASE("trajectory csv") {
    test::TempDir dir("traj");
    Trajectory t;
    t.times = {0.0, 0.1};
    t.states = {(Vector(2) << 1.0 / 3.0, 2.0).finished(), (Vector(2) << 0.25, -1e-300).finished()};
    write_trajectory_csv(t, dir / "t.csv");
    std::ifstream in(dir / "t.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "t,h_1,h_2");
    const double back = std::stod(row.substr(row.find(',') + 1));
    CHECK(back == 1.0 / 3.0);
  }
}
