#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tvdd/errors.hpp"
#include "tvdd/fista.hpp"

using namespace tvdd;

namespace {

// min 0.5 * sum_k w_k (x_k - c_k)^2 over the box [-1, 1]: solution is clamp(c).
class DiagonalBox final : public SmoothProblem {
 public:
  DiagonalBox(EdgeField w, EdgeField c) : w_(std::move(w)), c_(std::move(c)) {}
  double value(const EdgeField& x) const override {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += 0.5 * w_.dof(k) * (x.dof(k) - c_.dof(k)) * (x.dof(k) - c_.dof(k));
    return s;
  }
  void gradient(const EdgeField& x, EdgeField& out) const override {
    out = x;
    for (std::size_t k = 0; k < x.size(); ++k) out.dof(k) = w_.dof(k) * (x.dof(k) - c_.dof(k));
  }
  void project(EdgeField& x) const override { project_feasible_inplace(x); }
  double stop_measure(const EdgeField& next, const EdgeField& prev) const override {
    return squared_norm(next - prev);
  }
  bool feasible(const EdgeField& x) const override { return is_feasible(x); }

 private:
  EdgeField w_, c_;
};

}  // namespace

TEST_CASE("config validation") {
  FistaConfig c;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.lipschitz = 1.0;
  CHECK_NOTHROW(c.validate());
  c.max_iterations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.max_iterations = 1;
  c.tolerance = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("single-DOF ROF dual: clamp of the unconstrained minimiser") {
  // On a 1x2 grid div p = (p, -p), so F(p) = (1/2)((p + f0)^2 + (f1 - p)^2) at lambda = 1.
  const GridGeometry g(1, 2);
  for (auto [f0, f1] : {std::pair{0.3, -0.3}, {1.0, -1.0}, {2.0, -2.0}, {-0.2, 0.6}}) {
    const EnergyModel m(ModelKind::Rof, 1.0, CellField(g, std::vector<double>{f0, f1}));
    GlobalDualProblem prob(m);
    FistaConfig c{m.lipschitz(), 5000, 0.0, 0};
    const auto r = fista_solve(prob, EdgeField(g), c);
    const double unconstrained = (f1 - f0) / 2.0;
    CHECK(r.x.dof(0) == doctest::Approx(std::clamp(unconstrained, -1.0, 1.0)).epsilon(1e-10));
  }
}

TEST_CASE("an optimal start stops after one iteration") {
  const GridGeometry g(2, 2);
  const EnergyModel m(ModelKind::Rof, 10.0, CellField(g, 0.5));
  GlobalDualProblem prob(m);
  const auto r = fista_solve(prob, EdgeField(g), FistaConfig{m.lipschitz(), 1000, 1e-18, 0});
  CHECK(r.iterations == 1);
  CHECK(r.converged);
  CHECK(r.x.max_abs() == 0.0);
}

TEST_CASE("generic problem adapter") {
  std::mt19937_64 rng(1);
  const GridGeometry g(5, 4);
  const EdgeField w = oracle::random_edges(g, rng, 0.5, 2.0);
  const EdgeField c = oracle::random_edges(g, rng, -2.0, 2.0);
  DiagonalBox prob(w, c);
  const auto r = fista_solve(prob, EdgeField(g), FistaConfig{2.0, 2000, 1e-30, 0});
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(r.x.dof(k) == doctest::Approx(std::clamp(c.dof(k), -1.0, 1.0)));
}

TEST_CASE("iteration cap and trace") {
  std::mt19937_64 rng(2);
  const GridGeometry g(16, 16);
  const EnergyModel m(ModelKind::Rof, 10.0, oracle::random_cells(g, rng, 0.0, 1.0));
  GlobalDualProblem prob(m);
  std::size_t seen = 0;
  const auto r = fista_solve(prob, EdgeField(g), FistaConfig{m.lipschitz(), 1000, 1e-18, 100},
                             [&](std::size_t k, const EdgeField& x) {
                               CHECK(is_feasible(x));
                               seen = k;
                             });
  CHECK(r.iterations <= 1000);
  CHECK(seen == r.iterations);
  CHECK(r.trace.front() == doctest::Approx(dual_energy(m, EdgeField(g))));
  CHECK(r.trace.back() <= r.trace.front());
}

TEST_CASE("long run drives the duality gap to zero") {
  std::mt19937_64 rng(3);
  const GridGeometry g(32, 32);
  const EnergyModel m(ModelKind::Rof, 10.0, oracle::random_cells(g, rng, 0.0, 1.0));
  GlobalDualProblem prob(m);
  const auto r = fista_solve(prob, EdgeField(g), FistaConfig{m.lipschitz(), 10000, 0.0, 1000});
  CHECK(r.trace.back() <= r.trace.front());
  CHECK(is_feasible(r.x));
  CHECK(duality_gap(m, r.x) <= 1e-6 * m.dual_constant());
}

TEST_CASE("the divergence stop criterion fires at desk tolerances") {
  std::mt19937_64 rng(4);
  const GridGeometry g(8, 8);
  const EnergyModel m(ModelKind::Rof, 10.0, oracle::random_cells(g, rng, 0.0, 1.0));
  GlobalDualProblem prob(m);
  const auto r = fista_solve(prob, EdgeField(g), FistaConfig{m.lipschitz(), 100000, 1e-18, 0});
  CHECK(r.converged);
  CHECK(r.iterations < 100000);
}

TEST_CASE("solver determinism") {
  std::mt19937_64 rng(5);
  const GridGeometry g(12, 10);
  const EnergyModel m(ModelKind::TvH1, 10.0, oracle::random_cells(g, rng));
  GlobalDualProblem prob(m);
  const FistaConfig c{m.lipschitz(), 300, 0.0, 0};
  CHECK(fista_solve(prob, EdgeField(g), c).x == fista_solve(prob, EdgeField(g), c).x);
}

TEST_CASE("reference minimum") {
  const GridGeometry g(2, 2);
  const EnergyModel flat(ModelKind::Rof, 10.0, CellField(g, 0.7));
  const auto r = reference_minimum(flat, 50);
  CHECK(r.p.max_abs() == 0.0);
  CHECK(r.energy == doctest::Approx(flat.dual_constant()));

  std::mt19937_64 rng(6);
  const GridGeometry gg(10, 10);
  const EnergyModel m(ModelKind::Rof, 10.0, oracle::random_cells(gg, rng, 0.0, 1.0));
  const auto opt = reference_minimum(m, 20000);
  const auto again = reference_minimum(m, 1, opt.p);
  CHECK(again.energy == doctest::Approx(opt.energy).epsilon(1e-12));
}

TEST_CASE("reference minimum plateaus at the desk budget") {
  std::mt19937_64 rng(7);
  const GridGeometry g(64, 64);
  const EnergyModel m(ModelKind::Rof, 10.0, oracle::random_cells(g, rng, 0.0, 1.0));
  const auto before = reference_minimum(m, 100000 - 10);
  const auto after = reference_minimum(m, 10, before.p);
  CHECK(std::abs(after.energy - before.energy) <= 1e-12 * std::abs(before.energy));
}
