#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "tvdd/analysis.hpp"
#include "tvdd/errors.hpp"

using namespace tvdd;

namespace {

std::vector<char> color_cells(const Decomposition& d, std::size_t k) {
  const auto& g = d.geometry();
  std::vector<char> in(g.cell_count(), 0);
  for (std::size_t s : d.color_classes()[k]) {
    const auto& r = d.subdomains()[s].enlarged;
    for (std::size_t j = r.j0; j < r.j1; ++j)
      for (std::size_t i = r.i0; i < r.i1; ++i) in[j * g.m1 + i] = 1;
  }
  return in;
}

}  // namespace

TEST_CASE("partition of unity: single subdomain") {
  const GridGeometry g(10, 7);
  const auto thetas = build_partition_of_unity(build_decomposition(g, 1, 1, 2));
  REQUIRE(thetas.size() == 1);
  for (double v : thetas[0].values()) CHECK(v == 1.0);
}

TEST_CASE("partition of unity: sum, range and support") {
  for (auto [m1, m2, n1, n2, delta] : {std::tuple{64ul, 64ul, 4ul, 4ul, 2ul}, {37ul, 29ul, 3ul, 2ul, 3ul},
                                       {48ul, 20ul, 4ul, 1ul, 6ul}, {64ul, 64ul, 2ul, 2ul, 16ul}}) {
    const GridGeometry g(m1, m2);
    const auto d = build_decomposition(g, n1, n2, delta);
    const auto thetas = build_partition_of_unity(d);
    REQUIRE(thetas.size() == d.color_count());
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
      double s = 0.0;
      for (const auto& t : thetas) s += t.values()[v];
      CHECK(std::abs(s - 1.0) <= 1e-14);
    }
    double worst_grad = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
      CHECK(thetas[k].in_unit_range());
      const auto in = color_cells(d, k);
      for (std::size_t b = 0; b <= m2; ++b) {
        for (std::size_t a = 0; a <= m1; ++a) {
          bool touches_outside = false;
          for (std::size_t j = b ? b - 1 : 0; j < std::min(b + 1, m2); ++j)
            for (std::size_t i = a ? a - 1 : 0; i < std::min(a + 1, m1); ++i) touches_outside |= !in[j * m1 + i];
          if (touches_outside) CHECK(thetas[k](a, b) == 0.0);
        }
      }
      worst_grad = std::max(worst_grad, thetas[k].gradient_max() * static_cast<double>(delta));
    }
    MESSAGE("max |grad theta| * delta = " << worst_grad);
    CHECK(worst_grad <= 4.0);
  }
}

TEST_CASE("partition of unity: one at points owned by a single colour") {
  const GridGeometry g(64, 64);
  const auto d = build_decomposition(g, 4, 4, 2);
  const auto thetas = build_partition_of_unity(d);
  // Block (1,1) has core [16,32)^2; the vertex (24,24) is far from every other subdomain.
  std::size_t owner = 0;
  for (const auto& s : d.subdomains())
    if (s.block_i == 1 && s.block_j == 1) owner = s.color;
  CHECK(thetas[owner](24, 24) == 1.0);
}

TEST_CASE("stable decomposition") {
  std::mt19937_64 rng(1);
  const GridGeometry g(32, 32);
  const auto d = build_decomposition(g, 4, 4, 2);
  const auto thetas = build_partition_of_unity(d);
  const EdgeField p = oracle::random_edges(g, rng), q = oracle::random_edges(g, rng);

  const auto same = stable_decompose(d, thetas, p, p);
  for (const auto& piece : same.pieces) CHECK(piece.max_abs() == 0.0);
  CHECK(same.report.all_feasible());

  const auto sd = stable_decompose(d, thetas, p, q);
  CHECK(sd.report.reassembly_error <= 1e-12 * (p - q).max_abs());
  CHECK(sd.report.all_feasible());
  // The measured constants bound the energy by construction.
  const double bound = sd.report.measured_c1 * squared_norm(divergence(p - q)) + sd.report.measured_c2 * squared_norm(p - q);
  CHECK(sd.report.div_energy <= bound * (1 + 1e-12));
  for (std::size_t k = 0; k < sd.pieces.size(); ++k) {
    const EdgeField expect = interpolate_cutoff(thetas[k], p - q);
    CHECK(sd.pieces[k] == expect);
  }

  EdgeField bad = p;
  bad.dof(0) = 1.5;
  CHECK_THROWS_AS(stable_decompose(d, thetas, bad, q), ContractError);
}

TEST_CASE("stable decomposition: identity splitting") {
  std::mt19937_64 rng(2);
  const GridGeometry g(16, 12);
  const auto d = build_decomposition(g, 1, 1, 1);
  const auto thetas = build_partition_of_unity(d);
  const EdgeField p = oracle::random_edges(g, rng), q = oracle::random_edges(g, rng);
  const auto sd = stable_decompose(d, thetas, p, q);
  CHECK(sd.pieces[0] == p - q);
  CHECK(sd.report.measured_c1 == doctest::Approx(1.0));
  CHECK(sd.report.measured_c2 == 0.0);
}

TEST_CASE("pseudo-linear fit recovers a planted rate and threshold") {
  std::vector<double> a;
  for (int n = 0; n < 60; ++n) a.push_back(std::pow(0.5, n) * 10.0 + 1e-9);
  const auto fit = fit_pseudo_linear(std::span<const double>(a));
  REQUIRE(fit.valid);
  CHECK(fit.plateau);
  CHECK(fit.gamma == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::abs(fit.gamma - 0.5) <= 0.01);
  CHECK(fit.threshold >= 0.5e-9);
  CHECK(fit.threshold <= 1.5e-9);
  CHECK(fit.r_squared >= 0.98);
}

TEST_CASE("pseudo-linear fit: degenerate inputs") {
  std::vector<double> flat(40, 3.0);
  CHECK_FALSE(fit_pseudo_linear(std::span<const double>(flat)).valid);

  std::vector<double> few{1.0, 0.5, 0.25, 0.125, 0.0625};
  CHECK_FALSE(fit_pseudo_linear(std::span<const double>(few)).valid);

  std::vector<double> growing;
  for (int n = 0; n < 30; ++n) growing.push_back(std::exp(0.1 * n));
  CHECK_FALSE(fit_pseudo_linear(std::span<const double>(growing)).valid);
}

TEST_CASE("pseudo-linear fit: plateau-free sequence") {
  std::vector<double> a;
  for (int n = 0; n < 40; ++n) a.push_back(std::pow(0.8, n));
  const auto fit = fit_pseudo_linear(std::span<const double>(a));
  REQUIRE(fit.valid);
  CHECK_FALSE(fit.plateau);
  CHECK(fit.gamma == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(fit.threshold <= a.back());
}

TEST_CASE("pseudo-linear fit from records") {
  std::vector<ConvergenceRecord> recs;
  for (int n = 0; n < 30; ++n) {
    ConvergenceRecord r;
    r.iteration = static_cast<std::size_t>(n);
    r.gap = std::pow(0.7, n);
    recs.push_back(r);
  }
  const auto fit = fit_pseudo_linear(std::span<const ConvergenceRecord>(recs));
  REQUIRE(fit.valid);
  CHECK(fit.gamma == doctest::Approx(0.7));
}

TEST_CASE("psnr") {
  const GridGeometry g(8, 6);
  const CellField ref(g, 0.4);
  CHECK(psnr(ref + CellField(g, 0.1), ref) == doctest::Approx(20.0));
  CHECK(psnr(ref, ref) == std::numeric_limits<double>::infinity());

  std::mt19937_64 rng(3);
  const CellField err = oracle::random_cells(g, rng, -0.2, 0.2);
  CHECK(psnr(ref + 0.5 * err, ref) - psnr(ref + err, ref) == doctest::Approx(10.0 * std::log10(4.0)));
  CHECK_THROWS_AS((void)psnr(ref, CellField(GridGeometry(6, 8))), ContractError);
}
