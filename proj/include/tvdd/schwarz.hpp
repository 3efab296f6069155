#pragma once

// Overlapping additive Schwarz method for the dual TV problem.
//
// The image is cut into n1 x n2 disjoint rectangles, each enlarged by delta
// pixel layers (clipped to the image) and coloured checkerboard-wise with at
// most four colours. Same-colour enlarged subdomains never share a cell, so a
// colour's subspace problem splits into independent subdomain problems. One
// outer step solves every subdomain problem from the current iterate and adds
// the tau-damped corrections:
//
//   r_s = argmin { F(p + R_s^* r) : p + R_s^* r in C }
//   p  <- p + tau * sum_s R_s^* r_s

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "tvdd/fista.hpp"
#include "tvdd/grid.hpp"
#include "tvdd/models.hpp"

namespace tvdd {

/// Half-open cell rectangle [i0, i1) x [j0, j1).
struct CellRect {
  std::size_t i0 = 0, j0 = 0, i1 = 0, j1 = 0;

  [[nodiscard]] std::size_t width() const { return i1 - i0; }
  [[nodiscard]] std::size_t height() const { return j1 - j0; }
  [[nodiscard]] bool contains(std::size_t i, std::size_t j) const { return i >= i0 && i < i1 && j >= j0 && j < j1; }
  [[nodiscard]] bool intersects(const CellRect& o) const {
    return i0 < o.i1 && o.i0 < i1 && j0 < o.j1 && o.j0 < j1;
  }
  bool operator==(const CellRect&) const = default;
};

/// Edge DOFs strictly inside a cell rectangle, with restriction and extension by zero.
class LocalPatch {
 public:
  LocalPatch(const GridGeometry& global, const CellRect& rect);

  [[nodiscard]] const CellRect& rect() const { return rect_; }
  [[nodiscard]] const GridGeometry& global_geometry() const { return global_; }
  [[nodiscard]] const GridGeometry& local_geometry() const { return local_; }

  [[nodiscard]] EdgeField restrict_field(const EdgeField& global) const;
  [[nodiscard]] CellField restrict_cells(const CellField& global) const;
  [[nodiscard]] EdgeField extend_by_zero(const EdgeField& local) const;
  /// global += scale * R^* local
  void add_extended(EdgeField& global, const EdgeField& local, double scale) const;

 private:
  GridGeometry global_;
  CellRect rect_;
  GridGeometry local_;
};

struct Subdomain {
  std::size_t block_i = 0;  // position in the n1 x n2 block grid
  std::size_t block_j = 0;
  CellRect core;      // Omega_s
  CellRect enlarged;  // Omega_s': core padded by delta, clipped to the image
  std::size_t color = 0;
};

class Decomposition {
 public:
  [[nodiscard]] const GridGeometry& geometry() const { return geometry_; }
  [[nodiscard]] std::size_t n1() const { return n1_; }
  [[nodiscard]] std::size_t n2() const { return n2_; }
  [[nodiscard]] std::size_t overlap() const { return overlap_; }
  [[nodiscard]] std::size_t size() const { return subdomains_.size(); }
  [[nodiscard]] std::size_t color_count() const { return color_classes_.size(); }
  [[nodiscard]] const std::vector<Subdomain>& subdomains() const { return subdomains_; }
  [[nodiscard]] const std::vector<std::vector<std::size_t>>& color_classes() const { return color_classes_; }
  [[nodiscard]] std::size_t min_core_side() const;
  [[nodiscard]] LocalPatch patch(std::size_t s) const { return LocalPatch(geometry_, subdomains_[s].enlarged); }

  friend Decomposition build_decomposition(const GridGeometry&, std::size_t, std::size_t, std::size_t);

 private:
  GridGeometry geometry_;
  std::size_t n1_ = 1, n2_ = 1, overlap_ = 1;
  std::vector<Subdomain> subdomains_;
  std::vector<std::vector<std::size_t>> color_classes_;
};

/// Checkerboard decomposition; the last block row/column absorbs remainders.
/// Throws ConfigError for degenerate sizes or when same-colour enlarged
/// subdomains would share a cell (2 * delta > H).
Decomposition build_decomposition(const GridGeometry& geometry, std::size_t n1, std::size_t n2, std::size_t delta);

/// Local problem on one enlarged subdomain around the current iterate q:
///   min over p_s in C^s of F*(div R^* p_s + g_s),  g_s = div (I - R^* R) q.
/// value() equals the global energy of the reassembled field, so
/// value(restrict(q)) == F(q) up to round-off.
class LocalDualProblem final : public SmoothProblem {
 public:
  LocalDualProblem(const EnergyModel& model, const LocalPatch& patch, const EdgeField& q);
  /// div_q = div q and energy_q = F(q), shared across all patches of one outer step.
  LocalDualProblem(const EnergyModel& model, const LocalPatch& patch, const EdgeField& q, const CellField& div_q,
                   double energy_q);

  [[nodiscard]] double value(const EdgeField& x) const override;
  void gradient(const EdgeField& x, EdgeField& out) const override;
  void project(EdgeField& x) const override;
  [[nodiscard]] double stop_measure(const EdgeField& next, const EdgeField& previous) const override;
  [[nodiscard]] bool feasible(const EdgeField& x) const override;

  /// R q, the local field corresponding to a zero correction.
  [[nodiscard]] const EdgeField& initial() const { return initial_; }
  [[nodiscard]] const CellField& shift() const { return shift_; }

 private:
  double local_part(const EdgeField& x) const;

  ModelKind kind_;
  double lambda_;
  GridGeometry local_;
  EdgeField initial_;
  CellField shift_;    // g_s on the patch cells
  CellField data_;     // ROF: g_s + lambda f;  TV-H^-1: e + lambda f (e couples to g_s outside the patch)
  CellField f_local_;  // TV-H^-1 only
  CellField halo_;     // TV-H^-1 only: e
  double offset_ = 0.0;
  mutable CellField w_;
  mutable CellField kw_;
  mutable EdgeField difference_;
};

struct SchwarzConfig {
  double tau = 0.25;
  std::size_t outer_iterations = 100;
  FistaConfig local{0.0, 1000, 1e-18, 0};  // lipschitz 0: use the model's constant
  bool warm_start = false;
  std::size_t threads = 1;
  // Optional early exit on (F(p_n) - ref) / (F(p_0) - ref) <= relative_gap_target.
  std::optional<double> reference_energy;
  double relative_gap_target = 0.0;

  void validate(const Decomposition& decomposition) const;
};

struct OuterStep {
  EdgeField p_next;
  std::vector<double> color_div_sq;          // ||div R_k^* r_k||^2 per colour
  double correction_div_sq = 0.0;            // sum over colours
  std::vector<std::size_t> local_iterations;  // per subdomain
  std::vector<EdgeField> corrections;         // local r_s, kept for warm starts
};

/// One step of the additive Schwarz iteration. The result does not depend on
/// cfg.threads: local solves are independent and corrections are summed in
/// subdomain order.
OuterStep outer_iteration(const EnergyModel& model, const Decomposition& decomposition, const EdgeField& p,
                          const SchwarzConfig& config, const std::vector<EdgeField>* warm_corrections = nullptr);

struct SchwarzStepInfo {
  std::size_t iteration = 0;  // n + 1
  double energy = 0.0;        // F(p_{n+1})
  double decrease_lhs = 0.0;  // F(p_n) - F(p_{n+1})
  double decrease_rhs = 0.0;  // tau / (2 beta) * sum_k ||div R_k^* r_k||^2
  double wall_seconds = 0.0;
  std::size_t max_local_iterations = 0;
};

using SchwarzSink = std::function<void(const SchwarzStepInfo& info, const EdgeField& p)>;

struct SchwarzResult {
  EdgeField p;
  std::size_t iterations = 0;
  std::vector<double> energies;  // F(p_0), F(p_1), ...
};

SchwarzResult solve_schwarz(const EnergyModel& model, const Decomposition& decomposition, const SchwarzConfig& config,
                            const SchwarzSink& sink = {});
SchwarzResult solve_schwarz(const EnergyModel& model, const Decomposition& decomposition, const SchwarzConfig& config,
                            const SchwarzSink& sink, EdgeField p0);

}  // namespace tvdd
