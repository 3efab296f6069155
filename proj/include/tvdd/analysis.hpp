#pragma once

// Convergence diagnostics and numerical audits of the decomposition theory:
// partition of unity per colour class, the stable splitting of p - q, the
// pseudo-linear rate fit a_n <= gamma^n c + eps, and PSNR.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "tvdd/grid.hpp"
#include "tvdd/schwarz.hpp"

namespace tvdd {

struct ConvergenceRecord {
  std::size_t iteration = 0;
  double energy = 0.0;        // F(p_n)
  double gap = 0.0;           // F(p_n) - F(p*)
  double relative_gap = 0.0;  // gap_n / gap_0
  double duality_gap = 0.0;
  double decrease_lhs = 0.0;
  double decrease_rhs = 0.0;
  double wall_seconds = 0.0;
  std::optional<double> psnr;
};

struct RateFit {
  bool valid = false;
  bool plateau = false;  // a tail plateau was detected; otherwise threshold is the last gap (an upper bound)
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
  std::size_t window_start = 0;  // inclusive
  std::size_t window_end = 0;    // inclusive
  double r_squared = 0.0;
};

/// Fits log(a_n - eps) ~ n log(gamma) + c over the longest window with
/// r^2 >= 0.98. eps is the median of the tail quarter when the tail is flat
/// compared with the head; heuristic and purely diagnostic.
RateFit fit_pseudo_linear(std::span<const double> gaps);
RateFit fit_pseudo_linear(std::span<const ConvergenceRecord> records);

/// One cutoff per colour: ramp min(1, dist_inf(v, Omega \ S_k) / delta), normalised to sum to one.
std::vector<CutoffFunction> build_partition_of_unity(const Decomposition& decomposition);

struct StableDecompositionReport {
  double reassembly_error = 0.0;  // max |sum_k R_k^* r_k - (p - q)|
  std::vector<bool> feasible;     // q + R_k^* r_k in C, per colour
  double div_energy = 0.0;        // sum_k ||div R_k^* r_k||^2
  double measured_c1 = 0.0;
  double measured_c2 = 0.0;
  [[nodiscard]] bool all_feasible() const;
};

struct StableDecomposition {
  std::vector<EdgeField> pieces;  // R_k^* r_k = Pi_h(theta_k (p - q)) as global fields
  StableDecompositionReport report;
};

/// Splits p - q with the partition of unity and measures c1, c2 such that
/// sum_k ||div R_k^* r_k||^2 <= c1 ||div(p - q)||^2 + c2 ||p - q||^2.
StableDecomposition stable_decompose(const Decomposition& decomposition, const std::vector<CutoffFunction>& thetas,
                                     const EdgeField& p, const EdgeField& q);

/// 10 log10(|Omega| / ||u - reference||^2) with peak value 1; +inf when identical.
double psnr(const CellField& u, const CellField& reference);

}  // namespace tvdd
