#include "tvdd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tvdd/errors.hpp"
#include "tvdd/models.hpp"

namespace tvdd {

// ---- pseudo-linear fit ----------------------------------------------------

namespace {

struct LineFit {
  double slope = 0.0;
  double r_squared = 0.0;
};

// Least squares y ~ slope * x + c from running sums.
LineFit line_from_sums(double n, double sx, double sy, double sxx, double sxy, double syy) {
  const double vxx = sxx - sx * sx / n;
  const double vyy = syy - sy * sy / n;
  const double vxy = sxy - sx * sy / n;
  LineFit f;
  if (vxx <= 0.0) return f;
  f.slope = vxy / vxx;
  f.r_squared = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 0.0;
  return f;
}

// Slope of log(a_n) over [first, last), skipping non-positive entries.
std::optional<double> log_slope(std::span<const double> a, std::size_t first, std::size_t last) {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = first; k < last; ++k) {
    if (!(a[k] > 0.0)) continue;
    const double x = static_cast<double>(k), y = std::log(a[k]);
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  if (n < 2) return std::nullopt;
  const double vxx = sxx - sx * sx / n;
  if (vxx <= 0.0) return std::nullopt;
  return (sxy - sx * sy / n) / vxx;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

constexpr double kMinRSquared = 0.98;
constexpr std::size_t kMinWindow = 5;
constexpr std::size_t kMinRecords = 10;

}  // namespace

RateFit fit_pseudo_linear(std::span<const double> a) {
  RateFit fit;
  const std::size_t count = a.size();
  if (std::count_if(a.begin(), a.end(), [](double v) { return v > 0.0; }) < static_cast<long>(kMinRecords)) {
    return fit;
  }

  const std::size_t tail_len = std::max<std::size_t>(3, count / 4);
  const std::size_t head_len = count - tail_len;
  const auto head_slope = log_slope(a, 0, head_len);
  if (!head_slope || *head_slope >= 0.0) return fit;
  const auto tail_slope = log_slope(a, head_len, count);
  // A tail that decays at less than a fifth of the head's log-rate counts as a plateau.
  fit.plateau = !tail_slope || *tail_slope > 0.2 * *head_slope;

  double eps = 0.0;
  if (fit.plateau) {
    eps = median(std::vector<double>(a.begin() + static_cast<long>(head_len), a.end()));
    if (!(eps > 0.0)) eps = 0.0;
  }

  // Fit points: well above the plateau (or merely positive when there is none).
  std::vector<double> y(count, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < count; ++k) {
    if (fit.plateau ? a[k] > 2.0 * eps && a[k] > 0.0 : a[k] > 0.0) y[k] = std::log(a[k] - eps);
  }

  std::size_t best_len = 0;
  for (std::size_t s = 0; s < count; ++s) {
    if (std::isnan(y[s])) continue;
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t e = s; e < count && !std::isnan(y[e]); ++e) {
      const double x = static_cast<double>(e - s);
      n += 1;
      sx += x;
      sy += y[e];
      sxx += x * x;
      sxy += x * y[e];
      syy += y[e] * y[e];
      const std::size_t len = e - s + 1;
      if (len < kMinWindow || len <= best_len) continue;
      const LineFit lf = line_from_sums(n, sx, sy, sxx, sxy, syy);
      if (lf.slope < 0.0 && lf.r_squared >= kMinRSquared) {
        best_len = len;
        fit.window_start = s;
        fit.window_end = e;
        fit.gamma = std::exp(lf.slope);
        fit.r_squared = lf.r_squared;
      }
    }
  }
  if (best_len == 0 || !(fit.gamma > 0.0 && fit.gamma < 1.0)) {
    fit.gamma = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }

  if (fit.plateau) {
    fit.threshold = eps;
  } else {
    // No plateau observed: the last positive gap bounds the threshold from above.
    for (std::size_t k = count; k-- > 0;) {
      if (a[k] > 0.0) {
        fit.threshold = a[k];
        break;
      }
    }
  }
  fit.valid = true;
  return fit;
}

RateFit fit_pseudo_linear(std::span<const ConvergenceRecord> records) {
  std::vector<double> gaps;
  gaps.reserve(records.size());
  for (const auto& r : records) gaps.push_back(r.gap);
  return fit_pseudo_linear(std::span<const double>(gaps));
}

// ---- partition of unity ---------------------------------------------------

std::vector<CutoffFunction> build_partition_of_unity(const Decomposition& decomposition) {
  const auto& g = decomposition.geometry();
  const std::size_t colors = decomposition.color_count();
  const long delta = static_cast<long>(decomposition.overlap());
  const long m1 = static_cast<long>(g.m1), m2 = static_cast<long>(g.m2);

  std::vector<CutoffFunction> ramps;
  ramps.reserve(colors);
  for (std::size_t k = 0; k < colors; ++k) {
    std::vector<char> inside(g.cell_count(), 0);
    for (std::size_t s : decomposition.color_classes()[k]) {
      const auto& r = decomposition.subdomains()[s].enlarged;
      for (std::size_t j = r.j0; j < r.j1; ++j)
        for (std::size_t i = r.i0; i < r.i1; ++i) inside[j * g.m1 + i] = 1;
    }
    CutoffFunction psi(g);
    for (long b = 0; b <= m2; ++b) {
      for (long a = 0; a <= m1; ++a) {
        // Chebyshev distance from vertex (a, b) to the nearest cell outside S_k, capped at delta.
        long dist = delta;
        for (long j = std::max(0L, b - delta - 1); j < std::min(m2, b + delta + 1); ++j) {
          const long dy = j >= b ? j - b : b - j - 1;
          if (dy >= dist) continue;
          for (long i = std::max(0L, a - delta - 1); i < std::min(m1, a + delta + 1); ++i) {
            if (inside[static_cast<std::size_t>(j * m1 + i)]) continue;
            const long dx = i >= a ? i - a : a - i - 1;
            dist = std::min(dist, std::max(dx, dy));
          }
        }
        psi(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) =
            static_cast<double>(dist) / static_cast<double>(delta);
      }
    }
    ramps.push_back(std::move(psi));
  }

  // Normalise. Every vertex lies at distance >= delta from the outside of the
  // enlarged subdomain that owns it, so the sum is at least one.
  std::vector<CutoffFunction> thetas = ramps;
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    double total = 0.0;
    for (const auto& r : ramps) total += r.values()[v];
    if (!(total > 0.0)) throw ContractError("partition of unity: vertex not covered by any colour");
    for (std::size_t k = 0; k < colors; ++k) thetas[k].values()[v] = ramps[k].values()[v] / total;
  }
  return thetas;
}

// ---- stable decomposition -------------------------------------------------

bool StableDecompositionReport::all_feasible() const {
  return std::all_of(feasible.begin(), feasible.end(), [](bool b) { return b; });
}

StableDecomposition stable_decompose(const Decomposition& decomposition, const std::vector<CutoffFunction>& thetas,
                                     const EdgeField& p, const EdgeField& q) {
  const auto& g = decomposition.geometry();
  require_same_geometry(p.geometry(), g, "stable_decompose(p)");
  require_same_geometry(q.geometry(), g, "stable_decompose(q)");
  if (!is_feasible(p) || !is_feasible(q)) throw ContractError("stable_decompose: p and q must lie in C");
  if (thetas.size() != decomposition.color_count()) throw ContractError("stable_decompose: one cutoff per colour");

  const EdgeField d = p - q;
  const CellField div_d = divergence(d);

  StableDecomposition out;
  auto& rep = out.report;
  EdgeField sum(g);
  // Discrete product rule: div Pi(theta d) = theta_T div d + (remainder driven by grad theta).
  double a_sq = 0.0, b_sq = 0.0;
  for (const auto& theta : thetas) {
    EdgeField piece = interpolate_cutoff(theta, d);
    CellField div_piece = divergence(piece);
    CellField leading(g);
    for (std::size_t j = 0; j < g.m2; ++j) {
      for (std::size_t i = 0; i < g.m1; ++i) {
        const double cell_theta = 0.25 * (theta(i, j) + theta(i + 1, j) + theta(i, j + 1) + theta(i + 1, j + 1));
        leading(i, j) = cell_theta * div_d(i, j);
      }
    }
    rep.div_energy += squared_norm(div_piece);
    a_sq += squared_norm(leading);
    b_sq += squared_norm(div_piece - leading);

    rep.feasible.push_back(is_feasible(q + piece));
    sum += piece;
    out.pieces.push_back(std::move(piece));
  }
  rep.reassembly_error = (sum - d).max_abs();

  // sum ||A_k + B_k||^2 <= 2 sum ||A_k||^2 + 2 sum ||B_k||^2, or sum ||A_k||^2 when B vanishes.
  const double div_sq = squared_norm(div_d);
  const double d_sq = squared_norm(d);
  if (b_sq == 0.0) {
    rep.measured_c1 = div_sq > 0.0 ? a_sq / div_sq : 0.0;
    rep.measured_c2 = 0.0;
  } else {
    rep.measured_c1 = div_sq > 0.0 ? 2.0 * a_sq / div_sq : 0.0;
    rep.measured_c2 = d_sq > 0.0 ? 2.0 * b_sq / d_sq : 0.0;
  }
  return out;
}

// ---- PSNR -----------------------------------------------------------------

double psnr(const CellField& u, const CellField& reference) {
  require_same_geometry(u.geometry(), reference.geometry(), "psnr");
  const double err = squared_norm(u - reference);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(u.geometry().area() / err);
}

}  // namespace tvdd
