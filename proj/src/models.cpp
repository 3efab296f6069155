#include "tvdd/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tvdd/errors.hpp"

namespace tvdd {

ModelKind parse_model_kind(std::string_view name) {
  if (name == "rof" || name == "ROF") return ModelKind::Rof;
  if (name == "tvh1" || name == "tv-h1" || name == "TVH1") return ModelKind::TvH1;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected rof or tvh1)");
}

std::string_view to_string(ModelKind kind) { return kind == ModelKind::Rof ? "rof" : "tvh1"; }

EnergyModel::EnergyModel(ModelKind kind, double lambda, CellField observed)
    : kind_(kind), lambda_(lambda), f_(std::move(observed)) {
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw ContractError("EnergyModel: lambda must be positive");
  if (!f_.all_finite()) throw ContractError("EnergyModel: observed image has non-finite values");
}

double EnergyModel::lipschitz() const {
  const double h2 = geometry().h * geometry().h;
  return kind_ == ModelKind::Rof ? 8.0 / (lambda_ * h2) : 64.0 / (lambda_ * h2 * h2);
}

double EnergyModel::smoothness() const {
  return kind_ == ModelKind::Rof ? lambda_ : lambda_ / laplacian_min_eigenvalue(geometry());
}

double EnergyModel::dual_constant() const {
  return kind_ == ModelKind::Rof ? 0.5 * lambda_ * squared_norm(f_) : 0.0;
}

// ---- Laplacian ------------------------------------------------------------

void apply_laplacian_into(const CellField& u, CellField& out) {
  const auto& g = u.geometry();
  if (!(out.geometry() == g)) out = CellField(g);
  const std::size_t m1 = g.m1, m2 = g.m2;
  const double inv_h2 = 1.0 / (g.h * g.h);
  const auto v = u.values();
  auto o = out.values();
  for (std::size_t j = 0; j < m2; ++j) {
    const double* row = v.data() + j * m1;
    const double* down = j > 0 ? row - m1 : nullptr;
    const double* up = j + 1 < m2 ? row + m1 : nullptr;
    double* orow = o.data() + j * m1;
    for (std::size_t i = 0; i < m1; ++i) {
      double s = 4.0 * row[i];
      if (i > 0) s -= row[i - 1];
      if (i + 1 < m1) s -= row[i + 1];
      if (down) s -= down[i];
      if (up) s -= up[i];
      orow[i] = s * inv_h2;
    }
  }
}

CellField apply_laplacian(const CellField& u) {
  CellField out(u.geometry());
  apply_laplacian_into(u, out);
  return out;
}

double laplacian_min_eigenvalue(const GridGeometry& g) {
  const double s1 = std::sin(std::numbers::pi / (2.0 * static_cast<double>(g.m1 + 1)));
  const double s2 = std::sin(std::numbers::pi / (2.0 * static_cast<double>(g.m2 + 1)));
  return 4.0 / (g.h * g.h) * (s1 * s1 + s2 * s2);
}

CellField solve_laplacian(const CellField& rhs, double relative_tolerance) {
  const auto& g = rhs.geometry();
  CellField x(g);
  CellField r = rhs;
  const double b_norm = norm(rhs);
  if (b_norm == 0.0) return x;
  CellField d = r;
  CellField kd(g);
  double rr = squared_norm(r);
  // K is SPD with condition number O(m^2); CG needs O(m) iterations.
  const std::size_t max_iterations = 20 * (g.m1 + g.m2) + 200;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    if (std::sqrt(rr) <= relative_tolerance * b_norm) return x;
    apply_laplacian_into(d, kd);
    const double alpha = rr / inner_product(d, kd);
    auto xv = x.values();
    auto rv = r.values();
    const auto dv = d.values();
    const auto kv = kd.values();
    for (std::size_t k = 0; k < xv.size(); ++k) {
      xv[k] += alpha * dv[k];
      rv[k] -= alpha * kv[k];
    }
    const double rr_next = squared_norm(r);
    const double beta = rr_next / rr;
    rr = rr_next;
    auto dw = d.values();
    for (std::size_t k = 0; k < dw.size(); ++k) dw[k] = rv[k] + beta * dw[k];
  }
  if (std::sqrt(rr) > 1e3 * relative_tolerance * b_norm) {
    throw SolverError("solve_laplacian: conjugate gradients did not converge");
  }
  return x;
}

// ---- dual objective -------------------------------------------------------

double dual_energy(const EnergyModel& model, const EdgeField& p) {
  require_same_geometry(model.geometry(), p.geometry(), "dual_energy");
  const double lambda = model.lambda();
  CellField w = divergence(p);
  if (model.kind() == ModelKind::Rof) {
    auto wv = w.values();
    const auto f = model.observed().values();
    for (std::size_t k = 0; k < wv.size(); ++k) wv[k] += lambda * f[k];
    return squared_norm(w) / (2.0 * lambda);
  }
  const CellField kw = apply_laplacian(w);
  return inner_product(kw, w) / (2.0 * lambda) + inner_product(model.observed(), w);
}

void dual_gradient_into(const EnergyModel& model, const EdgeField& p, EdgeField& out, CellField& scratch) {
  require_same_geometry(model.geometry(), p.geometry(), "dual_gradient");
  const double lambda = model.lambda();
  divergence_into(p, scratch);
  const auto f = model.observed().values();
  if (model.kind() == ModelKind::TvH1) {
    CellField kw(p.geometry());
    apply_laplacian_into(scratch, kw);
    scratch = std::move(kw);
  }
  auto wv = scratch.values();
  for (std::size_t k = 0; k < wv.size(); ++k) wv[k] += lambda * f[k];
  divergence_adjoint_into(scratch, out);
  out *= 1.0 / lambda;
}

EdgeField dual_gradient(const EnergyModel& model, const EdgeField& p) {
  EdgeField out(p.geometry());
  CellField scratch(p.geometry());
  dual_gradient_into(model, p, out, scratch);
  return out;
}

void project_feasible_inplace(EdgeField& p) {
  for (double& v : p.x_values()) v = std::clamp(v, -1.0, 1.0);
  for (double& v : p.y_values()) v = std::clamp(v, -1.0, 1.0);
}

EdgeField project_feasible(EdgeField p) {
  project_feasible_inplace(p);
  return p;
}

bool is_feasible(const EdgeField& p) {
  auto ok = [](double v) { return v >= -1.0 && v <= 1.0; };
  return std::all_of(p.x_values().begin(), p.x_values().end(), ok) &&
         std::all_of(p.y_values().begin(), p.y_values().end(), ok);
}

double bregman_distance(const EnergyModel& model, const EdgeField& p, const EdgeField& q) {
  require_same_geometry(p.geometry(), q.geometry(), "bregman_distance");
  return dual_energy(model, p) - dual_energy(model, q) - inner_product(dual_gradient(model, q), p - q);
}

CellField recover_primal(const EnergyModel& model, const EdgeField& p) {
  require_same_geometry(model.geometry(), p.geometry(), "recover_primal");
  CellField w = divergence(p);
  if (model.kind() == ModelKind::TvH1) w = apply_laplacian(w);
  w *= 1.0 / model.lambda();
  return model.observed() + w;
}

double total_variation(const CellField& u) {
  const auto& g = u.geometry();
  double s = 0.0;
  for (std::size_t j = 0; j < g.m2; ++j)
    for (std::size_t i = 0; i + 1 < g.m1; ++i) s += std::abs(u(i, j) - u(i + 1, j));
  for (std::size_t j = 0; j + 1 < g.m2; ++j)
    for (std::size_t i = 0; i < g.m1; ++i) s += std::abs(u(i, j) - u(i, j + 1));
  return g.h * s;
}

double primal_energy(const EnergyModel& model, const CellField& u) {
  require_same_geometry(model.geometry(), u.geometry(), "primal_energy");
  if (!u.all_finite()) throw SolverError("primal_energy: non-finite image");
  const CellField residual = u - model.observed();
  double fidelity = 0.0;
  if (model.kind() == ModelKind::Rof) {
    fidelity = 0.5 * model.lambda() * squared_norm(residual);
  } else {
    const CellField v = solve_laplacian(residual, 1e-12);
    fidelity = 0.5 * model.lambda() * inner_product(v, residual);
  }
  return fidelity + total_variation(u);
}

double duality_gap(const EnergyModel& model, const EdgeField& p) {
  const double gap = primal_energy(model, recover_primal(model, p)) + dual_energy(model, p) - model.dual_constant();
  if (!std::isfinite(gap)) throw SolverError("duality_gap: non-finite value");
  return gap;
}

}  // namespace tvdd
