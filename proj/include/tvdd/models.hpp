#pragma once

// Dual total-variation objectives  F(p) = F*(div p)  over the box C = {|p_e| <= 1}.
//
//   ROF:     F(p) = 1/(2 lambda) ||div p + lambda f||^2
//   TV-H^-1: F(p) = 1/(2 lambda) <K div p, div p> + <f, div p>
//
// K is the 5-point Dirichlet Laplacian on the cell grid. Primal images are
// recovered as u = f + div p / lambda (ROF) and u = f + K div p / lambda (TV-H^-1).

#include <string_view>

#include "tvdd/grid.hpp"

namespace tvdd {

enum class ModelKind { Rof, TvH1 };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

class EnergyModel {
 public:
  EnergyModel(ModelKind kind, double lambda, CellField observed);

  [[nodiscard]] ModelKind kind() const { return kind_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] const CellField& observed() const { return f_; }
  [[nodiscard]] const GridGeometry& geometry() const { return f_.geometry(); }

  /// Lipschitz constant of the dual gradient from the inverse inequality:
  /// 8/(lambda h^2) for ROF, 64/(lambda h^4) for TV-H^-1 (Gershgorin bound on K).
  [[nodiscard]] double lipschitz() const;

  /// beta such that F' is beta-Lipschitz; F* is then (1/beta)-strongly convex.
  /// lambda for ROF, lambda / lambda_min(K) for TV-H^-1.
  [[nodiscard]] double smoothness() const;

  /// Constant of the primal-dual identity P(u*) = C - F(p*): (lambda/2)||f||^2 for ROF, 0 otherwise.
  [[nodiscard]] double dual_constant() const;

 private:
  ModelKind kind_;
  double lambda_;
  CellField f_;
};

// (Ku)_ij = (4u_ij - sum of the four neighbours) / h^2, out-of-range neighbours are zero.
CellField apply_laplacian(const CellField& u);
void apply_laplacian_into(const CellField& u, CellField& out);

/// Smallest eigenvalue of the Dirichlet 5-point Laplacian on the geometry (closed form).
double laplacian_min_eigenvalue(const GridGeometry& geometry);

/// Solves K v = rhs by conjugate gradients to the given relative residual.
CellField solve_laplacian(const CellField& rhs, double relative_tolerance = 1e-12);

double dual_energy(const EnergyModel& model, const EdgeField& p);
EdgeField dual_gradient(const EnergyModel& model, const EdgeField& p);
void dual_gradient_into(const EnergyModel& model, const EdgeField& p, EdgeField& out, CellField& scratch);

/// Pointwise clamp of every DOF to [-1, 1]; the Y_h-nearest point of C.
EdgeField project_feasible(EdgeField p);
void project_feasible_inplace(EdgeField& p);
bool is_feasible(const EdgeField& p);

/// D(p, q) = F(p) - F(q) - <F'(q), p - q>.
double bregman_distance(const EnergyModel& model, const EdgeField& p, const EdgeField& q);

CellField recover_primal(const EnergyModel& model, const EdgeField& p);

/// Anisotropic discrete TV: h * sum over interior edges of |jump|. Equals sup_{p in C} <u, div p>.
double total_variation(const CellField& u);

/// F(u) + TV(u) with F(u) = (lambda/2)||u - f||^2 or (lambda/2)||u - f||^2_{K^-1}.
double primal_energy(const EnergyModel& model, const CellField& u);

/// primal_energy(recover_primal(p)) + dual_energy(p) - dual_constant(); >= 0 for feasible p.
double duality_gap(const EnergyModel& model, const EdgeField& p);

}  // namespace tvdd
