#pragma once

// Projected FISTA for box-constrained smooth dual problems. The same solver
// drives the global dual (baseline and reference minimum) and the local
// subdomain problems of the Schwarz method.

#include <cstddef>
#include <functional>
#include <vector>

#include "tvdd/grid.hpp"
#include "tvdd/models.hpp"

namespace tvdd {

struct FistaConfig {
  double lipschitz = 0.0;            // step is 1/lipschitz
  std::size_t max_iterations = 1000;
  double tolerance = 1e-18;          // on the problem's stop measure
  std::size_t log_every = 0;         // 0: no trace, no periodic feasibility check

  void validate() const;
};

/// Objective adapter: value, gradient, projection onto the feasible set, and
/// the stop measure between two consecutive iterates.
class SmoothProblem {
 public:
  virtual ~SmoothProblem() = default;
  [[nodiscard]] virtual double value(const EdgeField& x) const = 0;
  virtual void gradient(const EdgeField& x, EdgeField& out) const = 0;
  virtual void project(EdgeField& x) const = 0;
  [[nodiscard]] virtual double stop_measure(const EdgeField& next, const EdgeField& previous) const = 0;
  [[nodiscard]] virtual bool feasible(const EdgeField& x) const = 0;
};

/// The dual problem of a model on its whole domain. Stop measure is
/// ||div(x_next - x_prev)||^2 / |Omega|.
class GlobalDualProblem final : public SmoothProblem {
 public:
  explicit GlobalDualProblem(const EnergyModel& model) : model_(model) {}

  [[nodiscard]] double value(const EdgeField& x) const override;
  void gradient(const EdgeField& x, EdgeField& out) const override;
  void project(EdgeField& x) const override;
  [[nodiscard]] double stop_measure(const EdgeField& next, const EdgeField& previous) const override;
  [[nodiscard]] bool feasible(const EdgeField& x) const override;

 private:
  const EnergyModel& model_;
  mutable CellField scratch_;
  mutable EdgeField difference_;
};

struct FistaResult {
  EdgeField x;
  std::size_t iterations = 0;
  bool converged = false;     // stop measure reached the tolerance
  std::vector<double> trace;  // value(x0), then every log_every iterations, then the final value
};

using FistaObserver = std::function<void(std::size_t iteration, const EdgeField& x)>;

/// t0 = 1, y0 = x0; x_{k+1} = P(y_k - grad(y_k)/L); no restarts, no line search.
/// The observer (if set) sees x every log_every iterations.
FistaResult fista_solve(const SmoothProblem& problem, EdgeField x0, const FistaConfig& config,
                        const FistaObserver& observer = {});

struct ReferenceSolution {
  EdgeField p;
  double energy = 0.0;
  std::size_t iterations = 0;
};

/// Long global FISTA run from x0 (zero if omitted) with the model's Lipschitz
/// constant and no early stop other than an exactly stationary iterate.
ReferenceSolution reference_minimum(const EnergyModel& model, std::size_t iterations);
ReferenceSolution reference_minimum(const EnergyModel& model, std::size_t iterations, EdgeField x0);

}  // namespace tvdd
