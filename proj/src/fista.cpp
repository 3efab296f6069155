#include "tvdd/fista.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "tvdd/errors.hpp"

namespace tvdd {

void FistaConfig::validate() const {
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) throw ConfigError("FISTA: Lipschitz constant must be > 0");
  if (max_iterations < 1) throw ConfigError("FISTA: max_iterations must be >= 1");
  if (!(tolerance >= 0.0)) throw ConfigError("FISTA: tolerance must be >= 0");
}

double GlobalDualProblem::value(const EdgeField& x) const { return dual_energy(model_, x); }

void GlobalDualProblem::gradient(const EdgeField& x, EdgeField& out) const {
  dual_gradient_into(model_, x, out, scratch_);
}

void GlobalDualProblem::project(EdgeField& x) const { project_feasible_inplace(x); }

double GlobalDualProblem::stop_measure(const EdgeField& next, const EdgeField& previous) const {
  difference_ = next;
  difference_ -= previous;
  divergence_into(difference_, scratch_);
  return squared_norm(scratch_) / next.geometry().area();
}

bool GlobalDualProblem::feasible(const EdgeField& x) const { return is_feasible(x); }

FistaResult fista_solve(const SmoothProblem& problem, EdgeField x0, const FistaConfig& config,
                        const FistaObserver& observer) {
  config.validate();
  problem.project(x0);

  FistaResult result;
  const bool logging = config.log_every > 0;
  if (logging) result.trace.push_back(problem.value(x0));
  if (observer) observer(0, x0);

  const double step = 1.0 / config.lipschitz;
  EdgeField x = x0;
  EdgeField x_prev = std::move(x0);
  EdgeField y = x;
  EdgeField grad(y.geometry());
  double t = 1.0;

  std::size_t k = 0;
  while (k < config.max_iterations) {
    problem.gradient(y, grad);
    {
      auto xx = x.x_values();
      auto xy = x.y_values();
      const auto yx = y.x_values();
      const auto yy = y.y_values();
      const auto gx = grad.x_values();
      const auto gy = grad.y_values();
      for (std::size_t e = 0; e < xx.size(); ++e) xx[e] = yx[e] - step * gx[e];
      for (std::size_t e = 0; e < xy.size(); ++e) xy[e] = yy[e] - step * gy[e];
    }
    problem.project(x);
    ++k;

    const double measure = problem.stop_measure(x, x_prev);
    if (!std::isfinite(measure)) {
      throw SolverError("FISTA: non-finite iterate at iteration " + std::to_string(k) +
                        " (stop measure " + std::to_string(measure) + ")");
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / t_next;
    {
      auto yx = y.x_values();
      auto yy = y.y_values();
      const auto xx = x.x_values();
      const auto xy = x.y_values();
      const auto px = x_prev.x_values();
      const auto py = x_prev.y_values();
      for (std::size_t e = 0; e < yx.size(); ++e) yx[e] = xx[e] + momentum * (xx[e] - px[e]);
      for (std::size_t e = 0; e < yy.size(); ++e) yy[e] = xy[e] + momentum * (xy[e] - py[e]);
    }
    t = t_next;
    std::swap(x_prev, x);  // x_prev now holds the newest iterate

    const bool done = measure <= config.tolerance;
    if (logging && (k % config.log_every == 0 || done || k == config.max_iterations)) {
      if (!problem.feasible(x_prev)) throw SolverError("FISTA: infeasible iterate at iteration " + std::to_string(k));
      result.trace.push_back(problem.value(x_prev));
      if (observer) observer(k, x_prev);
    }
    if (done) {
      result.converged = true;
      break;
    }
  }

  result.x = std::move(x_prev);
  result.iterations = k;
  return result;
}

ReferenceSolution reference_minimum(const EnergyModel& model, std::size_t iterations) {
  return reference_minimum(model, iterations, EdgeField(model.geometry()));
}

ReferenceSolution reference_minimum(const EnergyModel& model, std::size_t iterations, EdgeField x0) {
  GlobalDualProblem problem(model);
  FistaConfig config;
  config.lipschitz = model.lipschitz();
  config.max_iterations = iterations;
  config.tolerance = 0.0;
  FistaResult r = fista_solve(problem, std::move(x0), config);
  ReferenceSolution out;
  out.energy = dual_energy(model, r.x);
  out.iterations = r.iterations;
  out.p = std::move(r.x);
  return out;
}

}  // namespace tvdd
