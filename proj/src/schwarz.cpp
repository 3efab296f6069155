#include "tvdd/schwarz.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <string>
#include <thread>

#include "tvdd/errors.hpp"

namespace tvdd {

// ---- LocalPatch -----------------------------------------------------------

LocalPatch::LocalPatch(const GridGeometry& global, const CellRect& rect) : global_(global), rect_(rect) {
  if (rect.i1 <= rect.i0 || rect.j1 <= rect.j0 || rect.i1 > global.m1 || rect.j1 > global.m2) {
    throw ContractError("LocalPatch: rectangle is empty or outside the grid");
  }
  local_ = GridGeometry(rect.width(), rect.height(), global.h);
}

EdgeField LocalPatch::restrict_field(const EdgeField& global) const {
  require_same_geometry(global.geometry(), global_, "LocalPatch::restrict_field");
  EdgeField local(local_);
  for (std::size_t j = 0; j < local_.m2; ++j)
    for (std::size_t i = 0; i + 1 < local_.m1; ++i) local.x(i, j) = global.x(rect_.i0 + i, rect_.j0 + j);
  for (std::size_t j = 0; j + 1 < local_.m2; ++j)
    for (std::size_t i = 0; i < local_.m1; ++i) local.y(i, j) = global.y(rect_.i0 + i, rect_.j0 + j);
  return local;
}

CellField LocalPatch::restrict_cells(const CellField& global) const {
  require_same_geometry(global.geometry(), global_, "LocalPatch::restrict_cells");
  CellField local(local_);
  for (std::size_t j = 0; j < local_.m2; ++j)
    for (std::size_t i = 0; i < local_.m1; ++i) local(i, j) = global(rect_.i0 + i, rect_.j0 + j);
  return local;
}

EdgeField LocalPatch::extend_by_zero(const EdgeField& local) const {
  EdgeField global(global_);
  add_extended(global, local, 1.0);
  return global;
}

void LocalPatch::add_extended(EdgeField& global, const EdgeField& local, double scale) const {
  require_same_geometry(local.geometry(), local_, "LocalPatch::add_extended(local)");
  require_same_geometry(global.geometry(), global_, "LocalPatch::add_extended(global)");
  for (std::size_t j = 0; j < local_.m2; ++j)
    for (std::size_t i = 0; i + 1 < local_.m1; ++i) global.x(rect_.i0 + i, rect_.j0 + j) += scale * local.x(i, j);
  for (std::size_t j = 0; j + 1 < local_.m2; ++j)
    for (std::size_t i = 0; i < local_.m1; ++i) global.y(rect_.i0 + i, rect_.j0 + j) += scale * local.y(i, j);
}

// ---- Decomposition --------------------------------------------------------

std::size_t Decomposition::min_core_side() const {
  std::size_t h = std::numeric_limits<std::size_t>::max();
  for (const auto& s : subdomains_) h = std::min({h, s.core.width(), s.core.height()});
  return h;
}

namespace {

std::vector<std::size_t> block_starts(std::size_t cells, std::size_t blocks) {
  const std::size_t base = cells / blocks;
  std::vector<std::size_t> starts(blocks + 1);
  for (std::size_t b = 0; b < blocks; ++b) starts[b] = b * base;
  starts[blocks] = cells;
  return starts;
}

}  // namespace

Decomposition build_decomposition(const GridGeometry& geometry, std::size_t n1, std::size_t n2, std::size_t delta) {
  if (n1 < 1 || n2 < 1) throw ConfigError("decomposition: n1 and n2 must be >= 1");
  if (n1 > geometry.m1 || n2 > geometry.m2) {
    throw ConfigError("decomposition: " + std::to_string(n1) + "x" + std::to_string(n2) +
                      " subdomains do not fit a " + std::to_string(geometry.m1) + "x" +
                      std::to_string(geometry.m2) + " image");
  }
  if (delta < 1) throw ConfigError("decomposition: overlap delta must be >= 1");

  Decomposition d;
  d.geometry_ = geometry;
  d.n1_ = n1;
  d.n2_ = n2;
  d.overlap_ = delta;

  const auto xs = block_starts(geometry.m1, n1);
  const auto ys = block_starts(geometry.m2, n2);
  std::map<std::size_t, std::size_t> raw_colors;
  for (std::size_t b = 0; b < n2; ++b) {
    for (std::size_t a = 0; a < n1; ++a) {
      Subdomain s;
      s.block_i = a;
      s.block_j = b;
      s.core = {xs[a], ys[b], xs[a + 1], ys[b + 1]};
      s.enlarged = {s.core.i0 >= delta ? s.core.i0 - delta : 0, s.core.j0 >= delta ? s.core.j0 - delta : 0,
                    std::min(s.core.i1 + delta, geometry.m1), std::min(s.core.j1 + delta, geometry.m2)};
      s.color = (a % 2) + 2 * (b % 2);
      raw_colors.emplace(s.color, 0);
      d.subdomains_.push_back(s);
    }
  }

  // Compact the used checkerboard colours to 0..Nc-1.
  std::size_t next = 0;
  for (auto& [raw, compact] : raw_colors) compact = next++;
  d.color_classes_.assign(raw_colors.size(), {});
  for (std::size_t s = 0; s < d.subdomains_.size(); ++s) {
    auto& sub = d.subdomains_[s];
    sub.color = raw_colors.at(sub.color);
    d.color_classes_[sub.color].push_back(s);
  }

  if (d.size() > 1 && 2 * delta > d.min_core_side()) {
    throw ConfigError("decomposition: overlap too large, need 2*delta <= H (delta=" + std::to_string(delta) +
                      ", H=" + std::to_string(d.min_core_side()) + ")");
  }
  for (const auto& cls : d.color_classes_) {
    for (std::size_t a = 0; a < cls.size(); ++a) {
      for (std::size_t b = a + 1; b < cls.size(); ++b) {
        if (d.subdomains_[cls[a]].enlarged.intersects(d.subdomains_[cls[b]].enlarged)) {
          throw ConfigError("decomposition: same-colour subdomains " + std::to_string(cls[a]) + " and " +
                            std::to_string(cls[b]) + " overlap");
        }
      }
    }
  }
  return d;
}

// ---- local problem --------------------------------------------------------

LocalDualProblem::LocalDualProblem(const EnergyModel& model, const LocalPatch& patch, const EdgeField& q)
    : LocalDualProblem(model, patch, q, divergence(q), dual_energy(model, q)) {}

LocalDualProblem::LocalDualProblem(const EnergyModel& model, const LocalPatch& patch, const EdgeField& q,
                                   const CellField& div_q, double energy_q)
    : kind_(model.kind()), lambda_(model.lambda()), local_(patch.local_geometry()) {
  require_same_geometry(model.geometry(), q.geometry(), "LocalDualProblem");
  require_same_geometry(div_q.geometry(), q.geometry(), "LocalDualProblem(div_q)");
  if (!is_feasible(q)) throw ContractError("LocalDualProblem: current iterate is not in C");

  initial_ = patch.restrict_field(q);
  const CellField f_local = patch.restrict_cells(model.observed());

  // g_s = div q - div R^* R q; on the patch this is div q minus the local divergence of R q.
  shift_ = patch.restrict_cells(div_q);
  shift_ -= divergence(initial_);

  data_ = CellField(local_);
  if (kind_ == ModelKind::Rof) {
    auto dv = data_.values();
    const auto gv = shift_.values();
    const auto fv = f_local.values();
    for (std::size_t k = 0; k < dv.size(); ++k) dv[k] = gv[k] + lambda_ * fv[k];
  } else {
    // Outside the patch the reassembled divergence is div q, which enters K w on
    // the patch through the stencil neighbours just across the patch boundary.
    const auto& rect = patch.rect();
    const auto& g = model.geometry();
    const double inv_h2 = 1.0 / (g.h * g.h);
    halo_ = CellField(local_);
    for (std::size_t j = 0; j < local_.m2; ++j) {
      for (std::size_t i = 0; i < local_.m1; ++i) {
        const std::size_t gi = rect.i0 + i, gj = rect.j0 + j;
        double e = 0.0;
        if (i == 0 && gi > 0) e -= div_q(gi - 1, gj);
        if (i + 1 == local_.m1 && gi + 1 < g.m1) e -= div_q(gi + 1, gj);
        if (j == 0 && gj > 0) e -= div_q(gi, gj - 1);
        if (j + 1 == local_.m2 && gj + 1 < g.m2) e -= div_q(gi, gj + 1);
        halo_(i, j) = e * inv_h2;
      }
    }
    f_local_ = f_local;
    auto dv = data_.values();
    const auto ev = halo_.values();
    const auto fv = f_local.values();
    for (std::size_t k = 0; k < dv.size(); ++k) dv[k] = ev[k] + lambda_ * fv[k];
  }
  offset_ = energy_q - local_part(initial_);
}

double LocalDualProblem::local_part(const EdgeField& x) const {
  divergence_into(x, w_);
  auto wv = w_.values();
  if (kind_ == ModelKind::Rof) {
    const auto dv = data_.values();
    for (std::size_t k = 0; k < wv.size(); ++k) wv[k] += dv[k];
    return squared_norm(w_) / (2.0 * lambda_);
  }
  const auto sv = shift_.values();
  for (std::size_t k = 0; k < wv.size(); ++k) wv[k] += sv[k];
  apply_laplacian_into(w_, kw_);
  auto kv = kw_.values();
  const auto ev = halo_.values();
  for (std::size_t k = 0; k < kv.size(); ++k) kv[k] += 2.0 * ev[k];
  return inner_product(kw_, w_) / (2.0 * lambda_) + inner_product(f_local_, w_);
}

double LocalDualProblem::value(const EdgeField& x) const { return offset_ + local_part(x); }

void LocalDualProblem::gradient(const EdgeField& x, EdgeField& out) const {
  divergence_into(x, w_);
  if (kind_ == ModelKind::Rof) {
    auto wv = w_.values();
    const auto dv = data_.values();
    for (std::size_t k = 0; k < wv.size(); ++k) wv[k] += dv[k];
    divergence_adjoint_into(w_, out);
  } else {
    auto wv = w_.values();
    const auto sv = shift_.values();
    for (std::size_t k = 0; k < wv.size(); ++k) wv[k] += sv[k];
    apply_laplacian_into(w_, kw_);
    auto kv = kw_.values();
    const auto dv = data_.values();
    for (std::size_t k = 0; k < kv.size(); ++k) kv[k] += dv[k];
    divergence_adjoint_into(kw_, out);
  }
  out *= 1.0 / lambda_;
}

void LocalDualProblem::project(EdgeField& x) const { project_feasible_inplace(x); }

double LocalDualProblem::stop_measure(const EdgeField& next, const EdgeField& previous) const {
  difference_ = next;
  difference_ -= previous;
  divergence_into(difference_, w_);
  return squared_norm(w_) / local_.area();
}

bool LocalDualProblem::feasible(const EdgeField& x) const { return is_feasible(x); }

// ---- outer iteration ------------------------------------------------------

void SchwarzConfig::validate(const Decomposition& decomposition) const {
  const double nc = static_cast<double>(decomposition.color_count());
  if (!(tau > 0.0) || tau > 1.0 / nc) {
    throw ConfigError("schwarz: tau must lie in (0, 1/Nc] with Nc=" + std::to_string(decomposition.color_count()));
  }
  if (local.max_iterations < 1) throw ConfigError("schwarz: local max_iterations must be >= 1");
  if (!(local.tolerance >= 0.0)) throw ConfigError("schwarz: local tolerance must be >= 0");
  if (local.lipschitz < 0.0) throw ConfigError("schwarz: local Lipschitz constant must be >= 0");
  if (relative_gap_target < 0.0) throw ConfigError("schwarz: relative gap target must be >= 0");
}

namespace {

struct LocalOutcome {
  EdgeField correction;
  double div_sq = 0.0;
  std::size_t iterations = 0;
};

template <class Task>
void run_tasks(std::size_t count, std::size_t threads, Task&& task) {
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](std::size_t s) {
    try {
      task(s);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(threads, count);
  if (workers <= 1) {
    for (std::size_t s = 0; s < count; ++s) guarded(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t s = next.fetch_add(1); s < count; s = next.fetch_add(1)) guarded(s);
      });
    }
  }
  for (std::size_t s = 0; s < count; ++s) {
    if (!errors[s]) continue;
    try {
      std::rethrow_exception(errors[s]);
    } catch (const std::exception& e) {
      throw SolverError("local solve failed on subdomain " + std::to_string(s) + ": " + e.what());
    }
  }
}

}  // namespace

OuterStep outer_iteration(const EnergyModel& model, const Decomposition& decomposition, const EdgeField& p,
                          const SchwarzConfig& config, const std::vector<EdgeField>* warm_corrections) {
  config.validate(decomposition);
  require_same_geometry(model.geometry(), decomposition.geometry(), "outer_iteration(model)");
  require_same_geometry(p.geometry(), decomposition.geometry(), "outer_iteration(p)");
  if (!is_feasible(p)) throw ContractError("outer_iteration: iterate is not in C");

  FistaConfig local_config = config.local;
  if (local_config.lipschitz == 0.0) local_config.lipschitz = model.lipschitz();

  const CellField div_p = divergence(p);
  const double energy_p = dual_energy(model, p);
  const std::size_t count = decomposition.size();
  std::vector<LocalOutcome> outcomes(count);

  run_tasks(count, config.threads, [&](std::size_t s) {
    const LocalPatch patch = decomposition.patch(s);
    const LocalDualProblem problem(model, patch, p, div_p, energy_p);
    EdgeField start = problem.initial();
    if (warm_corrections && s < warm_corrections->size() &&
        (*warm_corrections)[s].geometry() == start.geometry()) {
      start += (*warm_corrections)[s];
    }
    FistaResult solved = fista_solve(problem, std::move(start), local_config);
    LocalOutcome& out = outcomes[s];
    out.correction = std::move(solved.x);
    out.correction -= problem.initial();
    out.div_sq = squared_norm(divergence(out.correction));
    out.iterations = solved.iterations;
  });

  OuterStep step;
  step.p_next = p;
  step.color_div_sq.assign(decomposition.color_count(), 0.0);
  step.local_iterations.resize(count);
  step.corrections.resize(count);
  for (std::size_t s = 0; s < count; ++s) {
    const LocalPatch patch = decomposition.patch(s);
    patch.add_extended(step.p_next, outcomes[s].correction, config.tau);
    // Same-colour patches share no cell, so the colour's div-norm is the sum of its patches'.
    step.color_div_sq[decomposition.subdomains()[s].color] += outcomes[s].div_sq;
    step.local_iterations[s] = outcomes[s].iterations;
    step.corrections[s] = std::move(outcomes[s].correction);
  }
  for (double v : step.color_div_sq) step.correction_div_sq += v;
  // p_next is a convex combination of points of C; the clamp only absorbs round-off at |p_e| = 1.
  project_feasible_inplace(step.p_next);
  return step;
}

SchwarzResult solve_schwarz(const EnergyModel& model, const Decomposition& decomposition, const SchwarzConfig& config,
                            const SchwarzSink& sink) {
  return solve_schwarz(model, decomposition, config, sink, EdgeField(model.geometry()));
}

SchwarzResult solve_schwarz(const EnergyModel& model, const Decomposition& decomposition, const SchwarzConfig& config,
                            const SchwarzSink& sink, EdgeField p0) {
  config.validate(decomposition);
  if (!is_feasible(p0)) throw ContractError("solve_schwarz: initial iterate is not in C");

  SchwarzResult result;
  result.p = std::move(p0);
  double energy = dual_energy(model, result.p);
  const double energy0 = energy;
  result.energies.push_back(energy);
  const double beta = model.smoothness();

  std::vector<EdgeField> corrections;
  using clock = std::chrono::steady_clock;
  for (std::size_t n = 0; n < config.outer_iterations; ++n) {
    const auto start = clock::now();
    OuterStep step = outer_iteration(model, decomposition, result.p, config,
                                     config.warm_start && !corrections.empty() ? &corrections : nullptr);
    const double next_energy = dual_energy(model, step.p_next);
    const double seconds = std::chrono::duration<double>(clock::now() - start).count();
    if (!std::isfinite(next_energy)) throw SolverError("schwarz: non-finite energy at outer iteration " + std::to_string(n + 1));

    SchwarzStepInfo info;
    info.iteration = n + 1;
    info.energy = next_energy;
    info.decrease_lhs = energy - next_energy;
    info.decrease_rhs = config.tau / (2.0 * beta) * step.correction_div_sq;
    info.wall_seconds = seconds;
    info.max_local_iterations = *std::max_element(step.local_iterations.begin(), step.local_iterations.end());

    result.p = std::move(step.p_next);
    if (config.warm_start) corrections = std::move(step.corrections);
    energy = next_energy;
    result.energies.push_back(energy);
    result.iterations = n + 1;
    if (sink) sink(info, result.p);

    if (config.reference_energy && config.relative_gap_target > 0.0) {
      const double gap0 = energy0 - *config.reference_energy;
      if (gap0 > 0.0 && (energy - *config.reference_energy) / gap0 <= config.relative_gap_target) break;
    }
  }
  return result;
}

}  // namespace tvdd
