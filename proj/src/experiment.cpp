#include "tvdd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tvdd/errors.hpp"
#include "tvdd/fista.hpp"
#include "tvdd/image_io.hpp"
#include "tvdd/schwarz.hpp"

namespace tvdd {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RecordMaker {
  const EnergyModel& model;
  const CellField* clean;
  double reference_energy;
  double gap0 = 0.0;

  ConvergenceRecord operator()(std::size_t n, const EdgeField& p, double energy) {
    ConvergenceRecord r;
    r.iteration = n;
    r.energy = energy;
    r.gap = energy - reference_energy;
    if (n == 0) gap0 = r.gap;
    r.relative_gap = gap0 > 0.0 ? r.gap / gap0 : 0.0;
    r.duality_gap = duality_gap(model, p);
    if (clean) r.psnr = psnr(recover_primal(model, p), *clean);
    return r;
  }
};

std::vector<std::string> csv_comments(const RunConfig& c, double reference_energy) {
  std::vector<std::string> out;
  out.push_back("seed=" + std::to_string(c.seed) + " noise_variance=" + fmt17(c.noise_variance));
  out.push_back("image=" + (c.image_path.empty() ? "synthetic:" + c.synthetic : c.image_path));
  out.push_back("model=" + std::string(to_string(c.model)) + " lambda=" + fmt17(c.lambda));
  if (c.solver == SolverKind::Schwarz) {
    out.push_back("solver=schwarz n1=" + std::to_string(c.n1) + " n2=" + std::to_string(c.n2) +
                  " delta=" + std::to_string(c.delta) + " tau=" + fmt17(c.tau) +
                  " local_max_iterations=" + std::to_string(c.local_max_iterations) +
                  " local_tolerance=" + fmt17(c.local_tolerance) + (c.warm_start ? " warm_start" : ""));
  } else {
    out.push_back("solver=fista iterations=" + std::to_string(c.fista_iterations));
  }
  out.push_back("reference_iterations=" + std::to_string(c.reference_iterations) +
                " reference_energy=" + fmt17(reference_energy));
  return out;
}

EnergyModel make_model(const RunConfig& config, const Problem& problem) {
  return EnergyModel(config.model, config.lambda, problem.noisy);
}

// Rejects a bad decomposition or step size before the reference solve is paid for.
void check_schwarz_setup(const RunConfig& config, const GridGeometry& geometry) {
  if (config.solver != SolverKind::Schwarz) return;
  SchwarzConfig sc;
  sc.tau = config.tau;
  sc.validate(build_decomposition(geometry, config.n1, config.n2, config.delta));
}

}  // namespace

SolverKind parse_solver_kind(std::string_view name) {
  if (name == "fista") return SolverKind::Fista;
  if (name == "schwarz") return SolverKind::Schwarz;
  throw ConfigError("unknown solver '" + std::string(name) + "' (expected fista or schwarz)");
}

std::string_view to_string(SolverKind kind) { return kind == SolverKind::Fista ? "fista" : "schwarz"; }

void RunConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be > 0");
  if (image_path.empty() && (width < 1 || height < 1)) throw ConfigError("synthetic image size must be >= 1");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) throw ConfigError("noise variance must be >= 0");
  if (!(tau > 0.0) || tau > 1.0) throw ConfigError("tau must lie in (0, 1]");
  if (n1 < 1 || n2 < 1) throw ConfigError("n1, n2 must be >= 1");
  if (delta < 1) throw ConfigError("delta must be >= 1");
  if (local_max_iterations < 1) throw ConfigError("local max iterations must be >= 1");
  if (!(local_tolerance >= 0.0)) throw ConfigError("local tolerance must be >= 0");
  if (fista_iterations < 1) throw ConfigError("fista iterations must be >= 1");
  if (fista_log_every < 1) throw ConfigError("fista log interval must be >= 1");
  if (reference_iterations < 1) throw ConfigError("reference iterations must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

Problem prepare_problem(const RunConfig& config) {
  config.validate();
  Problem problem;
  if (config.image_path.empty()) {
    problem.clean = synthetic_image(config.synthetic, config.width, config.height);
  } else {
    GrayImage img = load_pgm(config.image_path);
    problem.clean = std::move(img.pixels);
    problem.max_value = img.max_value;
  }
  problem.noisy = add_gaussian_noise(problem.clean, config.noise_variance, config.seed);
  return problem;
}

DenoiseResult solve_problem(const RunConfig& config, const Problem& problem, double reference_energy) {
  config.validate();
  const EnergyModel model = make_model(config, problem);
  RecordMaker make{model, &problem.clean, reference_energy};

  DenoiseResult result;
  const EdgeField p0(model.geometry());
  result.records.push_back(make(0, p0, dual_energy(model, p0)));

  if (config.solver == SolverKind::Schwarz) {
    const Decomposition decomposition = build_decomposition(model.geometry(), config.n1, config.n2, config.delta);
    SchwarzConfig sc;
    sc.tau = config.tau;
    sc.outer_iterations = config.outer_iterations;
    sc.local.max_iterations = config.local_max_iterations;
    sc.local.tolerance = config.local_tolerance;
    sc.warm_start = config.warm_start;
    sc.threads = config.threads;
    SchwarzResult solved = solve_schwarz(model, decomposition, sc, [&](const SchwarzStepInfo& info, const EdgeField& p) {
      ConvergenceRecord r = make(info.iteration, p, info.energy);
      r.decrease_lhs = info.decrease_lhs;
      r.decrease_rhs = info.decrease_rhs;
      r.wall_seconds = config.record_wall_time ? info.wall_seconds : 0.0;
      result.records.push_back(r);
    });
    result.p = std::move(solved.p);
    result.iterations = solved.iterations;
  } else {
    GlobalDualProblem global(model);
    FistaConfig fc;
    fc.lipschitz = model.lipschitz();
    fc.max_iterations = config.fista_iterations;
    fc.tolerance = 0.0;
    fc.log_every = config.fista_log_every;
    using clock = std::chrono::steady_clock;
    auto last = clock::now();
    FistaResult solved = fista_solve(global, p0, fc, [&](std::size_t k, const EdgeField& x) {
      if (k == 0) return;
      const double energy = dual_energy(model, x);
      ConvergenceRecord r = make(k, x, energy);
      r.decrease_lhs = result.records.back().energy - energy;
      const auto now = clock::now();
      r.wall_seconds = config.record_wall_time ? std::chrono::duration<double>(now - last).count() : 0.0;
      last = now;
      result.records.push_back(r);
    });
    result.p = std::move(solved.x);
    result.iterations = solved.iterations;
  }

  result.reference_energy = reference_energy;
  result.final_energy = dual_energy(model, result.p);
  result.restored = recover_primal(model, result.p);
  result.initial_duality_gap = result.records.front().duality_gap;
  result.final_duality_gap = duality_gap(model, result.p);
  result.psnr_noisy = psnr(problem.noisy, problem.clean);
  result.psnr_restored = psnr(result.restored, problem.clean);

  std::ostringstream s;
  s << "model: " << to_string(config.model) << "\nlambda: " << fmt17(config.lambda)
    << "\nimage: " << model.geometry().m1 << "x" << model.geometry().m2 << "\nseed: " << config.seed
    << "\nsolver: " << to_string(config.solver);
  if (config.solver == SolverKind::Schwarz) {
    s << "\nsubdomains: " << config.n1 << "x" << config.n2 << "\ndelta: " << config.delta
      << "\ntau: " << fmt17(config.tau);
  }
  s << "\niterations: " << result.iterations << "\nreference_energy: " << fmt17(reference_energy)
    << "\nfinal_energy: " << fmt17(result.final_energy)
    << "\nfinal_relative_gap: " << fmt17(result.records.back().relative_gap)
    << "\ninitial_duality_gap: " << fmt17(result.initial_duality_gap)
    << "\nfinal_duality_gap: " << fmt17(result.final_duality_gap) << "\npsnr_noisy_db: " << fmt17(result.psnr_noisy)
    << "\npsnr_restored_db: " << fmt17(result.psnr_restored) << '\n';
  result.summary = s.str();
  return result;
}

DenoiseResult run_denoise(const RunConfig& config) {
  const Problem problem = prepare_problem(config);
  check_schwarz_setup(config, problem.noisy.geometry());
  const EnergyModel model = make_model(config, problem);
  const double reference = reference_minimum(model, config.reference_iterations).energy;
  DenoiseResult result = solve_problem(config, problem, reference);

  if (!config.output_image.empty()) save_pgm(result.restored, config.output_image, problem.max_value);
  if (!config.csv_path.empty()) {
    write_text(config.csv_path, format_csv(result.records, csv_comments(config, reference)));
  }
  if (!config.summary_path.empty()) write_text(config.summary_path, result.summary);
  return result;
}

std::string format_csv(std::span<const ConvergenceRecord> records, std::span<const std::string> comments) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "iter,energy,gap,rel_gap,duality_gap,decrease_lhs,decrease_rhs,wall_s,psnr\n";
  for (const auto& r : records) {
    out += std::to_string(r.iteration);
    for (double v : {r.energy, r.gap, r.relative_gap, r.duality_gap, r.decrease_lhs, r.decrease_rhs, r.wall_seconds,
                     r.psnr.value_or(std::nan(""))}) {
      out += ',';
      out += fmt17(v);
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write '" + path.string() + "'");
  file.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!file) throw IoError("write failed for '" + path.string() + "'");
}

// ---- sweeps ---------------------------------------------------------------

namespace {

double side_length(const GridGeometry& g) { return std::sqrt(g.area()) / g.h; }

void finish_sweep(SweepResult& sweep, bool delta_ordering, const std::string& title,
                  const std::filesystem::path& out_dir) {
  double gmin = 0.0, gmax = 0.0;
  bool any = false;
  for (const auto& pt : sweep.points) {
    if (!pt.fit.valid) continue;
    gmin = any ? std::min(gmin, pt.fit.gamma) : pt.fit.gamma;
    gmax = any ? std::max(gmax, pt.fit.gamma) : pt.fit.gamma;
    any = true;
  }
  sweep.gamma_spread = any && gmax > 0.0 ? (gmax - gmin) / gmax : 0.0;
  if (delta_ordering) {
    for (std::size_t k = 1; k < sweep.points.size(); ++k) {
      const auto& a = sweep.points[k - 1].fit;
      const auto& b = sweep.points[k].fit;
      if (a.valid && b.valid && b.threshold > 1.1 * a.threshold) sweep.threshold_nonincreasing = false;
    }
  }

  std::ostringstream s;
  s << title << "\nreference_energy: " << fmt17(sweep.reference_energy) << "\n\n";
  s << "point      n1 n2 delta  d/delta   gamma       threshold    r2      window    final_rel_gap\n";
  for (const auto& pt : sweep.points) {
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %2zu %2zu %5zu %8.3g  %-10.6g  %-11.4g  %-6.4f  %3zu-%-4zu  %.4g\n",
                  pt.label.c_str(), pt.n1, pt.n2, pt.delta, pt.d_over_delta, pt.fit.gamma, pt.fit.threshold,
                  pt.fit.r_squared, pt.fit.window_start, pt.fit.window_end, pt.final_relative_gap);
    s << line;
  }
  s << "\ngamma_spread: " << fmt17(sweep.gamma_spread) << '\n';
  if (delta_ordering) s << "threshold_nonincreasing_in_delta: " << (sweep.threshold_nonincreasing ? "yes" : "no") << '\n';
  sweep.summary = s.str();
  if (!out_dir.empty()) write_text(out_dir / "summary.txt", sweep.summary);
}

SweepPoint run_point(const RunConfig& config, const Problem& problem, double reference, std::string label,
                     const std::filesystem::path& out_dir, const std::string& file_stem) {
  DenoiseResult r = solve_problem(config, problem, reference);
  SweepPoint pt;
  pt.label = std::move(label);
  pt.n1 = config.n1;
  pt.n2 = config.n2;
  pt.delta = config.delta;
  pt.d_over_delta = side_length(problem.noisy.geometry()) / static_cast<double>(config.delta);
  pt.fit = fit_pseudo_linear(std::span<const ConvergenceRecord>(r.records));
  pt.final_relative_gap = r.records.back().relative_gap;
  if (!out_dir.empty()) {
    pt.csv_path = out_dir / (file_stem + ".csv");
    write_text(pt.csv_path, format_csv(r.records, csv_comments(config, reference)));
  }
  pt.records = std::move(r.records);
  return pt;
}

}  // namespace

SweepResult run_delta_sweep(const RunConfig& base, std::span<const std::size_t> deltas,
                            const std::filesystem::path& out_dir) {
  SweepResult sweep;
  if (deltas.empty()) return sweep;
  RunConfig config = base;
  config.solver = SolverKind::Schwarz;
  const Problem problem = prepare_problem(config);
  for (std::size_t delta : deltas) {
    config.delta = delta;
    check_schwarz_setup(config, problem.noisy.geometry());
  }
  sweep.reference_energy = reference_minimum(make_model(config, problem), config.reference_iterations).energy;
  for (std::size_t delta : deltas) {
    config.delta = delta;
    sweep.points.push_back(run_point(config, problem, sweep.reference_energy, "delta=" + std::to_string(delta),
                                     out_dir, "delta_" + std::to_string(delta)));
  }
  finish_sweep(sweep, true, "overlap sweep", out_dir);
  return sweep;
}

SweepResult run_domain_sweep(const RunConfig& base, std::span<const std::pair<std::size_t, std::size_t>> domains,
                             std::optional<double> d_over_delta, const std::filesystem::path& out_dir) {
  SweepResult sweep;
  if (domains.empty()) return sweep;
  RunConfig config = base;
  config.solver = SolverKind::Schwarz;
  const Problem problem = prepare_problem(config);
  if (d_over_delta) {
    if (!(*d_over_delta > 0.0)) throw ConfigError("d/delta must be > 0");
    config.delta = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(side_length(problem.noisy.geometry()) / *d_over_delta)));
  }
  for (const auto& [n1, n2] : domains) {
    config.n1 = n1;
    config.n2 = n2;
    check_schwarz_setup(config, problem.noisy.geometry());
  }
  sweep.reference_energy = reference_minimum(make_model(config, problem), config.reference_iterations).energy;
  for (const auto& [n1, n2] : domains) {
    config.n1 = n1;
    config.n2 = n2;
    const std::string tag = std::to_string(n1) + "x" + std::to_string(n2);
    sweep.points.push_back(run_point(config, problem, sweep.reference_energy, tag, out_dir, "domains_" + tag));
  }
  finish_sweep(sweep, false, "subdomain-count sweep", out_dir);
  return sweep;
}

CompareResult run_compare(const RunConfig& config) {
  const Problem problem = prepare_problem(config);
  RunConfig schwarz_check = config;
  schwarz_check.solver = SolverKind::Schwarz;
  check_schwarz_setup(schwarz_check, problem.noisy.geometry());
  const EnergyModel model = make_model(config, problem);
  CompareResult out;
  out.reference_energy = reference_minimum(model, config.reference_iterations).energy;

  RunConfig schwarz = config;
  schwarz.solver = SolverKind::Schwarz;
  RunConfig fista = config;
  fista.solver = SolverKind::Fista;
  const DenoiseResult rs = solve_problem(schwarz, problem, out.reference_energy);
  const DenoiseResult rf = solve_problem(fista, problem, out.reference_energy);
  out.schwarz_energy = rs.final_energy;
  out.fista_energy = rf.final_energy;
  out.relative_difference = std::abs(out.schwarz_energy - out.fista_energy) / std::abs(out.fista_energy);

  std::ostringstream s;
  s << "reference_energy: " << fmt17(out.reference_energy) << "\nschwarz_energy: " << fmt17(out.schwarz_energy)
    << " (" << rs.iterations << " outer iterations, duality gap " << fmt17(rs.final_duality_gap) << ")"
    << "\nfista_energy: " << fmt17(out.fista_energy) << " (" << rf.iterations << " iterations, duality gap "
    << fmt17(rf.final_duality_gap) << ")"
    << "\nrelative_difference: " << fmt17(out.relative_difference) << "\npsnr_noisy_db: " << fmt17(rs.psnr_noisy)
    << "\npsnr_schwarz_db: " << fmt17(rs.psnr_restored) << "\npsnr_fista_db: " << fmt17(rf.psnr_restored) << '\n';
  out.summary = s.str();
  if (!config.summary_path.empty()) write_text(config.summary_path, out.summary);
  return out;
}

}  // namespace tvdd
