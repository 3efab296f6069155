// tvdd: total-variation denoising with overlapping Schwarz decomposition.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tvdd/errors.hpp"
#include "tvdd/experiment.hpp"
#include "tvdd/fista.hpp"
#include "tvdd/image_io.hpp"
#include "tvdd/schwarz.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kIo = 3, kSolver = 4 };

std::vector<std::pair<std::size_t, std::size_t>> parse_domains(const std::vector<std::string>& items) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& s : items) {
    const auto x = s.find('x');
    std::size_t n1 = 0, n2 = 0;
    try {
      if (x == std::string::npos) throw std::invalid_argument(s);
      std::size_t used = 0;
      n1 = std::stoul(s.substr(0, x), &used);
      if (used != x) throw std::invalid_argument(s);
      n2 = std::stoul(s.substr(x + 1), &used);
      if (used != s.size() - x - 1) throw std::invalid_argument(s);
    } catch (const std::logic_error&) {
      throw tvdd::ConfigError("bad subdomain grid '" + s + "' (expected e.g. 4x4)");
    }
    out.emplace_back(n1, n2);
  }
  return out;
}

bool report(const char* name, bool ok, const std::string& detail) {
  std::printf("%-28s %s  %s\n", name, ok ? "ok  " : "FAIL", detail.c_str());
  return ok;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Fast sanity checks of the discrete operators and the solvers.
int selftest(const tvdd::RunConfig& base) {
  using namespace tvdd;
  std::mt19937_64 rng(base.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  bool all = true;

  double adj = 0.0, inv = 0.0;
  for (auto [m1, m2] : {std::pair<std::size_t, std::size_t>{1, 2}, {3, 3}, {17, 5}, {32, 32}}) {
    const GridGeometry g(m1, m2, 1.0);
    for (int t = 0; t < 20; ++t) {
      EdgeField p(g);
      CellField u(g);
      for (auto& v : p.x_values()) v = uni(rng);
      for (auto& v : p.y_values()) v = uni(rng);
      for (auto& v : u.values()) v = uni(rng);
      const double scale = norm(p) * norm(u);
      if (scale > 0.0)
        adj = std::max(adj, std::abs(inner_product(divergence(p), u) - inner_product(p, divergence_adjoint(u))) / scale);
      const auto ii = inverse_inequality_check(p);
      if (ii.rhs > 0.0) inv = std::max(inv, ii.lhs / ii.rhs);
    }
  }
  all &= report("adjointness", adj <= 1e-12, "max rel defect " + sci(adj));
  all &= report("inverse inequality", inv <= 1.0 + 1e-12, "max ratio " + sci(inv));

  RunConfig cfg = base;
  cfg.image_path.clear();
  cfg.synthetic = "blocks";
  cfg.width = cfg.height = 32;
  cfg.n1 = cfg.n2 = 2;
  cfg.delta = 4;
  cfg.outer_iterations = 60;
  const Problem problem = prepare_problem(cfg);
  const EnergyModel model(cfg.model, cfg.lambda, problem.noisy);
  const double reference = reference_minimum(model, 20000).energy;
  const DenoiseResult r = solve_problem(cfg, problem, reference);
  bool monotone = true;
  for (std::size_t k = 1; k < r.records.size(); ++k)
    monotone &= r.records[k].energy <= r.records[k - 1].energy + 1e-10 * std::abs(r.records[0].energy);
  all &= report("schwarz monotone", monotone, std::to_string(r.records.size() - 1) + " outer iterations");
  all &= report("schwarz vs fista", r.records.back().relative_gap < 1e-3,
                "relative gap " + sci(r.records.back().relative_gap));
  all &= report("denoising improves psnr", r.psnr_restored > r.psnr_noisy,
                sci(r.psnr_noisy) + " -> " + sci(r.psnr_restored) + " dB");
  return all ? kOk : kSolver;
}

}  // namespace

int main(int argc, char** argv) {
  tvdd::RunConfig cfg;
  std::string model = "rof", solver = "schwarz";
  std::vector<std::size_t> deltas;
  std::vector<std::string> domains;
  double d_over_delta = 0.0;
  std::string out_dir;
  bool no_wall_time = false;

  CLI::App app{"Total-variation denoising by overlapping additive Schwarz decomposition of the dual problem."};
  app.set_config("--config", "", "Read options from a key=value file (flags given on the command line win)");
  app.require_subcommand(1, 1);

  app.add_option("--model", model, "Energy model: rof | tvh1")->capture_default_str();
  app.add_option("--lambda", cfg.lambda, "Fidelity weight")->capture_default_str();
  app.add_option("--image", cfg.image_path, "Input PGM; omit to use a synthetic image");
  app.add_option("--synthetic", cfg.synthetic, "Synthetic image: blocks | blocks-ramp")->capture_default_str();
  app.add_option("--width", cfg.width, "Synthetic image width")->capture_default_str();
  app.add_option("--height", cfg.height, "Synthetic image height")->capture_default_str();
  app.add_option("--noise-variance", cfg.noise_variance, "Variance of the additive Gaussian noise")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Noise seed")->capture_default_str();
  app.add_option("--solver", solver, "Solver: fista | schwarz")->capture_default_str();
  app.add_option("--n1", cfg.n1, "Subdomains along x")->capture_default_str();
  app.add_option("--n2", cfg.n2, "Subdomains along y")->capture_default_str();
  app.add_option("--delta", cfg.delta, "Overlap width in pixels")->capture_default_str();
  app.add_option("--tau", cfg.tau, "Schwarz step size")->capture_default_str();
  app.add_option("--outer-iterations", cfg.outer_iterations, "Schwarz outer iterations")->capture_default_str();
  app.add_option("--local-max-iterations", cfg.local_max_iterations, "FISTA budget per local solve")->capture_default_str();
  app.add_option("--local-tolerance", cfg.local_tolerance, "Local stop tolerance on |div(p_k+1 - p_k)|^2/|omega|")
      ->capture_default_str();
  app.add_flag("--warm-start", cfg.warm_start, "Start local solves from the previous correction");
  app.add_option("--fista-iterations", cfg.fista_iterations, "Iterations for solver=fista")->capture_default_str();
  app.add_option("--fista-log-every", cfg.fista_log_every, "Record interval for solver=fista")->capture_default_str();
  app.add_option("--reference-iterations", cfg.reference_iterations, "FISTA budget for the reference minimum")
      ->capture_default_str();
  app.add_option("--threads", cfg.threads, "Worker threads for local solves")->capture_default_str();
  app.add_flag("--no-wall-time", no_wall_time, "Write wall_s = 0 so CSV output is byte-reproducible");
  app.add_option("--output-image", cfg.output_image, "Restored image (PGM)");
  app.add_option("--csv", cfg.csv_path, "Convergence CSV");
  app.add_option("--summary", cfg.summary_path, "Plain-text summary");
  app.add_option("--deltas", deltas, "sweep-delta: overlap widths")->delimiter(',');
  app.add_option("--domains", domains, "sweep-domains: subdomain grids such as 2x2,4x4")->delimiter(',');
  app.add_option("--d-over-delta", d_over_delta, "sweep-domains: fix delta = sqrt(|Omega|)/ratio");
  app.add_option("--out-dir", out_dir, "Sweep output directory");

  auto* denoise = app.add_subcommand("denoise", "Denoise one image and log convergence")->fallthrough();
  auto* sweep_delta = app.add_subcommand("sweep-delta", "One Schwarz run per overlap width")->fallthrough();
  auto* sweep_domains = app.add_subcommand("sweep-domains", "One Schwarz run per subdomain grid")->fallthrough();
  auto* compare = app.add_subcommand("compare", "Final energies of Schwarz and global FISTA")->fallthrough();
  auto* self = app.add_subcommand("selftest", "Quick operator and solver checks")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    cfg.model = tvdd::parse_model_kind(model);
    cfg.solver = tvdd::parse_solver_kind(solver);
    cfg.record_wall_time = !no_wall_time;
    cfg.validate();

    if (*denoise) {
      const auto r = tvdd::run_denoise(cfg);
      std::cout << r.summary;
    } else if (*sweep_delta) {
      const auto r = tvdd::run_delta_sweep(cfg, deltas, out_dir);
      std::cout << r.summary;
    } else if (*sweep_domains) {
      const auto parsed = parse_domains(domains);
      std::optional<double> ratio;
      if (d_over_delta > 0.0) ratio = d_over_delta;
      const auto r = tvdd::run_domain_sweep(cfg, parsed, ratio, out_dir);
      std::cout << r.summary;
    } else if (*compare) {
      const auto r = tvdd::run_compare(cfg);
      std::cout << r.summary;
    } else if (*self) {
      return selftest(cfg);
    }
  } catch (const tvdd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const tvdd::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const tvdd::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const tvdd::ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOk;
}
