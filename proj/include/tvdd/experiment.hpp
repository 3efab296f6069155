#pragma once

// Experiment orchestration behind the command-line tool: problem setup,
// solver runs with per-iteration convergence records, parameter sweeps and
// CSV / summary emission.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tvdd/analysis.hpp"
#include "tvdd/models.hpp"

namespace tvdd {

enum class SolverKind { Fista, Schwarz };

SolverKind parse_solver_kind(std::string_view name);
std::string_view to_string(SolverKind kind);

struct RunConfig {
  ModelKind model = ModelKind::Rof;
  double lambda = 10.0;

  std::string image_path;            // PGM input; empty selects the synthetic image
  std::string synthetic = "blocks";  // blocks | blocks-ramp
  std::size_t width = 64;
  std::size_t height = 64;
  double noise_variance = 0.05;
  std::uint64_t seed = 1;

  SolverKind solver = SolverKind::Schwarz;
  std::size_t n1 = 2;
  std::size_t n2 = 2;
  std::size_t delta = 8;
  double tau = 0.25;
  std::size_t outer_iterations = 100;
  std::size_t local_max_iterations = 1000;
  double local_tolerance = 1e-18;
  bool warm_start = false;

  std::size_t fista_iterations = 1000;  // global FISTA solver budget (solver = fista)
  std::size_t fista_log_every = 10;
  std::size_t reference_iterations = 100000;

  std::size_t threads = 1;
  bool record_wall_time = true;

  std::string output_image;
  std::string csv_path;
  std::string summary_path;

  void validate() const;
};

struct Problem {
  CellField clean;  // the image before noise
  CellField noisy;  // f
  unsigned max_value = 255;
};

Problem prepare_problem(const RunConfig& config);

struct DenoiseResult {
  EdgeField p;
  CellField restored;
  std::vector<ConvergenceRecord> records;
  double reference_energy = 0.0;
  double final_energy = 0.0;
  double initial_duality_gap = 0.0;
  double final_duality_gap = 0.0;
  double psnr_noisy = 0.0;
  double psnr_restored = 0.0;
  std::size_t iterations = 0;
  std::string summary;
};

/// Full denoising run; writes the image / CSV / summary files named in the config.
DenoiseResult run_denoise(const RunConfig& config);

/// Solver run on a prepared problem with a known reference energy (no file output).
DenoiseResult solve_problem(const RunConfig& config, const Problem& problem, double reference_energy);

/// Writes comment lines (prefixed "# ") then the fixed CSV header and one row per record.
std::string format_csv(std::span<const ConvergenceRecord> records, std::span<const std::string> comments);
void write_text(const std::filesystem::path& path, const std::string& text);

struct SweepPoint {
  std::string label;
  std::size_t n1 = 0, n2 = 0, delta = 0;
  double d_over_delta = 0.0;
  RateFit fit;
  double final_relative_gap = 0.0;
  std::vector<ConvergenceRecord> records;
  std::filesystem::path csv_path;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double reference_energy = 0.0;
  bool threshold_nonincreasing = true;  // delta sweeps: eps(delta_{i+1}) <= 1.1 eps(delta_i)
  double gamma_spread = 0.0;            // (max - min) / max over valid fits
  std::string summary;
};

/// One Schwarz run per overlap width on a shared problem and reference.
SweepResult run_delta_sweep(const RunConfig& base, std::span<const std::size_t> deltas,
                            const std::filesystem::path& out_dir);

/// One Schwarz run per n1 x n2; with d_over_delta set, delta = round(sqrt(|Omega|) / d_over_delta).
SweepResult run_domain_sweep(const RunConfig& base, std::span<const std::pair<std::size_t, std::size_t>> domains,
                             std::optional<double> d_over_delta, const std::filesystem::path& out_dir);

struct CompareResult {
  double reference_energy = 0.0;
  double fista_energy = 0.0;
  double schwarz_energy = 0.0;
  double relative_difference = 0.0;  // |F_schwarz - F_fista| / |F_fista|
  std::string summary;
};

CompareResult run_compare(const RunConfig& config);

}  // namespace tvdd
