#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tvdd/errors.hpp"
#include "tvdd/experiment.hpp"
#include "tvdd/image_io.hpp"

using namespace tvdd;
namespace fs = std::filesystem;

namespace {

RunConfig small() {
  RunConfig c;
  c.width = c.height = 24;
  c.n1 = c.n2 = 2;
  c.delta = 3;
  c.outer_iterations = 15;
  c.reference_iterations = 20000;
  c.record_wall_time = false;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const char* name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(small().validate());
  auto c = small();
  c.lambda = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small();
  c.tau = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small();
  c.noise_variance = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small();
  c.threads = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_solver_kind("fista") == SolverKind::Fista);
  CHECK_THROWS_AS(parse_solver_kind("admm"), ConfigError);
}

TEST_CASE("zero outer iterations leave the noisy image") {
  auto c = small();
  c.outer_iterations = 0;
  const Problem problem = prepare_problem(c);
  const auto r = solve_problem(c, problem, 0.0);
  CHECK(r.records.size() == 1);
  CHECK(r.restored == problem.noisy);
  CHECK(r.psnr_restored == r.psnr_noisy);
}

TEST_CASE("denoising a synthetic image improves psnr") {
  auto c = small();
  c.width = c.height = 48;
  c.outer_iterations = 40;
  const auto r = run_denoise(c);
  CHECK(r.psnr_restored > r.psnr_noisy + 2.0);
  CHECK(r.records.size() == 41);
  CHECK(r.records.front().relative_gap == 1.0);
  for (std::size_t k = 1; k < r.records.size(); ++k) {
    CHECK(r.records[k].iteration == k);
    CHECK(r.records[k].energy <= r.records[k - 1].energy + 1e-10 * std::abs(r.records[0].energy));
  }
}

TEST_CASE("fista and schwarz agree") {
  auto c = small();
  c.outer_iterations = 150;
  const Problem problem = prepare_problem(c);
  const EnergyModel model(c.model, c.lambda, problem.noisy);
  const double ref = reference_minimum(model, c.reference_iterations).energy;
  const auto rs = solve_problem(c, problem, ref);
  c.solver = SolverKind::Fista;
  c.fista_iterations = 20000;
  c.fista_log_every = 1000;
  const auto rf = solve_problem(c, problem, ref);
  CHECK(rs.final_energy == doctest::Approx(rf.final_energy).epsilon(1e-6));
  CHECK(rf.records.size() == 21);
  CHECK(rf.records.back().iteration == 20000);
}

TEST_CASE("csv layout") {
  ConvergenceRecord r;
  r.iteration = 3;
  r.energy = 0.1;
  r.psnr = 20.0;
  const std::vector<std::string> comments{"seed=1"};
  const std::string csv = format_csv(std::vector<ConvergenceRecord>{r}, comments);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# seed=1");
  std::getline(in, line);
  CHECK(line == "iter,energy,gap,rel_gap,duality_gap,decrease_lhs,decrease_rhs,wall_s,psnr");
  std::getline(in, line);
  CHECK(line == "3,0.10000000000000001,0,0,0,0,0,0,20");
}

TEST_CASE("run_denoise writes its artifacts and they do not depend on threads") {
  const auto dir = scratch_dir("tvdd_denoise_test");
  auto c = small();
  std::vector<std::string> csvs, images;
  for (std::size_t t : {1ul, 3ul}) {
    c.threads = t;
    c.csv_path = (dir / ("run" + std::to_string(t) + ".csv")).string();
    c.output_image = (dir / ("run" + std::to_string(t) + ".pgm")).string();
    c.summary_path = (dir / "summary.txt").string();
    run_denoise(c);
    csvs.push_back(slurp(c.csv_path));
    images.push_back(slurp(c.output_image));
  }
  CHECK(csvs[0] == csvs[1]);
  CHECK(images[0] == images[1]);
  CHECK(csvs[0].rfind("# seed=1", 0) == 0);
  CHECK(fs::exists(dir / "summary.txt"));
  CHECK(load_pgm(c.output_image).pixels.geometry() == GridGeometry(24, 24));
  fs::remove_all(dir);
}

TEST_CASE("sweeps") {
  const auto dir = scratch_dir("tvdd_sweep_test");
  auto c = small();
  c.width = c.height = 32;

  const auto empty = run_delta_sweep(c, std::vector<std::size_t>{}, dir);
  CHECK(empty.points.empty());
  CHECK_FALSE(fs::exists(dir));

  const std::vector<std::size_t> deltas{1, 2, 4};
  const auto sweep = run_delta_sweep(c, deltas, dir);
  REQUIRE(sweep.points.size() == 3);
  CHECK(fs::exists(dir / "delta_2.csv"));
  CHECK(fs::exists(dir / "summary.txt"));
  CHECK(sweep.points[2].delta == 4);
  CHECK(sweep.points[2].d_over_delta == doctest::Approx(8.0));

  const std::vector<std::pair<std::size_t, std::size_t>> grids{{2, 2}, {4, 4}};
  const auto dom = run_domain_sweep(c, grids, 8.0, dir);
  REQUIRE(dom.points.size() == 2);
  CHECK(dom.points[0].delta == 4);
  CHECK(dom.points[1].delta == 4);
  CHECK(fs::exists(dir / "domains_4x4.csv"));

  c.width = c.height = 16;
  CHECK_THROWS_AS(run_delta_sweep(c, std::vector<std::size_t>{5}, ""), ConfigError);  // 2x2 blocks of 8 cells, delta 5
  fs::remove_all(dir);
}

TEST_CASE("compare reports both energies") {
  auto c = small();
  c.outer_iterations = 120;
  c.fista_iterations = 20000;
  const auto r = run_compare(c);
  CHECK(r.relative_difference <= 1e-6);
  CHECK(r.summary.find("relative_difference") != std::string::npos);
}

TEST_CASE("unwritable output is an io error") {
  CHECK_THROWS_AS(write_text("/proc/nonexistent/x.txt", "x"), IoError);
}
