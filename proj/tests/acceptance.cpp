// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "commands.hpp"
#include "emreg/correspondence.hpp"
#include "emreg/em_registration.hpp"
#include "emreg/errors.hpp"
#include "emreg/oracles.hpp"
#include "emreg/spatial_index.hpp"
#include "emreg/synth.hpp"
#include "test_support.hpp"

namespace emreg {
namespace {

using testing::kDeg;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

PrecisionMatrix random_precision(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> diag(0.5, 50.0);
  std::uniform_real_distribution<double> corr(-0.9, 0.9);
  const double a = diag(rng);
  const double b = diag(rng);
  return {a, corr(rng) * std::sqrt(a * b), b};
}

Scene random_contour_scene(std::mt19937_64& rng, std::size_t n, double max_translation,
                           double max_theta, double noise) {
  const Shape shapes[] = {Shape::Rectangle, Shape::LShape};
  SynthConfig sc;
  sc.shape = shapes[rng() % 2];
  sc.n_points = n;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = max_translation * unit(rng);
  const double heading = 2.0 * std::numbers::pi * unit(rng);
  const double theta = max_theta * (2.0 * unit(rng) - 1.0);
  sc.pose = Pose(radius * std::cos(heading), radius * std::sin(heading), theta);
  sc.noise_sigma = noise;
  sc.seed = rng();
  return make_scene(sc);
}

Outcome posterior_normalization() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::size_t bad_rows = 0, bad_outliers = 0, rows = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::uniform_int_distribution<std::size_t> size(5, 120);
    const auto scan = testing::random_points(rng, size(rng), -2, 2);
    const auto model = testing::random_points(rng, size(rng), -2, 2);
    const Pose pose0 = testing::random_pose(rng, 0.5, 0.5);
    const double w = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    MatchGraph g = build_graph(scan, model, pose0, w);
    e_step(g, testing::random_pose(rng, 0.5, 0.5), random_precision(rng));
    for (std::size_t j = 0; j < g.scan_size(); ++j) {
      const auto row = g.row(j);
      if (row.empty()) {
        std::vector<Point> moved;
        for (const Point& m : model) moved.push_back(apply_pose(pose0, m));
        if (!oracle::brute_force_neighbors(moved, scan[j], w).empty()) ++bad_outliers;
        continue;
      }
      ++rows;
      double sum = 0.0;
      for (const Edge& e : row) sum += e.posterior;
      if (std::abs(sum - 1.0) > 1e-9) ++bad_rows;
    }
  }
  const double secs = seconds_since(t0);
  return {bad_rows == 0 && bad_outliers == 0 && secs < 5.0,
          fmt("%zu rows, %zu unnormalized, %zu misclassified outliers, %.2fs (< 5s)", rows,
              bad_rows, bad_outliers, secs)};
}

Outcome em_monotonicity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2002);
  double worst_drop = 0.0;
  int runs = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double noise = std::uniform_real_distribution<double>(0.005, 0.05)(rng);
    const Scene scene = random_contour_scene(rng, 200, 0.5, 10 * kDeg, noise);
    const double sigma = std::uniform_real_distribution<double>(0.01, 0.2)(rng);
    EmConfig config = EmConfig::for_sigma(sigma);
    config.window = 1.0;
    if (trial % 4 == 3) {
      config.gamma = PrecisionMatrix(1.0 / (sigma * sigma), 0.3 / (sigma * sigma),
                                     0.6 / (sigma * sigma));
    }
    const RegistrationResult r = register_scan(scene.scan, scene.model, Pose::identity(), config);
    for (std::size_t i = 1; i < r.loglik_trace.size(); ++i) {
      worst_drop = std::max(worst_drop, r.loglik_trace[i - 1] - r.loglik_trace[i]);
    }
    ++runs;
  }
  const double secs = seconds_since(t0);
  return {worst_drop <= 1e-9 && secs < 30.0,
          fmt("%d runs, largest decrease %.3g (<= 1e-9), %.2fs (< 30s)", runs, worst_drop, secs)};
}

Outcome m_step_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3003);
  double worst_pose = 0.0, worst_objective = 0.0, worst_grad = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto model = testing::random_points(rng, 20, -2, 2);
    const Pose truth = testing::random_pose(rng, 1.0, std::numbers::pi);
    std::normal_distribution<double> gauss(0.0, 0.05);
    std::vector<Point> scan;
    for (const Point& m : model) {
      const Point t = apply_pose(truth, m);
      scan.emplace_back(t.x() + gauss(rng), t.y() + gauss(rng));
    }
    MatchGraph g = build_graph(scan, model, truth, 1.0);
    std::uniform_real_distribution<double> weight(0.01, 1.0);
    for (Edge& e : g.edges()) e.posterior = weight(rng);
    const PrecisionMatrix gamma = trial % 2 == 0
                                      ? PrecisionMatrix::identity()
                                      : PrecisionMatrix(std::uniform_real_distribution<double>(0.5, 2.0)(rng),
                                                        std::uniform_real_distribution<double>(-0.3, 0.3)(rng),
                                                        std::uniform_real_distribution<double>(0.5, 2.0)(rng));

    const Pose fast = m_step(g, gamma);
    const Pose slow = oracle::numerical_m_step(g, gamma);
    worst_pose = std::max({worst_pose, std::abs(fast.tx() - slow.tx()),
                           std::abs(fast.ty() - slow.ty()),
                           std::abs(normalize_angle(fast.theta() - slow.theta()))});
    worst_objective = std::max(worst_objective, std::abs(m_step_objective(g, fast, gamma) -
                                                         m_step_objective(g, slow, gamma)));
    constexpr double h = 1e-6;
    Eigen::Vector3d grad;
    for (int i = 0; i < 3; ++i) {
      double p[3] = {fast.tx(), fast.ty(), fast.theta()};
      double m[3] = {fast.tx(), fast.ty(), fast.theta()};
      p[i] += h;
      m[i] -= h;
      grad(i) = (m_step_objective(g, Pose(p[0], p[1], p[2]), gamma) -
                 m_step_objective(g, Pose(m[0], m[1], m[2]), gamma)) / (2 * h);
    }
    worst_grad = std::max(worst_grad, grad.norm());
  }
  const double secs = seconds_since(t0);
  return {worst_pose < 1e-5 && worst_objective < 1e-10 && worst_grad < 1e-6 && secs < 60.0,
          fmt("max pose diff %.2g (< 1e-5), objective diff %.2g (< 1e-10), "
              "FD gradient %.2g (< 1e-6), %.2fs (< 60s)",
              worst_pose, worst_objective, worst_grad, secs)};
}

struct EquivalenceRuns {
  std::vector<RegistrationResult> grid;
  std::vector<RegistrationResult> dense;
};

Outcome sparse_dense_equivalence(EquivalenceRuns& runs) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4004);
  std::size_t edge_mismatch = 0;
  double worst_pose = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(50, 500)(rng);
    const double noise = std::uniform_real_distribution<double>(0.0, 0.04)(rng);
    SynthConfig sc;
    const Shape shapes[] = {Shape::Rectangle, Shape::LShape, Shape::Circle};
    sc.shape = shapes[trial % 3];
    sc.n_points = n;
    sc.pose = testing::random_pose(rng, 0.3, 6 * kDeg);
    sc.noise_sigma = noise;
    sc.outlier_fraction = trial % 5 == 0 ? 0.1 : 0.0;
    sc.seed = rng();
    const Scene scene = make_scene(sc);
    const double sigma = std::uniform_real_distribution<double>(0.02, 0.2)(rng);
    EmConfig config = EmConfig::for_sigma(sigma);
    config.window = std::uniform_real_distribution<double>(0.4, 1.0)(rng);

    const MatchGraph g = build_graph(scene.scan, scene.model, Pose::identity(), config.window);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (const Edge& e : g.edges()) edges.emplace_back(e.scan_index, e.model_index);
    if (edges != oracle::dense_edge_set(scene.scan, scene.model, Pose::identity(), config.window)) {
      ++edge_mismatch;
    }

    runs.grid.push_back(register_scan(scene.scan, scene.model, Pose::identity(), config));
    runs.dense.push_back(oracle::dense_em_register(scene.scan, scene.model, Pose::identity(), config));
    const Pose& a = runs.grid.back().pose;
    const Pose& b = runs.dense.back().pose;
    worst_pose = std::max({worst_pose, std::abs(a.tx() - b.tx()), std::abs(a.ty() - b.ty()),
                           std::abs(normalize_angle(a.theta() - b.theta()))});
  }
  const double secs = seconds_since(t0);
  return {edge_mismatch == 0 && worst_pose <= 1e-9 && secs < 60.0,
          fmt("50 scenes, %zu edge-set mismatches, max pose diff %.2g (<= 1e-9), %.2fs (< 60s)",
              edge_mismatch, worst_pose, secs)};
}

Outcome hash_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(5005);
  std::size_t pairs = 0, mismatches = 0;
  for (int instance = 0; instance < 100; ++instance) {
    const double w = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    std::vector<Point> pts;
    std::vector<Point> queries;
    if (instance % 2 == 0) {
      pts = testing::random_points(rng, 400, -3, 3);
      queries = testing::random_points(rng, 100, -3.5, 3.5);
    } else {
      // Coordinates on cell edges and at exact multiples of W.
      std::uniform_int_distribution<int> cell(-8, 8);
      std::uniform_int_distribution<int> frac(0, 3);
      const auto lattice = [&] {
        const double a = cell(rng) * w + frac(rng) * 0.25 * w;
        const double b = cell(rng) * w + frac(rng) * 0.25 * w;
        return Point(a, b);
      };
      for (int i = 0; i < 400; ++i) pts.push_back(lattice());
      for (int i = 0; i < 100; ++i) queries.push_back(lattice());
    }
    const GridIndex index = build_index(pts, w);
    for (const Point& q : queries) {
      ++pairs;
      if (index.query_radius(q) != oracle::brute_force_neighbors(pts, q, w)) ++mismatches;
    }
  }
  const double secs = seconds_since(t0);
  return {pairs >= 10000 && mismatches == 0 && secs < 10.0,
          fmt("%zu (instance, query) pairs, %zu mismatches, %.2fs (< 10s)", pairs, mismatches, secs)};
}

Outcome covariance_check(const EquivalenceRuns& runs) {
  double min_eig = 0.0, worst_asym = 0.0, worst_vs_dense = 0.0;
  for (std::size_t i = 0; i < runs.grid.size(); ++i) {
    const Eigen::Matrix2d& r = runs.grid[i].residual_covariance;
    worst_asym = std::max(worst_asym, std::abs(r(0, 1) - r(1, 0)));
    min_eig = std::min(min_eig,
                       Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(r).eigenvalues().minCoeff());
    worst_vs_dense = std::max(worst_vs_dense,
                              (r - runs.dense[i].residual_covariance).cwiseAbs().maxCoeff());
  }

  // Direct dense evaluation at arbitrary poses on random data.
  std::mt19937_64 rng(6006);
  for (int trial = 0; trial < 50; ++trial) {
    const auto scan = testing::random_points(rng, 150, -2, 2);
    const auto model = testing::random_points(rng, 150, -2, 2);
    const Pose gate = testing::random_pose(rng, 0.3, 0.3);
    const Pose pose = testing::random_pose(rng, 0.3, 0.3);
    const PrecisionMatrix gamma = random_precision(rng);
    MatchGraph g = build_graph(scan, model, gate, 0.3);
    if (inlier_count(g) == 0) continue;
    e_step(g, pose, gamma);
    const Eigen::Matrix2d r = covariance(g, pose).matrix;
    worst_asym = std::max(worst_asym, std::abs(r(0, 1) - r(1, 0)));
    min_eig = std::min(min_eig,
                       Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(r).eigenvalues().minCoeff());
    worst_vs_dense = std::max(
        worst_vs_dense,
        (r - oracle::dense_covariance(scan, model, gate, pose, gamma, 0.3)).cwiseAbs().maxCoeff());
  }

  double aligned_max = 0.0;
  for (const Shape shape : {Shape::Rectangle, Shape::LShape, Shape::Circle}) {
    const auto model = make_contour(shape, 200);
    const Pose truth(0.7, -0.4, 0.3);
    std::vector<Point> scan;
    for (const Point& m : model) scan.push_back(apply_pose(truth, m));
    // Gate below the point spacing so each scan point matches only its twin.
    MatchGraph g = build_graph(scan, model, truth, 0.02);
    e_step(g, truth, PrecisionMatrix::isotropic(0.05));
    aligned_max = std::max(aligned_max, covariance(g, truth).matrix.cwiseAbs().maxCoeff());
  }
  const bool pass = worst_asym == 0.0 && min_eig >= -1e-12 && worst_vs_dense <= 1e-12 &&
                    aligned_max < 1e-24;
  return {pass, fmt("asymmetry %.2g, min eigenvalue %.3g (>= -1e-12), vs dense %.2g (<= 1e-12), "
                    "noise-free max |R| %.2g",
                    worst_asym, min_eig, worst_vs_dense, aligned_max)};
}

Outcome convergence_speed() {
  std::mt19937_64 rng(7007);
  std::vector<int> iterations;
  for (int trial = 0; trial < 100; ++trial) {
    const Scene scene = random_contour_scene(rng, 200, 0.5, 10 * kDeg, 0.02);
    EmConfig config = EmConfig::for_sigma(0.02);
    config.window = 1.0;
    iterations.push_back(
        register_scan(scene.scan, scene.model, Pose::identity(), config).iterations);
  }
  std::vector<int> sorted = iterations;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[49] + sorted[50]);
  const auto fast = std::count_if(iterations.begin(), iterations.end(), [](int i) { return i <= 6; });
  return {median <= 10.0 && fast >= 50,
          fmt("median iterations %.1f (<= 10), %ld/100 runs in <= 6 (>= 50), range [%d, %d]",
              median, static_cast<long>(fast), sorted.front(), sorted.back())};
}

Outcome linear_scaling() {
  const auto t0 = Clock::now();
  cli::BenchOptions options;
  options.sizes = {1000, 2000, 4000, 8000};
  options.repeats = 5;
  options.seed = 8008;
  const cli::BenchReport report = cli::run_bench(options);
  const double secs = seconds_since(t0);
  std::string rows;
  for (const auto& row : report.rows) rows += fmt(" N=%zu:%.3fms", row.n, row.ms_per_iteration);
  const double slope = report.slope.value_or(-1.0);
  return {slope >= 0.8 && slope <= 1.3 && secs < 120.0,
          fmt("slope %.3f in [0.8, 1.3], %.1fs (< 120s);", slope, secs) + rows};
}

Outcome recovery_accuracy() {
  int good = 0;
  double worst_t = 0.0, worst_r = 0.0;
  for (int seed = 1; seed <= 100; ++seed) {
    SynthConfig sc;
    sc.pose = Pose(0.3, -0.2, 5 * kDeg);
    sc.noise_sigma = 0.02;
    sc.n_points = 200;
    sc.seed = static_cast<std::uint64_t>(seed);
    const Scene scene = make_scene(sc);
    EmConfig config = EmConfig::for_sigma(0.02);
    config.window = 1.0;
    const RegistrationResult r = register_scan(scene.scan, scene.model, Pose::identity(), config);
    const double te = std::hypot(r.pose.tx() - 0.3, r.pose.ty() + 0.2);
    const double re = std::abs(normalize_angle(r.pose.theta() - 5 * kDeg));
    worst_t = std::max(worst_t, te);
    worst_r = std::max(worst_r, re);
    if (te < 0.02 && re < 1 * kDeg) ++good;
  }
  return {good >= 95, fmt("%d/100 within 0.02 m and 1 deg (>= 95); worst %.4f m, %.3f deg", good,
                          worst_t, worst_r / kDeg)};
}

}  // namespace
}  // namespace emreg

int main() {
  using emreg::Outcome;
  emreg::EquivalenceRuns runs;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"posterior normalization", emreg::posterior_normalization},
      {"EM monotonicity", emreg::em_monotonicity},
      {"M-step optimality", emreg::m_step_optimality},
      {"sparse/dense equivalence", [&] { return emreg::sparse_dense_equivalence(runs); }},
      {"hash exactness", emreg::hash_exactness},
      {"residual covariance", [&] { return emreg::covariance_check(runs); }},
      {"convergence speed", emreg::convergence_speed},
      {"O(N) scaling", emreg::linear_scaling},
      {"recovery accuracy", emreg::recovery_accuracy},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(),
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
