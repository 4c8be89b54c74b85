#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>

#include "emreg/correspondence.hpp"
#include "emreg/errors.hpp"
#include "emreg/oracles.hpp"
#include "emreg/scan_io.hpp"

namespace emreg::cli {
namespace {

using Clock = std::chrono::steady_clock;

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

// Scaling scenes: noise and perturbation small enough that every true
// match sits inside the gate at the initial pose.
constexpr double kBenchNoise = 0.02;
constexpr double kBenchSigma = 0.1;
const Pose kBenchTruth(0.1, -0.05, 0.25 / kDegPerRad);

double to_radians(double angle, bool degrees) { return degrees ? angle / kDegPerRad : angle; }

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

nlohmann::json pose_json(const Pose& pose, bool degrees) {
  return {{"tx", pose.tx()},
          {"ty", pose.ty()},
          {"theta", degrees ? pose.theta() * kDegPerRad : pose.theta()}};
}

}  // namespace

EmConfig make_config(const RegisterOptions& options) {
  EmConfig config = EmConfig::for_sigma(options.sigma);
  const int given = options.g00.has_value() + options.g01.has_value() + options.g11.has_value();
  if (given == 3) {
    config.gamma = PrecisionMatrix(*options.g00, *options.g01, *options.g11);
  } else if (given != 0) {
    throw Error(ErrorCode::InvalidArgument, "g00, g01 and g11 must be given together");
  }
  if (options.window) config.window = *options.window;
  config.convergence_epsilon = options.epsilon;
  config.max_iterations = options.max_iterations;
  config.regate_each_iteration = options.regate;
  config.reestimate_gamma = options.reestimate_gamma;
  config.validate();
  return config;
}

nlohmann::json result_record(const RegistrationResult& result, bool degrees, bool oracle,
                             double wall_time_ms) {
  const Eigen::Matrix2d& r = result.residual_covariance;
  return {
      {"schema_version", kSchemaVersion},
      {"method", oracle ? "dense" : "grid"},
      {"angle_unit", degrees ? "deg" : "rad"},
      {"pose", pose_json(result.pose, degrees)},
      {"residual_covariance", {{r(0, 0), r(0, 1)}, {r(1, 0), r(1, 1)}}},
      {"iterations", result.iterations},
      {"converged", result.converged},
      {"loglik_trace", result.loglik_trace},
      {"n_inliers", result.n_inliers},
      {"degenerate_rows", result.degenerate_rows},
      {"gamma", {result.gamma.g00(), result.gamma.g01(), result.gamma.g11()}},
      {"wall_time_ms", wall_time_ms},
  };
}

int cmd_register(const RegisterOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const EmConfig config = make_config(options);
    const std::vector<Point> scan = read_scan_file(options.scan_path);
    const std::vector<Point> model = read_scan_file(options.model_path);
    if (model.empty()) throw Error(ErrorCode::EmptyInput, "empty model");
    if (scan.empty()) throw Error(ErrorCode::EmptyInput, "empty scan");
    const Pose pose0(options.tx, options.ty, to_radians(options.theta, options.degrees));

    const auto start = Clock::now();
    const RegistrationResult result =
        options.oracle ? oracle::dense_em_register(scan, model, pose0, config)
                       : register_scan(scan, model, pose0, config);
    const double wall = elapsed_ms(start);

    if (options.dump_graph) {
      MatchGraph graph = build_graph(scan, model, pose0, config.window);
      e_step(graph, result.pose, result.gamma);
      std::ofstream dump(*options.dump_graph);
      if (!dump) throw Error(ErrorCode::InvalidArgument, "cannot write graph dump");
      write_graph(dump, graph);
    }

    out << result_record(result, options.degrees, options.oracle, wall).dump(2) << '\n';
    return result.converged ? kExitOk : kExitNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const std::optional<Shape> shape = parse_shape(options.shape);
    if (!shape) throw Error(ErrorCode::InvalidArgument, "unknown shape '" + options.shape + "'");
    SynthConfig config;
    config.shape = *shape;
    config.n_points = options.n_points;
    config.pose = Pose(options.tx, options.ty, to_radians(options.theta, options.degrees));
    config.noise_sigma = options.noise_sigma;
    config.outlier_fraction = options.outlier_fraction;
    config.gate = options.gate;
    config.seed = options.seed;
    const Scene scene = make_scene(config);

    std::filesystem::create_directories(options.out_dir);
    write_scan_file(options.out_dir / "model.txt", scene.model);
    write_scan_file(options.out_dir / "scan.txt", scene.scan);

    const nlohmann::json truth = {
        {"schema_version", kSchemaVersion},
        {"shape", to_string(config.shape)},
        {"n_points", config.n_points},
        {"pose", pose_json(scene.truth, false)},
        {"noise_sigma", config.noise_sigma},
        {"outlier_fraction", config.outlier_fraction},
        {"n_outliers", scene.n_outliers},
        {"gate", config.gate},
        {"seed", config.seed},
    };
    std::ofstream truth_file(options.out_dir / "truth.json");
    if (!truth_file) throw Error(ErrorCode::InvalidArgument, "cannot write truth.json");
    truth_file << truth.dump(2) << '\n';
    out << "wrote " << (options.out_dir / "model.txt").string() << ", "
        << (options.out_dir / "scan.txt").string() << ", "
        << (options.out_dir / "truth.json").string() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

std::optional<double> log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2 || x.size() != y.size()) return std::nullopt;
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

BenchReport run_bench(const BenchOptions& options) {
  if (options.repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  if (!std::is_sorted(options.sizes.begin(), options.sizes.end())) {
    throw Error(ErrorCode::InvalidArgument, "sizes must be ascending");
  }
  const EmConfig config = EmConfig::for_sigma(kBenchSigma);

  BenchReport report;
  std::vector<double> ns;
  std::vector<double> times;
  for (const std::size_t n : options.sizes) {
    double total_ms = 0.0;
    std::vector<double> iterations;
    for (int rep = 0; rep < options.repeats; ++rep) {
      const std::uint64_t seed = options.seed * 1'000'003ull + n * 101ull + static_cast<std::uint64_t>(rep);
      const Scene scene = make_tiled_scene(n, kBenchTruth, kBenchNoise, seed);
      const auto start = Clock::now();
      const RegistrationResult result =
          register_scan(scene.scan, scene.model, Pose::identity(), config);
      total_ms += elapsed_ms(start) / std::max(result.iterations, 1);
      iterations.push_back(result.iterations);
    }
    std::sort(iterations.begin(), iterations.end());
    const std::size_t mid = iterations.size() / 2;
    const double median = iterations.size() % 2 == 1
                              ? iterations[mid]
                              : 0.5 * (iterations[mid - 1] + iterations[mid]);
    const BenchRow row{n, total_ms / options.repeats, median};
    report.rows.push_back(row);
    ns.push_back(static_cast<double>(n));
    times.push_back(row.ms_per_iteration);
  }
  report.slope = log_log_slope(ns, times);
  return report;
}

int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const BenchReport report = run_bench(options);
    char line[128];
    out << "N\tms_per_iteration\titerations\n";
    for (const BenchRow& row : report.rows) {
      std::snprintf(line, sizeof(line), "%zu\t%.4f\t%g\n", row.n, row.ms_per_iteration,
                    row.iterations_median);
      out << line;
    }
    if (report.slope) {
      std::snprintf(line, sizeof(line), "slope\t%.3f\n", *report.slope);
      out << line;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace emreg::cli
