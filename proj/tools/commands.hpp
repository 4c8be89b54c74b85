#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emreg/em_registration.hpp"
#include "emreg/geometry.hpp"
#include "emreg/synth.hpp"

namespace emreg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNotConverged = 2;

inline constexpr int kSchemaVersion = 1;

struct RegisterOptions {
  std::filesystem::path scan_path;
  std::filesystem::path model_path;
  double tx = 0.0;
  double ty = 0.0;
  double theta = 0.0;
  bool degrees = false;
  double sigma = 0.1;
  std::optional<double> window;  // defaults to 3 * sigma
  // Full precision matrix; overrides sigma when all three are given.
  std::optional<double> g00;
  std::optional<double> g01;
  std::optional<double> g11;
  double epsilon = 1e-6;
  int max_iterations = 50;
  bool oracle = false;
  bool regate = false;
  bool reestimate_gamma = false;
  std::optional<std::filesystem::path> dump_graph;
};

// Builds the EM configuration described by the options. Throws emreg::Error
// on invalid values.
EmConfig make_config(const RegisterOptions& options);

// Machine-readable record of one registration. wall_time_ms is the only
// nondeterministic field.
nlohmann::json result_record(const RegistrationResult& result, bool degrees,
                             bool oracle, double wall_time_ms);

/// Runs a registration and prints its record to out. Returns the exit code.
int cmd_register(const RegisterOptions& options, std::ostream& out, std::ostream& err);

struct SynthOptions {
  std::string shape = "rectangle";
  std::size_t n_points = 200;
  double tx = 0.0;
  double ty = 0.0;
  double theta = 0.0;
  bool degrees = false;
  double noise_sigma = 0.02;
  double outlier_fraction = 0.0;
  double gate = 1.0;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = ".";
};

// Writes model.txt, scan.txt and truth.json into out_dir.
int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err);

struct BenchOptions {
  std::vector<std::size_t> sizes = {1000, 2000, 4000, 8000};
  int repeats = 3;
  std::uint64_t seed = 1;
};

struct BenchRow {
  std::size_t n = 0;
  double ms_per_iteration = 0.0;    // mean over repeats
  double iterations_median = 0.0;   // iterations to converge, median over repeats
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::optional<double> slope;  // least-squares slope of log(ms/iter) vs log(N)
};

// Times register_scan on fixed-density tiled scenes.
BenchReport run_bench(const BenchOptions& options);

/// Least-squares slope of log(y) against log(x); nullopt for fewer than 2 points.
std::optional<double> log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err);

}  // namespace emreg::cli
