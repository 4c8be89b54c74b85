#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

constexpr const char* kEnvPrefix = "EMREG_";

std::string env(const char* name) { return std::string(kEnvPrefix) + name; }

}  // namespace

int main(int argc, char** argv) {
  using namespace emreg::cli;

  CLI::App app{"EM rigid registration of 2D scans"};
  app.require_subcommand(1);

  RegisterOptions reg;
  auto* register_cmd = app.add_subcommand("register", "Align a scan file to a model file");
  register_cmd->add_option("--scan", reg.scan_path, "Scan point file (x y per line)")
      ->required()->envname(env("SCAN"));
  register_cmd->add_option("--model", reg.model_path, "Model point file (x y per line)")
      ->required()->envname(env("MODEL"));
  register_cmd->add_option("--tx", reg.tx, "Initial translation x [m]")->envname(env("TX"));
  register_cmd->add_option("--ty", reg.ty, "Initial translation y [m]")->envname(env("TY"));
  register_cmd->add_option("--theta", reg.theta, "Initial rotation [rad, or deg with --degrees]")
      ->envname(env("THETA"));
  register_cmd->add_flag("--degrees", reg.degrees, "Angles in and out are in degrees")
      ->envname(env("DEGREES"));
  register_cmd->add_option("--sigma", reg.sigma, "Isotropic noise std-dev [m]; Gamma = I/sigma^2")
      ->capture_default_str()->envname(env("SIGMA"));
  register_cmd->add_option("-W,--window", reg.window, "Gate radius [m] (default 3*sigma)")
      ->envname(env("WINDOW"));
  register_cmd->add_option("--g00", reg.g00, "Precision matrix entry (0,0)")->envname(env("G00"));
  register_cmd->add_option("--g01", reg.g01, "Precision matrix entry (0,1)")->envname(env("G01"));
  register_cmd->add_option("--g11", reg.g11, "Precision matrix entry (1,1)")->envname(env("G11"));
  register_cmd->add_option("--epsilon", reg.epsilon, "Log-likelihood convergence threshold")
      ->capture_default_str()->envname(env("EPSILON"));
  register_cmd->add_option("--max-iters", reg.max_iterations, "EM iteration limit")
      ->capture_default_str()->envname(env("MAX_ITERS"));
  register_cmd->add_flag("--oracle", reg.oracle, "Use the dense all-pairs reference path")
      ->envname(env("ORACLE"));
  register_cmd->add_flag("--regate", reg.regate, "Rebuild the match graph every iteration")
      ->envname(env("REGATE"));
  register_cmd->add_flag("--reestimate-gamma", reg.reestimate_gamma,
                         "Re-estimate Gamma from the residual covariance each iteration")
      ->envname(env("REESTIMATE_GAMMA"));
  register_cmd->add_option("--dump-graph", reg.dump_graph,
                           "Write final match graph as 'j k prior posterior' lines");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic model/scan pair");
  synth_cmd->add_option("--shape", synth.shape, "rectangle | circle | L-shape")
      ->capture_default_str()->envname(env("SHAPE"));
  synth_cmd->add_option("-n,--n-points", synth.n_points, "Points on the contour")
      ->capture_default_str()->envname(env("N_POINTS"));
  synth_cmd->add_option("--tx", synth.tx, "Ground-truth translation x [m]")->envname(env("TX"));
  synth_cmd->add_option("--ty", synth.ty, "Ground-truth translation y [m]")->envname(env("TY"));
  synth_cmd->add_option("--theta", synth.theta, "Ground-truth rotation")->envname(env("THETA"));
  synth_cmd->add_flag("--degrees", synth.degrees, "Angles are in degrees")->envname(env("DEGREES"));
  synth_cmd->add_option("--noise", synth.noise_sigma, "Noise std-dev [m]")
      ->capture_default_str()->envname(env("NOISE"));
  synth_cmd->add_option("--outliers", synth.outlier_fraction, "Fraction of clutter points")
      ->capture_default_str()->envname(env("OUTLIERS"));
  synth_cmd->add_option("--gate", synth.gate, "Minimum clutter distance from the target [m]")
      ->capture_default_str()->envname(env("GATE"));
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str()->envname(env("SEED"));
  synth_cmd->add_option("-o,--out-dir", synth.out_dir, "Output directory")
      ->capture_default_str()->envname(env("OUT_DIR"));

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Per-iteration timing versus scan size");
  bench_cmd->add_option("--sizes", bench.sizes, "Ascending scan sizes")
      ->delimiter(',')->capture_default_str()->envname(env("SIZES"));
  bench_cmd->add_option("--repeats", bench.repeats, "Runs per size")
      ->capture_default_str()->envname(env("REPEATS"));
  bench_cmd->add_option("--seed", bench.seed, "Random seed")->capture_default_str()->envname(env("SEED"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInputError;
  }

  if (*register_cmd) return cmd_register(reg, std::cout, std::cerr);
  if (*synth_cmd) return cmd_synth(synth, std::cout, std::cerr);
  return cmd_bench(bench, std::cout, std::cerr);
}
