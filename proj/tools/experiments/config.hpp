#pragma once

// Experiment configuration: JSON files, command-line overrides and defaults,
// in that order of precedence.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "jpose/convert.hpp"
#include "jpose/graph.hpp"
#include "jpose/mc.hpp"

namespace jpose::cli {

/// Invalid or inconsistent configuration; the CLI exits with status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { kComposeSweep, kRelposeAlphaSweep, kSlamRelpose, kConvertDemo, kSolveGraph };

std::optional<Experiment> parse_experiment(const std::string& name);
std::string experiment_name(Experiment e);

enum class Method { kLieCorrelated, kLieIndependent, kSsc };

std::string method_name(Method m);

struct RunOptions {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  unsigned jobs = 1;
};

struct ComposeSweepConfig {
  /// Any of "steps", "sigma_r", "sigma_t", run in the order given.
  std::vector<std::string> sweeps = {"steps", "sigma_r", "sigma_t"};
  std::vector<std::size_t> steps = {2, 5, 10, 15, 20};
  std::vector<double> sigma_r = {1, 2, 3, 4, 5};
  std::vector<double> sigma_t = {1, 2, 3, 4, 5};
  /// Values held fixed while another parameter is swept.
  std::size_t fixed_steps = 10;
  double fixed_sigma = 3.0;
  double rho = 0.4;
  std::size_t samples = 10000;
  double probability = 0.999;
  ContainmentMode containment = ContainmentMode::kFull;
  std::vector<Method> methods = {Method::kLieCorrelated, Method::kLieIndependent, Method::kSsc};
  /// Wall-clock columns make the output machine dependent, so they are off
  /// unless asked for.
  bool record_timing = false;
};

struct RelposeAlphaConfig {
  std::vector<double> alphas = {0.5, 1, 2, 4};
  std::size_t samples = 10000;
  Eigen::Matrix4d pose_1;
  Eigen::Matrix4d pose_2;
  Eigen::Matrix<double, 6, 1> marginal_diagonal;
  Eigen::Matrix<double, 6, 1> cross_diagonal;

  RelposeAlphaConfig();
};

/// Where a pose graph comes from: a file, or the synthetic lattice world.
struct GraphSource {
  std::optional<std::filesystem::path> path;
  GridWorldSpec grid_world;
};

struct SlamRelposeConfig {
  GraphSource graph;
  std::vector<std::size_t> offsets = {10, 50, 100};
  std::size_t pairs_per_offset = 200;
  std::size_t samples = 1000;
  std::vector<Method> methods = {Method::kLieCorrelated, Method::kLieIndependent, Method::kSsc};
  SolveOptions solve;
};

struct ConvertDemoConfig {
  /// Coordinate vector (x, y, z, roll, pitch, yaw) of the mean pose.
  Eigen::Matrix<double, 6, 1> mean;
  /// Twist covariance of the true distribution.
  Eigen::Matrix<double, 6, 6> covariance;
  std::size_t samples = 100000;
  double probability = 0.95;
  ContainmentMode containment = ContainmentMode::kFull;
  UtConfig ut;
  /// Points per ring and number of rings of each drawn ellipsoid.
  std::size_t locus_points = 72;
  std::size_t locus_rings = 9;

  ConvertDemoConfig();
};

struct SolveGraphConfig {
  GraphSource graph;
  SolveOptions solve;
};

struct Config {
  Experiment experiment = Experiment::kComposeSweep;
  RunOptions run;
  ComposeSweepConfig compose;
  RelposeAlphaConfig relpose;
  SlamRelposeConfig slam;
  ConvertDemoConfig convert;
  SolveGraphConfig solve;
};

/// Reads a config for `experiment` from JSON text. Relative paths inside are
/// resolved against base_dir. Throws ConfigError on unknown keys, wrong types,
/// out-of-range values or a missing referenced file.
Config parse_config(Experiment experiment, const std::string& json_text,
                    const std::filesystem::path& base_dir);

/// Same, from a file; a missing file is a ConfigError naming the path.
Config load_config(Experiment experiment, const std::filesystem::path& path);

}  // namespace jpose::cli
