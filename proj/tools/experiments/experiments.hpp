#pragma once

// Experiment drivers. Each run_* computes its tables in memory; write_outputs
// turns them into CSV files and plot scripts.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "experiments/config.hpp"
#include "experiments/csv.hpp"
#include "jpose/graph.hpp"
#include "jpose/lie.hpp"

namespace jpose::cli {

struct ComposePoint {
  std::string sweep_var;
  double value = 0.0;
  Method method = Method::kLieCorrelated;
  double containment = 0.0;
  double cov_error = 0.0;
  std::optional<double> wall_ms;
};

struct ComposeSweepResult {
  std::vector<ComposePoint> points;
  Table table() const;
};

ComposeSweepResult run_compose_sweep(const ComposeSweepConfig& cfg, const RunOptions& run);

struct RelposeRow {
  double alpha = 0.0;
  Method method = Method::kLieCorrelated;
  double cov_error = 0.0;
};

struct RelposeAlphaResult {
  /// Mean of T_1^-1 T_2 (independent of alpha).
  SE3 relative_mean;
  std::vector<RelposeRow> rows;
  Table table() const;
};

RelposeAlphaResult run_relpose_alpha_sweep(const RelposeAlphaConfig& cfg, const RunOptions& run);

struct SlamPairRow {
  std::size_t offset = 0;
  Key i = 0;
  Key j = 0;
  Method method = Method::kLieCorrelated;
  double cov_error = 0.0;
  double normalized_cov_error = 0.0;
  Eigen::Vector3d correlation = Eigen::Vector3d::Zero();
  /// "ok", or the reason the pair could not be evaluated.
  std::string status = "ok";
};

struct SummaryRow {
  /// Offset as text, or "all".
  std::string offset;
  Method method = Method::kLieCorrelated;
  std::string metric;
  double mean = 0.0;
  double std_error = 0.0;
  double std_dev = 0.0;
  std::size_t count = 0;
};

struct SlamRelposeResult {
  SolveReport solve_report;
  std::size_t poses = 0;
  std::vector<SlamPairRow> rows;
  std::vector<SummaryRow> summary;

  Table table() const;
  Table summary_table() const;
  /// Summary entry over all offsets; nullptr when absent.
  const SummaryRow* overall(Method method, const std::string& metric) const;
};

SlamRelposeResult run_slam_relpose(const SlamRelposeConfig& cfg, const RunOptions& run);

struct LocusPoint {
  std::string representation;
  std::size_t ring = 0;
  std::size_t index = 0;
  double x = 0.0;
  double y = 0.0;
};

struct ContainmentCount {
  std::string representation;
  std::size_t contained = 0;
  std::size_t total = 0;
  /// Empty when the representation's covariance is singular.
  std::optional<double> fraction;
};

struct ConvertDemoResult {
  std::vector<LocusPoint> loci;
  std::vector<ContainmentCount> containment;
  double ut_residual_mean_norm = 0.0;
  std::size_t sigma_points = 0;
  Table loci_table() const;
  Table containment_table() const;
  const ContainmentCount& count(const std::string& representation) const;
};

ConvertDemoResult run_convert_demo(const ConvertDemoConfig& cfg, const RunOptions& run);

struct SolveGraphResult {
  SolveResult solution;
  Table table() const;
};

PoseGraph load_graph_source(const GraphSource& source, std::uint64_t seed);

SolveGraphResult run_solve_graph(const SolveGraphConfig& cfg, const RunOptions& run);

/// Runs cfg.experiment and writes its CSV files and plot script into
/// cfg.run.output_dir. Returns the files written.
std::vector<std::filesystem::path> run_and_write(const Config& cfg);

}  // namespace jpose::cli
