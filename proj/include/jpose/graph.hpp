#pragma once

// Planar pose graphs: text ingestion, Gauss-Newton on the manifold, and
// recovery of joint pose-pair covariances in twist coordinates.
//
// Vertex perturbations are left twists, T = exp(xi^) T_mean, so recovered
// covariances plug straight into the belief operations.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "jpose/belief.hpp"
#include "jpose/lie.hpp"

namespace jpose {

struct GraphEdge {
  Key from = 0;
  Key to = 0;
  /// Measured T_from^-1 T_to.
  SE2 measurement;
  Eigen::Matrix3d information = Eigen::Matrix3d::Identity();
};

class PoseGraph {
 public:
  /// Throws ValidationError on a duplicate key.
  void add_vertex(Key key, const SE2& pose);
  /// Throws ValidationError for a missing endpoint, a self loop or an
  /// information matrix that is not symmetric PSD.
  void add_edge(const GraphEdge& edge);

  const std::map<Key, SE2>& vertices() const { return vertices_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const SE2& vertex(Key key) const;
  void set_vertex(Key key, const SE2& pose);

  /// True once produced by solve().
  bool solved() const { return solved_; }
  void mark_solved(bool solved) { solved_ = solved; }

  /// Lines of unknown type skipped while parsing.
  std::size_t skipped_lines() const { return skipped_lines_; }
  void set_skipped_lines(std::size_t n) { skipped_lines_ = n; }

  bool connected() const;

  /// Position of each key in the (sorted) variable ordering.
  std::map<Key, std::size_t> variable_index() const;

 private:
  std::map<Key, SE2> vertices_;
  std::vector<GraphEdge> edges_;
  bool solved_ = false;
  std::size_t skipped_lines_ = 0;
};

/// Reads VERTEX_SE2 / EDGE_SE2 (information upper triangle, row-major:
/// I11 I12 I13 I22 I23 I33) and the older VERTEX2 / EDGE2 records, whose
/// information is stored as I11 I12 I22 I33 I13 I23. '#' starts a comment.
/// Throws ParseError (with line number) or ValidationError.
PoseGraph parse_graph(std::istream& in);
PoseGraph load_graph(const std::filesystem::path& path);

/// Writes VERTEX_SE2 / EDGE_SE2 records with 17 significant digits.
void write_graph(std::ostream& out, const PoseGraph& graph);

struct SolveOptions {
  int max_iterations = 100;
  double relative_tolerance = 1e-9;
  /// Diagonal information of the prior holding the lowest key in place.
  double gauge_information = 1e8;
  int divergence_patience = 3;
  /// Finite-difference step for edge Jacobians.
  double jacobian_step = 1e-6;
};

struct SolveReport {
  int iterations = 0;
  double initial_chi2 = 0.0;
  double final_chi2 = 0.0;
  bool converged = false;
};

struct SolveResult {
  PoseGraph graph;
  SolveReport report;
};

/// Sum over edges of r^T I r with r = log(Z^-1 T_from^-1 T_to).
double graph_chi2(const PoseGraph& graph);

/// Gauss-Newton with update T <- exp(delta^) T. Throws ValidationError for a
/// disconnected graph, RankDeficiency for singular normal equations and
/// Divergence after divergence_patience consecutive chi2 increases.
SolveResult solve(const PoseGraph& graph, const SolveOptions& options = {});

/// Edge residual and its Jacobians with respect to left twists on both ends.
struct EdgeLinearization {
  Eigen::Vector3d residual;
  Eigen::Matrix3d jac_from;
  Eigen::Matrix3d jac_to;
};
EdgeLinearization linearize_edge(const SE2& from, const SE2& to, const GraphEdge& edge,
                                 double step = 1e-6);

/// A^T A over twist coordinates, gauge prior included, ordered by key.
Eigen::SparseMatrix<double> information_matrix(const PoseGraph& graph, double step = 1e-6,
                                               double gauge_information = 1e8);

/// Factorizes the information matrix of a solved graph once and answers pair
/// queries from it. Queries are const and may run concurrently.
class MarginalCovariance {
 public:
  /// Throws StateError when the graph is unsolved, RankDeficiency when the
  /// information matrix cannot be factored.
  explicit MarginalCovariance(const PoseGraph& graph, double step = 1e-6,
                              double gauge_information = 1e8);
  ~MarginalCovariance();
  MarginalCovariance(MarginalCovariance&&) noexcept;
  MarginalCovariance& operator=(MarginalCovariance&&) noexcept;

  /// Joint belief of (T_i, T_j). Throws KeyNotFound or InvalidArgument (i == j).
  PosePairBelief<2> pair(Key i, Key j) const;

  const Eigen::SparseMatrix<double>& information() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

PosePairBelief<2> extract_pair_belief(const PoseGraph& graph, Key i, Key j);

/// Lattice world in the style of the Manhattan benchmark: a random walk on a
/// unit grid with noisy odometry and loop closures whenever a lattice point
/// is revisited. Initial values come from chaining the odometry.
struct GridWorldSpec {
  std::size_t poses = 500;
  /// Odometry / closure noise standard deviations (x, y, theta).
  Eigen::Vector3d sigma = Eigen::Vector3d(0.05, 0.05, 0.01);
  double turn_probability = 0.3;
  /// Closures per revisit, drawn among earlier visits of the same lattice point.
  std::size_t closures_per_visit = 1;
  /// Keeps the walk inside [-extent, extent]^2 lattice points.
  int extent = 8;
};

PoseGraph generate_grid_world(const GridWorldSpec& spec, std::uint64_t seed);

}  // namespace jpose
