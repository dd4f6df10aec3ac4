#include "jpose/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>
#include <fmt/ostream.h>

namespace jpose {

namespace {

// Below this many unknowns the normal equations are solved densely.
constexpr Eigen::Index kDenseLimit = 600;

using SparseLLT =
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>>;

SE2 planar_pose(double x, double y, double theta) {
  return SE2(SO2::AboutZ(theta), Eigen::Vector2d(x, y));
}

double planar_angle(const SE2& pose) {
  const auto& r = pose.rotation().matrix();
  return std::atan2(r(1, 0), r(0, 0));
}

void check_information(const Eigen::Matrix3d& info) {
  if (!info.allFinite()) throw ValidationError("information matrix has non-finite entries");
  if ((info - info.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, info.cwiseAbs().maxCoeff())) {
    throw ValidationError("information matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(info, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, info.cwiseAbs().maxCoeff())) {
    throw ValidationError("information matrix is not positive semi-definite");
  }
}

// Token stream for one record with line-numbered errors.
class Record {
 public:
  Record(std::string_view text, std::size_t line) : line_(line) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i) tokens_.push_back(text.substr(i, j - i));
      i = j;
    }
  }

  bool empty() const { return tokens_.empty(); }
  std::string_view tag() const { return tokens_.front(); }

  void expect_fields(std::size_t n) const {
    if (tokens_.size() - 1 < n) {
      throw ParseError(line_, fmt::format("{} needs {} fields, found {}", tag(), n,
                                          tokens_.size() - 1));
    }
  }

  double number(std::size_t field) const {
    const std::string_view tok = tokens_[field];
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
      throw ParseError(line_, fmt::format("malformed number '{}' in {}", tok, tag()));
    }
    return value;
  }

  Key key(std::size_t field) const {
    const std::string_view tok = tokens_[field];
    Key value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ParseError(line_, fmt::format("malformed vertex id '{}' in {}", tok, tag()));
    }
    return value;
  }

  std::size_t line() const { return line_; }

 private:
  std::vector<std::string_view> tokens_;
  std::size_t line_;
};

// Residual log(Z^-1 T_from^-1 T_to).
Eigen::Vector3d edge_residual(const SE2& from, const SE2& to, const SE2& measurement) {
  return log_map<2>(measurement.inverse() * from.inverse() * to);
}

struct NormalEquations {
  Eigen::SparseMatrix<double> h;
  Eigen::VectorXd b;
};

// Assembles J^T I J and J^T I r over all edges plus the gauge prior.
NormalEquations assemble(const PoseGraph& graph, const std::map<Key, std::size_t>& index,
                         Key anchor, const SE2& anchor_reference, double step, double gauge) {
  const auto n = static_cast<Eigen::Index>(3 * index.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(graph.edges().size() * 36 + 3);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);

  auto add_block = [&triplets](Eigen::Index r, Eigen::Index c, const Eigen::Matrix3d& m) {
    for (int a = 0; a < 3; ++a) {
      for (int k = 0; k < 3; ++k) triplets.emplace_back(r + a, c + k, m(a, k));
    }
  };

  for (const GraphEdge& e : graph.edges()) {
    const EdgeLinearization lin =
        linearize_edge(graph.vertex(e.from), graph.vertex(e.to), e, step);
    const auto i = static_cast<Eigen::Index>(3 * index.at(e.from));
    const auto j = static_cast<Eigen::Index>(3 * index.at(e.to));
    const Eigen::Matrix3d wi = e.information * lin.jac_from;
    const Eigen::Matrix3d wj = e.information * lin.jac_to;
    add_block(i, i, lin.jac_from.transpose() * wi);
    add_block(j, j, lin.jac_to.transpose() * wj);
    add_block(i, j, lin.jac_from.transpose() * wj);
    add_block(j, i, lin.jac_to.transpose() * wi);
    const Eigen::Vector3d wr = e.information * lin.residual;
    b.segment<3>(i) += lin.jac_from.transpose() * wr;
    b.segment<3>(j) += lin.jac_to.transpose() * wr;
  }

  const auto a = static_cast<Eigen::Index>(3 * index.at(anchor));
  add_block(a, a, gauge * Eigen::Matrix3d::Identity());
  b.segment<3>(a) += gauge * log_map<2>(graph.vertex(anchor) * anchor_reference.inverse());

  NormalEquations eq{Eigen::SparseMatrix<double>(n, n), b};
  eq.h.setFromTriplets(triplets.begin(), triplets.end());
  return eq;
}

double objective(const PoseGraph& graph, Key anchor, const SE2& anchor_reference, double gauge) {
  const Eigen::Vector3d prior = log_map<2>(graph.vertex(anchor) * anchor_reference.inverse());
  return graph_chi2(graph) + gauge * prior.squaredNorm();
}

// Dense or sparse Cholesky of a symmetric positive definite system.
class SpdSolver {
 public:
  explicit SpdSolver(const Eigen::SparseMatrix<double>& h) {
    if (h.rows() < kDenseLimit) {
      dense_ = std::make_unique<Eigen::LLT<Eigen::MatrixXd>>(Eigen::MatrixXd(h));
      if (dense_->info() != Eigen::Success) {
        throw RankDeficiency("information matrix is not positive definite");
      }
    } else {
      sparse_ = std::make_unique<SparseLLT>(h);
      if (sparse_->info() != Eigen::Success) {
        throw RankDeficiency("sparse Cholesky of the information matrix failed");
      }
    }
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    Eigen::MatrixXd x = dense_ ? Eigen::MatrixXd(dense_->solve(rhs))
                               : Eigen::MatrixXd(sparse_->solve(rhs));
    if (!x.allFinite()) throw RankDeficiency("information matrix solve produced non-finite values");
    return x;
  }

 private:
  std::unique_ptr<Eigen::LLT<Eigen::MatrixXd>> dense_;
  std::unique_ptr<SparseLLT> sparse_;
};

}  // namespace

void PoseGraph::add_vertex(Key key, const SE2& pose) {
  if (!vertices_.emplace(key, pose).second) {
    throw ValidationError(fmt::format("duplicate vertex {}", key));
  }
}

void PoseGraph::add_edge(const GraphEdge& edge) {
  for (Key k : {edge.from, edge.to}) {
    if (!vertices_.contains(k)) {
      throw ValidationError(fmt::format("edge {} -> {} references missing vertex {}", edge.from,
                                        edge.to, k));
    }
  }
  if (edge.from == edge.to) throw ValidationError(fmt::format("self loop on vertex {}", edge.from));
  check_information(edge.information);
  edges_.push_back(edge);
}

const SE2& PoseGraph::vertex(Key key) const {
  auto it = vertices_.find(key);
  if (it == vertices_.end()) throw KeyNotFound(fmt::format("vertex {} not in graph", key));
  return it->second;
}

void PoseGraph::set_vertex(Key key, const SE2& pose) {
  auto it = vertices_.find(key);
  if (it == vertices_.end()) throw KeyNotFound(fmt::format("vertex {} not in graph", key));
  it->second = pose;
}

bool PoseGraph::connected() const {
  if (vertices_.empty()) return true;
  const auto index = variable_index();
  std::vector<std::size_t> parent(index.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&parent](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = parent.size();
  for (const GraphEdge& e : edges_) {
    const std::size_t a = find(index.at(e.from));
    const std::size_t b = find(index.at(e.to));
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

std::map<Key, std::size_t> PoseGraph::variable_index() const {
  std::map<Key, std::size_t> index;
  std::size_t next = 0;
  for (const auto& [key, pose] : vertices_) index.emplace(key, next++);
  return index;
}

PoseGraph parse_graph(std::istream& in) {
  PoseGraph graph;
  std::vector<std::pair<GraphEdge, std::size_t>> edges;
  std::size_t skipped = 0;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text(raw);
    if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    const Record rec(text, line);
    if (rec.empty()) continue;

    const std::string_view tag = rec.tag();
    if (tag == "VERTEX_SE2" || tag == "VERTEX2") {
      rec.expect_fields(4);
      const Key key = rec.key(1);
      try {
        graph.add_vertex(key, planar_pose(rec.number(2), rec.number(3), rec.number(4)));
      } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("line {}: {}", line, e.what()));
      }
    } else if (tag == "EDGE_SE2" || tag == "EDGE2") {
      rec.expect_fields(11);
      GraphEdge e;
      e.from = rec.key(1);
      e.to = rec.key(2);
      e.measurement = planar_pose(rec.number(3), rec.number(4), rec.number(5));
      double i11 = rec.number(6), i12 = rec.number(7), i13, i22, i23, i33;
      if (tag == "EDGE_SE2") {
        i13 = rec.number(8), i22 = rec.number(9), i23 = rec.number(10), i33 = rec.number(11);
      } else {
        i22 = rec.number(8), i33 = rec.number(9), i13 = rec.number(10), i23 = rec.number(11);
      }
      e.information << i11, i12, i13, i12, i22, i23, i13, i23, i33;
      edges.emplace_back(e, line);
    } else {
      ++skipped;
    }
  }
  for (const auto& [e, at] : edges) {
    try {
      graph.add_edge(e);
    } catch (const ValidationError& err) {
      throw ValidationError(fmt::format("line {}: {}", at, err.what()));
    }
  }
  graph.set_skipped_lines(skipped);
  return graph;
}

PoseGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(fmt::format("cannot open graph file '{}'", path.string()));
  return parse_graph(in);
}

void write_graph(std::ostream& out, const PoseGraph& graph) {
  for (const auto& [key, pose] : graph.vertices()) {
    fmt::print(out, "VERTEX_SE2 {} {:.17g} {:.17g} {:.17g}\n", key, pose.translation().x(),
               pose.translation().y(), planar_angle(pose));
  }
  for (const GraphEdge& e : graph.edges()) {
    const auto& z = e.measurement;
    const auto& m = e.information;
    fmt::print(out,
               "EDGE_SE2 {} {} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} "
               "{:.17g}\n",
               e.from, e.to, z.translation().x(), z.translation().y(), planar_angle(z), m(0, 0),
               m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2));
  }
}

double graph_chi2(const PoseGraph& graph) {
  double chi2 = 0.0;
  for (const GraphEdge& e : graph.edges()) {
    const Eigen::Vector3d r = edge_residual(graph.vertex(e.from), graph.vertex(e.to), e.measurement);
    chi2 += r.dot(e.information * r);
  }
  return chi2;
}

EdgeLinearization linearize_edge(const SE2& from, const SE2& to, const GraphEdge& edge,
                                 double step) {
  EdgeLinearization lin;
  lin.residual = edge_residual(from, to, edge.measurement);
  for (int c = 0; c < 3; ++c) {
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    d[c] = step;
    const SE2 fp = exp_map<2>(d) * from;
    const SE2 fm = exp_map<2>(-d) * from;
    const SE2 tp = exp_map<2>(d) * to;
    const SE2 tm = exp_map<2>(-d) * to;
    lin.jac_from.col(c) =
        (edge_residual(fp, to, edge.measurement) - edge_residual(fm, to, edge.measurement)) /
        (2.0 * step);
    lin.jac_to.col(c) =
        (edge_residual(from, tp, edge.measurement) - edge_residual(from, tm, edge.measurement)) /
        (2.0 * step);
  }
  return lin;
}

SolveResult solve(const PoseGraph& input, const SolveOptions& options) {
  if (input.vertices().empty()) throw ValidationError("graph has no vertices");
  if (!input.connected()) throw ValidationError("graph is not connected");

  SolveResult result{input, {}};
  PoseGraph& graph = result.graph;
  graph.mark_solved(false);
  const auto index = graph.variable_index();
  const Key anchor = graph.vertices().begin()->first;
  const SE2 anchor_reference = graph.vertex(anchor);
  const double gauge = options.gauge_information;

  double chi2 = objective(graph, anchor, anchor_reference, gauge);
  SolveReport& report = result.report;
  report.initial_chi2 = chi2;
  report.final_chi2 = chi2;
  if (!std::isfinite(chi2)) throw ValidationError("initial chi2 is not finite");

  // Anything below this is numerically exact for unit-scale problems.
  constexpr double kExact = 1e-24;
  if (chi2 <= kExact) {
    report.converged = true;
    graph.mark_solved(true);
    return result;
  }

  int increases = 0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const NormalEquations eq =
        assemble(graph, index, anchor, anchor_reference, options.jacobian_step, gauge);
    const Eigen::VectorXd delta = -SpdSolver(eq.h).solve(eq.b);
    for (const auto& [key, pos] : index) {
      const Eigen::Vector3d d = delta.segment<3>(static_cast<Eigen::Index>(3 * pos));
      graph.set_vertex(key, exp_map<2>(d) * graph.vertex(key));
    }
    const double next = objective(graph, anchor, anchor_reference, gauge);
    report.iterations = it;
    if (!std::isfinite(next)) throw Divergence(fmt::format("chi2 became non-finite at iteration {}", it));

    if (next > chi2) {
      if (++increases >= options.divergence_patience) {
        throw Divergence(fmt::format("chi2 increased {} iterations in a row (now {:.6g})",
                                     increases, next));
      }
      chi2 = next;
      continue;
    }
    increases = 0;
    const double decrease = (chi2 - next) / chi2;
    chi2 = next;
    if (decrease < options.relative_tolerance || chi2 <= kExact) {
      report.converged = true;
      break;
    }
  }
  report.final_chi2 = chi2;
  graph.mark_solved(report.converged);
  return result;
}

Eigen::SparseMatrix<double> information_matrix(const PoseGraph& graph, double step,
                                               double gauge_information) {
  if (graph.vertices().empty()) throw ValidationError("graph has no vertices");
  const Key anchor = graph.vertices().begin()->first;
  return assemble(graph, graph.variable_index(), anchor, graph.vertex(anchor), step,
                  gauge_information)
      .h;
}

struct MarginalCovariance::Impl {
  Eigen::SparseMatrix<double> information;
  std::map<Key, std::size_t> index;
  std::map<Key, SE2> means;
  std::unique_ptr<SpdSolver> solver;
};

MarginalCovariance::MarginalCovariance(const PoseGraph& graph, double step,
                                       double gauge_information)
    : impl_(std::make_unique<Impl>()) {
  if (!graph.solved()) throw StateError("marginal covariances need a solved graph");
  impl_->information = information_matrix(graph, step, gauge_information);
  impl_->index = graph.variable_index();
  impl_->means = graph.vertices();
  impl_->solver = std::make_unique<SpdSolver>(impl_->information);
}

MarginalCovariance::~MarginalCovariance() = default;
MarginalCovariance::MarginalCovariance(MarginalCovariance&&) noexcept = default;
MarginalCovariance& MarginalCovariance::operator=(MarginalCovariance&&) noexcept = default;

const Eigen::SparseMatrix<double>& MarginalCovariance::information() const {
  return impl_->information;
}

PosePairBelief<2> MarginalCovariance::pair(Key i, Key j) const {
  if (i == j) throw InvalidArgument(fmt::format("pair marginal needs two distinct keys, got {} twice", i));
  auto lookup = [this](Key k) {
    auto it = impl_->index.find(k);
    if (it == impl_->index.end()) throw KeyNotFound(fmt::format("vertex {} not in graph", k));
    return static_cast<Eigen::Index>(3 * it->second);
  };
  const Eigen::Index a = lookup(i);
  const Eigen::Index b = lookup(j);
  const Eigen::Index n = impl_->information.rows();

  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, 6);
  for (int k = 0; k < 3; ++k) {
    e(a + k, k) = 1.0;
    e(b + k, 3 + k) = 1.0;
  }
  const Eigen::MatrixXd x = impl_->solver->solve(e);
  PosePairBelief<2>::JointCovariance cov;
  cov.topRows<3>() = x.middleRows<3>(a);
  cov.bottomRows<3>() = x.middleRows<3>(b);
  return PosePairBelief<2>(impl_->means.at(i), impl_->means.at(j), cov);
}

PosePairBelief<2> extract_pair_belief(const PoseGraph& graph, Key i, Key j) {
  return MarginalCovariance(graph).pair(i, j);
}

PoseGraph generate_grid_world(const GridWorldSpec& spec, std::uint64_t seed) {
  if (spec.poses < 2) throw InvalidArgument("grid world needs at least two poses");
  if (spec.extent < 1) throw InvalidArgument("grid world extent must be positive");
  if (!(spec.sigma.array() > 0.0).all()) throw InvalidArgument("grid world noise must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Eigen::Matrix3d information = spec.sigma.cwiseProduct(spec.sigma).cwiseInverse().asDiagonal();

  auto noisy = [&](const SE2& truth) {
    const Eigen::Vector3d n(spec.sigma.x() * normal(rng), spec.sigma.y() * normal(rng),
                            spec.sigma.z() * normal(rng));
    return truth * exp_map<2>(n);
  };
  auto lattice_pose = [](int x, int y, int heading) {
    return planar_pose(x, y, heading * 0.5 * std::numbers::pi);
  };
  static constexpr int kDx[4] = {1, 0, -1, 0};
  static constexpr int kDy[4] = {0, 1, 0, -1};

  std::vector<SE2> truth;
  std::map<std::pair<int, int>, std::vector<Key>> visits;
  PoseGraph graph;
  int x = 0, y = 0, heading = 0;
  truth.push_back(lattice_pose(x, y, heading));
  visits[{x, y}].push_back(0);
  graph.add_vertex(0, truth[0]);

  for (Key k = 1; k < spec.poses; ++k) {
    if (uniform(rng) < spec.turn_probability) heading = (heading + (uniform(rng) < 0.5 ? 1 : 3)) % 4;
    // Turn away from the boundary, trying left, right, then back.
    for (int attempt = 0; attempt < 4; ++attempt) {
      const int nx = x + kDx[heading];
      const int ny = y + kDy[heading];
      if (std::abs(nx) <= spec.extent && std::abs(ny) <= spec.extent) break;
      heading = (heading + (attempt == 1 ? 2 : 1)) % 4;
    }
    x += kDx[heading];
    y += kDy[heading];
    truth.push_back(lattice_pose(x, y, heading));

    const SE2 odometry = noisy(truth[k - 1].inverse() * truth[k]);
    graph.add_vertex(k, graph.vertex(k - 1) * odometry);
    graph.add_edge({k - 1, k, odometry, information});

    auto& seen = visits[{x, y}];
    std::vector<Key> candidates;
    for (Key v : seen) {
      if (v + 1 != k) candidates.push_back(v);
    }
    for (std::size_t c = 0; c < spec.closures_per_visit && !candidates.empty(); ++c) {
      const auto pick = static_cast<std::size_t>(uniform(rng) * static_cast<double>(candidates.size()));
      const Key other = candidates[std::min(pick, candidates.size() - 1)];
      candidates.erase(std::find(candidates.begin(), candidates.end(), other));
      graph.add_edge({other, k, noisy(truth[other].inverse() * truth[k]), information});
    }
    seen.push_back(k);
  }
  return graph;
}

}  // namespace jpose
