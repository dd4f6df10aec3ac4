#include "experiments/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "experiments/plots.hpp"
#include "jpose/belief.hpp"
#include "jpose/convert.hpp"
#include "jpose/errors.hpp"
#include "jpose/linalg.hpp"
#include "jpose/mc.hpp"
#include "jpose/parallel.hpp"
#include "jpose/ssc.hpp"

namespace jpose::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Cell number_or_na(double v) { return std::isfinite(v) ? Cell(v) : Cell(Na{}); }

void log(const std::string& message) { fmt::print(stderr, "jpose: {}\n", message); }

// Columns holding NaN (samples whose residual could not be formed) count as
// outside every ellipsoid and are left out of the sample covariance.
struct Residuals {
  Eigen::MatrixXd values;

  double containment(const Eigen::MatrixXd& sigma, double p, ContainmentMode mode) const {
    const Eigen::MatrixXd finite = finite_columns();
    if (finite.cols() == 0) return 0.0;
    return containment_fraction(finite, sigma, p, mode) * static_cast<double>(finite.cols()) /
           static_cast<double>(values.cols());
  }

  Eigen::MatrixXd moment() const {
    const Eigen::MatrixXd finite = finite_columns();
    if (finite.cols() == 0) return Eigen::MatrixXd::Constant(values.rows(), values.rows(), kNaN);
    return second_moment(finite);
  }

  Eigen::MatrixXd finite_columns() const {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (values.col(c).allFinite()) keep.push_back(c);
    }
    if (keep.size() == static_cast<std::size_t>(values.cols())) return values;
    Eigen::MatrixXd out(values.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = values.col(keep[k]);
    return out;
  }
};

template <typename F>
Residuals residuals(std::size_t count, Eigen::Index dim, unsigned jobs, F&& residual_of) {
  Residuals r;
  r.values.resize(dim, static_cast<Eigen::Index>(count));
  const std::size_t chunks = (count + kSampleChunk - 1) / kSampleChunk;
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const std::size_t end = std::min(count, (c + 1) * kSampleChunk);
    for (std::size_t m = c * kSampleChunk; m < end; ++m) {
      Eigen::VectorXd v;
      try {
        v = residual_of(m);
      } catch (const SingularLog&) {
        v = Eigen::VectorXd::Constant(dim, kNaN);
      } catch (const GimbalLock&) {
        v = Eigen::VectorXd::Constant(dim, kNaN);
      }
      r.values.col(static_cast<Eigen::Index>(m)) = v;
    }
  });
  return r;
}

// --- compose sweep ---------------------------------------------------------

ChainNoiseSpec<3> chain_spec(double sigma_t, double sigma_r, double rho, std::size_t steps) {
  Twist<3> d;
  d << 0.001 * sigma_t, 1e-5 * sigma_t, 1e-5, 1e-5, 1e-5, 0.003 * sigma_r;
  ChainNoiseSpec<3> spec;
  spec.step_covariance = d.asDiagonal();
  spec.step_mean = SE3::Translation(Eigen::Vector3d(1, 0, 0));
  spec.steps = steps;
  spec.rho = rho;
  return spec;
}

JointPoseBelief<3> chain_prefix(const JointPoseBelief<3>& chain, std::size_t steps) {
  const auto dim = static_cast<Eigen::Index>(6 * steps);
  std::vector<Key> keys(chain.keys().begin(), chain.keys().begin() + static_cast<long>(steps));
  std::vector<SE3> means(chain.means().begin(), chain.means().begin() + static_cast<long>(steps));
  return JointPoseBelief<3>(std::move(keys), std::move(means), chain.covariance().topLeftCorner(dim, dim));
}

void evaluate_chain(const ComposeSweepConfig& cfg, const RunOptions& run, const std::string& var,
                    double value, const JointPoseBelief<3>& chain, const Eigen::MatrixXd& draws,
                    std::vector<ComposePoint>& out) {
  const std::size_t n = chain.size();
  const std::size_t count = static_cast<std::size_t>(draws.cols());
  std::vector<SE3> finals(count);
  parallel_for((count + kSampleChunk - 1) / kSampleChunk, run.jobs, [&](std::size_t c) {
    const std::size_t end = std::min(count, (c + 1) * kSampleChunk);
    for (std::size_t m = c * kSampleChunk; m < end; ++m) {
      SE3 t = SE3::Identity();
      for (std::size_t k = 0; k < n; ++k) {
        const Twist<3> xi = draws.col(static_cast<Eigen::Index>(m)).segment<6>(static_cast<Eigen::Index>(6 * k));
        t = t * (exp_map<3>(xi) * chain.means()[k]);
      }
      finals[m] = t;
    }
  });

  for (Method method : cfg.methods) {
    const auto start = std::chrono::steady_clock::now();
    Eigen::MatrixXd sigma;
    Residuals res;
    if (method == Method::kSsc) {
      const SscBelief<3> predicted = head_to_tail_chain(ssc_from_lie_first_order(chain));
      const auto stop = std::chrono::steady_clock::now();
      const Eigen::VectorXd mean = predicted.mean();
      sigma = predicted.covariance();
      res = residuals(count, 6, run.jobs, [&](std::size_t m) -> Eigen::VectorXd {
        return ssc_difference(6, pose_to_ssc<3>(finals[m]), mean);
      });
      out.push_back({var, value, method, 0.0, 0.0,
                     std::chrono::duration<double, std::milli>(stop - start).count()});
    } else {
      const UncertainPose<3> predicted =
          compose_chain(method == Method::kLieCorrelated ? chain : chain.without_correlation());
      const auto stop = std::chrono::steady_clock::now();
      const SE3 mean_inv = predicted.mean().inverse();
      sigma = predicted.covariance();
      res = residuals(count, 6, run.jobs, [&](std::size_t m) -> Eigen::VectorXd {
        return log_map<3>(finals[m] * mean_inv);
      });
      out.push_back({var, value, method, 0.0, 0.0,
                     std::chrono::duration<double, std::milli>(stop - start).count()});
    }
    ComposePoint& p = out.back();
    p.containment = res.containment(sigma, cfg.probability, cfg.containment);
    p.cov_error = cov_error(sigma, res.moment());
    if (!cfg.record_timing) p.wall_ms.reset();
  }
}

// --- slam relative pose ----------------------------------------------------

struct PairTask {
  std::size_t offset;
  Key i;
  Key j;
};

Eigen::Vector3d pair_correlation(const PosePairBelief<2>& pair) {
  const auto a = pair.first_covariance();
  const auto b = pair.second_covariance();
  const auto c = pair.cross_covariance();
  Eigen::Vector3d out;
  for (int k = 0; k < 3; ++k) out[k] = linalg::correlation(c(k, k), a(k, k), b(k, k));
  return out;
}

std::vector<SlamPairRow> evaluate_pair(const SlamRelposeConfig& cfg, const MarginalCovariance& marginals,
                                       const PairTask& task, std::uint64_t seed) {
  std::vector<SlamPairRow> rows;
  auto row = [&](Method m) {
    SlamPairRow r;
    r.offset = task.offset;
    r.i = task.i;
    r.j = task.j;
    r.method = m;
    return r;
  };
  try {
    const PosePairBelief<2> pair = marginals.pair(task.i, task.j);
    const Eigen::Vector3d corr = pair_correlation(pair);
    const RelativeSamples<2> samples = sample_relative(pair, cfg.samples, seed);
    const Eigen::MatrixXd mc = mc_relative_cov(samples).covariance;
    for (Method m : cfg.methods) {
      SlamPairRow r = row(m);
      r.correlation = corr;
      if (m == Method::kSsc) {
        const JointPoseBelief<2> joint({task.i, task.j}, {pair.first(), pair.second()}, pair.covariance());
        const SscBelief<2> rel = tail_to_tail(ssc_from_lie_first_order(joint));
        Eigen::MatrixXd diffs(3, static_cast<Eigen::Index>(samples.poses.size()));
        for (std::size_t s = 0; s < samples.poses.size(); ++s) {
          diffs.col(static_cast<Eigen::Index>(s)) = ssc_difference(3, pose_to_ssc<2>(samples.poses[s]), rel.mean());
        }
        const Eigen::MatrixXd ssc_mc = second_moment(diffs);
        r.cov_error = cov_error(rel.covariance(), ssc_mc);
        r.normalized_cov_error = normalized_cov_error(rel.covariance(), ssc_mc);
      } else {
        const UncertainPose<2> rel =
            m == Method::kLieCorrelated ? between(pair) : between_ignoring_correlation(pair);
        r.cov_error = cov_error(rel.covariance(), mc);
        r.normalized_cov_error = normalized_cov_error(rel.covariance(), mc);
      }
      rows.push_back(std::move(r));
    }
  } catch (const std::exception& e) {
    rows.clear();
    for (Method m : cfg.methods) {
      SlamPairRow r = row(m);
      r.cov_error = r.normalized_cov_error = kNaN;
      r.correlation.setConstant(kNaN);
      r.status = std::string("error: ") + e.what();
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

void add_summary(std::vector<SummaryRow>& out, const std::string& offset, Method method,
                 const std::string& metric, const std::vector<double>& values) {
  SummaryRow s;
  s.offset = offset;
  s.method = method;
  s.metric = metric;
  s.count = values.size();
  if (values.empty()) {
    s.mean = s.std_error = s.std_dev = kNaN;
  } else {
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std_dev = values.size() > 1 ? std::sqrt(sq / static_cast<double>(values.size() - 1)) : 0.0;
    s.std_error = s.std_dev / std::sqrt(static_cast<double>(values.size()));
  }
  out.push_back(std::move(s));
}

// --- convert demo ----------------------------------------------------------

constexpr std::array<Eigen::Index, 3> kPlanarChannels = {0, 1, 5};

Eigen::Matrix3d planar_block(const Eigen::MatrixXd& cov) {
  Eigen::Matrix3d out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out(r, c) = cov(kPlanarChannels[r], kPlanarChannels[c]);
  }
  return out;
}

// Points of the ellipsoid u^T S^-1 u = radius^2 in the (x, y, yaw) channels,
// as rings of constant latitude; map turns a 6-vector into a plane point.
template <typename Map>
void add_locus(std::vector<LocusPoint>& out, const std::string& name, const Eigen::MatrixXd& cov,
               double radius, const ConvertDemoConfig& cfg, Map&& map) {
  const auto factor = linalg::covariance_factor(planar_block(cov));
  if (!factor) throw NumericalDegeneracy(fmt::format("{} covariance cannot be drawn", name));
  for (std::size_t ring = 0; ring < cfg.locus_rings; ++ring) {
    const double lat = std::numbers::pi * static_cast<double>(ring + 1) / static_cast<double>(cfg.locus_rings + 1);
    for (std::size_t k = 0; k < cfg.locus_points; ++k) {
      const double lon = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(cfg.locus_points);
      const Eigen::Vector3d u(std::sin(lat) * std::cos(lon), std::sin(lat) * std::sin(lon), std::cos(lat));
      const Eigen::Vector3d v = radius * (*factor) * u;
      Eigen::Matrix<double, 6, 1> full = Eigen::Matrix<double, 6, 1>::Zero();
      for (int c = 0; c < 3; ++c) full[kPlanarChannels[c]] = v[c];
      const Eigen::Vector2d p = map(full);
      out.push_back({name, ring, k, p.x(), p.y()});
    }
  }
}

ContainmentCount count_inside(const std::string& name, const Residuals& res, const Eigen::MatrixXd& sigma,
                              const ConvertDemoConfig& cfg) {
  ContainmentCount c;
  c.representation = name;
  c.total = static_cast<std::size_t>(res.values.cols());
  try {
    const double f = res.containment(sigma, cfg.probability, cfg.containment);
    c.fraction = f;
    c.contained = static_cast<std::size_t>(std::llround(f * static_cast<double>(c.total)));
  } catch (const InvalidArgument&) {
    c.fraction.reset();
  }
  return c;
}

// --- output ----------------------------------------------------------------

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

void write_csv(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  write_table(out, table);
}

}  // namespace

// --- compose sweep ---------------------------------------------------------

ComposeSweepResult run_compose_sweep(const ComposeSweepConfig& cfg, const RunOptions& run) {
  ComposeSweepResult result;
  for (std::size_t s = 0; s < cfg.sweeps.size(); ++s) {
    const std::string& var = cfg.sweeps[s];
    const std::uint64_t seed = derive_seed(run.seed, s);
    if (var == "steps") {
      // One batch of the longest chain; shorter chains use its leading steps,
      // which are distributed exactly like a chain of that length.
      const std::size_t longest = *std::max_element(cfg.steps.begin(), cfg.steps.end());
      const JointPoseBelief<3> chain =
          build_chain_joint(chain_spec(cfg.fixed_sigma, cfg.fixed_sigma, cfg.rho, longest));
      const SampleBatch batch = sample_joint(chain, cfg.samples, seed, run.jobs);
      for (std::size_t n : cfg.steps) {
        log(fmt::format("compose-sweep steps={}", n));
        evaluate_chain(cfg, run, var, static_cast<double>(n), chain_prefix(chain, n),
                       batch.draws().topRows(static_cast<Eigen::Index>(6 * n)), result.points);
      }
    } else {
      const bool rotation = var == "sigma_r";
      for (double value : rotation ? cfg.sigma_r : cfg.sigma_t) {
        log(fmt::format("compose-sweep {}={}", var, value));
        const JointPoseBelief<3> chain = build_chain_joint(
            chain_spec(rotation ? cfg.fixed_sigma : value, rotation ? value : cfg.fixed_sigma, cfg.rho,
                       cfg.fixed_steps));
        // Same seed for every value: the curve moves with the parameter, not
        // with the random numbers.
        const SampleBatch batch = sample_joint(chain, cfg.samples, seed, run.jobs);
        evaluate_chain(cfg, run, var, value, chain, batch.draws(), result.points);
      }
    }
  }
  return result;
}

Table ComposeSweepResult::table() const {
  Table t{{"sweep_var", "value", "method", "containment", "cov_error", "wall_ms"}, {}};
  for (const auto& p : points) {
    t.add({p.sweep_var, p.value, method_name(p.method), p.containment, number_or_na(p.cov_error),
           p.wall_ms ? Cell(*p.wall_ms) : Cell(Na{})});
  }
  return t;
}

// --- relative pose alpha sweep ---------------------------------------------

RelposeAlphaResult run_relpose_alpha_sweep(const RelposeAlphaConfig& cfg, const RunOptions& run) {
  const SE3 g1 = SE3::FromMatrixNearest(cfg.pose_1);
  const SE3 g2 = SE3::FromMatrixNearest(cfg.pose_2);
  const Covariance<3> marginal = cfg.marginal_diagonal.asDiagonal();
  const Covariance<3> cross = cfg.cross_diagonal.asDiagonal();
  RelposeAlphaResult result;
  result.relative_mean = g1.inverse() * g2;
  // One seed for all alphas; the draws scale with sqrt(alpha).
  const std::uint64_t seed = derive_seed(run.seed, 0);
  for (double alpha : cfg.alphas) {
    log(fmt::format("relpose-alpha-sweep alpha={}", alpha));
    const auto pair = PosePairBelief<3>::FromBlocks(g1, g2, alpha * marginal, alpha * marginal, alpha * cross);
    const Eigen::MatrixXd mc = mc_relative_cov(pair, cfg.samples, seed, run.jobs).covariance;
    result.rows.push_back({alpha, Method::kLieCorrelated, cov_error(between(pair).covariance(), mc)});
    result.rows.push_back(
        {alpha, Method::kLieIndependent, cov_error(between_ignoring_correlation(pair).covariance(), mc)});
  }
  return result;
}

Table RelposeAlphaResult::table() const {
  Table t{{"alpha", "method", "cov_error"}, {}};
  for (const auto& r : rows) t.add({r.alpha, method_name(r.method), r.cov_error});
  return t;
}

// --- slam relative pose ----------------------------------------------------

PoseGraph load_graph_source(const GraphSource& source, std::uint64_t seed) {
  if (source.path) return load_graph(*source.path);
  return generate_grid_world(source.grid_world, derive_seed(seed, 0));
}

SlamRelposeResult run_slam_relpose(const SlamRelposeConfig& cfg, const RunOptions& run) {
  SlamRelposeResult result;
  const PoseGraph graph = load_graph_source(cfg.graph, run.seed);
  log(fmt::format("slam-relpose solving {} poses, {} edges", graph.vertices().size(), graph.edges().size()));
  const SolveResult solved = solve(graph, cfg.solve);
  result.solve_report = solved.report;
  result.poses = solved.graph.vertices().size();
  log(fmt::format("slam-relpose chi2 {:.6g} -> {:.6g} in {} iterations", solved.report.initial_chi2,
                  solved.report.final_chi2, solved.report.iterations));
  const MarginalCovariance marginals(solved.graph, cfg.solve.jacobian_step, cfg.solve.gauge_information);

  std::vector<Key> keys;
  for (const auto& [k, pose] : solved.graph.vertices()) keys.push_back(k);
  std::vector<PairTask> tasks;
  for (std::size_t offset : cfg.offsets) {
    if (offset >= keys.size()) {
      log(fmt::format("slam-relpose offset {} exceeds the graph; skipped", offset));
      continue;
    }
    const std::size_t available = keys.size() - offset;
    const std::size_t picks = std::min(cfg.pairs_per_offset, available);
    for (std::size_t k = 0; k < picks; ++k) {
      const std::size_t i = k * available / picks;
      tasks.push_back({offset, keys[i], keys[i + offset]});
    }
  }
  log(fmt::format("slam-relpose evaluating {} pairs", tasks.size()));

  std::vector<std::vector<SlamPairRow>> per_task(tasks.size());
  parallel_for(tasks.size(), run.jobs, [&](std::size_t t) {
    per_task[t] = evaluate_pair(cfg, marginals, tasks[t], derive_seed(run.seed, 1 + t));
  });
  for (auto& rows : per_task) {
    for (auto& r : rows) result.rows.push_back(std::move(r));
  }

  std::vector<std::string> offsets;
  for (std::size_t o : cfg.offsets) offsets.push_back(std::to_string(o));
  offsets.push_back("all");
  for (const std::string& offset : offsets) {
    for (Method m : cfg.methods) {
      std::vector<double> err, norm;
      for (const auto& r : result.rows) {
        if (r.method != m || r.status != "ok") continue;
        if (offset != "all" && std::to_string(r.offset) != offset) continue;
        err.push_back(r.cov_error);
        norm.push_back(r.normalized_cov_error);
      }
      add_summary(result.summary, offset, m, "cov_error", err);
      add_summary(result.summary, offset, m, "normalized_cov_error", norm);
    }
  }
  return result;
}

Table SlamRelposeResult::table() const {
  Table t{{"offset", "i", "j", "method", "cov_error", "normalized_cov_error", "corr_coeff_x", "corr_coeff_y",
           "corr_coeff_theta", "status"},
          {}};
  for (const auto& r : rows) {
    t.add({std::uint64_t{r.offset}, std::uint64_t{r.i}, std::uint64_t{r.j}, method_name(r.method),
           number_or_na(r.cov_error), number_or_na(r.normalized_cov_error), number_or_na(r.correlation[0]),
           number_or_na(r.correlation[1]), number_or_na(r.correlation[2]), r.status});
  }
  return t;
}

Table SlamRelposeResult::summary_table() const {
  Table t{{"offset", "method", "metric", "mean", "std_error", "std_dev", "count"}, {}};
  for (const auto& s : summary) {
    t.add({s.offset, method_name(s.method), s.metric, number_or_na(s.mean), number_or_na(s.std_error),
           number_or_na(s.std_dev), std::uint64_t{s.count}});
  }
  return t;
}

const SummaryRow* SlamRelposeResult::overall(Method method, const std::string& metric) const {
  for (const auto& s : summary) {
    if (s.offset == "all" && s.method == method && s.metric == metric) return &s;
  }
  return nullptr;
}

// --- convert demo ----------------------------------------------------------

ConvertDemoResult run_convert_demo(const ConvertDemoConfig& cfg, const RunOptions& run) {
  ConvertDemoResult result;
  const SE3 mean = ssc_to_pose<3>(cfg.mean);
  const JointPoseBelief<3> truth({0}, {mean}, cfg.covariance);
  const SscBelief<3> ssc = ssc_from_lie_first_order(truth);
  const ConversionResult<3> converted = ut_convert(ssc, cfg.ut);
  result.ut_residual_mean_norm = converted.residual_mean_norm;
  result.sigma_points = converted.sigma_point_count;
  const SE3 converted_mean = converted.belief.means()[0];
  log(fmt::format("convert-demo sigma points {}, weighted residual mean {:.3e}", converted.sigma_point_count,
                  converted.residual_mean_norm));

  const double radius = std::sqrt(chi2_quantile(cfg.probability, 3));
  const auto lie_point = [](const SE3& m) {
    return [m](const Eigen::Matrix<double, 6, 1>& xi) -> Eigen::Vector2d {
      return (exp_map<3>(Twist<3>(xi)) * m).translation().head<2>();
    };
  };
  add_locus(result.loci, "true", truth.covariance(), radius, cfg, lie_point(mean));
  add_locus(result.loci, "ssc", ssc.covariance(), radius, cfg,
            [&](const Eigen::Matrix<double, 6, 1>& d) -> Eigen::Vector2d {
              return (ssc.mean() + d).head<2>();
            });
  add_locus(result.loci, "converted", converted.belief.covariance(), radius, cfg, lie_point(converted_mean));

  const SampleBatch batch = sample_gaussian(cfg.covariance, cfg.samples, derive_seed(run.seed, 0), run.jobs);
  std::vector<SE3> poses(cfg.samples);
  for (std::size_t m = 0; m < cfg.samples; ++m) poses[m] = exp_map<3>(Twist<3>(batch.draw(m))) * mean;

  Residuals truth_res{batch.draws()};
  const SE3 converted_inv = converted_mean.inverse();
  const Residuals converted_res = residuals(cfg.samples, 6, run.jobs, [&](std::size_t m) -> Eigen::VectorXd {
    return log_map<3>(poses[m] * converted_inv);
  });
  const Residuals ssc_res = residuals(cfg.samples, 6, run.jobs, [&](std::size_t m) -> Eigen::VectorXd {
    return ssc_difference(6, pose_to_ssc<3>(poses[m]), ssc.mean());
  });
  result.containment.push_back(count_inside("true", truth_res, truth.covariance(), cfg));
  result.containment.push_back(count_inside("ssc", ssc_res, ssc.covariance(), cfg));
  result.containment.push_back(count_inside("converted", converted_res, converted.belief.covariance(), cfg));
  return result;
}

Table ConvertDemoResult::loci_table() const {
  Table t{{"representation", "ring", "index", "x", "y"}, {}};
  for (const auto& p : loci) {
    t.add({p.representation, std::uint64_t{p.ring}, std::uint64_t{p.index}, p.x, p.y});
  }
  return t;
}

Table ConvertDemoResult::containment_table() const {
  Table t{{"representation", "contained", "total", "fraction"}, {}};
  for (const auto& c : containment) {
    t.add({c.representation, c.fraction ? Cell(std::uint64_t{c.contained}) : Cell(Na{}), std::uint64_t{c.total},
           c.fraction ? Cell(*c.fraction) : Cell(Na{})});
  }
  return t;
}

const ContainmentCount& ConvertDemoResult::count(const std::string& representation) const {
  for (const auto& c : containment) {
    if (c.representation == representation) return c;
  }
  throw InvalidArgument(fmt::format("no containment count for '{}'", representation));
}

// --- solve graph -----------------------------------------------------------

SolveGraphResult run_solve_graph(const SolveGraphConfig& cfg, const RunOptions& run) {
  const PoseGraph graph = load_graph_source(cfg.graph, run.seed);
  log(fmt::format("solve-graph {} poses, {} edges", graph.vertices().size(), graph.edges().size()));
  SolveGraphResult result{solve(graph, cfg.solve)};
  const SolveReport& r = result.solution.report;
  log(fmt::format("solve-graph chi2 {:.6g} -> {:.6g} in {} iterations{}", r.initial_chi2, r.final_chi2,
                  r.iterations, r.converged ? "" : " (not converged)"));
  return result;
}

Table SolveGraphResult::table() const {
  Table t{{"record", "key", "x", "y", "theta", "iterations", "initial_chi2", "final_chi2", "converged"}, {}};
  for (const auto& [key, pose] : solution.graph.vertices()) {
    const auto& r = pose.rotation().matrix();
    t.add({std::string("vertex"), std::uint64_t{key}, pose.translation().x(), pose.translation().y(),
           std::atan2(r(1, 0), r(0, 0)), Na{}, Na{}, Na{}, Na{}});
  }
  const SolveReport& r = solution.report;
  t.add({std::string("report"), Na{}, Na{}, Na{}, Na{}, std::int64_t{r.iterations}, r.initial_chi2, r.final_chi2,
         std::int64_t{r.converged ? 1 : 0}});
  return t;
}

// --- driver ----------------------------------------------------------------

std::vector<std::filesystem::path> run_and_write(const Config& cfg) {
  const auto& dir = cfg.run.output_dir;
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  auto csv = [&](const std::string& name, const Table& t) {
    files.push_back(dir / name);
    write_csv(files.back(), t);
  };
  auto script = [&](const std::string& name, const std::string& text) {
    files.push_back(dir / name);
    write_file(files.back(), text);
  };
  switch (cfg.experiment) {
    case Experiment::kComposeSweep: {
      const auto r = run_compose_sweep(cfg.compose, cfg.run);
      csv("compose_sweep.csv", r.table());
      script("plot_compose_sweep.py", compose_sweep_plot_script());
      break;
    }
    case Experiment::kRelposeAlphaSweep: {
      const auto r = run_relpose_alpha_sweep(cfg.relpose, cfg.run);
      csv("relpose_alpha_sweep.csv", r.table());
      script("plot_relpose_alpha_sweep.py", relpose_alpha_plot_script());
      break;
    }
    case Experiment::kSlamRelpose: {
      const auto r = run_slam_relpose(cfg.slam, cfg.run);
      csv("slam_relpose.csv", r.table());
      csv("slam_relpose_summary.csv", r.summary_table());
      script("plot_slam_relpose.py", slam_relpose_plot_script());
      break;
    }
    case Experiment::kConvertDemo: {
      const auto r = run_convert_demo(cfg.convert, cfg.run);
      csv("convert_demo_loci.csv", r.loci_table());
      csv("convert_demo_containment.csv", r.containment_table());
      script("plot_convert_demo.py", convert_demo_plot_script());
      break;
    }
    case Experiment::kSolveGraph: {
      const auto r = run_solve_graph(cfg.solve, cfg.run);
      csv("solve_graph.csv", r.table());
      break;
    }
  }
  for (const auto& f : files) log(fmt::format("wrote {}", f.string()));
  return files;
}

}  // namespace jpose::cli
