#include "experiments/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace jpose::cli {

namespace {

using Json = nlohmann::json;

// Reads the members of one JSON object and rejects any it never consumed.
class Fields {
 public:
  Fields(const Json& object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", where_));
  }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (const Json* v = find(key)) out = convert<T>(*v, key);
  }

  template <typename T>
  T convert(const Json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}: '{}' has the wrong type ({})", where_, key, v.dump()));
    }
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& item : object_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(fmt::format("{}: unknown key '{}'", where_, item.key()));
      }
    }
  }

 private:
  const Json& object_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename T>
void require_positive(const std::string& what, T value) {
  if (!(value > T(0))) throw ConfigError(fmt::format("{} must be positive", what));
}

template <typename T>
void require_all_positive(const std::string& what, const std::vector<T>& values) {
  if (values.empty()) throw ConfigError(fmt::format("{} must not be empty", what));
  for (const T& v : values) require_positive(what, v);
}

template <int N>
Eigen::Matrix<double, N, 1> read_vector(Fields& f, const std::string& key,
                                         const Eigen::Matrix<double, N, 1>& fallback) {
  const Json* v = f.find(key);
  if (!v) return fallback;
  const auto values = f.convert<std::vector<double>>(*v, key);
  if (values.size() != static_cast<std::size_t>(N)) {
    throw ConfigError(fmt::format("{} needs {} numbers", f.path(key), N));
  }
  return Eigen::Map<const Eigen::Matrix<double, N, 1>>(values.data());
}

template <int N>
Eigen::Matrix<double, N, N> read_matrix(Fields& f, const std::string& key,
                                        const Eigen::Matrix<double, N, N>& fallback) {
  const Json* v = f.find(key);
  if (!v) return fallback;
  const auto rows = f.convert<std::vector<std::vector<double>>>(*v, key);
  Eigen::Matrix<double, N, N> m;
  if (rows.size() != static_cast<std::size_t>(N)) {
    throw ConfigError(fmt::format("{} needs {} rows", f.path(key), N));
  }
  for (int r = 0; r < N; ++r) {
    if (rows[static_cast<std::size_t>(r)].size() != static_cast<std::size_t>(N)) {
      throw ConfigError(fmt::format("{} needs {} columns", f.path(key), N));
    }
    for (int c = 0; c < N; ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return m;
}

std::vector<Method> read_methods(Fields& f, const std::vector<Method>& fallback) {
  const Json* v = f.find("methods");
  if (!v) return fallback;
  std::vector<Method> out;
  for (const auto& name : f.convert<std::vector<std::string>>(*v, "methods")) {
    if (name == "lie-correlated") out.push_back(Method::kLieCorrelated);
    else if (name == "lie-independent") out.push_back(Method::kLieIndependent);
    else if (name == "ssc") out.push_back(Method::kSsc);
    else throw ConfigError(fmt::format("{}: unknown method '{}'", f.path("methods"), name));
  }
  if (out.empty()) throw ConfigError(fmt::format("{} must not be empty", f.path("methods")));
  return out;
}

ContainmentMode read_containment(Fields& f, ContainmentMode fallback) {
  const Json* v = f.find("containment");
  if (!v) return fallback;
  const auto name = f.convert<std::string>(*v, "containment");
  if (name == "full") return ContainmentMode::kFull;
  if (name == "position") return ContainmentMode::kPositionOnly;
  throw ConfigError(fmt::format("{} must be \"full\" or \"position\"", f.path("containment")));
}

void read_probability(Fields& f, double& p) {
  f.read("probability", p);
  if (!(p > 0.0 && p < 1.0)) throw ConfigError(f.path("probability") + " must lie in (0, 1)");
}

GraphSource read_graph_source(Fields& f, const std::filesystem::path& base_dir) {
  GraphSource src;
  if (const Json* v = f.find("graph")) {
    std::filesystem::path p = f.convert<std::string>(*v, "graph");
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p)) throw ConfigError(fmt::format("graph file not found: {}", p.string()));
    src.path = p;
  }
  if (const Json* v = f.find("grid_world")) {
    Fields g(*v, f.path("grid_world"));
    GridWorldSpec& s = src.grid_world;
    g.read("poses", s.poses);
    s.sigma = read_vector<3>(g, "sigma", s.sigma);
    g.read("turn_probability", s.turn_probability);
    g.read("closures_per_visit", s.closures_per_visit);
    g.read("extent", s.extent);
    g.finish();
    if (s.poses < 2) throw ConfigError(g.path("poses") + " must be at least 2");
    if ((s.sigma.array() <= 0.0).any()) throw ConfigError(g.path("sigma") + " must be positive");
    if (!(s.turn_probability >= 0.0 && s.turn_probability <= 1.0)) {
      throw ConfigError(g.path("turn_probability") + " must lie in [0, 1]");
    }
    require_positive(g.path("extent"), s.extent);
  }
  return src;
}

void read_solve_options(Fields& f, SolveOptions& s) {
  f.read("max_iterations", s.max_iterations);
  f.read("relative_tolerance", s.relative_tolerance);
  f.read("gauge_information", s.gauge_information);
  require_positive(f.path("max_iterations"), s.max_iterations);
  require_positive(f.path("relative_tolerance"), s.relative_tolerance);
  require_positive(f.path("gauge_information"), s.gauge_information);
}

void read_compose(Fields& f, ComposeSweepConfig& c) {
  f.read("sweeps", c.sweeps);
  for (const auto& s : c.sweeps) {
    if (s != "steps" && s != "sigma_r" && s != "sigma_t") {
      throw ConfigError(fmt::format("{}: unknown sweep '{}'", f.path("sweeps"), s));
    }
  }
  if (c.sweeps.empty()) throw ConfigError(f.path("sweeps") + " must not be empty");
  f.read("steps", c.steps);
  f.read("sigma_r", c.sigma_r);
  f.read("sigma_t", c.sigma_t);
  f.read("fixed_steps", c.fixed_steps);
  f.read("fixed_sigma", c.fixed_sigma);
  f.read("rho", c.rho);
  f.read("samples", c.samples);
  read_probability(f, c.probability);
  c.containment = read_containment(f, c.containment);
  c.methods = read_methods(f, c.methods);
  f.read("record_timing", c.record_timing);
  require_all_positive(f.path("steps"), c.steps);
  require_all_positive(f.path("sigma_r"), c.sigma_r);
  require_all_positive(f.path("sigma_t"), c.sigma_t);
  require_positive(f.path("fixed_steps"), c.fixed_steps);
  require_positive(f.path("fixed_sigma"), c.fixed_sigma);
  require_positive(f.path("samples"), c.samples);
  if (!(c.rho > -1.0 && c.rho < 1.0)) throw ConfigError(f.path("rho") + " must lie in (-1, 1)");
}

void read_relpose(Fields& f, RelposeAlphaConfig& c) {
  f.read("alphas", c.alphas);
  if (c.alphas.empty()) throw ConfigError(f.path("alphas") + " must not be empty");
  for (double a : c.alphas) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError(f.path("alphas") + " must be >= 0");
  }
  f.read("samples", c.samples);
  require_positive(f.path("samples"), c.samples);
  c.pose_1 = read_matrix<4>(f, "pose_1", c.pose_1);
  c.pose_2 = read_matrix<4>(f, "pose_2", c.pose_2);
  c.marginal_diagonal = read_vector<6>(f, "marginal_diagonal", c.marginal_diagonal);
  c.cross_diagonal = read_vector<6>(f, "cross_diagonal", c.cross_diagonal);
  if ((c.marginal_diagonal.array() < 0.0).any()) {
    throw ConfigError(f.path("marginal_diagonal") + " must be non-negative");
  }
}

void read_slam(Fields& f, SlamRelposeConfig& c, const std::filesystem::path& base_dir) {
  c.graph = read_graph_source(f, base_dir);
  f.read("offsets", c.offsets);
  f.read("pairs_per_offset", c.pairs_per_offset);
  f.read("samples", c.samples);
  c.methods = read_methods(f, c.methods);
  read_solve_options(f, c.solve);
  require_all_positive(f.path("offsets"), c.offsets);
  require_positive(f.path("pairs_per_offset"), c.pairs_per_offset);
  require_positive(f.path("samples"), c.samples);
}

void read_convert(Fields& f, ConvertDemoConfig& c) {
  c.mean = read_vector<6>(f, "mean", c.mean);
  if (const Json* v = f.find("covariance_diagonal")) {
    const auto d = f.convert<std::vector<double>>(*v, "covariance_diagonal");
    if (d.size() != 6) throw ConfigError(f.path("covariance_diagonal") + " needs 6 numbers");
    c.covariance = Eigen::Map<const Eigen::Matrix<double, 6, 1>>(d.data()).asDiagonal();
  }
  c.covariance = read_matrix<6>(f, "covariance", c.covariance);
  if (!c.covariance.isApprox(c.covariance.transpose(), 1e-12)) {
    throw ConfigError(f.path("covariance") + " must be symmetric");
  }
  f.read("samples", c.samples);
  require_positive(f.path("samples"), c.samples);
  read_probability(f, c.probability);
  c.containment = read_containment(f, c.containment);
  f.read("locus_points", c.locus_points);
  f.read("locus_rings", c.locus_rings);
  if (c.locus_points < 3) throw ConfigError(f.path("locus_points") + " must be at least 3");
  require_positive(f.path("locus_rings"), c.locus_rings);
  if (const Json* v = f.find("ut")) {
    Fields u(*v, f.path("ut"));
    if (const Json* m = u.find("mode")) {
      const auto name = u.convert<std::string>(*m, "mode");
      if (name == "standard") c.ut.mode = UtMode::kStandard;
      else if (name == "scaled") c.ut.mode = UtMode::kScaled;
      else throw ConfigError(u.path("mode") + " must be \"standard\" or \"scaled\"");
    }
    u.read("kappa", c.ut.kappa);
    u.read("alpha", c.ut.alpha);
    u.read("beta", c.ut.beta);
    u.finish();
  }
}

}  // namespace

std::optional<Experiment> parse_experiment(const std::string& name) {
  if (name == "compose-sweep") return Experiment::kComposeSweep;
  if (name == "relpose-alpha-sweep") return Experiment::kRelposeAlphaSweep;
  if (name == "slam-relpose") return Experiment::kSlamRelpose;
  if (name == "convert-demo") return Experiment::kConvertDemo;
  if (name == "solve-graph") return Experiment::kSolveGraph;
  return std::nullopt;
}

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::kComposeSweep: return "compose-sweep";
    case Experiment::kRelposeAlphaSweep: return "relpose-alpha-sweep";
    case Experiment::kSlamRelpose: return "slam-relpose";
    case Experiment::kConvertDemo: return "convert-demo";
    case Experiment::kSolveGraph: return "solve-graph";
  }
  return "?";
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kLieCorrelated: return "lie-correlated";
    case Method::kLieIndependent: return "lie-independent";
    case Method::kSsc: return "ssc";
  }
  return "?";
}

RelposeAlphaConfig::RelposeAlphaConfig() {
  pose_1 << 0.707107, -0.707107, 0, 3, 0.707107, 0.707107, 0, 3, 0, 0, 1, 0, 0, 0, 0, 1;
  pose_2 << 0.707107, -0.707107, 0, 4.5, 0.707107, 0.707107, 0, 4.5, 0, 0, 1, 0, 0, 0, 0, 1;
  marginal_diagonal << 0.005, 0.005, 1e-5, 1e-5, 1e-5, 0.006;
  cross_diagonal << 0.0005, 0.0005, 0, 0, 0, 0.005;
}

ConvertDemoConfig::ConvertDemoConfig() {
  mean << 3, 3, 0, 0, 0, 0.7853981633974483;
  Eigen::Matrix<double, 6, 1> d;
  d << 0.005, 0.005, 1e-5, 1e-5, 1e-5, 0.006;
  covariance = d.asDiagonal();
}

Config parse_config(Experiment experiment, const std::string& json_text,
                    const std::filesystem::path& base_dir) {
  Json root;
  try {
    root = Json::parse(json_text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  Fields f(root, "config");
  Config cfg;
  cfg.experiment = experiment;
  if (const Json* v = f.find("experiment")) {
    const auto name = f.convert<std::string>(*v, "experiment");
    if (parse_experiment(name) != experiment) {
      throw ConfigError(fmt::format("config is for '{}' but '{}' was requested", name,
                                    experiment_name(experiment)));
    }
  }
  f.read("seed", cfg.run.seed);
  if (const Json* v = f.find("output_dir")) {
    std::filesystem::path p = f.convert<std::string>(*v, "output_dir");
    cfg.run.output_dir = p.is_relative() ? base_dir / p : p;
  }
  f.read("jobs", cfg.run.jobs);
  switch (experiment) {
    case Experiment::kComposeSweep: read_compose(f, cfg.compose); break;
    case Experiment::kRelposeAlphaSweep: read_relpose(f, cfg.relpose); break;
    case Experiment::kSlamRelpose: read_slam(f, cfg.slam, base_dir); break;
    case Experiment::kConvertDemo: read_convert(f, cfg.convert); break;
    case Experiment::kSolveGraph:
      cfg.solve.graph = read_graph_source(f, base_dir);
      read_solve_options(f, cfg.solve.solve);
      break;
  }
  f.finish();
  return cfg;
}

Config load_config(Experiment experiment, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file: {}", path.string()));
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(experiment, text.str(), path.parent_path());
}

}  // namespace jpose::cli
