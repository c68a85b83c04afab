#include "netreg/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "netreg/errors.hpp"

namespace netreg {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open '" + path + "'");
  return in;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

long long parse_node(const std::string& s, Eigen::Index line) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::InvalidInput, "line " + std::to_string(line) + ": node id '" + s + "' is not an integer");
  }
  return v;
}

// RFC 4180 style: commas separate, double quotes protect, "" escapes a quote.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string short_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json optional_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

std::optional<double> number_or_empty(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

double number_or_nan(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

json finite_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd json_vector(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

std::string to_string(RMode m) {
  switch (m) {
    case RMode::Fixed: return "fixed";
    case RMode::AutoThreshold: return "auto-threshold";
    case RMode::AutoBootstrap: return "auto-bootstrap";
  }
  return "?";
}

RMode rmode_from_string(const std::string& s) {
  if (s == "fixed") return RMode::Fixed;
  if (s == "auto-threshold") return RMode::AutoThreshold;
  if (s == "auto-bootstrap") return RMode::AutoBootstrap;
  throw Error(ErrorCode::InvalidInput, "unknown r mode '" + s + "'");
}

std::string to_string(ChisqDfMode m) { return m == ChisqDfMode::PaperK ? "paper-K" : "dim-gamma"; }

ChisqDfMode df_mode_from_string(const std::string& s) {
  if (s == "paper-K") return ChisqDfMode::PaperK;
  if (s == "dim-gamma") return ChisqDfMode::DimGamma;
  throw Error(ErrorCode::InvalidInput, "unknown df mode '" + s + "'");
}

std::string to_string(ProbeVector p) {
  switch (p) {
    case ProbeVector::Orthogonal: return "orthogonal";
    case ProbeVector::Leading: return "leading";
    case ProbeVector::Design: return "design";
  }
  return "?";
}

ProbeVector probe_from_string(const std::string& s) {
  if (s == "orthogonal") return ProbeVector::Orthogonal;
  if (s == "leading") return ProbeVector::Leading;
  if (s == "design") return ProbeVector::Design;
  throw Error(ErrorCode::InvalidInput, "unknown probe '" + s + "'");
}

}  // namespace

std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// --- readers -----------------------------------------------------------------

AdjacencyMatrix read_edge_list(std::istream& in, Eigen::Index n, const EdgeListOptions& options,
                               EdgeListStats* stats) {
  if (n < 1) throw Error(ErrorCode::InvalidInput, "edge list needs n >= 1");
  AdjacencyMatrix a{Eigen::MatrixXd::Zero(n, n)};
  EdgeListStats st;
  std::string line;
  Eigen::Index lineno = 0;
  const long long offset = options.one_based ? 1 : 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 2 || tok.size() > 3) {
      throw Error(ErrorCode::InvalidInput, "line " + std::to_string(lineno) + ": expected 'i j [w]'");
    }
    const long long i = parse_node(tok[0], lineno) - offset;
    const long long j = parse_node(tok[1], lineno) - offset;
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw Error(ErrorCode::DimensionMismatch,
                  "line " + std::to_string(lineno) + ": node id outside the " + std::to_string(n) + " covariate rows");
    }
    double w = 1.0;
    if (options.weighted) {
      if (tok.size() != 3) throw Error(ErrorCode::InvalidInput, "line " + std::to_string(lineno) + ": missing weight");
      const auto pw = parse_double(tok[2]);
      if (!pw || !std::isfinite(*pw)) {
        throw Error(ErrorCode::InvalidInput, "line " + std::to_string(lineno) + ": bad weight '" + tok[2] + "'");
      }
      w = *pw;
    }
    if (i == j) {
      ++st.self_loops;
      continue;
    }
    double& cell = a.A(i, j);
    if (cell != 0.0) {
      ++st.duplicates;
      cell = std::max(cell, w);
    } else {
      ++st.edges;
      cell = w;
    }
    a.A(j, i) = cell;
  }
  if (stats) *stats = st;
  return a;
}

AdjacencyMatrix read_edge_list(const std::string& path, Eigen::Index n, const EdgeListOptions& options,
                               EdgeListStats* stats) {
  std::ifstream in = open_input(path);
  return read_edge_list(in, n, options, stats);
}

CommunityAssignment read_communities(std::istream& in, Eigen::Index n) {
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || v < 1) {
      throw Error(ErrorCode::InvalidInput, "community labels must be positive integers, got '" + t + "'");
    }
    labels.push_back(v - 1);
  }
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "communities file has " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " nodes");
  }
  return CommunityAssignment(std::move(labels));
}

CommunityAssignment read_communities(const std::string& path, Eigen::Index n) {
  std::ifstream in = open_input(path);
  return read_communities(in, n);
}

CovariateTable read_covariates(std::istream& in, const CovariateOptions& options) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, "covariate file is empty");
  const std::vector<std::string> header = split_csv(line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::DimensionMismatch, "row " + std::to_string(rows.size() + 1) + " has " +
                                                    std::to_string(cells.size()) + " fields, header has " +
                                                    std::to_string(header.size()));
    }
    rows.push_back(std::move(cells));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw Error(ErrorCode::InvalidInput, "covariate file has no data rows");

  auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found");
    return static_cast<std::size_t>(it - header.begin());
  };

  CovariateTable out;
  const std::size_t yi = column_index(options.response);
  out.Y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto v = parse_double(rows[static_cast<std::size_t>(i)][yi]);
    if (!v) {
      throw Error(ErrorCode::NonNumericResponse,
                  "response '" + options.response + "' has non-numeric value '" + rows[static_cast<std::size_t>(i)][yi] + "'");
    }
    out.Y(i) = *v;
  }

  std::vector<std::string> use = options.columns;
  if (use.empty()) {
    for (const auto& h : header)
      if (h != options.response) use.push_back(h);
  }
  for (const auto& [col, _] : options.reference) column_index(col);
  for (const auto& [col, _] : options.merge) column_index(col);

  std::vector<Eigen::VectorXd> cols;
  if (options.intercept) {
    cols.push_back(Eigen::VectorXd::Ones(n));
    out.names.push_back("(intercept)");
  }
  for (const auto& name : use) {
    const std::size_t ci = column_index(name);
    Eigen::VectorXd numeric(n);
    bool is_numeric = true;
    for (Eigen::Index i = 0; i < n && is_numeric; ++i) {
      const auto v = parse_double(rows[static_cast<std::size_t>(i)][ci]);
      if (v) {
        numeric(i) = *v;
      } else {
        is_numeric = false;
      }
    }
    if (is_numeric && !options.reference.count(name) && !options.merge.count(name)) {
      cols.push_back(numeric);
      out.names.push_back(name);
      continue;
    }
    // Categorical: relabel, then one dummy per non-reference level.
    std::vector<std::string> levels(static_cast<std::size_t>(n));
    const auto merge_it = options.merge.find(name);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::string v = rows[static_cast<std::size_t>(i)][ci];
      if (v.empty()) throw Error(ErrorCode::InvalidInput, "column '" + name + "' has an empty value");
      if (merge_it != options.merge.end()) {
        const auto m = merge_it->second.find(v);
        if (m != merge_it->second.end()) v = m->second;
      }
      levels[static_cast<std::size_t>(i)] = v;
    }
    const std::set<std::string> distinct(levels.begin(), levels.end());
    std::string reference = *distinct.begin();
    if (const auto r = options.reference.find(name); r != options.reference.end()) {
      if (!distinct.count(r->second)) {
        throw Error(ErrorCode::InvalidInput, "reference level '" + r->second + "' does not occur in '" + name + "'");
      }
      reference = r->second;
    }
    for (const auto& level : distinct) {
      if (level == reference) continue;
      Eigen::VectorXd d(n);
      for (Eigen::Index i = 0; i < n; ++i) d(i) = levels[static_cast<std::size_t>(i)] == level ? 1.0 : 0.0;
      cols.push_back(d);
      out.names.push_back(name + "=" + level);
    }
  }
  if (cols.empty()) throw Error(ErrorCode::InvalidInput, "no covariate columns selected");
  out.X.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.X.col(static_cast<Eigen::Index>(j)) = cols[j];
  if (options.standardize) out.X = standardize_columns(out.X);
  return out;
}

CovariateTable read_covariates(const std::string& path, const CovariateOptions& options) {
  std::ifstream in = open_input(path);
  return read_covariates(in, options);
}

Dataset read_dataset(const std::string& network, const EdgeListOptions& edge_options, const std::string& covariates,
                     const CovariateOptions& covariate_options, const std::optional<std::string>& communities) {
  CovariateTable table = read_covariates(covariates, covariate_options);
  Dataset d;
  d.X = std::move(table.X);
  d.Y = std::move(table.Y);
  d.names = std::move(table.names);
  d.A = read_edge_list(network, d.X.rows(), edge_options, &d.edge_stats);
  if (communities) d.communities = read_communities(*communities, d.X.rows());
  return d;
}

// --- fit reports -------------------------------------------------------------

bool FitReport::operator==(const FitReport& o) const {
  const bool tests_equal =
      network_effect.has_value() == o.network_effect.has_value() &&
      (!network_effect || (network_effect->chisq == o.network_effect->chisq && network_effect->df == o.network_effect->df &&
                           network_effect->pvalue == o.network_effect->pvalue));
  return coefficients == o.coefficients && tests_equal && sigma2 == o.sigma2 && r == o.r && K == o.K &&
         diagnostics == o.diagnostics;
}

FitReport make_fit_report(const FitResult& fit, const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                          double level, const json& extra_diagnostics) {
  FitReport rep;
  for (Eigen::Index j = 0; j < fit.p(); ++j) {
    CoefficientRow row;
    row.name = j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)] : "x" + std::to_string(j + 1);
    row.theta = fit.theta_hat(j);
    row.beta = fit.beta_hat(j);
    try {
      const Inference inf = coefficient_test(fit, x, j, level);
      row.se = inf.std_error;
      row.z = inf.z;
      row.p = inf.pvalue;
      row.ci_lo = inf.ci_lo;
      row.ci_hi = inf.ci_hi;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDirection) throw;
    }
    rep.coefficients.push_back(std::move(row));
  }
  rep.network_effect = fit.network_test;
  rep.sigma2 = fit.sigma2_hat;
  rep.r = fit.r_used;
  rep.K = fit.K;

  json& d = rep.diagnostics;
  d["n"] = fit.n();
  d["p"] = fit.p();
  d["dof"] = fit.dof;
  d["sigma_hat"] = vector_json(fit.sigma_hat_values);
  d["fallback"] = fit.fallback;
  d["eigen_gap_warning"] = fit.eigen_gap_warning;
  d["chisq_df_mode"] = to_string(fit.chisq_df_mode);
  if (fit.rank_report) {
    const RankSelectionReport& rr = *fit.rank_report;
    d["rank_method"] = rr.method == RankMethod::Bootstrap ? "bootstrap" : "threshold";
    d["rank_threshold"] = rr.threshold;
    if (rr.method == RankMethod::Bootstrap) {
      d["bootstrap_delta"] = rr.delta;
      d["bootstrap_B"] = rr.B;
    } else {
      d["threshold_unreliable"] = rr.unreliable;
    }
  } else {
    d["rank_method"] = "fixed";
  }
  d["notes"] = fit.notes;
  for (const auto& [key, value] : extra_diagnostics.items()) d[key] = value;
  return rep;
}

json to_json(const FitReport& r) {
  json j;
  json coefs = json::array();
  for (const auto& c : r.coefficients) {
    coefs.push_back({{"name", c.name},
                     {"theta", c.theta},
                     {"beta", c.beta},
                     {"se", optional_number(c.se)},
                     {"z", optional_number(c.z)},
                     {"p", optional_number(c.p)},
                     {"ci_lo", optional_number(c.ci_lo)},
                     {"ci_hi", optional_number(c.ci_hi)}});
  }
  j["coefficients"] = coefs;
  if (r.network_effect) {
    j["network_effect"] = {{"chisq", r.network_effect->chisq}, {"df", r.network_effect->df}, {"p", r.network_effect->pvalue}};
  } else {
    j["network_effect"] = nullptr;
  }
  j["sigma2"] = r.sigma2;
  j["r"] = r.r;
  j["K"] = r.K;
  j["diagnostics"] = r.diagnostics;
  return j;
}

FitReport fit_report_from_json(const json& j) {
  FitReport r;
  for (const auto& c : j.at("coefficients")) {
    CoefficientRow row;
    row.name = c.at("name").get<std::string>();
    row.theta = c.at("theta").get<double>();
    row.beta = c.at("beta").get<double>();
    row.se = number_or_empty(c.at("se"));
    row.z = number_or_empty(c.at("z"));
    row.p = number_or_empty(c.at("p"));
    row.ci_lo = number_or_empty(c.at("ci_lo"));
    row.ci_hi = number_or_empty(c.at("ci_hi"));
    r.coefficients.push_back(std::move(row));
  }
  if (!j.at("network_effect").is_null()) {
    const json& t = j.at("network_effect");
    r.network_effect = NetworkTest{t.at("chisq").get<double>(), t.at("df").get<Eigen::Index>(), t.at("p").get<double>()};
  }
  r.sigma2 = j.at("sigma2").get<double>();
  r.r = j.at("r").get<Eigen::Index>();
  r.K = j.at("K").get<Eigen::Index>();
  r.diagnostics = j.at("diagnostics");
  return r;
}

json to_json(const RankSelectionReport& r) {
  json j{{"r_hat", r.r_hat},
         {"sigma_hat", vector_json(r.sigma_hat)},
         {"threshold", r.threshold},
         {"method", r.method == RankMethod::Bootstrap ? "bootstrap" : "threshold"},
         {"delta", r.delta},
         {"B", r.B},
         {"unreliable", r.unreliable}};
  return j;
}

RankSelectionReport rank_report_from_json(const json& j) {
  RankSelectionReport r;
  r.r_hat = j.at("r_hat").get<Eigen::Index>();
  r.sigma_hat = json_vector(j.at("sigma_hat"));
  r.threshold = j.at("threshold").get<double>();
  r.method = j.at("method").get<std::string>() == "bootstrap" ? RankMethod::Bootstrap : RankMethod::Threshold;
  r.delta = j.at("delta").get<double>();
  r.B = j.at("B").get<int>();
  r.unreliable = j.at("unreliable").get<bool>();
  return r;
}

// --- experiment reports ------------------------------------------------------

namespace {

json config_json(const ScenarioConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  return {{"n", c.n},
          {"K", c.K},
          {"network", to_string(c.network)},
          {"density", to_string(c.density)},
          {"explicit_degree", c.explicit_degree},
          {"design", to_string(c.design)},
          {"effect", to_string(c.effect)},
          {"beta", vector_json(c.beta)},
          {"theta", vector_json(c.theta)},
          {"gamma", vector_json(c.gamma)},
          {"alpha_scale", c.alpha_scale},
          {"noise_sigma2", c.noise_sigma2},
          {"reps", c.reps},
          {"seed", c.seed},
          {"methods", methods},
          {"r_mode", to_string(c.r_mode)},
          {"r", c.r},
          {"bootstrap_B", c.bootstrap_B},
          {"level", c.level},
          {"chisq_df_mode", to_string(c.chisq_df_mode)},
          {"threads", c.threads},
          {"keep_statistics", c.keep_statistics}};
}

ScenarioConfig config_from_json(const json& j) {
  ScenarioConfig c;
  c.n = j.at("n").get<Eigen::Index>();
  c.K = j.at("K").get<Eigen::Index>();
  c.network = j.at("network").get<std::string>() == "dcbm" ? NetworkKind::Dcbm : NetworkKind::Sbm;
  const std::string density = j.at("density").get<std::string>();
  c.density = density == "explicit" ? DensityKind::Explicit : density_from_string(density);
  c.explicit_degree = j.at("explicit_degree").get<double>();
  c.design = j.at("design").get<std::string>() == "eigenspace" ? DesignKind::Eigenspace : DesignKind::RandomCovariates;
  const std::string effect = j.at("effect").get<std::string>();
  c.effect = effect == "eigenspace" ? EffectKind::Eigenspace
             : effect == "zero_gamma" ? EffectKind::ZeroGamma
                                      : EffectKind::SmoothLaplacian;
  c.beta = json_vector(j.at("beta"));
  c.theta = json_vector(j.at("theta"));
  c.gamma = json_vector(j.at("gamma"));
  c.alpha_scale = j.at("alpha_scale").get<double>();
  c.noise_sigma2 = j.at("noise_sigma2").get<double>();
  c.reps = j.at("reps").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.methods.clear();
  for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
  c.r_mode = rmode_from_string(j.at("r_mode").get<std::string>());
  c.r = j.at("r").get<Eigen::Index>();
  c.bootstrap_B = j.at("bootstrap_B").get<int>();
  c.level = j.at("level").get<double>();
  c.chisq_df_mode = df_mode_from_string(j.at("chisq_df_mode").get<std::string>());
  c.threads = j.at("threads").get<int>();
  c.keep_statistics = j.at("keep_statistics").get<bool>();
  return c;
}

}  // namespace

json to_json(const ExperimentReport& report, bool include_timing) {
  json j;
  j["config"] = config_json(report.config);
  j["degree"] = report.degree;
  json methods = json::array();
  for (const auto& m : report.methods) {
    json metrics = json::object();
    for (const auto& [name, metric] : m.metrics) metrics[name] = {{"value", finite_or_null(metric.value)}, {"se", finite_or_null(metric.se)}};
    methods.push_back({{"method", to_string(m.method)},
                       {"reps", m.reps},
                       {"failures", m.failures},
                       {"failure_codes", m.failure_codes},
                       {"metrics", metrics},
                       {"chisq_df", m.chisq_df},
                       {"chisq_samples", m.chisq_samples}});
  }
  j["methods"] = methods;
  if (include_timing) j["wall_seconds"] = report.wall_seconds;
  return j;
}

ExperimentReport experiment_report_from_json(const json& j) {
  ExperimentReport r;
  r.config = config_from_json(j.at("config"));
  r.degree = j.at("degree").get<double>();
  for (const auto& m : j.at("methods")) {
    MethodReport mr;
    mr.method = method_from_string(m.at("method").get<std::string>());
    mr.reps = m.at("reps").get<int>();
    mr.failures = m.at("failures").get<int>();
    mr.failure_codes = m.at("failure_codes").get<std::map<std::string, int>>();
    for (const auto& [name, metric] : m.at("metrics").items()) {
      mr.metrics[name] = {number_or_nan(metric.at("value")), number_or_nan(metric.at("se"))};
    }
    mr.chisq_df = m.at("chisq_df").get<Eigen::Index>();
    mr.chisq_samples = m.at("chisq_samples").get<std::vector<double>>();
    r.methods.push_back(std::move(mr));
  }
  if (j.contains("wall_seconds")) r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

std::string experiment_csv(const ExperimentReport& report, const std::string& experiment, bool header) {
  std::ostringstream os;
  if (header) os << "experiment,network,design,effect,n,density,degree,method,metric,value,se,reps,failures\n";
  const ScenarioConfig& c = report.config;
  for (const auto& m : report.methods) {
    for (const auto& [name, metric] : m.metrics) {
      os << experiment << ',' << to_string(c.network) << ',' << to_string(c.design) << ',' << to_string(c.effect) << ','
         << c.n << ',' << to_string(c.density) << ',' << short_number(report.degree) << ',' << to_string(m.method) << ','
         << name << ',' << short_number(metric.value) << ',' << short_number(metric.se) << ',' << m.reps << ','
         << m.failures << '\n';
    }
  }
  return os.str();
}

json to_json(const ConcentrationReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"degree", c.degree},
                     {"d", c.d},
                     {"bound", c.bound},
                     {"fraction_within", c.fraction_within},
                     {"median", c.median},
                     {"q95", c.q95},
                     {"max", c.max},
                     {"lower_witness", c.lower_witness},
                     {"values", c.values}});
  }
  return {{"n", r.n}, {"K", r.K}, {"probe", to_string(r.probe)}, {"c_calibrated", r.c_calibrated}, {"cells", cells}};
}

ConcentrationReport concentration_report_from_json(const json& j) {
  ConcentrationReport r;
  r.n = j.at("n").get<Eigen::Index>();
  r.K = j.at("K").get<Eigen::Index>();
  r.probe = probe_from_string(j.at("probe").get<std::string>());
  r.c_calibrated = j.at("c_calibrated").get<double>();
  for (const auto& c : j.at("cells")) {
    ConcentrationCell cell;
    cell.degree = c.at("degree").get<double>();
    cell.d = c.at("d").get<double>();
    cell.bound = c.at("bound").get<double>();
    cell.fraction_within = c.at("fraction_within").get<double>();
    cell.median = c.at("median").get<double>();
    cell.q95 = c.at("q95").get<double>();
    cell.max = c.at("max").get<double>();
    cell.lower_witness = c.at("lower_witness").get<double>();
    cell.values = c.at("values").get<std::vector<double>>();
    r.cells.push_back(std::move(cell));
  }
  return r;
}

std::string concentration_csv(const ConcentrationReport& r) {
  std::ostringstream os;
  os << "n,K,probe,degree,d,bound,fraction_within,median,q95,max,lower_witness,reps\n";
  for (const auto& c : r.cells) {
    os << r.n << ',' << r.K << ',' << to_string(r.probe) << ',' << short_number(c.degree) << ',' << short_number(c.d)
       << ',' << short_number(c.bound) << ',' << short_number(c.fraction_within) << ',' << short_number(c.median) << ','
       << short_number(c.q95) << ',' << short_number(c.max) << ',' << short_number(c.lower_witness) << ','
       << c.values.size() << '\n';
  }
  return os.str();
}

}  // namespace netreg
