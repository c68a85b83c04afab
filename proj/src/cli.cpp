#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "netreg/cli_io.hpp"
#include "netreg/errors.hpp"

namespace netreg {

using nlohmann::json;

namespace {

struct DataArgs {
  std::string network;
  std::string covariates;
  std::string response;
  std::vector<std::string> columns;
  std::vector<std::string> reference;  // COL=LEVEL
  std::vector<std::string> merge;      // COL:FROM=TO
  std::string communities;
  bool intercept = false;
  bool no_standardize = false;
  bool zero_based = false;
  bool weighted = false;
};

struct ModelArgs {
  Eigen::Index k = 0;
  std::string r = "auto-bootstrap";
  std::string phat = "adjacency";
  double alpha = 0.05;
  std::string df_mode = "dim-gamma";
  int bootstrap_b = 50;
  bool guard = false;
};

struct CommonArgs {
  std::optional<std::uint64_t> seed;
  std::string out;
  bool no_timestamp = false;
};

void add_data_options(CLI::App* app, DataArgs& d) {
  app->add_option("--network", d.network, "Edge list file")->required();
  app->add_option("--covariates", d.covariates, "Covariate CSV with a header row")->required();
  app->add_option("--response", d.response, "Response column")->required();
  app->add_option("--columns", d.columns, "Covariate columns (default: all but the response)")->delimiter(',');
  app->add_option("--reference", d.reference, "Reference level, COL=LEVEL");
  app->add_option("--merge", d.merge, "Merge a level into another, COL:FROM=TO");
  app->add_option("--communities", d.communities, "Community labels, one per line");
  app->add_flag("--intercept", d.intercept, "Add an intercept column");
  app->add_flag("--no-standardize", d.no_standardize, "Keep covariates on their original scale");
  app->add_flag("--zero-based", d.zero_based, "Edge list node ids start at 0");
  app->add_flag("--weighted", d.weighted, "Use the third edge list column as the weight");
}

void add_model_options(CLI::App* app, ModelArgs& m) {
  app->add_option("--k", m.k, "Network subspace dimension")->required()->check(CLI::PositiveNumber);
  app->add_option("--r", m.r, "Intersection dimension: an integer, auto-threshold or auto-bootstrap");
  app->add_option("--phat", m.phat, "Network estimate")
      ->check(CLI::IsMember({"adjacency", "laplacian", "sbm", "dcbm", "sbm-laplacian", "dcbm-laplacian"}));
  app->add_option("--alpha", m.alpha, "Test and interval level")->check(CLI::Range(0.0, 1.0));
  app->add_option("--df-mode", m.df_mode, "Chi-square degrees of freedom")->check(CLI::IsMember({"dim-gamma", "paper-K"}));
  app->add_option("--bootstrap-b", m.bootstrap_b, "Bootstrap replicates for auto-bootstrap")->check(CLI::PositiveNumber);
  app->add_flag("--guard", m.guard, "Fall back to least squares when the network test does not reject");
}

void add_common_options(CLI::App* app, CommonArgs& c, const std::string& out_help) {
  app->add_option("--seed", c.seed, "Random seed (default: NETREG_SEED or 0)");
  app->add_option("--out", c.out, out_help);
  app->add_flag("--no-timestamp", c.no_timestamp, "Omit timestamps and timings from reports");
}

std::uint64_t resolve_seed(const CommonArgs& c, std::uint64_t fallback) {
  if (c.seed) return *c.seed;
  if (const char* env = std::getenv("NETREG_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidInput, std::string("NETREG_SEED is not an integer: '") + env + "'");
    }
  }
  return fallback;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::pair<std::string, std::string> split_once(const std::string& s, char sep, const std::string& what) {
  const auto pos = s.find(sep);
  if (pos == std::string::npos || pos == 0 || pos + 1 == s.size()) {
    throw Error(ErrorCode::InvalidInput, "malformed " + what + " '" + s + "'");
  }
  return {s.substr(0, pos), s.substr(pos + 1)};
}

Dataset load(const DataArgs& d) {
  EdgeListOptions eo;
  eo.one_based = !d.zero_based;
  eo.weighted = d.weighted;
  CovariateOptions co;
  co.response = d.response;
  co.columns = d.columns;
  co.intercept = d.intercept;
  co.standardize = !d.no_standardize;
  for (const auto& ref : d.reference) {
    const auto [col, level] = split_once(ref, '=', "--reference");
    co.reference[col] = level;
  }
  for (const auto& m : d.merge) {
    const auto [col, rule] = split_once(m, ':', "--merge");
    const auto [from, to] = split_once(rule, '=', "--merge");
    co.merge[col][from] = to;
  }
  std::optional<std::string> comm;
  if (!d.communities.empty()) comm = d.communities;
  return read_dataset(d.network, eo, d.covariates, co, comm);
}

NetworkEstimate make_estimate(const Dataset& data, const std::string& phat) {
  const bool needs_groups = phat.rfind("sbm", 0) == 0 || phat.rfind("dcbm", 0) == 0;
  if (needs_groups && !data.communities) throw Error(ErrorCode::InvalidInput, "--phat " + phat + " needs --communities");
  if (phat == "adjacency") return adjacency_estimate(data.A);
  if (phat == "laplacian") return laplacian(data.A);
  if (phat == "sbm") return estimate_sbm(data.A, *data.communities);
  if (phat == "dcbm") return estimate_dcbm(data.A, *data.communities);
  if (phat == "sbm-laplacian") return laplacian_of(estimate_sbm(data.A, *data.communities));
  return laplacian_of(estimate_dcbm(data.A, *data.communities));
}

FitConfig make_config(const ModelArgs& m, std::uint64_t seed, bool check_scale) {
  FitConfig c;
  c.K = m.k;
  if (m.r == "auto-threshold") {
    c.r_mode = RMode::AutoThreshold;
  } else if (m.r == "auto-bootstrap") {
    c.r_mode = RMode::AutoBootstrap;
  } else {
    c.r_mode = RMode::Fixed;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(m.r, &used);
      if (used != m.r.size() || v < 0) throw std::invalid_argument(m.r);
      c.r = v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidInput, "--r must be a non-negative integer, auto-threshold or auto-bootstrap");
    }
  }
  c.alpha_level = m.alpha;
  c.chisq_df_mode = m.df_mode == "paper-K" ? ChisqDfMode::PaperK : ChisqDfMode::DimGamma;
  c.bootstrap_B = m.bootstrap_b;
  c.bootstrap_seed = seed;
  c.check_scale = check_scale;
  return c;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::InvalidInput, "cannot write '" + path + "'");
  f << content;
}

void print_fit(const FitReport& r, std::ostream& out) {
  out << std::left << std::setw(20) << "term";
  for (const char* h : {"theta", "beta", "se", "z", "p", "ci_lo", "ci_hi"}) out << ' ' << std::setw(12) << h;
  out << '\n';
  auto cell = [](const std::optional<double>& v) { return v ? fmt6(*v) : std::string("NA"); };
  for (const auto& c : r.coefficients) {
    out << std::setw(20) << c.name << ' ' << std::setw(12) << fmt6(c.theta) << ' ' << std::setw(12) << fmt6(c.beta);
    for (const auto& v : {c.se, c.z, c.p, c.ci_lo, c.ci_hi}) out << ' ' << std::setw(12) << cell(v);
    out << '\n';
  }
  out << std::right;
  out << "sigma2 = " << fmt6(r.sigma2) << "  r = " << r.r << "  K = " << r.K << '\n';
  if (r.network_effect) {
    out << "network effect: chisq = " << fmt6(r.network_effect->chisq) << "  df = " << r.network_effect->df
        << "  p = " << fmt6(r.network_effect->pvalue) << '\n';
  } else {
    out << "network effect: not testable\n";
  }
  if (r.diagnostics.value("fallback", false)) out << "model guard: fell back to least squares\n";
}

json dataset_diagnostics(const Dataset& d, const ModelArgs& m, const CommonArgs& c, std::uint64_t seed) {
  json j{{"phat", m.phat},
         {"d_hat", average_degree(d.A)},
         {"edges", d.edge_stats.edges},
         {"duplicate_edges", d.edge_stats.duplicates},
         {"self_loops", d.edge_stats.self_loops},
         {"components", connected_components(d.A)},
         {"seed", seed}};
  if (!c.no_timestamp) j["timestamp"] = timestamp();
  return j;
}

FitResult run_fit(const Dataset& data, const ModelArgs& m, std::uint64_t seed, bool check_scale) {
  const NetworkEstimate est = make_estimate(data, m.phat);
  const FitConfig cfg = make_config(m, seed, check_scale);
  return m.guard ? model_guard_fit(data.X, data.Y, est, cfg, &data.A) : fit(data.X, data.Y, est, cfg, &data.A);
}

// --- simulate ----------------------------------------------------------------

struct Preset {
  std::string name;
  bool comparison = false;
  NetworkKind network = NetworkKind::Sbm;
  EffectKind effect = EffectKind::Eigenspace;
  DesignKind design = DesignKind::Eigenspace;
  int reps = 50;
  std::vector<Method> methods;
  RMode r_mode = RMode::Fixed;
};

Preset find_preset(const std::string& key) {
  static const std::map<std::string, std::string> aliases = {
      {"table2", "phase-transition"}, {"table3", "coverage"}, {"table4", "type1"},
      {"table5", "dcbm-phase-transition"}, {"table6", "dcbm-coverage"}, {"table7", "mse"}, {"table8", "dcbm-mse"}};
  const auto it = aliases.find(key);
  const std::string name = it == aliases.end() ? key : it->second;
  Preset p;
  p.name = name;
  const bool dcbm = name.rfind("dcbm-", 0) == 0;
  const std::string base = dcbm ? name.substr(5) : name;
  p.network = dcbm ? NetworkKind::Dcbm : NetworkKind::Sbm;
  const Method param = dcbm ? Method::SP_DCBM : Method::SP_SBM;
  const Method param_l = dcbm ? Method::SP_DCBM_L : Method::SP_SBM_L;
  if (base == "phase-transition") {
    p.reps = 50;
    p.methods = {Method::SP, param};
  } else if (base == "coverage") {
    p.reps = 500;
    p.methods = {Method::SP, param};
  } else if (base == "type1") {
    p.reps = 500;
    p.effect = EffectKind::ZeroGamma;
    p.methods = {Method::SP, param};
  } else if (base == "mse") {
    p.comparison = true;
    p.design = DesignKind::RandomCovariates;
    p.reps = 50;
    p.methods = {Method::SP, param, Method::OLS, Method::SIM, Method::RNC, Method::SP_L, param_l};
    p.r_mode = RMode::AutoBootstrap;
  } else {
    throw Error(ErrorCode::InvalidInput, "unknown scenario '" + key + "'");
  }
  return p;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(method_from_string(n));
  return out;
}

struct Density {
  DensityKind kind = DensityKind::SqrtN;
  double value = 0.0;
};

Density parse_density(const std::string& s) {
  if (s == "2logn" || s == "sqrtn" || s == "n23") return {density_from_string(s), 0.0};
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !(v > 0.0)) throw std::invalid_argument(s);
    return {DensityKind::Explicit, v};
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidInput, "density must be 2logn, sqrtn, n23 or a positive degree, got '" + s + "'");
  }
}

double degree_of(const Density& d, Eigen::Index n) {
  ScenarioConfig c;
  c.n = n;
  c.density = d.kind;
  c.explicit_degree = d.value;
  return target_degree(c);
}

RMode parse_rmode(const std::string& s) {
  if (s == "fixed") return RMode::Fixed;
  if (s == "auto-threshold") return RMode::AutoThreshold;
  if (s == "auto-bootstrap") return RMode::AutoBootstrap;
  throw Error(ErrorCode::InvalidInput, "unknown --r-mode '" + s + "'");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regression with network cohesion by subspace projection"};
  app.require_subcommand(1);

  DataArgs data;
  ModelArgs model;
  CommonArgs common;

  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit the model and report coefficients and the network test");
  add_data_options(fit_cmd, data);
  add_model_options(fit_cmd, model);
  add_common_options(fit_cmd, common, "Write the JSON report here ('-' prints it instead of the table)");

  CLI::App* test_cmd = app.add_subcommand("test-network-effect", "Chi-square test of the network effect");
  add_data_options(test_cmd, data);
  add_model_options(test_cmd, model);
  add_common_options(test_cmd, common, "Write the JSON report here ('-' prints it instead of the summary)");

  std::string rank_method = "bootstrap";
  CLI::App* select_cmd = app.add_subcommand("select-r", "Choose the intersection dimension");
  add_data_options(select_cmd, data);
  add_model_options(select_cmd, model);
  select_cmd->add_option("--method", rank_method, "Selection rule")->check(CLI::IsMember({"bootstrap", "threshold"}));
  add_common_options(select_cmd, common, "Write the JSON report here ('-' prints it instead of the summary)");

  std::string scenario = "phase-transition";
  std::optional<Eigen::Index> sim_n;
  std::string sim_density = "sqrtn";
  std::optional<int> sim_reps;
  std::vector<std::string> sim_methods;
  std::string sim_network, sim_design, sim_effect, sim_r_mode;
  std::optional<Eigen::Index> sim_r;
  int sim_b = 50;
  std::string sim_df_mode = "dim-gamma";
  double sim_level = 0.05;
  int threads = 1;
  bool fast = false;
  bool keep_statistics = false;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Run a simulation scenario");
  sim_cmd->add_option("--scenario", scenario,
                      "phase-transition, coverage, type1, mse, their dcbm- variants, or table2..table8");
  sim_cmd->add_option("--n", sim_n, "Number of nodes")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--density", sim_density, "2logn, sqrtn, n23 or an average degree");
  sim_cmd->add_option("--reps", sim_reps, "Replicates")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--methods", sim_methods, "Comma-separated methods")->delimiter(',');
  sim_cmd->add_option("--network", sim_network, "sbm or dcbm")->check(CLI::IsMember({"sbm", "dcbm"}));
  sim_cmd->add_option("--design", sim_design, "eigenspace or random")->check(CLI::IsMember({"eigenspace", "random"}));
  sim_cmd->add_option("--effect", sim_effect, "eigenspace, zero or smooth")
      ->check(CLI::IsMember({"eigenspace", "zero", "smooth"}));
  sim_cmd->add_option("--r-mode", sim_r_mode, "fixed, auto-threshold or auto-bootstrap");
  sim_cmd->add_option("--r", sim_r, "Intersection dimension for --r-mode fixed");
  sim_cmd->add_option("--bootstrap-b", sim_b, "Bootstrap replicates")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--df-mode", sim_df_mode, "dim-gamma or paper-K")->check(CLI::IsMember({"dim-gamma", "paper-K"}));
  sim_cmd->add_option("--level", sim_level, "Test and interval level")->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  sim_cmd->add_flag("--fast", fast, "Quarter of the replicates and n <= 1000");
  sim_cmd->add_flag("--keep-statistics", keep_statistics, "Store per-replicate chi-square statistics");
  CommonArgs sim_common;
  add_common_options(sim_cmd, sim_common, "Output prefix: writes PREFIX.csv and PREFIX.json");

  Eigen::Index conc_n = 2000;
  const Eigen::Index conc_k = 4;
  std::vector<std::string> conc_densities = {"2logn", "sqrtn", "n23"};
  int conc_reps = 100;
  std::string probe = "orthogonal";
  CLI::App* conc_cmd = app.add_subcommand("concentration", "Eigenvector concentration check on SBM networks");
  conc_cmd->add_option("--n", conc_n, "Number of nodes")->check(CLI::PositiveNumber);
  conc_cmd->add_option("--densities", conc_densities, "Comma-separated densities")->delimiter(',');
  conc_cmd->add_option("--reps", conc_reps, "Networks per density")->check(CLI::PositiveNumber);
  conc_cmd->add_option("--probe", probe, "orthogonal, leading or design")
      ->check(CLI::IsMember({"orthogonal", "leading", "design"}));
  conc_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  CommonArgs conc_common;
  add_common_options(conc_cmd, conc_common, "Output prefix: writes PREFIX.csv and PREFIX.json");

  auto report_error = [&](std::string_view code, const std::string& message) {
    err << json{{"error", code}, {"message", message}}.dump() << '\n';
  };

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      out << app.help(e.get_name().empty() ? "" : "");
      if (auto subs = app.get_subcommands(); !subs.empty()) out << subs.front()->help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      report_error("InvalidInput", e.what());
      return 2;
    }

    if (fit_cmd->parsed() || test_cmd->parsed()) {
      const std::uint64_t seed = resolve_seed(common, 0);
      const Dataset d = load(data);
      const FitResult f = run_fit(d, model, seed, !data.no_standardize);
      const FitReport rep = make_fit_report(f, d.X, d.names, model.alpha, dataset_diagnostics(d, model, common, seed));
      const std::string text = to_json(rep).dump(2) + "\n";
      if (common.out == "-") {
        out << text;
        return 0;
      }
      if (!common.out.empty()) write_file(common.out, text);
      if (fit_cmd->parsed()) {
        print_fit(rep, out);
      } else if (rep.network_effect) {
        out << "chisq = " << fmt6(rep.network_effect->chisq) << "  df = " << rep.network_effect->df
            << "  p = " << fmt6(rep.network_effect->pvalue) << '\n';
      } else {
        throw Error(ErrorCode::NoNetworkComponent, "K = r leaves no network component to test");
      }
      return 0;
    }

    if (select_cmd->parsed()) {
      const std::uint64_t seed = resolve_seed(common, 0);
      const Dataset d = load(data);
      ModelArgs m = model;
      m.r = rank_method == "bootstrap" ? "auto-bootstrap" : "auto-threshold";
      const FitResult f = run_fit(d, m, seed, !data.no_standardize);
      const RankSelectionReport& rr = *f.rank_report;
      if (common.out == "-") {
        out << to_json(rr).dump(2) << '\n';
        return 0;
      }
      if (!common.out.empty()) write_file(common.out, to_json(rr).dump(2) + "\n");
      out << "r_hat = " << rr.r_hat << "  method = " << rank_method << "  threshold = " << fmt6(rr.threshold);
      if (rr.method == RankMethod::Bootstrap) out << "  delta = " << fmt6(rr.delta) << "  B = " << rr.B;
      if (rr.unreliable) out << "  (threshold floored at 0)";
      out << "\nsigma_hat =";
      for (Eigen::Index i = 0; i < rr.sigma_hat.size(); ++i) out << ' ' << fmt6(rr.sigma_hat(i));
      out << '\n';
      return 0;
    }

    if (sim_cmd->parsed()) {
      const Preset p = find_preset(scenario);
      ScenarioConfig c;
      c.seed = resolve_seed(sim_common, 1);
      c.network = p.network;
      c.design = p.design;
      c.effect = p.effect;
      c.reps = p.reps;
      c.methods = p.methods;
      c.r_mode = p.r_mode;
      if (sim_n) c.n = *sim_n;
      const Density dens = parse_density(sim_density);
      c.density = dens.kind;
      c.explicit_degree = dens.value;
      if (sim_reps) c.reps = *sim_reps;
      if (!sim_methods.empty()) c.methods = parse_methods(sim_methods);
      if (!sim_network.empty()) c.network = sim_network == "dcbm" ? NetworkKind::Dcbm : NetworkKind::Sbm;
      if (!sim_design.empty()) c.design = sim_design == "random" ? DesignKind::RandomCovariates : DesignKind::Eigenspace;
      if (!sim_effect.empty()) {
        c.effect = sim_effect == "zero" ? EffectKind::ZeroGamma
                   : sim_effect == "smooth" ? EffectKind::SmoothLaplacian
                                            : EffectKind::Eigenspace;
      }
      if (!sim_r_mode.empty()) c.r_mode = parse_rmode(sim_r_mode);
      if (sim_r) c.r = *sim_r;
      c.bootstrap_B = sim_b;
      c.chisq_df_mode = sim_df_mode == "paper-K" ? ChisqDfMode::PaperK : ChisqDfMode::DimGamma;
      c.level = sim_level;
      c.threads = threads;
      c.keep_statistics = keep_statistics;
      if (fast) {
        c.reps = std::max(1, c.reps / 4);
        c.n = std::min<Eigen::Index>(c.n, 1000);
      }
      const ExperimentReport rep = p.comparison ? run_comparison_experiment(c) : run_inference_experiment(c);
      if (!sim_common.out.empty()) {
        write_file(sim_common.out + ".csv", experiment_csv(rep, p.name));
        json j = to_json(rep, !sim_common.no_timestamp);
        j["experiment"] = p.name;
        if (!sim_common.no_timestamp) j["timestamp"] = timestamp();
        write_file(sim_common.out + ".json", j.dump(2) + "\n");
      }
      out << "experiment,network,design,effect,n,density,degree,method,metric,value,se,reps,failures\n";
      for (const auto& m : rep.methods) {
        for (const auto& [name, metric] : m.metrics) {
          out << p.name << ',' << to_string(c.network) << ',' << to_string(c.design) << ',' << to_string(c.effect) << ','
              << c.n << ',' << to_string(c.density) << ',' << fmt6(rep.degree) << ',' << to_string(m.method) << ','
              << name << ',' << fmt6(metric.value) << ',' << fmt6(metric.se) << ',' << m.reps << ',' << m.failures
              << '\n';
        }
      }
      return 0;
    }

    if (conc_cmd->parsed()) {
      std::vector<double> degrees;
      for (const auto& s : conc_densities) degrees.push_back(degree_of(parse_density(s), conc_n));
      const ProbeVector pv = probe == "leading" ? ProbeVector::Leading
                             : probe == "design" ? ProbeVector::Design
                                                 : ProbeVector::Orthogonal;
      const ConcentrationReport rep =
          run_concentration_check(conc_n, conc_k, degrees, conc_reps, resolve_seed(conc_common, 1), pv, threads);
      if (!conc_common.out.empty()) {
        write_file(conc_common.out + ".csv", concentration_csv(rep));
        json j = to_json(rep);
        if (!conc_common.no_timestamp) j["timestamp"] = timestamp();
        write_file(conc_common.out + ".json", j.dump(2) + "\n");
      }
      out << "degree,d,bound,fraction_within,median,q95,max\n";
      for (const auto& cell : rep.cells) {
        out << fmt6(cell.degree) << ',' << fmt6(cell.d) << ',' << fmt6(cell.bound) << ',' << fmt6(cell.fraction_within)
            << ',' << fmt6(cell.median) << ',' << fmt6(cell.q95) << ',' << fmt6(cell.max) << '\n';
      }
      return 0;
    }
    return 0;
  } catch (const Error& e) {
    report_error(to_string(e.code()), e.what());
    return is_input_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    report_error("InternalError", e.what());
    return 3;
  }
}

}  // namespace netreg
