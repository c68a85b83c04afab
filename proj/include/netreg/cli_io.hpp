#pragma once

// File formats and the command-line surface.
//
// Edge list: whitespace-separated "i j [w]" per line, '#' starts a comment.
// Node ids are 1-based by default (EdgeListOptions::one_based). Duplicate
// edges collapse to the maximum weight; self-loops are dropped and counted.
//
// Covariates: CSV with a header row, one row per node in node order. Columns
// that do not parse as numbers are categorical and expand to 0/1 dummies
// against a reference level (the first level in sorted order unless given).
//
// Communities: one integer label per line, 1-based, n lines.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "netreg/estimator.hpp"
#include "netreg/network_models.hpp"
#include "netreg/rank_selection.hpp"
#include "netreg/simharness.hpp"

namespace netreg {

struct EdgeListOptions {
  bool one_based = true;
  /// Keep the third column as the edge weight; otherwise every edge is 1.
  bool weighted = false;
};

struct EdgeListStats {
  Eigen::Index edges = 0;       // distinct undirected edges kept
  Eigen::Index duplicates = 0;  // repeated lines collapsed
  Eigen::Index self_loops = 0;  // dropped
};

/// Reads an edge list into an n x n symmetric matrix. Node ids outside
/// [1, n] (or [0, n-1]) raise DimensionMismatch.
AdjacencyMatrix read_edge_list(std::istream& in, Eigen::Index n, const EdgeListOptions& options = {},
                               EdgeListStats* stats = nullptr);
AdjacencyMatrix read_edge_list(const std::string& path, Eigen::Index n, const EdgeListOptions& options = {},
                               EdgeListStats* stats = nullptr);

CommunityAssignment read_communities(std::istream& in, Eigen::Index n);
CommunityAssignment read_communities(const std::string& path, Eigen::Index n);

struct CovariateOptions {
  std::string response;
  /// Columns to use; empty means every column except the response.
  std::vector<std::string> columns;
  /// Reference level per categorical column.
  std::map<std::string, std::string> reference;
  /// Level relabelling per categorical column, applied before dummy coding.
  std::map<std::string, std::map<std::string, std::string>> merge;
  bool intercept = false;
  /// Scale columns to norm sqrt(n).
  bool standardize = true;
};

struct CovariateTable {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  std::vector<std::string> names;
};

CovariateTable read_covariates(std::istream& in, const CovariateOptions& options);
CovariateTable read_covariates(const std::string& path, const CovariateOptions& options);

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  AdjacencyMatrix A;
  std::vector<std::string> names;
  std::optional<CommunityAssignment> communities;
  EdgeListStats edge_stats;
};

Dataset read_dataset(const std::string& network, const EdgeListOptions& edge_options, const std::string& covariates,
                     const CovariateOptions& covariate_options, const std::optional<std::string>& communities);

// --- reports -----------------------------------------------------------------

struct CoefficientRow {
  std::string name;
  double theta = 0.0;
  double beta = 0.0;
  // Empty where the direction is degenerate.
  std::optional<double> se;
  std::optional<double> z;
  std::optional<double> p;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;

  bool operator==(const CoefficientRow&) const = default;
};

struct FitReport {
  std::vector<CoefficientRow> coefficients;
  std::optional<NetworkTest> network_effect;
  double sigma2 = 0.0;
  Eigen::Index r = 0;
  Eigen::Index K = 0;
  nlohmann::json diagnostics = nlohmann::json::object();

  bool operator==(const FitReport& other) const;
};

FitReport make_fit_report(const FitResult& fit, const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                          double level, const nlohmann::json& extra_diagnostics = nlohmann::json::object());

nlohmann::json to_json(const FitReport& report);
FitReport fit_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RankSelectionReport& report);
RankSelectionReport rank_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ExperimentReport& report, bool include_timing = true);
ExperimentReport experiment_report_from_json(const nlohmann::json& j);

/// One row per method x metric: experiment,network,design,effect,n,density,degree,method,metric,value,se,reps,failures
std::string experiment_csv(const ExperimentReport& report, const std::string& experiment, bool header = true);

nlohmann::json to_json(const ConcentrationReport& report);
ConcentrationReport concentration_report_from_json(const nlohmann::json& j);
/// One row per density cell.
std::string concentration_csv(const ConcentrationReport& report);

/// Formats a value with 6 significant digits.
std::string fmt6(double v);

// --- command line ------------------------------------------------------------

/// Entry point behind the netreg executable. Returns 0 on success, 2 on input
/// errors, 3 on numerical failures; errors are written to `err` as JSON.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace netreg
