#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "varlat/tracefmt.hpp"

namespace varlat {

// Path of (func_id, site_tag) pairs from a root invocation downward.
// Unique key of a variance-tree node.
struct PathElem {
    FuncId func = 0;
    SiteTag site = 0;
    auto operator<=>(const PathElem&) const = default;
};
using NodePath = std::vector<PathElem>;

std::string path_to_string(const NodePath& path, const FunctionRegistry& reg);

// Per-root-invocation samples of one parent node's children. Columns are
// the distinct (func, site) children observed under the parent, in sorted
// order, followed by one body column. A child called several times within
// one parent invocation contributes a single summed cell.
struct SampleMatrix {
    NodePath parent;
    std::vector<PathElem> child_columns;  // body column is implicit, last
    std::vector<std::vector<double>> rows;  // width child_columns.size() + 1
    std::vector<double> parent_durations;   // row sums, for closure checks

    std::size_t n_cols() const { return child_columns.size() + 1; }
};

// One term of the variance tree under some parent: Var of a child column,
// Var of the body, or Cov of a column pair. Cov terms carry the covariance
// itself; their contribution accounts for Eq. 1's factor of two.
struct VarianceTerm {
    NodePath parent;
    int col_i = 0;  // index into columns; body column == child_columns.size()
    int col_j = -1; // -1 for a Var term
    double value = 0.0;          // ns^2
    double contribution = 0.0;   // fraction of root variance (signed)
};

struct VarianceTree {
    NodePath root_path;          // single element: the root function
    double root_variance = 0.0;  // ns^2
    std::size_t n_samples = 0;
    // Sample matrices by parent path, in expansion (BFS) order, plus the
    // decomposition terms of every expanded parent.
    std::vector<SampleMatrix> matrices;
    std::vector<VarianceTerm> terms;
};

// Call-site-free factor identity: the variance of a function (or of a
// function's body time) or the covariance of a pair.
struct FactorComponent {
    FuncId func = 0;
    bool body = false;
    auto operator<=>(const FactorComponent&) const = default;
};

struct FactorId {
    bool is_cov = false;
    FactorComponent a;
    FactorComponent b;  // unused when !is_cov; normalized a <= b otherwise
    auto operator<=>(const FactorId&) const = default;
};

std::string factor_to_string(const FactorId& id, const FunctionRegistry& reg);

struct Factor {
    FactorId id;
    double total_value = 0.0;   // ns^2 summed over all sites, signed
    double contribution = 0.0;  // summed fraction of root variance
    int height = 0;
    std::int64_t specificity = 0;  // (call-graph height - height)^2
    double score = 0.0;            // specificity * total_value
};

struct SelectionParams {
    std::size_t k = 5;   // max factors
    double d = 0.0;      // minimum contribution threshold
};

struct Heights {
    std::unordered_map<FuncId, int> by_func;
    int call_graph = 0;

    int of(FuncId f) const {
        auto it = by_func.find(f);
        return it == by_func.end() ? 0 : it->second;
    }
};

// --- operations -----------------------------------------------------------

// Builds the sample matrix of `parent` over the given root invocations.
// A root invocation in which the parent path never occurs contributes no
// row. Throws std::invalid_argument when the parent is unobserved or has
// fewer than 2 samples.
SampleMatrix build_sample_matrix(const std::vector<const Invocation*>& roots,
                                 const NodePath& parent);

// Eq.-1 decomposition of one matrix: one Var term per column, one Cov term
// per unordered pair. Contributions are relative to root_variance; pass the
// matrix's own parent variance when decomposing the root.
std::vector<VarianceTerm> decompose_variance(const SampleMatrix& matrix,
                                             double root_variance);

// Dynamic-call-graph heights: leaves 0, parent 1 + max child, a function's
// height is the max over its observed occurrences. Call-graph height is the
// max over root functions.
Heights compute_heights(const std::vector<const Invocation*>& roots);

// Full expansion: decomposes every path that appears in >= 2 root samples
// and has observed children. Includes a synthetic term for Var(root).
VarianceTree build_variance_tree(const std::vector<const Invocation*>& roots);

FactorId factor_of(const VarianceTerm& term, const SampleMatrix& matrix);

std::vector<Factor> aggregate_factors(const VarianceTree& tree, const Heights& heights);

// Descending score, ties by (higher contribution, then identity); keeps
// factors with contribution >= d, at most k.
std::vector<Factor> select_factors(std::vector<Factor> factors, const SelectionParams& params);

// Convenience: full pipeline over root samples.
struct AnalysisReport {
    VarianceTree tree;
    Heights heights;
    std::vector<Factor> all_factors;
    std::vector<Factor> selected;
};

AnalysisReport analyze(const std::vector<const Invocation*>& roots,
                       const SelectionParams& params);

std::string report_to_json(const AnalysisReport& report, const FunctionRegistry& reg);
std::string report_to_csv(const AnalysisReport& report, const FunctionRegistry& reg);

}  // namespace varlat
