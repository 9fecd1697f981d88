#pragma once

#include <memory>
#include <vector>

#include "varlat/collector.hpp"
#include "varlat/vartree.hpp"

namespace varlat {

// Supplies one traced workload run per refinement iteration, plus the
// (static) call structure used to expand selected factors.
class WorkloadRunner {
public:
    virtual ~WorkloadRunner() = default;
    // Runs the workload with the given probes enabled and returns the
    // reconstructed root invocations. The returned forest must stay alive
    // until the next run() call.
    virtual std::vector<const Invocation*> run(const ProfileSet& profile_set) = 0;
    virtual std::vector<FuncId> children_of(FuncId func) const = 0;
};

struct RefineParams {
    SelectionParams selection;
    int max_iterations = 16;
    // A factor whose body already carries this share of its variance is
    // final; its children will not explain it.
    double body_dominance = 0.9;
};

struct RefineState {
    int iteration = 0;
    ProfileSet profile_set;
    std::vector<Factor> frontier;   // variance factors pending break-down
    std::vector<Factor> finalized;  // selected factors marked terminal
};

struct IterationReport {
    int iteration = 0;
    AnalysisReport analysis;
    std::vector<Factor> selected;
};

class Refiner {
public:
    // Throws std::invalid_argument if root is unknown or not flagged root.
    Refiner(FuncId root, const FunctionRegistry& registry);

    const RefineState& state() const { return state_; }
    bool done() const { return state_.frontier.empty(); }

    // One Alg.-2 iteration: expand the frontier's children into the profile
    // set, run, decompose, select, and refresh the frontier.
    IterationReport step(WorkloadRunner& runner, const RefineParams& params);

    // Iterates until the frontier empties or max_iterations is reached.
    std::vector<IterationReport> run(WorkloadRunner& runner, const RefineParams& params);

    bool needs_break_down(const Factor& factor, WorkloadRunner& runner,
                          const RefineParams& params,
                          const std::vector<Factor>& all_factors) const;

private:
    FuncId root_;
    RefineState state_;
};

}  // namespace varlat
