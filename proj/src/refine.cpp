#include "varlat/refine.hpp"

#include <algorithm>
#include <stdexcept>

namespace varlat {

Refiner::Refiner(FuncId root, const FunctionRegistry& registry) : root_(root) {
    if (!registry.contains(root))
        throw std::invalid_argument("refine: unknown root func " + std::to_string(root));
    if (!registry.is_root(root))
        throw std::invalid_argument("refine: func '" + registry.name_of(root) +
                                    "' is not flagged root");
    state_.profile_set.enable(root);
    Factor seed;
    seed.id = FactorId{false, FactorComponent{root, false}, {}};
    seed.contribution = 1.0;
    state_.frontier.push_back(seed);
}

bool Refiner::needs_break_down(const Factor& factor, WorkloadRunner& runner,
                               const RefineParams& params,
                               const std::vector<Factor>& all_factors) const {
    if (factor.id.is_cov || factor.id.a.body) return false;
    if (factor.contribution < params.selection.d) return false;
    FuncId f = factor.id.a.func;
    bool has_unprofiled_child = false;
    for (FuncId c : runner.children_of(f))
        if (!state_.profile_set.contains(c)) has_unprofiled_child = true;
    if (!has_unprofiled_child) return false;
    // Body dominance: if the function has been expanded and its own body
    // already explains the factor, stop here.
    for (const Factor& other : all_factors) {
        if (!other.id.is_cov && other.id.a.body && other.id.a.func == f &&
            factor.total_value > 0 &&
            other.total_value >= params.body_dominance * factor.total_value)
            return false;
    }
    return true;
}

IterationReport Refiner::step(WorkloadRunner& runner, const RefineParams& params) {
    if (state_.frontier.empty()) throw std::logic_error("refine_step: empty frontier");

    for (const Factor& f : state_.frontier)
        for (FuncId c : runner.children_of(f.id.a.func)) state_.profile_set.enable(c);

    auto roots = runner.run(state_.profile_set);
    if (roots.empty()) throw std::runtime_error("refine_step: workload produced no root samples");

    IterationReport rep;
    rep.iteration = ++state_.iteration;
    rep.analysis = analyze(roots, params.selection);
    rep.selected = rep.analysis.selected;

    state_.frontier.clear();
    for (const Factor& f : rep.selected) {
        if (needs_break_down(f, runner, params, rep.analysis.all_factors)) {
            state_.frontier.push_back(f);
        } else if (!f.id.is_cov) {
            auto same = [&](const Factor& g) { return g.id == f.id; };
            if (std::none_of(state_.finalized.begin(), state_.finalized.end(), same))
                state_.finalized.push_back(f);
        }
    }
    return rep;
}

std::vector<IterationReport> Refiner::run(WorkloadRunner& runner, const RefineParams& params) {
    std::vector<IterationReport> reports;
    while (!done() && state_.iteration < params.max_iterations)
        reports.push_back(step(runner, params));
    return reports;
}

}  // namespace varlat
