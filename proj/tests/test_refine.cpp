#include <doctest.h>

#include <random>

#include "varlat/refine.hpp"

using namespace varlat;

namespace {

// Synthetic runner over a fixed static call graph:
//   1 (root) -> {2, 3}; 2 -> {4}; 3, 4 leaves.
// Child 2's duration is the dominant variance source; within 2 the
// variance lives in child 4. Only profiled functions appear as spans,
// mirroring the collector's inert-probe behavior.
class FakeRunner : public WorkloadRunner {
public:
    explicit FakeRunner(std::uint64_t seed) : seed_(seed) {}

    std::vector<const Invocation*> run(const ProfileSet& ps) override {
        ++runs;
        last_set_size = ps.size();
        std::mt19937_64 rng(seed_);
        roots_.clear();
        std::vector<const Invocation*> out;
        for (int s = 0; s < 64; ++s) {
            std::uint64_t d4 = 100 + rng() % 900;           // high variance
            std::uint64_t d2 = d4 + 50;                     // body of 2 = 50
            std::uint64_t d3 = 200 + rng() % 10;            // low variance
            Invocation root;
            root.func_id = 1;
            root.start_ns = 0;
            std::uint64_t cursor = 10;
            if (ps.contains(2)) {
                Invocation two;
                two.func_id = 2;
                two.start_ns = cursor;
                two.end_ns = cursor + d2;
                if (ps.contains(4)) {
                    Invocation four;
                    four.func_id = 4;
                    four.start_ns = cursor + 10;
                    four.end_ns = cursor + 10 + d4;
                    two.children.push_back(four);
                }
                cursor = two.end_ns + 5;
                root.children.push_back(std::move(two));
            } else {
                cursor += d2;
            }
            if (ps.contains(3)) {
                Invocation three;
                three.func_id = 3;
                three.start_ns = cursor;
                three.end_ns = cursor + d3;
                cursor = three.end_ns;
                root.children.push_back(std::move(three));
            } else {
                cursor += d3;
            }
            root.end_ns = cursor + 20;
            roots_.push_back(std::move(root));
        }
        for (const auto& r : roots_) out.push_back(&r);
        return out;
    }

    std::vector<FuncId> children_of(FuncId f) const override {
        if (f == 1) return {2, 3};
        if (f == 2) return {4};
        return {};
    }

    int runs = 0;
    std::size_t last_set_size = 0;

private:
    std::uint64_t seed_;
    std::vector<Invocation> roots_;
};

FunctionRegistry fake_registry() {
    FunctionRegistry reg;
    reg.add(1, "root", true);
    reg.add(2, "hot");
    reg.add(3, "cold");
    reg.add(4, "inner");
    return reg;
}

}  // namespace

TEST_CASE("init state and validation") {
    FunctionRegistry reg = fake_registry();
    Refiner r(1, reg);
    CHECK(r.state().iteration == 0);
    CHECK(r.state().profile_set.contains(1));
    CHECK(r.state().profile_set.size() == 1);
    CHECK(r.state().frontier.size() == 1);
    CHECK_FALSE(r.done());

    CHECK_THROWS_AS(Refiner(42, reg), std::invalid_argument);  // unknown
    CHECK_THROWS_AS(Refiner(2, reg), std::invalid_argument);   // not flagged root
}

TEST_CASE("refinement drills into the dominant factor") {
    FunctionRegistry reg = fake_registry();
    FakeRunner runner(7);
    Refiner refiner(1, reg);
    RefineParams params;
    params.selection = SelectionParams{2, 0.05};

    IterationReport it1 = refiner.step(runner, params);
    CHECK(it1.iteration == 1);
    // iteration 1 profiles root + its children, not grandchildren
    CHECK(refiner.state().profile_set.contains(2));
    CHECK(refiner.state().profile_set.contains(3));
    CHECK_FALSE(refiner.state().profile_set.contains(4));
    REQUIRE(!it1.selected.empty());
    CHECK(it1.selected[0].id == FactorId{false, {2, false}, {}});

    REQUIRE_FALSE(refiner.done());
    IterationReport it2 = refiner.step(runner, params);
    CHECK(refiner.state().profile_set.contains(4));
    CHECK(it2.selected[0].id == FactorId{false, {4, false}, {}});

    // 4 is a leaf -> finalized, frontier empties, loop ends
    CHECK(refiner.done());
    bool finalized = false;
    for (const Factor& f : refiner.state().finalized)
        if (f.id == FactorId{false, {4, false}, {}}) finalized = true;
    CHECK(finalized);
}

TEST_CASE("run() terminates within graph depth and respects max_iterations") {
    FunctionRegistry reg = fake_registry();
    {
        FakeRunner runner(3);
        Refiner refiner(1, reg);
        RefineParams params;
        params.selection = SelectionParams{3, 0.05};
        auto reports = refiner.run(runner, params);
        CHECK(reports.size() <= 3);  // <= dynamic graph depth
        CHECK(refiner.done());
    }
    {
        FakeRunner runner(3);
        Refiner refiner(1, reg);
        RefineParams params;
        params.selection = SelectionParams{3, 0.05};
        params.max_iterations = 1;
        auto reports = refiner.run(runner, params);
        CHECK(reports.size() == 1);
        CHECK(runner.runs == 1);
    }
}

TEST_CASE("d=1.0 terminates after one iteration with empty selection") {
    FunctionRegistry reg = fake_registry();
    FakeRunner runner(5);
    Refiner refiner(1, reg);
    RefineParams params;
    params.selection = SelectionParams{5, 1.0};
    auto reports = refiner.run(runner, params);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].selected.empty());
    CHECK(refiner.done());
    CHECK_THROWS_AS(refiner.step(runner, params), std::logic_error);
}

TEST_CASE("needs_break_down rules") {
    FunctionRegistry reg = fake_registry();
    FakeRunner runner(1);
    Refiner refiner(1, reg);
    RefineParams params;
    params.selection = SelectionParams{5, 0.05};

    Factor cov;
    cov.id = FactorId{true, {2, false}, {3, false}};
    cov.contribution = 0.5;
    CHECK_FALSE(refiner.needs_break_down(cov, runner, params, {}));

    Factor body;
    body.id = FactorId{false, {2, true}, {}};
    body.contribution = 0.5;
    CHECK_FALSE(refiner.needs_break_down(body, runner, params, {}));

    Factor leaf;
    leaf.id = FactorId{false, {3, false}, {}};
    leaf.contribution = 0.5;
    CHECK_FALSE(refiner.needs_break_down(leaf, runner, params, {}));  // no children

    Factor hot;
    hot.id = FactorId{false, {2, false}, {}};
    hot.contribution = 0.3;
    hot.total_value = 100.0;
    CHECK(refiner.needs_break_down(hot, runner, params, {}));

    hot.contribution = 0.01;  // below d
    CHECK_FALSE(refiner.needs_break_down(hot, runner, params, {}));

    hot.contribution = 0.3;
    Factor hot_body;  // body already explains 95% of the factor
    hot_body.id = FactorId{false, {2, true}, {}};
    hot_body.total_value = 95.0;
    CHECK_FALSE(refiner.needs_break_down(hot, runner, params, {hot_body}));
    hot_body.total_value = 50.0;
    CHECK(refiner.needs_break_down(hot, runner, params, {hot_body}));
}

TEST_CASE("selected identities stable across reruns with the same seed") {
    FunctionRegistry reg = fake_registry();
    std::vector<FactorId> first;
    for (int rerun = 0; rerun < 5; ++rerun) {
        FakeRunner runner(1234);
        Refiner refiner(1, reg);
        RefineParams params;
        params.selection = SelectionParams{3, 0.05};
        auto reports = refiner.run(runner, params);
        std::vector<FactorId> ids;
        for (const auto& rep : reports)
            for (const auto& f : rep.selected) ids.push_back(f.id);
        if (rerun == 0)
            first = ids;
        else
            CHECK(ids == first);
    }
}
