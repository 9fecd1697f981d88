#include <doctest.h>

#include <algorithm>
#include <random>

#include "varlat/metrics.hpp"
#include "varlat/vartree.hpp"

using namespace varlat;

namespace {

// func ids: 1=A(root), 2=B, 3=C, 4=D
Invocation inv(FuncId f, std::uint64_t start, std::uint64_t end,
               std::vector<Invocation> kids = {}, SiteTag site = 0) {
    Invocation i;
    i.func_id = f;
    i.site_tag = site;
    i.start_ns = start;
    i.end_ns = end;
    i.children = std::move(kids);
    return i;
}

// The worked fixture: two samples of A with B=[1,2], C=[3,5], body=[1,1].
std::vector<Invocation> worked_fixture() {
    std::vector<Invocation> roots;
    // sample 1: A [0,5], B [0,1], C [1,4], body 1
    roots.push_back(inv(1, 0, 5, {inv(2, 0, 1), inv(3, 1, 4)}));
    // sample 2: A [0,8], B [0,2], C [2,7], body 1
    roots.push_back(inv(1, 0, 8, {inv(2, 0, 2), inv(3, 2, 7)}));
    return roots;
}

std::vector<const Invocation*> ptrs(const std::vector<Invocation>& v) {
    std::vector<const Invocation*> out;
    for (const auto& i : v) out.push_back(&i);
    return out;
}

FunctionRegistry abcd_registry() {
    FunctionRegistry reg;
    reg.add(1, "A", true);
    reg.add(2, "B");
    reg.add(3, "C");
    reg.add(4, "D");
    return reg;
}

}  // namespace

TEST_CASE("build_sample_matrix on the worked fixture") {
    auto roots = worked_fixture();
    SampleMatrix m = build_sample_matrix(ptrs(roots), {PathElem{1, 0}});
    REQUIRE(m.child_columns.size() == 2);
    CHECK(m.child_columns[0] == PathElem{2, 0});
    CHECK(m.child_columns[1] == PathElem{3, 0});
    REQUIRE(m.rows.size() == 2);
    CHECK(m.rows[0] == std::vector<double>{1, 3, 1});
    CHECK(m.rows[1] == std::vector<double>{2, 5, 1});
    CHECK(m.parent_durations == std::vector<double>{5, 8});
}

TEST_CASE("child called twice in one parent sums into one cell") {
    std::vector<Invocation> roots;
    roots.push_back(inv(1, 0, 10, {inv(2, 0, 3), inv(2, 4, 6)}));
    roots.push_back(inv(1, 0, 10, {inv(2, 1, 2)}));
    SampleMatrix m = build_sample_matrix(ptrs(roots), {PathElem{1, 0}});
    REQUIRE(m.child_columns.size() == 1);
    CHECK(m.rows[0] == std::vector<double>{5, 5});
    CHECK(m.rows[1] == std::vector<double>{1, 9});
}

TEST_CASE("absent parent contributes no row; error cases") {
    std::vector<Invocation> roots;
    roots.push_back(inv(1, 0, 10, {inv(2, 0, 3, {inv(4, 0, 1)})}));
    roots.push_back(inv(1, 0, 10, {inv(2, 0, 3, {inv(4, 0, 2)})}));
    roots.push_back(inv(1, 0, 10, {inv(3, 0, 3)}));  // no B here
    NodePath b_path = {PathElem{1, 0}, PathElem{2, 0}};
    SampleMatrix m = build_sample_matrix(ptrs(roots), b_path);
    CHECK(m.rows.size() == 2);

    CHECK_THROWS_AS(
        build_sample_matrix(ptrs(roots), {PathElem{1, 0}, PathElem{4, 0}}),
        std::invalid_argument);  // never observed at that path
    std::vector<Invocation> one = {inv(1, 0, 5)};
    CHECK_THROWS_AS(build_sample_matrix(ptrs(one), {PathElem{1, 0}}),
                    std::invalid_argument);  // < 2 samples
}

TEST_CASE("decompose_variance matches the hand arithmetic") {
    auto roots = worked_fixture();
    SampleMatrix m = build_sample_matrix(ptrs(roots), {PathElem{1, 0}});
    auto terms = decompose_variance(m, 2.25);
    REQUIRE(terms.size() == 6);  // 3 Var + 3 Cov
    // Var(B), Var(C), Var(body)
    CHECK(terms[0].value == doctest::Approx(0.25));
    CHECK(terms[1].value == doctest::Approx(1.0));
    CHECK(terms[2].value == doctest::Approx(0.0));
    // Cov(B,C), Cov(B,body), Cov(C,body)
    CHECK(terms[3].value == doctest::Approx(0.5));
    CHECK(terms[4].value == doctest::Approx(0.0));
    CHECK(terms[5].value == doctest::Approx(0.0));
    double total = 0;
    for (const auto& t : terms) total += (t.col_j < 0 ? 1.0 : 2.0) * t.value;
    CHECK(total == doctest::Approx(2.25));
    // contributions under one parent sum to the parent's share (here 1.0)
    double contrib = 0;
    for (const auto& t : terms) contrib += t.contribution;
    CHECK(contrib == doctest::Approx(1.0));
}

TEST_CASE("decompose degenerate cases") {
    SampleMatrix m;
    m.parent = {PathElem{1, 0}};
    m.child_columns = {PathElem{2, 0}};
    m.rows = {{4, 1}, {4, 1}, {4, 1}};
    auto flat = decompose_variance(m, 1.0);
    for (const auto& t : flat) CHECK(t.value == doctest::Approx(0.0));

    m.rows = {{1, 5}, {3, 5}, {8, 5}};  // single varying column
    auto terms = decompose_variance(m, 1.0);
    CoMoment acc(1);
    for (const auto& r : m.rows) acc.add({r[0] + r[1]});
    CHECK(terms[0].value == doctest::Approx(acc.variance(0)));
    CHECK(terms[1].value == doctest::Approx(0.0));
    CHECK(terms[2].value == doctest::Approx(0.0));
}

TEST_CASE("compute_heights: chain and diamond") {
    std::vector<Invocation> single = {inv(1, 0, 5), inv(1, 6, 9)};
    Heights h0 = compute_heights(ptrs(single));
    CHECK(h0.of(1) == 0);
    CHECK(h0.call_graph == 0);

    // chain A->B->C->D->D' (depth 4 via nested D under D)
    std::vector<Invocation> chain;
    chain.push_back(
        inv(1, 0, 100,
            {inv(2, 1, 90, {inv(3, 2, 80, {inv(4, 3, 70, {inv(4, 4, 60)})})})}));
    Heights h = compute_heights(ptrs(chain));
    CHECK(h.call_graph == 4);
    CHECK(h.of(3) == 2);

    // diamond: C appears under A directly (subtree depth 2) and under B
    // (subtree depth 1) -> height of C is the max, 2
    std::vector<Invocation> diamond;
    diamond.push_back(inv(1, 0, 100,
                          {inv(3, 1, 40, {inv(2, 2, 30, {inv(4, 3, 20)})}),
                           inv(2, 50, 90, {inv(3, 51, 80, {inv(4, 52, 70)})})}));
    Heights hd = compute_heights(ptrs(diamond));
    CHECK(hd.of(3) == 2);
    CHECK(hd.of(4) == 0);
}

TEST_CASE("heights are invariant to root sample order") {
    auto roots = worked_fixture();
    auto p = ptrs(roots);
    Heights a = compute_heights(p);
    std::reverse(p.begin(), p.end());
    Heights b = compute_heights(p);
    CHECK(a.call_graph == b.call_graph);
    CHECK(a.by_func.size() == b.by_func.size());
    for (const auto& [f, h] : a.by_func) CHECK(b.of(f) == h);
}

TEST_CASE("aggregate_factors sums sites and scores per the formulas") {
    // A calls B at two sites; B's cells differ so each site has variance.
    std::vector<Invocation> roots;
    roots.push_back(inv(1, 0, 20, {inv(2, 0, 3, {}, 1), inv(2, 5, 9, {}, 2)}));
    roots.push_back(inv(1, 0, 20, {inv(2, 0, 5, {}, 1), inv(2, 6, 14, {}, 2)}));
    auto p = ptrs(roots);
    VarianceTree tree = build_variance_tree(p);
    Heights h = compute_heights(p);
    auto factors = aggregate_factors(tree, h);

    const Factor* var_b = nullptr;
    for (const auto& f : factors)
        if (!f.id.is_cov && f.id.a == FactorComponent{2, false}) var_b = &f;
    REQUIRE(var_b);
    // site1 B=[3,5] var 1, site2 B=[4,8] var 4
    CHECK(var_b->total_value == doctest::Approx(5.0));
    CHECK(var_b->height == 0);
    CHECK(var_b->specificity == (h.call_graph - 0) * (h.call_graph - 0));
    CHECK(var_b->score ==
          doctest::Approx(static_cast<double>(var_b->specificity) * 5.0));

    // covariance factor height = max of component heights
    for (const auto& f : factors)
        if (f.id.is_cov && !f.id.a.body && !f.id.b.body)
            CHECK(f.height == std::max(h.of(f.id.a.func), h.of(f.id.b.func)));
}

TEST_CASE("root Var is not a candidate factor") {
    auto roots = worked_fixture();
    auto p = ptrs(roots);
    auto factors = aggregate_factors(build_variance_tree(p), compute_heights(p));
    for (const auto& f : factors)
        CHECK_FALSE((!f.id.is_cov && f.id.a == FactorComponent{1, false}));
}

TEST_CASE("selection on the worked fixture and threshold boundary") {
    auto roots = worked_fixture();
    AnalysisReport rep = analyze(ptrs(roots), SelectionParams{1, 0.0});
    REQUIRE(rep.selected.size() == 1);
    CHECK_FALSE(rep.selected[0].id.is_cov);
    CHECK(rep.selected[0].id.a == FactorComponent{3, false});  // Var(C)
    CHECK(rep.selected[0].total_value == doctest::Approx(1.0));

    AnalysisReport all = analyze(ptrs(roots), SelectionParams{10, 0.0});
    CHECK(all.selected.size() == all.all_factors.size());

    AnalysisReport none = analyze(ptrs(roots), SelectionParams{10, 1.0});
    CHECK(none.selected.empty());  // no single factor carries all variance

    CHECK_THROWS_AS(select_factors({}, SelectionParams{0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(select_factors({}, SelectionParams{1, 1.5}), std::invalid_argument);
}

TEST_CASE("selection ties break by contribution then identity") {
    Factor f1, f2;
    f1.id = FactorId{false, {5, false}, {}};
    f2.id = FactorId{false, {2, false}, {}};
    f1.score = f2.score = 10.0;
    f1.contribution = f2.contribution = 0.5;
    auto sel = select_factors({f1, f2}, SelectionParams{2, 0.0});
    CHECK(sel[0].id.a.func == 2);  // identity order on full tie
    f1.contribution = 0.9;
    sel = select_factors({f1, f2}, SelectionParams{2, 0.0});
    CHECK(sel[0].id.a.func == 5);  // higher contribution wins
}

TEST_CASE("scaling durations preserves selection order") {
    std::mt19937_64 rng(3);
    std::vector<Invocation> roots;
    for (int s = 0; s < 12; ++s) {
        std::uint64_t b = 10 + rng() % 50;
        std::uint64_t c = 20 + rng() % 80;
        roots.push_back(
            inv(1, 0, b + c + 30, {inv(2, 0, b), inv(3, b + 5, b + 5 + c)}));
    }
    auto scaled = roots;
    for (auto& r : scaled) {
        r.start_ns *= 7;
        r.end_ns *= 7;
        for (auto& ch : r.children) {
            ch.start_ns *= 7;
            ch.end_ns *= 7;
        }
    }
    auto rep1 = analyze(ptrs(roots), SelectionParams{10, 0.0});
    auto rep2 = analyze(ptrs(scaled), SelectionParams{10, 0.0});
    REQUIRE(rep1.selected.size() == rep2.selected.size());
    for (std::size_t i = 0; i < rep1.selected.size(); ++i) {
        CHECK(rep1.selected[i].id == rep2.selected[i].id);
        CHECK(rep2.selected[i].total_value ==
              doctest::Approx(49.0 * rep1.selected[i].total_value).epsilon(1e-9));
    }
}

TEST_CASE("report serialization contains the documented fields") {
    auto roots = worked_fixture();
    AnalysisReport rep = analyze(ptrs(roots), SelectionParams{5, 0.0});
    FunctionRegistry reg = abcd_registry();
    std::string json = report_to_json(rep, reg);
    CHECK(json.find("\"root\"") != std::string::npos);
    CHECK(json.find("root_variance_ns2") != std::string::npos);
    CHECK(json.find("Var(C)") != std::string::npos);
    std::string csv = report_to_csv(rep, reg);
    CHECK(csv.rfind("identity,kind,", 0) == 0);
    CHECK(csv.find("Var(C)") != std::string::npos);
}
