#include <doctest.h>

#include <sstream>

#include "varlat/collector.hpp"

using namespace varlat;

namespace {

FunctionRegistry small_registry() {
    FunctionRegistry reg;
    reg.add(1, "root", true);
    reg.add(2, "leaf");
    return reg;
}

}  // namespace

TEST_CASE("enabled probes record balanced pairs, disabled probes nothing") {
    Collector c(small_registry(), ProfileSet({1}));
    ThreadBuffer& buf = c.attach_thread();

    ScopeProbe on = buf.open_probe(1);
    CHECK_FALSE(on.inert);
    CHECK(buf.pending_events() == 1);
    ScopeProbe off = buf.open_probe(2);
    CHECK(off.inert);
    CHECK(buf.pending_events() == 1);
    buf.close_probe(off);
    buf.close_probe(on);
    CHECK(buf.pending_events() == 2);

    std::ostringstream sink;
    CHECK(c.flush_traces(sink) == 2);
    CHECK(c.flush_traces(sink) == 0);  // nothing new
}

TEST_CASE("LIFO-violating close is a hard error") {
    Collector c(small_registry(), ProfileSet({1, 2}));
    ThreadBuffer& buf = c.attach_thread();
    ScopeProbe outer = buf.open_probe(1);
    ScopeProbe inner = buf.open_probe(2);
    CHECK_THROWS_AS(buf.close_probe(outer), std::logic_error);
    buf.close_probe(inner);
    buf.close_probe(outer);
}

TEST_CASE("flush with an open probe is rejected") {
    Collector c(small_registry(), ProfileSet({1}));
    ThreadBuffer& buf = c.attach_thread();
    ScopeProbe p = buf.open_probe(1);
    std::ostringstream sink;
    CHECK_THROWS_AS(c.flush_traces(sink), std::logic_error);
    buf.close_probe(p);
}

TEST_CASE("stress: 10^5 pairs, non-decreasing timestamps, spill preserved") {
    Collector c(small_registry(), ProfileSet({1}), /*buffer_capacity=*/4096);
    ThreadBuffer& buf = c.attach_thread();
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        ScopeProbe p = buf.open_probe(1);
        buf.close_probe(p);
    }
    std::ostringstream sink;
    CHECK(c.flush_traces(sink) == 2 * n);

    std::istringstream in(sink.str());
    auto events = decode_events(in);  // throws if non-monotone
    CHECK(events.size() == 2u * n);
}

TEST_CASE("multi-thread flush groups by thread and reconstructs") {
    FunctionRegistry reg = small_registry();
    Collector c(reg, ProfileSet({1, 2}));
    ThreadBuffer& b0 = c.attach_thread();
    ThreadBuffer& b1 = c.attach_thread();
    for (int i = 0; i < 3; ++i) {
        ScopedProbe p0(b0, 1);
        ScopedProbe p1(b1, 1);
        ScopedProbe leaf(b1, 2);
    }
    std::ostringstream sink;
    CHECK(c.flush_traces(sink) == 2 * 3 + 4 * 3);
    std::istringstream in(sink.str());
    auto forests = build_invocations(decode_events(in), reg);
    CHECK(forests.size() == 2);
    CHECK(root_samples(forests, reg).size() == 6);
}

TEST_CASE("unknown func ids are flagged at flush") {
    Collector c(small_registry(), ProfileSet({1, 99}));
    ThreadBuffer& buf = c.attach_thread();
    ScopeProbe p = buf.open_probe(99);
    buf.close_probe(p);
    std::ostringstream sink;
    c.flush_traces(sink);
    REQUIRE(c.unknown_funcs().size() == 1);
    CHECK(c.unknown_funcs()[0] == 99);
}

TEST_CASE("profile set swap between runs changes recorded functions") {
    Collector c(small_registry(), ProfileSet({1}));
    ThreadBuffer& buf = c.attach_thread();
    { ScopedProbe p(buf, 2); }
    CHECK(buf.pending_events() == 0);
    c.set_profile_set(ProfileSet({1, 2}));
    { ScopedProbe p(buf, 2); }
    CHECK(buf.pending_events() == 2);
}
