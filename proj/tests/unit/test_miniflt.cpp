#include <doctest.h>

#include <vector>

#include "fpprep/miniflt.hpp"

using namespace fpprep;
using mini::MiniDomain;
using mini::MiniFloat;
using mini::MiniSpec;

namespace {

std::vector<MiniFloat> all_finite(const MiniDomain& dom, int emin, int emax) {
    std::vector<MiniFloat> out;
    const std::uint32_t count = std::uint32_t{1} << dom.spec().mantissa_bits;
    for (int sign = 0; sign <= 1; ++sign)
        for (int e = emin; e <= emax; ++e)
            for (std::uint32_t m = 0; m < count; ++m)
                out.push_back(dom.make(sign, e, m));
    return out;
}

bool same_result(const MiniFloat& a, const MiniFloat& b) {
    return a.same_value(b) && a.kind == b.kind;
}

}  // namespace

TEST_CASE("basic mini arithmetic") {
    const MiniDomain dom{MiniSpec{2, -8, 8}};
    const MiniFloat one = dom.make(0, 0, 0);
    const MiniFloat two = dom.add(one, one);
    CHECK(two.exponent == 1);
    CHECK(two.mantissa == 0);
    CHECK(dom.to_double(two) == 2.0);

    // Tail pair 00/00 crossing into the next region: exact, result tail 0.
    const MiniFloat y = dom.add(dom.make(0, 0, 0b00), dom.make(0, 0, 0b00));
    CHECK((y.mantissa & 1) == 0);
    CHECK(dom.sub(y, dom.make(0, 0, 0b00)).same_value(dom.make(0, 0, 0b00)));
}

TEST_CASE("multiplying by two only increments the exponent") {
    const MiniDomain dom{MiniSpec{4, -8, 8}};
    const MiniFloat two = dom.make(0, 1, 0);
    for (std::uint32_t m = 0; m < 16; ++m) {
        const MiniFloat a = dom.make(0, 0, m);
        const MiniFloat p = dom.mul(a, two);
        CHECK(p.exponent == 1);
        CHECK(p.mantissa == m);
        CHECK(same_result(dom.div(p, two), a));
    }
}

TEST_CASE("pipeline arithmetic agrees with the exact-rational reference") {
    for (int width : {2, 3, 4, 6}) {
        const MiniDomain dom{MiniSpec{width, -8, 8}};
        const auto values = all_finite(dom, -8, 8);
        for (const MiniFloat& a : values) {
            for (const MiniFloat& b : values) {
                const MiniFloat s = dom.add(a, b);
                const MiniFloat rs = dom.ref_add(a, b);
                REQUIRE(same_result(s, rs));
                const MiniFloat p = dom.mul(a, b);
                const MiniFloat rp = dom.ref_mul(a, b);
                REQUIRE(same_result(p, rp));
            }
        }
    }
}

TEST_CASE("division identities") {
    const MiniDomain dom{MiniSpec{4, -8, 8}};
    const MiniFloat two = dom.make(0, 1, 0);
    for (const MiniFloat& a : all_finite(dom, -2, 2)) {
        CHECK(same_result(dom.div(a, a), dom.make(a.sign ^ a.sign, 0, 0)));
        CHECK(same_result(dom.div(dom.mul(a, two), two), a));
    }
    CHECK_THROWS_AS(dom.div(dom.make(0, 0, 0), dom.zero()), contract_error);
}

TEST_CASE("exhaustive cross-region report finds no predicate-true violations") {
    const auto rep = mini::exhaustive_roundtrip_report(4, mini::Scenario::cross_region_add);
    CHECK(rep.total_pairs == 256);
    CHECK(rep.predicate_true_pairs == 128);
    CHECK(rep.violations_among_predicate_true == 0);
    CHECK(rep.predicate_false_loss_found);
}

TEST_CASE("exhaustive within-region report validates the trailing-zero rule") {
    const auto rep = mini::exhaustive_roundtrip_report(4, mini::Scenario::within_region_add);
    CHECK(rep.total_pairs > 0);
    CHECK(rep.violations_among_predicate_true == 0);
}

TEST_CASE("exhaustive multiplication report") {
    // Factor 2.0 is enumerated inside the predicate-true half; no violations.
    const auto rep2 = mini::exhaustive_roundtrip_report(2, mini::Scenario::region_step_mul);
    CHECK(rep2.violations_among_predicate_true == 0);

    const auto rep4 = mini::exhaustive_roundtrip_report(4, mini::Scenario::region_step_mul);
    CHECK(rep4.violations_among_predicate_true == 0);
    // Some factor below two loses a value.
    CHECK(rep4.predicate_false_loss_found);
    CHECK(!rep4.example_violation.empty());
}

TEST_CASE("report width validation") {
    CHECK_THROWS_AS(mini::exhaustive_roundtrip_report(1, mini::Scenario::cross_region_add),
                    contract_error);
    CHECK_THROWS_AS(mini::exhaustive_roundtrip_report(11, mini::Scenario::cross_region_add),
                    contract_error);
}

TEST_CASE("mini spec validation") {
    CHECK_THROWS_AS((MiniDomain(MiniSpec{1, -8, 8})), contract_error);
    CHECK_THROWS_AS((MiniDomain(MiniSpec{17, -8, 8})), contract_error);
    CHECK_THROWS_AS((MiniDomain(MiniSpec{4, 8, -8})), contract_error);
    const MiniDomain dom{MiniSpec{4, -8, 8}};
    CHECK_THROWS_AS(dom.make(0, 9, 0), contract_error);
    CHECK_THROWS_AS(dom.make(0, 0, 16), contract_error);
}

TEST_CASE("overflow is flagged as infinity") {
    const MiniDomain dom{MiniSpec{4, -2, 2}};
    const MiniFloat big = dom.make(0, 2, 15);
    const MiniFloat sum = dom.add(big, big);
    CHECK(sum.kind == MiniFloat::Kind::Infinity);
    CHECK(sum.flagged);
}
