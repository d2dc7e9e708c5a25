#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "fpprep/fp_core.hpp"

using namespace fpprep;

TEST_CASE("decompose splits the literal bit fields") {
    const fp::FpBits one = fp::decompose(1.0);
    CHECK(one.sign == 0);
    CHECK(one.biased_exponent == 1023);
    CHECK(one.mantissa == 0);

    const fp::FpBits neg_zero = fp::decompose(-0.0);
    CHECK(neg_zero.sign == 1);
    CHECK(neg_zero.biased_exponent == 0);
    CHECK(neg_zero.mantissa == 0);

    // 3.5 = 2^1 * 1.75: fraction field is 0.75 * 2^52.
    const fp::FpBits x = fp::decompose(3.5);
    CHECK(x.sign == 0);
    CHECK(x.biased_exponent == 1024);
    CHECK(x.mantissa == 3377699720527872ull);
}

TEST_CASE("compose inverts decompose") {
    CHECK(fp::compose({0, 1023, 0}) == 1.0);
    CHECK(fp::to_bits(fp::compose({1, 0, 0})) == fp::to_bits(-0.0));

    CHECK_THROWS_AS(fp::compose({2, 0, 0}), contract_error);
    CHECK_THROWS_AS(fp::compose({0, 2048, 0}), contract_error);
    CHECK_THROWS_AS(fp::compose({0, 0, std::uint64_t{1} << 52}), contract_error);
}

TEST_CASE("decompose/compose is a bijection on bit patterns") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000000; ++i) {
        const std::uint64_t bits = rng();
        const double v = fp::from_bits(bits);
        CHECK(fp::to_bits(fp::compose(fp::decompose(v))) == bits);
    }
    for (std::uint64_t bits : {
             std::uint64_t{0},                       // +0
             std::uint64_t{1} << 63,                 // -0
             std::uint64_t{0x7FF0000000000000},      // +inf
             std::uint64_t{0xFFF0000000000000},      // -inf
             std::uint64_t{0x7FF8000000000001},      // NaN with payload
             std::uint64_t{0x0000000000000001},      // smallest subnormal
             std::uint64_t{0x7FEFFFFFFFFFFFFF},      // largest finite
         }) {
        CHECK(fp::to_bits(fp::compose(fp::decompose(fp::from_bits(bits)))) == bits);
    }
}

TEST_CASE("ulp follows the exponent field") {
    CHECK(fp::ulp(1.0) == std::ldexp(1.0, -52));
    CHECK(fp::ulp(3.5) == std::ldexp(1.0, -51));

    // 1e16 sits in [2^53, 2^54): biased exponent 1076, ulp 2.
    CHECK(fp::decompose(1e16).biased_exponent == 1076);
    CHECK(fp::ulp(1e16) == 2.0);

    CHECK_THROWS_AS(fp::ulp(std::numeric_limits<double>::quiet_NaN()), domain_error);
    CHECK_THROWS_AS(fp::ulp(std::numeric_limits<double>::infinity()), domain_error);
    CHECK_THROWS_AS(fp::ulp(0.0), domain_error);
    CHECK_THROWS_AS(fp::ulp(std::numeric_limits<double>::denorm_min()), domain_error);
}

TEST_CASE("ulp equals the forward nextafter step for normals") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200000; ++i) {
        const int e = 1 + static_cast<int>(rng() % 2045);  // normal, below the top binade
        const double v = fp::from_bits((std::uint64_t(e) << 52) | (rng() & fp::kMantissaMask));
        CHECK(fp::ulp(v) == std::nextafter(v, std::numeric_limits<double>::infinity()) - v);
    }
}

TEST_CASE("exponent_region comes from the exponent field") {
    CHECK(fp::exponent_region(1.0).e_star == 0);
    CHECK(fp::exponent_region(3.5).e_star == 1);
    CHECK(fp::exponent_region(std::ldexp(1.0, -1022)).e_star == -1022);
    CHECK(fp::exponent_region(1.0).lower() == 1.0);
    CHECK(fp::exponent_region(1.0).upper() == 2.0);

    CHECK_THROWS_AS(fp::exponent_region(0.0), domain_error);
    CHECK_THROWS_AS(fp::exponent_region(-1.0), domain_error);
    CHECK_THROWS_AS(fp::exponent_region(std::numeric_limits<double>::denorm_min()),
                    domain_error);
}

namespace {

// Independent per-position scan.
fp::SharedBitsSummary naive_shared(const std::vector<double>& values) {
    fp::SharedBitsSummary s;
    for (int pos = 0; pos < 64; ++pos) {
        bool all0 = true, all1 = true;
        for (double v : values) {
            if ((fp::to_bits(v) >> pos) & 1)
                all0 = false;
            else
                all1 = false;
        }
        if (all0 || all1) {
            s.shared_mask |= std::uint64_t{1} << pos;
            if (all1) s.shared_value |= std::uint64_t{1} << pos;
            if (pos == 63)
                s.s_sign += 1;
            else if (pos >= 52)
                s.s_e += 1;
            else
                s.s_m += 1;
        }
    }
    s.s_tot = s.s_sign + s.s_e + s.s_m;
    return s;
}

}  // namespace

TEST_CASE("shared_bits counts per-field agreement") {
    const std::vector<double> constant{7.25, 7.25, 7.25};
    const fp::SharedBitsSummary all = fp::shared_bits(constant);
    CHECK(all.s_tot == 64);
    CHECK(all.shared_mask == ~std::uint64_t{0});
    CHECK(all.shared_value == fp::to_bits(7.25));

    const std::vector<double> pair{1.0, 1.5};
    const fp::SharedBitsSummary s = fp::shared_bits(pair);
    CHECK(s.s_sign == 1);
    CHECK(s.s_e == 11);
    CHECK(s.s_m == 51);
    CHECK(s.s_tot == 63);

    std::mt19937_64 rng(3);
    std::vector<double> uniform(1000);
    for (auto& v : uniform)
        v = fp::from_bits((std::uint64_t{1023} << 52) | (rng() & fp::kMantissaMask));
    const fp::SharedBitsSummary u = fp::shared_bits(uniform);
    CHECK(u.s_sign == 1);
    CHECK(u.s_e == 11);
    const fp::SharedBitsSummary ref = naive_shared(uniform);
    CHECK(u.s_m == ref.s_m);
    CHECK(u.shared_mask == ref.shared_mask);
    CHECK(u.shared_value == ref.shared_value);

    CHECK_THROWS_AS(fp::shared_bits({}), contract_error);
}

TEST_CASE("leading_mantissa_shared looks at the prefix only") {
    const std::vector<double> vs{1.5, 1.75};  // mantissa 10..., 11...
    CHECK(fp::leading_mantissa_shared(vs, 1));
    CHECK(!fp::leading_mantissa_shared(vs, 2));
}

namespace {

double with_tail(std::uint64_t upper, unsigned tail) {
    return fp::from_bits((std::uint64_t{1023} << 52) |
                         ((upper << 2) & fp::kMantissaMask) | (tail & 3));
}

}  // namespace

TEST_CASE("cross-region addition predicate matches the tail table") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::uint64_t ux = rng(), ua = rng();
        // tails (m51 m52): x=00 a=00 -> lossless, result tail 0
        {
            const double x = with_tail(ux, 0b00), a = with_tail(ua, 0b00);
            CHECK(fp::is_lossless_add_cross_region(x, a));
            CHECK((fp::mantissa_field(x + a) & 1) == 0);
            CHECK(fp::to_bits((x + a) - a) == fp::to_bits(x));
        }
        // x=01 a=00 -> no guarantee
        CHECK(!fp::is_lossless_add_cross_region(with_tail(ux, 0b01), with_tail(ua, 0b00)));
        // x=10 a=10 -> lossless, result tail 0
        {
            const double x = with_tail(ux, 0b10), a = with_tail(ua, 0b10);
            CHECK(fp::is_lossless_add_cross_region(x, a));
            CHECK((fp::mantissa_field(x + a) & 1) == 0);
            CHECK(fp::to_bits((x + a) - a) == fp::to_bits(x));
        }
    }

    CHECK_THROWS_AS(fp::is_lossless_add_cross_region(1.5, 3.0), contract_error);
    CHECK_THROWS_AS(fp::is_lossless_add_cross_region(-1.0, 1.0), contract_error);
}

TEST_CASE("cross-region predicate is sound over random pairs") {
    std::mt19937_64 rng(13);
    std::size_t false_violations = 0;
    for (int i = 0; i < 1000000; ++i) {
        const double x = fp::from_bits((std::uint64_t{1023} << 52) | (rng() & fp::kMantissaMask));
        const double a = fp::from_bits((std::uint64_t{1023} << 52) | (rng() & fp::kMantissaMask));
        const bool exact = fp::to_bits((x + a) - a) == fp::to_bits(x);
        if (fp::is_lossless_add_cross_region(x, a)) {
            CHECK(exact);
            if (!exact) break;
        } else if (!exact) {
            false_violations += 1;
        }
    }
    CHECK(false_violations > 0);
}

TEST_CASE("within-region addition predicate checks the shift's trailing bits") {
    CHECK(fp::is_lossless_add_within_region(0.125, 1));
    CHECK(!fp::is_lossless_add_within_region(0.125 * (1.0 + std::ldexp(1.0, -52)), 1));
    CHECK_THROWS_AS(fp::is_lossless_add_within_region(4.0, 1), contract_error);
    CHECK_THROWS_AS(fp::is_lossless_add_within_region(0.0, 1), contract_error);
}

TEST_CASE("multiplication factor condition") {
    CHECK(fp::is_lossless_mul_factor(2.0));
    CHECK(fp::to_bits((3.5 * 2.0) / 2.0) == fp::to_bits(3.5));

    CHECK(fp::is_lossless_mul_factor(2.5));
    CHECK(fp::to_bits((1.1 * 2.5) / 2.5) == fp::to_bits(1.1));

    CHECK(!fp::is_lossless_mul_factor(1.2));
    std::mt19937_64 rng(17);
    bool violation_found = false;
    for (int i = 0; i < 1000000 && !violation_found; ++i) {
        const double x = fp::from_bits((std::uint64_t{1023} << 52) | (rng() & fp::kMantissaMask));
        violation_found = fp::to_bits((x * 1.2) / 1.2) != fp::to_bits(x);
    }
    CHECK(violation_found);
}

TEST_CASE("multiplication by factors in [2,4) round-trips in the one-step scenario") {
    std::mt19937_64 rng(19);
    std::size_t checked = 0;
    for (int i = 0; i < 1000000; ++i) {
        const double x = fp::from_bits((std::uint64_t{1023} << 52) | (rng() & fp::kMantissaMask));
        const double m = fp::from_bits((std::uint64_t{1024} << 52) | (rng() & fp::kMantissaMask));
        const double y = x * m;
        if (!(y >= 2.0 && y < 4.0)) continue;  // exactly one region above x
        checked += 1;
        CHECK(fp::to_bits(y / m) == fp::to_bits(x));
    }
    CHECK(checked > 100000);
}

TEST_CASE("target_region is the bottom window of a region") {
    CHECK(fp::target_region(0, 1) == fp::Interval{1.0, 1.5});
    CHECK(fp::target_region(0, 52) == fp::Interval{1.0, 1.0 + std::ldexp(1.0, -52)});
    CHECK(fp::target_region(10, 4) == fp::Interval{1024.0, 1088.0});

    CHECK_THROWS_AS(fp::target_region(1024, 1), contract_error);
    CHECK_THROWS_AS(fp::target_region(0, 0), contract_error);
    CHECK_THROWS_AS(fp::target_region(0, 53), contract_error);

    // Interior values carry d leading zero mantissa bits.
    std::mt19937_64 rng(23);
    const auto iv = fp::target_region(0, 6);
    for (int i = 0; i < 10000; ++i) {
        const double v = fp::from_bits((std::uint64_t{1023} << 52) | (rng() & (fp::kMantissaMask >> 6)));
        CHECK(v >= iv.lo);
        CHECK(v < iv.hi);
        CHECK((fp::mantissa_field(v) >> 46) == 0);
    }
}

TEST_CASE("the additive loss example evaluates to 4.0") {
    const double x = 3.5;
    const double big = 1e16;
    CHECK((x + big) - big == 4.0);
}

TEST_CASE("round-to-nearest is in effect") {
    CHECK_NOTHROW(fp::require_round_to_nearest());
}
