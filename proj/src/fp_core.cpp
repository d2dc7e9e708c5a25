#include "fpprep/fp_core.hpp"

#include <bit>
#include <cfenv>
#include <cmath>

namespace fpprep::fp {

static_assert(std::numeric_limits<double>::is_iec559,
              "requires IEEE-754 binary64 doubles");

FpBits decompose(double x) {
    const std::uint64_t b = to_bits(x);
    FpBits out;
    out.sign = static_cast<std::uint32_t>(b >> 63);
    out.biased_exponent = static_cast<std::uint32_t>((b >> kMantissaBits) & 0x7FF);
    out.mantissa = b & kMantissaMask;
    return out;
}

double compose(const FpBits& b) {
    if (b.sign > 1)
        throw contract_error("compose: sign field must be 0 or 1");
    if (b.biased_exponent > kMaxBiasedExponent)
        throw contract_error("compose: biased exponent exceeds 2047");
    if (b.mantissa > kMantissaMask)
        throw contract_error("compose: mantissa wider than 52 bits");
    const std::uint64_t bits = (std::uint64_t{b.sign} << 63) |
                               (std::uint64_t{b.biased_exponent} << kMantissaBits) |
                               b.mantissa;
    return from_bits(bits);
}

bool is_subnormal(double x) {
    return biased_exponent_field(x) == 0 && mantissa_field(x) != 0;
}

bool mantissa_even(double x) { return (mantissa_field(x) & 1) == 0; }

bool top_mantissa_all_ones(double x, int d) {
    if (d < 1 || d > kMantissaBits)
        throw contract_error("top_mantissa_all_ones: d must be in [1, 52]");
    const std::uint64_t top = mantissa_field(x) >> (kMantissaBits - d);
    return top == ((std::uint64_t{1} << d) - 1);
}

double ulp(double x) {
    if (std::isnan(x) || std::isinf(x))
        throw domain_error("ulp: input must be finite");
    if (x == 0.0)
        throw domain_error("ulp: input must be nonzero");
    if (is_subnormal(x))
        throw domain_error("ulp: subnormal inputs unsupported");
    const int e = biased_exponent_field(x);
    return std::ldexp(1.0, e - kExponentBias - kMantissaBits);
}

double ExponentRegion::lower() const { return std::ldexp(1.0, e_star); }
double ExponentRegion::upper() const { return std::ldexp(1.0, e_star + 1); }

ExponentRegion exponent_region(double x) {
    if (!(x > 0.0) || std::isinf(x))
        throw domain_error("exponent_region: input must be positive and finite");
    if (is_subnormal(x))
        throw domain_error("exponent_region: subnormal inputs unsupported");
    return ExponentRegion{biased_exponent_field(x) - kExponentBias};
}

SharedBitsSummary shared_bits(std::span<const double> values) {
    if (values.empty())
        throw contract_error("shared_bits: empty input");
    std::uint64_t acc_and = ~std::uint64_t{0};
    std::uint64_t acc_or = 0;
    for (double v : values) {
        const std::uint64_t b = to_bits(v);
        acc_and &= b;
        acc_or |= b;
    }
    SharedBitsSummary s;
    // A position is shared when it is 1 everywhere or 0 everywhere.
    s.shared_mask = ~(acc_and ^ acc_or);
    s.shared_value = acc_and & s.shared_mask;
    s.s_sign = static_cast<int>(s.shared_mask >> 63);
    s.s_e = std::popcount(s.shared_mask & kExponentFieldMask);
    s.s_m = std::popcount(s.shared_mask & kMantissaMask);
    s.s_tot = s.s_sign + s.s_e + s.s_m;
    return s;
}

bool leading_mantissa_shared(std::span<const double> values, int d) {
    if (values.empty())
        throw contract_error("leading_mantissa_shared: empty input");
    if (d < 1 || d > kMantissaBits)
        throw contract_error("leading_mantissa_shared: d must be in [1, 52]");
    std::uint64_t acc_and = ~std::uint64_t{0};
    std::uint64_t acc_or = 0;
    for (double v : values) {
        const std::uint64_t m = mantissa_field(v);
        acc_and &= m;
        acc_or |= m;
    }
    return ((acc_and ^ acc_or) >> (kMantissaBits - d)) == 0;
}

bool is_lossless_add_cross_region(double x, double a) {
    if (!(x > 0.0) || !(a > 0.0) || std::isinf(x) || std::isinf(a))
        throw contract_error("cross-region predicate: operands must be positive finite");
    if (is_subnormal(x) || is_subnormal(a))
        throw contract_error("cross-region predicate: subnormal operands unsupported");
    const int ex = biased_exponent_field(x);
    if (ex != biased_exponent_field(a))
        throw contract_error("cross-region predicate: operands must share one region");
    // Two same-region positives always sum into the next region, so the
    // remaining scenario precondition holds by construction.
    return (mantissa_field(x) & 1) == (mantissa_field(a) & 1);
}

bool is_lossless_add_within_region(double a, int e_star) {
    if (!(a > 0.0) || std::isinf(a))
        throw contract_error("within-region predicate: shift must be positive finite");
    if (is_subnormal(a))
        throw domain_error("within-region predicate: subnormal shift unsupported");
    const int e_shift = biased_exponent_field(a) - kExponentBias;
    if (e_shift >= e_star)
        throw contract_error("within-region predicate: shift region must lie below e_star");
    // Forbidden index set spans the gap plus one extra position; as mantissa
    // integer bits that is the low (gap + 2) bits.
    const int gap = e_star - e_shift;
    const int low_bits = gap + 2 > kMantissaBits ? kMantissaBits : gap + 2;
    const std::uint64_t forbidden = (std::uint64_t{1} << low_bits) - 1;
    return (mantissa_field(a) & forbidden) == 0;
}

bool is_lossless_mul_factor(double m) { return m >= 2.0; }

Interval target_region(int e, int d) {
    if (e < -1022 || e > 1023)
        throw contract_error("target_region: e must be in [-1022, 1023]");
    if (d < 1 || d > kMantissaBits)
        throw contract_error("target_region: d must be in [1, 52]");
    const double lo = std::ldexp(1.0, e);
    const double hi = lo + std::ldexp(1.0, e - d);
    return Interval{lo, hi};
}

void require_round_to_nearest() {
    if (std::fegetround() != FE_TONEAREST)
        throw domain_error(
            "floating-point environment must round to nearest (ties to even)");
}

}  // namespace fpprep::fp
