#pragma once

#include <cstdint>
#include <span>

#include "fpprep/errors.hpp"

// Bit-level IEEE-754 double-precision primitives: field decomposition, ulp,
// exponent regions, shared-bit counting, and the predicates that guarantee a
// floating-point addition or multiplication is exactly invertible.
namespace fpprep::fp {

inline constexpr int kMantissaBits = 52;
inline constexpr int kExponentBits = 11;
inline constexpr int kExponentBias = 1023;
inline constexpr int kMaxBiasedExponent = 2047;
inline constexpr std::uint64_t kMantissaMask = (std::uint64_t{1} << kMantissaBits) - 1;
inline constexpr std::uint64_t kExponentFieldMask =
    std::uint64_t{0x7FF} << kMantissaBits;
inline constexpr std::uint64_t kSignMask = std::uint64_t{1} << 63;

std::uint64_t to_bits(double x);
double from_bits(std::uint64_t b);

/// Sign / biased exponent / mantissa fields of one 64-bit value.
struct FpBits {
    std::uint32_t sign = 0;             // 0 or 1
    std::uint32_t biased_exponent = 0;  // [0, 2047]
    std::uint64_t mantissa = 0;         // 52-bit fraction field

    bool operator==(const FpBits&) const = default;
};

/// Splits any 64-bit pattern (NaN payloads, infinities, +-0, subnormals
/// included) into its literal bit fields.
FpBits decompose(double x);

/// Exact inverse of decompose. Throws contract_error if a field is out of
/// range.
double compose(const FpBits& b);

/// Distance to the next representable value of the same exponent:
/// 2^(E - bias - 52). Rejects NaN, infinity, zero and subnormals.
double ulp(double x);

/// The binade [2^e_star, 2^(e_star+1)) a positive normal value lives in.
struct ExponentRegion {
    int e_star = 0;  // unbiased exponent in [-1022, 1023]

    double lower() const;  // 2^e_star
    double upper() const;  // 2^(e_star+1)
    bool operator==(const ExponentRegion&) const = default;
};

ExponentRegion exponent_region(double x);

/// Per-field counts of bit positions on which every dataset element agrees.
struct SharedBitsSummary {
    int s_sign = 0;   // 0 or 1
    int s_e = 0;      // shared exponent bits, [0, 11]
    int s_m = 0;      // shared mantissa bits, [0, 52]
    int s_tot = 0;    // s_sign + s_e + s_m
    std::uint64_t shared_mask = 0;   // bit i set iff all values agree at i
    std::uint64_t shared_value = 0;  // the agreed bits; zero elsewhere
};

SharedBitsSummary shared_bits(std::span<const double> values);

/// True iff the d most significant mantissa bits are identical across all
/// values (their specific pattern does not matter).
bool leading_mantissa_shared(std::span<const double> values, int d);

/// Addition y = x (+) a with x, a positive members of one region and y
/// landing in the next region up. Returns true iff both operands have the
/// same least significant mantissa bit; then (x (+) a) (-) a == x exactly.
/// Sufficient, not necessary: false only means no guarantee.
bool is_lossless_add_cross_region(double x, double a);

/// Addition y = x (+) a where a sits in a lower region than e_star and the
/// caller keeps x and y inside region e_star. Returns true iff the shift
/// value a has zero mantissa bits m_i for
/// i in {52 - (e_star - e~ + 1), ..., 52}, e~ being a's region.
/// Sufficient, not necessary.
bool is_lossless_add_within_region(double a, int e_star);

/// Multiplication stepping a value exactly one region up is invertible for
/// any factor >= 2.
bool is_lossless_mul_factor(double m);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Interval&) const = default;
};

/// The closed interval [2^e, 2^e + 2^(e-d)] whose interior values all have
/// their d most significant mantissa bits equal to 0.
Interval target_region(int e, int d);

/// Throws domain_error unless the FPU rounds to nearest (ties to even).
/// Every exactness argument in this library assumes that mode.
void require_round_to_nearest();

// --- small helpers shared across modules ---

inline std::uint64_t mantissa_field(double x);
inline int biased_exponent_field(double x);
bool is_subnormal(double x);
/// Mantissa LSB is zero (the value's significand is an even lattice point).
bool mantissa_even(double x);
/// Top d mantissa bits are all ones (value sits in the top window of its
/// region).
bool top_mantissa_all_ones(double x, int d);

}  // namespace fpprep::fp

#include <bit>

namespace fpprep::fp {

inline std::uint64_t to_bits(double x) { return std::bit_cast<std::uint64_t>(x); }
inline double from_bits(std::uint64_t b) { return std::bit_cast<double>(b); }
inline std::uint64_t mantissa_field(double x) { return to_bits(x) & kMantissaMask; }
inline int biased_exponent_field(double x) {
    return static_cast<int>((to_bits(x) >> kMantissaBits) & 0x7FF);
}

}  // namespace fpprep::fp
