#pragma once

#include <cstdint>
#include <string>

#include "fpprep/errors.hpp"

// Parametric reduced-precision IEEE-like floats. Small mantissa widths make
// exhaustive enumeration of the losslessness predicates tractable, which is
// infeasible at 52 bits.
namespace fpprep::mini {

struct MiniSpec {
    int mantissa_bits = 4;   // w in [2, 16]
    int min_exponent = -8;   // unbiased, inclusive
    int max_exponent = 8;    // unbiased, inclusive
};

struct MiniFloat {
    enum class Kind : std::uint8_t { Zero, Finite, Infinity };
    Kind kind = Kind::Zero;
    int sign = 0;               // 0 or 1
    int exponent = 0;           // unbiased; meaningful for Finite only
    std::uint32_t mantissa = 0; // fraction field, [0, 2^w)
    bool flagged = false;       // set when overflow/underflow shaped the result

    bool same_value(const MiniFloat& o) const {
        if (kind != o.kind) return false;
        if (kind != Kind::Finite) return sign == o.sign || kind == Kind::Zero;
        return sign == o.sign && exponent == o.exponent && mantissa == o.mantissa;
    }
};

/// Arithmetic over one MiniSpec. Addition and multiplication run a
/// guard + sticky rounding pipeline (round to nearest, ties to even);
/// division goes through the exact dyadic representation.
class MiniDomain {
public:
    explicit MiniDomain(MiniSpec spec);

    const MiniSpec& spec() const { return spec_; }

    MiniFloat make(int sign, int exponent, std::uint32_t mantissa) const;
    MiniFloat zero(int sign = 0) const;
    MiniFloat negate(MiniFloat a) const;

    MiniFloat add(MiniFloat a, MiniFloat b) const;
    MiniFloat sub(MiniFloat a, MiniFloat b) const;
    MiniFloat mul(MiniFloat a, MiniFloat b) const;
    MiniFloat div(MiniFloat a, MiniFloat b) const;

    double to_double(MiniFloat a) const;  // exact for all supported specs

    /// Exact value as num * 2^exp2 (num fits easily in 128 bits).
    struct Exact {
        __int128 num = 0;
        int exp2 = 0;
    };
    Exact exact(MiniFloat a) const;

    /// Reference rounding: exact dyadic value -> nearest representable.
    /// Independent of the guard/sticky pipeline above.
    MiniFloat round_from_exact(__int128 num, int exp2) const;

    MiniFloat ref_add(MiniFloat a, MiniFloat b) const;
    MiniFloat ref_mul(MiniFloat a, MiniFloat b) const;

private:
    MiniFloat round_and_pack(int sign, int exponent, std::uint64_t sig_grs) const;
    MiniSpec spec_;
};

enum class Scenario {
    cross_region_add,
    within_region_add,
    region_step_mul,
};

struct RoundtripReport {
    std::uint64_t total_pairs = 0;
    std::uint64_t predicate_true_pairs = 0;
    std::uint64_t violations_among_predicate_true = 0;
    std::uint64_t predicate_false_pairs = 0;
    bool predicate_false_loss_found = false;
    std::string example_violation;  // one predicate-false loss, if any
};

/// Enumerates every operand pair of the scenario at the given mantissa width
/// and round-trips each one. Success criterion: zero violations among
/// predicate-true pairs. width must be in [2, 10].
RoundtripReport exhaustive_roundtrip_report(int width, Scenario scenario);

}  // namespace fpprep::mini
