#include "fpprep/miniflt.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <utility>

namespace fpprep::mini {

namespace {

int bit_length_u64(std::uint64_t v) { return 64 - std::countl_zero(v); }

int bit_length_u128(unsigned __int128 v) {
    const std::uint64_t hi = static_cast<std::uint64_t>(v >> 64);
    if (hi != 0) return 64 + bit_length_u64(hi);
    return bit_length_u64(static_cast<std::uint64_t>(v));
}

}  // namespace

MiniDomain::MiniDomain(MiniSpec spec) : spec_(spec) {
    if (spec.mantissa_bits < 2 || spec.mantissa_bits > 16)
        throw contract_error("MiniDomain: mantissa width must be in [2, 16]");
    if (spec.min_exponent >= spec.max_exponent)
        throw contract_error("MiniDomain: empty exponent range");
    // Keeps aligned significands inside 64 bits, so add/sub stay exact.
    if (spec.max_exponent - spec.min_exponent > 32)
        throw contract_error("MiniDomain: exponent span wider than 32 unsupported");
}

MiniFloat MiniDomain::make(int sign, int exponent, std::uint32_t mantissa) const {
    if (sign != 0 && sign != 1)
        throw contract_error("MiniFloat: sign must be 0 or 1");
    if (exponent < spec_.min_exponent || exponent > spec_.max_exponent)
        throw contract_error("MiniFloat: exponent out of configured range");
    if (mantissa >> spec_.mantissa_bits)
        throw contract_error("MiniFloat: mantissa wider than configured");
    MiniFloat f;
    f.kind = MiniFloat::Kind::Finite;
    f.sign = sign;
    f.exponent = exponent;
    f.mantissa = mantissa;
    return f;
}

MiniFloat MiniDomain::zero(int sign) const {
    MiniFloat f;
    f.kind = MiniFloat::Kind::Zero;
    f.sign = sign;
    return f;
}

MiniFloat MiniDomain::negate(MiniFloat a) const {
    a.sign ^= 1;
    return a;
}

// sig_grs holds an exact significand whose value is sig_grs * 2^(exponent - w - 2):
// two bits below the representable lsb are guard material. Normalizing right
// folds dropped bits into the sticky position (bit 0).
MiniFloat MiniDomain::round_and_pack(int sign, int exponent, std::uint64_t sig_grs) const {
    const int w = spec_.mantissa_bits;
    if (sig_grs == 0) return zero(0);

    int top = bit_length_u64(sig_grs) - 1;
    while (top > w + 2) {
        sig_grs = (sig_grs >> 1) | (sig_grs & 1);
        exponent += 1;
        top -= 1;
    }
    while (top < w + 2) {
        sig_grs <<= 1;
        exponent -= 1;
        top += 1;
    }

    const std::uint64_t lsb = (sig_grs >> 2) & 1;
    const std::uint64_t guard = (sig_grs >> 1) & 1;
    const std::uint64_t sticky = sig_grs & 1;
    std::uint64_t sig = sig_grs >> 2;
    if (guard && (sticky || lsb)) {
        sig += 1;
        if (sig >> (w + 1)) {  // rounding carried into the next binade
            sig >>= 1;
            exponent += 1;
        }
    }

    if (exponent > spec_.max_exponent) {
        MiniFloat f;
        f.kind = MiniFloat::Kind::Infinity;
        f.sign = sign;
        f.flagged = true;
        return f;
    }
    if (exponent < spec_.min_exponent) {
        MiniFloat f = zero(sign);
        f.flagged = true;  // would be subnormal; not emulated
        return f;
    }
    MiniFloat f;
    f.kind = MiniFloat::Kind::Finite;
    f.sign = sign;
    f.exponent = exponent;
    f.mantissa = static_cast<std::uint32_t>(sig & ((std::uint64_t{1} << w) - 1));
    return f;
}

MiniFloat MiniDomain::add(MiniFloat a, MiniFloat b) const {
    if (a.kind == MiniFloat::Kind::Infinity) return a;
    if (b.kind == MiniFloat::Kind::Infinity) return b;
    if (a.kind == MiniFloat::Kind::Zero) return b;
    if (b.kind == MiniFloat::Kind::Zero) return a;

    const int w = spec_.mantissa_bits;
    auto mag_less = [](const MiniFloat& x, const MiniFloat& y) {
        if (x.exponent != y.exponent) return x.exponent < y.exponent;
        return x.mantissa < y.mantissa;
    };
    if (mag_less(a, b)) std::swap(a, b);

    // Align exactly at the smaller operand's scale; the constructor bounds the
    // exponent span so this cannot overflow 64 bits.
    const int shift = a.exponent - b.exponent;
    const std::uint64_t big = (((std::uint64_t{1} << w) | a.mantissa) << 2) << shift;
    const std::uint64_t small = ((std::uint64_t{1} << w) | b.mantissa) << 2;

    std::uint64_t sum;
    if (a.sign == b.sign) {
        sum = big + small;
    } else {
        sum = big - small;
        if (sum == 0) return zero(0);
    }
    return round_and_pack(a.sign, b.exponent, sum);
}

MiniFloat MiniDomain::sub(MiniFloat a, MiniFloat b) const { return add(a, negate(b)); }

MiniFloat MiniDomain::mul(MiniFloat a, MiniFloat b) const {
    const int sign = a.sign ^ b.sign;
    if (a.kind == MiniFloat::Kind::Infinity || b.kind == MiniFloat::Kind::Infinity) {
        MiniFloat f;
        f.kind = MiniFloat::Kind::Infinity;
        f.sign = sign;
        return f;
    }
    if (a.kind == MiniFloat::Kind::Zero || b.kind == MiniFloat::Kind::Zero)
        return zero(sign);

    const int w = spec_.mantissa_bits;
    const std::uint64_t sa = (std::uint64_t{1} << w) | a.mantissa;
    const std::uint64_t sb = (std::uint64_t{1} << w) | b.mantissa;
    const std::uint64_t prod = sa * sb;  // exact, at most 2w + 2 bits
    // prod * 2^(ea + eb - 2w) in round_and_pack's fixed-point convention.
    return round_and_pack(sign, a.exponent + b.exponent - w + 2, prod);
}

MiniFloat MiniDomain::div(MiniFloat a, MiniFloat b) const {
    const int sign = a.sign ^ b.sign;
    if (b.kind == MiniFloat::Kind::Zero)
        throw contract_error("mini div: division by zero");
    if (a.kind == MiniFloat::Kind::Zero) return zero(sign);
    if (a.kind == MiniFloat::Kind::Infinity || b.kind == MiniFloat::Kind::Infinity)
        throw contract_error("mini div: non-finite operands unsupported");

    const int w = spec_.mantissa_bits;
    const std::uint64_t sa = (std::uint64_t{1} << w) | a.mantissa;
    const std::uint64_t sb = (std::uint64_t{1} << w) | b.mantissa;

    // Exact rational rounding of (sa / sb) * 2^(ea - eb).
    const int extra = sa >= sb ? w : w + 1;
    const unsigned __int128 num = static_cast<unsigned __int128>(sa) << extra;
    std::uint64_t q = static_cast<std::uint64_t>(num / sb);
    const std::uint64_t rem = static_cast<std::uint64_t>(num % sb);
    int exponent = a.exponent - b.exponent - (extra - w);

    const std::uint64_t twice = 2 * rem;
    if (twice > sb || (twice == sb && (q & 1)))
        q += 1;
    if (q >> (w + 1)) {
        q >>= 1;
        exponent += 1;
    }
    if (exponent > spec_.max_exponent) {
        MiniFloat f;
        f.kind = MiniFloat::Kind::Infinity;
        f.sign = sign;
        f.flagged = true;
        return f;
    }
    if (exponent < spec_.min_exponent) {
        MiniFloat f = zero(sign);
        f.flagged = true;
        return f;
    }
    MiniFloat f;
    f.kind = MiniFloat::Kind::Finite;
    f.sign = sign;
    f.exponent = exponent;
    f.mantissa = static_cast<std::uint32_t>(q & ((std::uint64_t{1} << w) - 1));
    return f;
}

double MiniDomain::to_double(MiniFloat a) const {
    switch (a.kind) {
        case MiniFloat::Kind::Zero:
            return a.sign ? -0.0 : 0.0;
        case MiniFloat::Kind::Infinity:
            return a.sign ? -HUGE_VAL : HUGE_VAL;
        case MiniFloat::Kind::Finite: {
            const int w = spec_.mantissa_bits;
            const double sig = static_cast<double>((std::uint64_t{1} << w) | a.mantissa);
            const double v = std::ldexp(sig, a.exponent - w);
            return a.sign ? -v : v;
        }
    }
    return 0.0;
}

MiniDomain::Exact MiniDomain::exact(MiniFloat a) const {
    if (a.kind != MiniFloat::Kind::Finite)
        throw contract_error("exact: finite values only");
    const int w = spec_.mantissa_bits;
    __int128 num = (std::uint64_t{1} << w) | a.mantissa;
    if (a.sign) num = -num;
    return Exact{num, a.exponent - w};
}

MiniFloat MiniDomain::round_from_exact(__int128 num, int exp2) const {
    if (num == 0) return zero(0);
    const int sign = num < 0 ? 1 : 0;
    unsigned __int128 mag = sign ? static_cast<unsigned __int128>(-num)
                                 : static_cast<unsigned __int128>(num);

    const int w = spec_.mantissa_bits;
    const int bl = bit_length_u128(mag);
    int exponent = exp2 + bl - 1;

    std::uint64_t sig;
    bool round_up = false;
    if (bl > w + 1) {
        const int drop = bl - (w + 1);
        const unsigned __int128 tail_mask = (static_cast<unsigned __int128>(1) << drop) - 1;
        const unsigned __int128 tail = mag & tail_mask;
        sig = static_cast<std::uint64_t>(mag >> drop);
        const unsigned __int128 half = static_cast<unsigned __int128>(1) << (drop - 1);
        if (tail > half || (tail == half && (sig & 1)))
            round_up = true;
    } else {
        sig = static_cast<std::uint64_t>(mag) << ((w + 1) - bl);
    }
    if (round_up) {
        sig += 1;
        if (sig >> (w + 1)) {
            sig >>= 1;
            exponent += 1;
        }
    }
    if (exponent > spec_.max_exponent) {
        MiniFloat f;
        f.kind = MiniFloat::Kind::Infinity;
        f.sign = sign;
        f.flagged = true;
        return f;
    }
    if (exponent < spec_.min_exponent) {
        MiniFloat f = zero(sign);
        f.flagged = true;
        return f;
    }
    MiniFloat f;
    f.kind = MiniFloat::Kind::Finite;
    f.sign = sign;
    f.exponent = exponent;
    f.mantissa = static_cast<std::uint32_t>(sig & ((std::uint64_t{1} << w) - 1));
    return f;
}

MiniFloat MiniDomain::ref_add(MiniFloat a, MiniFloat b) const {
    if (a.kind == MiniFloat::Kind::Zero) return b;
    if (b.kind == MiniFloat::Kind::Zero) return a;
    const Exact ea = exact(a);
    const Exact eb = exact(b);
    const int e = ea.exp2 < eb.exp2 ? ea.exp2 : eb.exp2;
    const __int128 num = (ea.num << (ea.exp2 - e)) + (eb.num << (eb.exp2 - e));
    return round_from_exact(num, e);
}

MiniFloat MiniDomain::ref_mul(MiniFloat a, MiniFloat b) const {
    if (a.kind == MiniFloat::Kind::Zero || b.kind == MiniFloat::Kind::Zero)
        return zero(a.sign ^ b.sign);
    const Exact ea = exact(a);
    const Exact eb = exact(b);
    return round_from_exact(ea.num * eb.num, ea.exp2 + eb.exp2);
}

namespace {

std::string describe(const MiniDomain& dom, const char* role, MiniFloat v) {
    std::ostringstream os;
    os << role << "=(e=" << v.exponent << ", m=" << v.mantissa
       << ", value=" << dom.to_double(v) << ")";
    return os.str();
}

}  // namespace

RoundtripReport exhaustive_roundtrip_report(int width, Scenario scenario) {
    if (width < 2 || width > 10)
        throw contract_error("exhaustive_roundtrip_report: width must be in [2, 10]");
    const MiniDomain dom{MiniSpec{width, -12, 12}};
    const std::uint32_t count = std::uint32_t{1} << width;
    RoundtripReport rep;

    auto record = [&](bool predicate, bool roundtrip_ok, MiniFloat x, MiniFloat s,
                      const char* role) {
        rep.total_pairs += 1;
        if (predicate) {
            rep.predicate_true_pairs += 1;
            if (!roundtrip_ok) rep.violations_among_predicate_true += 1;
        } else {
            rep.predicate_false_pairs += 1;
            if (!roundtrip_ok && !rep.predicate_false_loss_found) {
                rep.predicate_false_loss_found = true;
                rep.example_violation =
                    describe(dom, "x", x) + ", " + describe(dom, role, s);
            }
        }
    };

    switch (scenario) {
        case Scenario::cross_region_add: {
            // x and a share region 0; their sum always lands in region 1.
            for (std::uint32_t mx = 0; mx < count; ++mx) {
                const MiniFloat x = dom.make(0, 0, mx);
                for (std::uint32_t ma = 0; ma < count; ++ma) {
                    const MiniFloat a = dom.make(0, 0, ma);
                    const bool predicate = ((mx ^ ma) & 1) == 0;
                    const MiniFloat y = dom.add(x, a);
                    const MiniFloat back = dom.sub(y, a);
                    record(predicate, back.same_value(x), x, a, "a");
                }
            }
            break;
        }
        case Scenario::within_region_add: {
            // a sits `gap` regions below x; keep only pairs whose sum stays in
            // x's region.
            for (int gap = 1; gap <= width; ++gap) {
                const int low_bits = gap + 2 > width ? width : gap + 2;
                const std::uint32_t forbidden = (std::uint32_t{1} << low_bits) - 1;
                for (std::uint32_t ma = 0; ma < count; ++ma) {
                    const MiniFloat a = dom.make(0, -gap, ma);
                    const bool predicate = (ma & forbidden) == 0;
                    for (std::uint32_t mx = 0; mx < count; ++mx) {
                        const MiniFloat x = dom.make(0, 0, mx);
                        const MiniFloat y = dom.add(x, a);
                        if (y.kind != MiniFloat::Kind::Finite || y.exponent != 0)
                            continue;
                        const MiniFloat back = dom.sub(y, a);
                        record(predicate, back.same_value(x), x, a, "a");
                    }
                }
            }
            break;
        }
        case Scenario::region_step_mul: {
            // Factors from [1, 2) (predicate false) and [2, 4) (predicate
            // true); keep products landing exactly one region above x.
            for (int em = 0; em <= 1; ++em) {
                for (std::uint32_t mm = 0; mm < count; ++mm) {
                    const MiniFloat m = dom.make(0, em, mm);
                    const bool predicate = em >= 1;
                    for (std::uint32_t mx = 0; mx < count; ++mx) {
                        const MiniFloat x = dom.make(0, 0, mx);
                        const MiniFloat y = dom.mul(x, m);
                        if (y.kind != MiniFloat::Kind::Finite || y.exponent != 1)
                            continue;
                        const MiniFloat back = dom.div(y, m);
                        record(predicate, back.same_value(x), x, m, "m");
                    }
                }
            }
            break;
        }
    }
    return rep;
}

}  // namespace fpprep::mini
