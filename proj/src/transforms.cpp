#include "fpprep/transforms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <string>

namespace fpprep::tfm {

namespace {

using fp::biased_exponent_field;
using fp::kExponentBias;
using fp::kMantissaBits;
using fp::kMantissaMask;
using fp::mantissa_field;
using fp::to_bits;

constexpr std::uint64_t kOne52 = std::uint64_t{1} << 52;
constexpr std::uint64_t kOne53 = std::uint64_t{1} << 53;
constexpr std::uint64_t kOne54 = std::uint64_t{1} << 54;

void validate_dataset(std::span<const double> ds) {
    if (ds.empty())
        throw contract_error("transform: empty dataset");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double v = ds[i];
        const std::uint64_t b = to_bits(v);
        if (b >> 63)
            throw unsupported_input_error(
                "transform: negative or -0.0 value at index " + std::to_string(i));
        const int e = biased_exponent_field(v);
        if (e == 0x7FF)
            throw unsupported_input_error(
                "transform: NaN or infinity at index " + std::to_string(i));
        if (e == 0 && mantissa_field(v) != 0)
            throw unsupported_input_error(
                "transform: subnormal value at index " + std::to_string(i));
    }
}

bool all_bitwise_equal(std::span<const double> ds) {
    const std::uint64_t first = to_bits(ds[0]);
    for (double v : ds)
        if (to_bits(v) != first) return false;
    return true;
}

void bitmap_set(std::vector<std::uint8_t>& bm, std::size_t i) {
    bm[i / 8] |= std::uint8_t(1u << (7 - i % 8));
}

bool bitmap_get(const std::vector<std::uint8_t>& bm, std::size_t i) {
    return (bm[i / 8] >> (7 - i % 8)) & 1;
}

double value_in_region(int e_star, std::uint64_t mantissa) {
    return fp::from_bits(
        (std::uint64_t(e_star + kExponentBias) << kMantissaBits) | mantissa);
}

int region_of(double v) { return biased_exponent_field(v) - kExponentBias; }

/// Exact value of `sig` units of 2^(e_star - 52); sig may be up to 2^54.
double units_value(std::uint64_t sig, int e_star) {
    return std::ldexp(static_cast<double>(sig), e_star - kMantissaBits);
}

struct Prepared {
    std::vector<double> values;
    AlignmentRecord rec;
    std::vector<std::size_t> live;  // nonzero sample indices
};

Prepared prepare(std::span<const double> ds) {
    Prepared p;
    auto [aligned, rec] = align_exponents(ds);
    p.values = std::move(aligned);
    p.rec = std::move(rec);
    for (std::size_t i = 0; i < p.values.size(); ++i)
        if (p.values[i] != 0.0) p.live.push_back(i);
    return p;
}

void validate_d(int d) {
    if (d < 1 || d > kMantissaBits)
        throw contract_error("transform: d must be in [1, 52]");
}

PreprocessedDataset make_identity(std::span<const double> ds) {
    PreprocessedDataset pd;
    pd.technique = Technique::Identity;
    pd.values.assign(ds.begin(), ds.end());
    pd.metadata = IdentityMetadata{};
    return pd;
}

bool live_share(const std::vector<double>& values, const std::vector<std::size_t>& live,
                int d) {
    if (live.empty()) return true;
    std::uint64_t acc_and = ~std::uint64_t{0};
    std::uint64_t acc_or = 0;
    for (std::size_t i : live) {
        const std::uint64_t m = mantissa_field(values[i]);
        acc_and &= m;
        acc_or |= m;
    }
    return ((acc_and ^ acc_or) >> (kMantissaBits - d)) == 0;
}

/// Length of the mantissa prefix on which all live values agree.
int shared_prefix_length(const std::vector<double>& values,
                         const std::vector<std::size_t>& live) {
    std::uint64_t acc_and = ~std::uint64_t{0};
    std::uint64_t acc_or = 0;
    for (std::size_t i : live) {
        const std::uint64_t m = mantissa_field(values[i]);
        acc_and &= m;
        acc_or |= m;
    }
    const std::uint64_t diff = (acc_and ^ acc_or) & kMantissaMask;
    if (diff == 0) return kMantissaBits;
    return std::countl_zero(diff) - (64 - kMantissaBits);
}

void checked_assert(bool cond, const char* what) {
    if (!cond) throw check_error(std::string("checked-mode assertion failed: ") + what);
}

/// Largest multiple of four not above x.
std::int64_t floor_to_four(std::int64_t x) {
    if (x >= 0) return x & ~std::int64_t{3};
    return -((-x + 3) & ~std::int64_t{3});
}

/// The alignment shift: largest multiple of 4 ulp placing the dataset minimum
/// at (or just above) the bottom of the region. Four-ulp granularity keeps the
/// within-region predicate true for every possible gap.
std::uint64_t align_shift_units(const std::vector<double>& values,
                                const std::vector<std::size_t>& live) {
    std::uint64_t min_m = kMantissaMask;
    for (std::size_t i : live) min_m = std::min(min_m, mantissa_field(values[i]));
    return min_m & ~std::uint64_t{3};
}

void apply_alignment_shift(std::vector<double>& values,
                           const std::vector<std::size_t>& live, double a_align,
                           int e0, bool add, const Options& opt) {
    if (a_align == 0.0) return;
    for (std::size_t i : live) {
        const double before = values[i];
        const double after = add ? before + a_align : before - a_align;
        if (opt.checked) {
            checked_assert(region_of(after) == e0, "alignment shift left the region");
            if (!fp::is_subnormal(a_align))
                checked_assert(fp::is_lossless_add_within_region(a_align, e0),
                               "alignment shift violates the within-region predicate");
            const double undo = add ? after - a_align : after + a_align;
            checked_assert(to_bits(undo) == to_bits(before),
                           "alignment shift is not exactly invertible");
        }
        values[i] = after;
    }
}

/// Undo the exponent-alignment stage (exact power-of-two rescale) and check
/// the zero bitmap still matches.
void restore_alignment(std::vector<double>& values, const AlignmentRecord& rec) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (rec.has_zeros() && rec.is_zero(i)) {
            if (to_bits(values[i]) != 0)
                throw integrity_error("zero bitmap does not match a zero value");
            continue;
        }
        if (values[i] == 0.0)
            throw integrity_error("unexpected zero outside the zero bitmap");
        const int delta = i < rec.exponent_deltas.size() ? rec.exponent_deltas[i] : 0;
        if (delta == 0) continue;
        const int e = biased_exponent_field(values[i]) + delta;
        if (e < 1 || e > 2046)
            throw integrity_error("exponent delta leaves the normal range");
        values[i] = fp::from_bits((to_bits(values[i]) & ~fp::kExponentFieldMask) |
                                  (std::uint64_t(e) << kMantissaBits));
    }
}

/// Deterministic width/position bound for the even/odd split. Regenerates the
/// whole shift schedule from (e0, d, w0); both directions run the same code.
class EvenOddTracker {
public:
    EvenOddTracker(int e0, int d, std::uint64_t w0_units)
        : e_(e0), d_(d), lo_(0), w_(w0_units) {}

    struct Step {
        int e_src = 0;
        std::uint64_t a_even_sig = 0;  // units of ulp(e_src), includes hidden bit
        std::uint64_t a_odd_sig = 0;
        std::uint64_t theta_units = 0;  // first even output, units of ulp(e_src)
    };

    Step advance() {
        if (e_ + 1 > 1023)
            throw range_exhausted_error("even/odd shift would pass the top exponent");
        Step s;
        s.e_src = e_;
        s.a_even_sig = kOne53 - 2;
        std::uint64_t sep = w_ + 2;
        std::uint64_t a_odd = s.a_even_sig - sep;
        if (((a_odd - kOne52) & 1) == 0) {
            a_odd -= 1;
            sep += 1;
        }
        if (a_odd < kOne52 || sep >= kOne52)
            throw non_convergence_error(
                "even/odd separation exceeds the region capacity", 0);
        s.a_odd_sig = a_odd;
        s.theta_units = kOne52 + lo_ + s.a_even_sig;

        const std::uint64_t union_bottom = kOne52 + lo_ + s.a_odd_sig;
        const std::uint64_t union_top = kOne52 + lo_ + w_ + s.a_even_sig;
        const std::uint64_t window_bottom = kOne54 - (kOne53 >> d_);
        const std::uint64_t pend_top = std::min(union_top, window_bottom - 2);
        e_ += 1;
        if (pend_top < union_bottom) {
            lo_ = 0;
            w_ = 0;
        } else {
            lo_ = (union_bottom - kOne53) / 2;
            const std::uint64_t top2 = (pend_top - kOne53 + 1) / 2;
            w_ = top2 - lo_;
        }
        return s;
    }

private:
    int e_;
    int d_;
    std::uint64_t lo_;  // pending window bottom, offset units within region e_
    std::uint64_t w_;   // pending window width bound, same units
};

std::uint64_t w0_units_from_double(double w0, int e0) {
    const double scaled = std::ldexp(w0, kMantissaBits - e0);
    if (!(scaled >= 0.0) || scaled >= 0x1p52 || scaled != std::floor(scaled))
        throw integrity_error("width bound is not a valid region lattice multiple");
    return static_cast<std::uint64_t>(scaled);
}

int estimate_max_d(std::span<const double> ds, int d, const Options& opt,
                   PreprocessedDataset (*fwd)(std::span<const double>, int,
                                              const Options&)) {
    if (!opt.estimate_max_d) return 0;
    Options probe = opt;
    probe.estimate_max_d = false;
    probe.stats = nullptr;
    probe.checked = false;
    for (int cand = d - 1; cand >= 1; --cand) {
        try {
            (void)fwd(ds, cand, probe);
            return cand;
        } catch (const error&) {
        }
    }
    return 0;
}

}  // namespace

const char* technique_name(Technique t) {
    switch (t) {
        case Technique::CompactBins: return "bins";
        case Technique::MultiplyShift: return "mulshift";
        case Technique::EvenOddSeparate: return "evenodd";
        case Technique::SaveEvenness: return "evenness";
        case Technique::Identity: return "identity";
    }
    return "?";
}

bool AlignmentRecord::trivial_deltas() const {
    for (std::int16_t d : exponent_deltas)
        if (d != 0) return false;
    return true;
}

std::pair<std::vector<double>, AlignmentRecord> align_exponents(
    std::span<const double> ds) {
    validate_dataset(ds);

    AlignmentRecord rec;
    std::map<int, std::size_t> region_counts;
    bool any_zero = false;
    for (double v : ds) {
        if (v == 0.0) {
            any_zero = true;
            continue;
        }
        region_counts[region_of(v)] += 1;
    }
    // Reference region: the mode; ties go to the smaller exponent.
    int e0 = 0;
    std::size_t best = 0;
    for (const auto& [e, count] : region_counts) {
        if (count > best) {
            best = count;
            e0 = e;
        }
    }
    rec.reference_e_star = e0;
    rec.exponent_deltas.resize(ds.size(), 0);
    if (any_zero) rec.zero_bitmap.assign((ds.size() + 7) / 8, 0);

    std::vector<double> aligned(ds.begin(), ds.end());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds[i] == 0.0) {
            bitmap_set(rec.zero_bitmap, i);
            continue;
        }
        const int delta = region_of(ds[i]) - e0;
        rec.exponent_deltas[i] = static_cast<std::int16_t>(delta);
        if (delta != 0)
            aligned[i] = value_in_region(e0, mantissa_field(ds[i]));
    }
    return {std::move(aligned), std::move(rec)};
}

// ---------------------------------------------------------------------------
// compact bins
// ---------------------------------------------------------------------------

namespace {

struct BinPacking {
    std::vector<std::uint64_t> boundaries;   // indices into the sorted uniques
    std::vector<std::int64_t> shift_units;   // per-bin shift, ulp units, multiple of 4
    std::int64_t packed_bottom = 0;          // lowest shifted offset (may be < 0)
};

/// Splits the sorted unique offsets at the k-1 widest gaps and stacks the bins
/// downward from the top of the region, on the 4-ulp shift lattice with at
/// least one ulp between neighboring bins.
BinPacking pack_bins(const std::vector<std::uint64_t>& uniq, std::uint32_t k) {
    BinPacking p;
    const std::size_t l = uniq.size();

    if (k > 1) {
        std::vector<std::size_t> order(l - 1);
        for (std::size_t j = 0; j + 1 < l; ++j) order[j] = j;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) {
                             return uniq[a + 1] - uniq[a] > uniq[b + 1] - uniq[b];
                         });
        p.boundaries.assign(order.begin(), order.begin() + (k - 1));
        for (auto& b : p.boundaries) b += 1;  // boundary = first index of the next bin
        std::sort(p.boundaries.begin(), p.boundaries.end());
    }

    p.shift_units.assign(k, 0);
    const std::int64_t top_target = static_cast<std::int64_t>(kOne52) - 1;
    std::int64_t next_floor = 0;
    for (std::size_t bin = k; bin-- > 0;) {
        const std::size_t first = bin == 0 ? 0 : p.boundaries[bin - 1];
        const std::size_t last =
            (bin + 1 < k ? p.boundaries[bin] : l) - 1;  // inclusive
        const std::int64_t hi = static_cast<std::int64_t>(uniq[last]);
        const std::int64_t lo = static_cast<std::int64_t>(uniq[first]);
        const std::int64_t target = bin + 1 == k ? top_target : next_floor - 1;
        const std::int64_t shift = floor_to_four(target - hi);
        p.shift_units[bin] = shift;
        next_floor = lo + shift;
    }
    p.packed_bottom = next_floor;
    return p;
}

std::vector<std::uint64_t> sorted_unique_offsets(const std::vector<double>& values,
                                                 const std::vector<std::size_t>& live) {
    std::vector<std::uint64_t> uniq;
    uniq.reserve(live.size());
    for (std::size_t i : live) uniq.push_back(mantissa_field(values[i]));
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    return uniq;
}

int max_d_for_bottom(std::int64_t packed_bottom) {
    // Need 2^(52-d) >= 2^52 - packed_bottom.
    const std::int64_t needed = static_cast<std::int64_t>(kOne52) - packed_bottom;
    if (needed <= 1) return kMantissaBits;
    const int bits = 64 - std::countl_zero(static_cast<std::uint64_t>(needed - 1));
    const int d = kMantissaBits - bits;
    return d < 0 ? 0 : d;
}

}  // namespace

int compact_bins_max_d(std::span<const double> ds, std::uint32_t k) {
    Prepared p = prepare(ds);
    if (p.live.empty() || all_bitwise_equal(ds)) return kMantissaBits;
    const auto uniq = sorted_unique_offsets(p.values, p.live);
    if (k < 1 || k > uniq.size())
        throw contract_error("compact bins: k must be in [1, unique-value count]");
    const int natural = shared_prefix_length(p.values, p.live);
    const BinPacking packing = pack_bins(uniq, k);
    return std::max(natural, max_d_for_bottom(packing.packed_bottom));
}

PreprocessedDataset compact_bins_forward(std::span<const double> ds, std::uint32_t k,
                                         int d, const Options& opt) {
    fp::require_round_to_nearest();
    validate_d(d);
    validate_dataset(ds);
    if (all_bitwise_equal(ds)) return make_identity(ds);

    Prepared p = prepare(ds);
    const int e0 = p.rec.reference_e_star;
    const auto uniq = sorted_unique_offsets(p.values, p.live);
    const std::size_t l = uniq.size();
    if (k < 1 || k > l)
        throw contract_error("compact bins: k must be in [1, unique-value count]");

    CompactBinsMetadata meta;
    meta.k = k;
    meta.shifts.assign(k, 0.0);

    if (live_share(p.values, p.live, d)) {
        // Already guaranteed; keep every bin in place.
        for (std::uint32_t b = 1; b < k; ++b) meta.boundaries.push_back(b);
    } else {
        BinPacking packing = pack_bins(uniq, k);
        const int feasible = max_d_for_bottom(packing.packed_bottom);
        if (feasible < d)
            throw capacity_error(
                "compact bins: " + std::to_string(k) + " bins cannot reach d=" +
                    std::to_string(d) + " (max feasible d=" + std::to_string(feasible) +
                    ")",
                feasible);
        meta.boundaries = packing.boundaries;
        for (std::uint32_t b = 0; b < k; ++b)
            meta.shifts[b] = units_value(std::abs(packing.shift_units[b]), e0) *
                             (packing.shift_units[b] < 0 ? -1.0 : 1.0);

        // Bin id per unique offset, then shift every live sample.
        std::vector<std::uint32_t> bin_of(l, 0);
        for (std::size_t u = 0, bin = 0; u < l; ++u) {
            while (bin + 1 < k && u >= packing.boundaries[bin]) ++bin;
            bin_of[u] = static_cast<std::uint32_t>(bin);
        }
        for (std::size_t i : p.live) {
            const std::uint64_t off = mantissa_field(p.values[i]);
            const std::size_t u =
                std::lower_bound(uniq.begin(), uniq.end(), off) - uniq.begin();
            const double shift = meta.shifts[bin_of[u]];
            if (shift == 0.0) continue;
            const double before = p.values[i];
            const double after = before + shift;
            if (opt.checked) {
                checked_assert(region_of(after) == e0, "bin shift left the region");
                if (!fp::is_subnormal(shift))
                    checked_assert(
                        fp::is_lossless_add_within_region(std::fabs(shift), e0),
                        "bin shift violates the within-region predicate");
                checked_assert(to_bits(after - shift) == to_bits(before),
                               "bin shift is not exactly invertible");
            }
            p.values[i] = after;
        }
    }

    PreprocessedDataset pd;
    pd.technique = Technique::CompactBins;
    pd.values = std::move(p.values);
    pd.alignment = std::move(p.rec);
    pd.metadata = std::move(meta);
    return pd;
}

std::vector<double> compact_bins_inverse(const PreprocessedDataset& pd,
                                         const Options& opt) {
    (void)opt;
    fp::require_round_to_nearest();
    const auto* meta = std::get_if<CompactBinsMetadata>(&pd.metadata);
    if (!meta || pd.technique != Technique::CompactBins)
        throw contract_error("compact bins inverse: metadata mismatch");
    if (meta->k != meta->shifts.size() || meta->boundaries.size() + 1 != meta->k)
        throw integrity_error("compact bins: inconsistent bin counts");

    std::vector<double> values = pd.values;
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] != 0.0) live.push_back(i);

    const auto uniq = sorted_unique_offsets(values, live);
    const std::size_t l = uniq.size();
    for (std::size_t b = 0; b < meta->boundaries.size(); ++b) {
        const std::uint64_t idx = meta->boundaries[b];
        if (idx < 1 || idx >= l)
            throw integrity_error("compact bins: boundary index out of range");
        if (b > 0 && meta->boundaries[b - 1] >= idx)
            throw integrity_error("compact bins: boundary indices not increasing");
    }

    const int e0 = pd.alignment.reference_e_star;
    for (std::size_t i : live) {
        const std::uint64_t off = mantissa_field(values[i]);
        const auto it = std::lower_bound(uniq.begin(), uniq.end(), off);
        const std::size_t rank = it - uniq.begin();
        const std::size_t bin =
            std::upper_bound(meta->boundaries.begin(), meta->boundaries.end(), rank) -
            meta->boundaries.begin();
        const double shift = meta->shifts[bin];
        if (shift != 0.0) values[i] = values[i] - shift;
        if (region_of(values[i]) != e0)
            throw integrity_error("compact bins: un-shifted value left the region");
    }
    restore_alignment(values, pd.alignment);
    return values;
}

// ---------------------------------------------------------------------------
// multiply and shift
// ---------------------------------------------------------------------------

double multiply_shift_shift_raw(int e_star, int d) {
    validate_d(d);
    // 2^(e*-d+1) - 2 * ulp(2^(e*+1))
    return std::ldexp(1.0, e_star - d + 1) - std::ldexp(1.0, e_star - 50);
}

double multiply_shift_shift(int e_star, int d) {
    validate_d(d);
    // The raw shift rounded down onto the within-region-lossless lattice of the
    // destination region: (2^(52-d) - 4) destination ulps. Degenerates to zero
    // when d leaves no room.
    const std::int64_t units = (std::int64_t{1} << (kMantissaBits - d)) - 4;
    if (units <= 0) return 0.0;
    return std::ldexp(static_cast<double>(units), e_star - 51);
}

PreprocessedDataset multiply_shift_forward(std::span<const double> ds, int d,
                                           const Options& opt) {
    fp::require_round_to_nearest();
    validate_d(d);
    validate_dataset(ds);
    if (all_bitwise_equal(ds)) return make_identity(ds);

    Prepared p = prepare(ds);
    const int e0 = p.rec.reference_e_star;

    MultiplyShiftMetadata meta;
    meta.d = d;
    meta.a1 = multiply_shift_shift(e0, d);

    std::uint32_t iterations = 0;
    while (!live_share(p.values, p.live, d)) {
        std::vector<std::size_t> pending;
        for (std::size_t i : p.live)
            if (!fp::top_mantissa_all_ones(p.values[i], d)) pending.push_back(i);
        if (pending.empty()) break;
        if (static_cast<int>(iterations) >= opt.iteration_cap)
            throw non_convergence_error(
                "multiply-shift: iteration cap " + std::to_string(opt.iteration_cap) +
                    " reached at d=" + std::to_string(d),
                estimate_max_d(ds, d, opt, &multiply_shift_forward));
        const int e = e0 + static_cast<int>(iterations);
        if (e + 1 > 1023)
            throw range_exhausted_error("multiply-shift: values would pass 2^1024");
        if (e - d + 1 < -1022 && d < 50)
            throw range_exhausted_error(
                "multiply-shift: shift underflows below the normal range");
        const double shift = multiply_shift_shift(e, d);

        IterationStats stats;
        if (opt.stats) {
            stats.index = static_cast<int>(iterations) + 1;
            stats.pending = pending.size();
            stats.region = e;
            double lo = p.values[pending[0]], hi = lo;
            for (std::size_t i : pending) {
                lo = std::min(lo, p.values[i]);
                hi = std::max(hi, p.values[i]);
            }
            stats.span_before = hi - lo;
        }
        for (std::size_t i : pending) {
            const double before = p.values[i];
            if (opt.checked)
                checked_assert(region_of(before) == e,
                               "multiply-shift pending value outside current region");
            double y = 2.0 * before;
            if (shift != 0.0) {
                if (opt.checked)
                    checked_assert(fp::is_lossless_add_within_region(shift, e + 1),
                                   "multiply-shift addend violates the predicate");
                y = y + shift;
            }
            if (opt.checked) {
                checked_assert(region_of(y) == e + 1,
                               "multiply-shift output missed the next region");
                const double back = (y - shift) / 2.0;
                checked_assert(to_bits(back) == to_bits(before),
                               "multiply-shift step is not exactly invertible");
            }
            p.values[i] = y;
        }
        if (opt.stats) {
            double lo = p.values[pending[0]], hi = lo;
            for (std::size_t i : pending) {
                lo = std::min(lo, p.values[i]);
                hi = std::max(hi, p.values[i]);
            }
            stats.span_scaled = hi - lo;
            opt.stats->push_back(stats);
        }
        iterations += 1;
    }
    meta.iteration_count = iterations;

    PreprocessedDataset pd;
    pd.technique = Technique::MultiplyShift;
    pd.values = std::move(p.values);
    pd.alignment = std::move(p.rec);
    pd.metadata = meta;
    return pd;
}

std::vector<double> multiply_shift_inverse(const PreprocessedDataset& pd,
                                           const Options& opt) {
    (void)opt;
    fp::require_round_to_nearest();
    const auto* meta = std::get_if<MultiplyShiftMetadata>(&pd.metadata);
    if (!meta || pd.technique != Technique::MultiplyShift)
        throw contract_error("multiply-shift inverse: metadata mismatch");
    validate_d(meta->d);
    const int e0 = pd.alignment.reference_e_star;
    if (meta->a1 != multiply_shift_shift(e0, meta->d))
        throw integrity_error("multiply-shift: stored first shift disagrees with d");

    std::vector<double> values = pd.values;
    for (std::uint32_t k = meta->iteration_count; k >= 1; --k) {
        const int e_src = e0 + static_cast<int>(k) - 1;
        const int e_hi = e_src + 1;
        const double shift = multiply_shift_shift(e_src, meta->d);
        for (double& v : values) {
            if (v == 0.0 || region_of(v) != e_hi) continue;
            const double doubled = shift != 0.0 ? v - shift : v;
            if (region_of(doubled) != e_hi)
                throw integrity_error("multiply-shift inverse: subtraction left the region");
            v = doubled / 2.0;
        }
    }
    restore_alignment(values, pd.alignment);
    return values;
}

// ---------------------------------------------------------------------------
// shift and separate even from odd
// ---------------------------------------------------------------------------

double even_odd_w_next(double w, int e_star, int d) {
    validate_d(d);
    return 2.0 * w - std::ldexp(1.0, e_star - d);
}

PreprocessedDataset even_odd_separate_forward(std::span<const double> ds, int d,
                                              const Options& opt) {
    fp::require_round_to_nearest();
    validate_d(d);
    validate_dataset(ds);
    if (all_bitwise_equal(ds)) return make_identity(ds);

    Prepared p = prepare(ds);
    const int e0 = p.rec.reference_e_star;

    EvenOddSeparateMetadata meta;
    meta.d = d;

    const std::uint64_t a_units = align_shift_units(p.values, p.live);
    meta.a_align = std::ldexp(static_cast<double>(a_units), e0 - kMantissaBits);
    apply_alignment_shift(p.values, p.live, meta.a_align, e0, /*add=*/false, opt);

    std::uint64_t w0_units = 0;
    for (std::size_t i : p.live)
        w0_units = std::max(w0_units, mantissa_field(p.values[i]));
    meta.w0 = std::ldexp(static_cast<double>(w0_units), e0 - kMantissaBits);

    EvenOddTracker tracker(e0, d, w0_units);
    std::uint32_t iterations = 0;
    try {
        while (!live_share(p.values, p.live, d)) {
            std::vector<std::size_t> pending;
            for (std::size_t i : p.live)
                if (!fp::top_mantissa_all_ones(p.values[i], d)) pending.push_back(i);
            if (pending.empty()) break;
            if (static_cast<int>(iterations) >= opt.iteration_cap)
                throw non_convergence_error(
                    "even/odd: iteration cap " + std::to_string(opt.iteration_cap) +
                        " reached at d=" + std::to_string(d),
                    0);
            const EvenOddTracker::Step step = tracker.advance();
            const double a_even = units_value(step.a_even_sig, step.e_src);
            const double a_odd = units_value(step.a_odd_sig, step.e_src);

            IterationStats stats;
            stats.index = static_cast<int>(iterations) + 1;
            stats.pending = pending.size();
            stats.region = step.e_src;
            double even_lo = 0, even_hi = 0, odd_lo = 0, odd_hi = 0;
            bool any_even = false, any_odd = false;

            for (std::size_t i : pending) {
                const double before = p.values[i];
                const bool even = fp::mantissa_even(before);
                const double shift = even ? a_even : a_odd;
                if (opt.checked) {
                    checked_assert(region_of(before) == step.e_src,
                                   "even/odd pending value outside current region");
                    checked_assert(fp::is_lossless_add_cross_region(before, shift),
                                   "even/odd shift violates the cross-region predicate");
                }
                const double after = before + shift;
                if (opt.checked) {
                    checked_assert(region_of(after) == step.e_src + 1,
                                   "even/odd output missed the next region");
                    checked_assert(to_bits(after - shift) == to_bits(before),
                                   "even/odd step is not exactly invertible");
                }
                p.values[i] = after;
                if (opt.stats) {
                    auto& lo = even ? even_lo : odd_lo;
                    auto& hi = even ? even_hi : odd_hi;
                    auto& any = even ? any_even : any_odd;
                    if (!any) {
                        lo = hi = after;
                        any = true;
                    } else {
                        lo = std::min(lo, after);
                        hi = std::max(hi, after);
                    }
                }
            }
            if (opt.stats) {
                stats.even_lo = even_lo;
                stats.even_hi = even_hi;
                stats.odd_lo = odd_lo;
                stats.odd_hi = odd_hi;
                opt.stats->push_back(stats);
            }
            iterations += 1;
        }
    } catch (non_convergence_error& e) {
        throw non_convergence_error(e.what(),
                                    estimate_max_d(ds, d, opt, &even_odd_separate_forward));
    }
    meta.iteration_count = iterations;

    PreprocessedDataset pd;
    pd.technique = Technique::EvenOddSeparate;
    pd.values = std::move(p.values);
    pd.alignment = std::move(p.rec);
    pd.metadata = meta;
    return pd;
}

std::vector<double> even_odd_separate_inverse(const PreprocessedDataset& pd,
                                              const Options& opt) {
    fp::require_round_to_nearest();
    const auto* meta = std::get_if<EvenOddSeparateMetadata>(&pd.metadata);
    if (!meta || pd.technique != Technique::EvenOddSeparate)
        throw contract_error("even/odd inverse: metadata mismatch");
    validate_d(meta->d);
    const int e0 = pd.alignment.reference_e_star;
    const std::uint64_t w0_units = w0_units_from_double(meta->w0, e0);

    std::vector<EvenOddTracker::Step> steps;
    try {
        EvenOddTracker tracker(e0, meta->d, w0_units);
        for (std::uint32_t i = 0; i < meta->iteration_count; ++i)
            steps.push_back(tracker.advance());
    } catch (const error&) {
        throw integrity_error("even/odd: stored metadata cannot regenerate the schedule");
    }

    std::vector<double> values = pd.values;
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] != 0.0) live.push_back(i);

    for (std::uint32_t k = meta->iteration_count; k >= 1; --k) {
        const EvenOddTracker::Step& step = steps[k - 1];
        const int e_hi = step.e_src + 1;
        const double a_even = units_value(step.a_even_sig, step.e_src);
        const double a_odd = units_value(step.a_odd_sig, step.e_src);
        for (std::size_t i : live) {
            double& v = values[i];
            if (region_of(v) != e_hi) continue;
            const std::uint64_t y_units = kOne53 + 2 * mantissa_field(v);
            const bool came_from_even = y_units >= step.theta_units;
            const double x = v - (came_from_even ? a_even : a_odd);
            if (region_of(x) != step.e_src)
                throw integrity_error("even/odd inverse: value fell outside both sub-windows");
            if (opt.checked)
                checked_assert(fp::mantissa_even(x) == came_from_even,
                               "even/odd inverse: recovered parity disagrees with window");
            v = x;
        }
    }
    apply_alignment_shift(values, live, meta->a_align, e0, /*add=*/true, opt);
    restore_alignment(values, pd.alignment);
    return values;
}

// ---------------------------------------------------------------------------
// shift and save evenness
// ---------------------------------------------------------------------------

PreprocessedDataset save_evenness_forward(std::span<const double> ds, int d,
                                          const Options& opt) {
    fp::require_round_to_nearest();
    validate_d(d);
    validate_dataset(ds);
    if (all_bitwise_equal(ds)) return make_identity(ds);

    Prepared p = prepare(ds);
    const int e0 = p.rec.reference_e_star;
    const std::size_t n = p.values.size();

    EvennessMetadata meta;
    meta.d = d;
    const std::uint64_t a_units = align_shift_units(p.values, p.live);
    meta.a_align = std::ldexp(static_cast<double>(a_units), e0 - kMantissaBits);
    apply_alignment_shift(p.values, p.live, meta.a_align, e0, /*add=*/false, opt);

    std::uint32_t iterations = 0;
    while (!live_share(p.values, p.live, d)) {
        std::vector<std::size_t> pending;
        for (std::size_t i : p.live)
            if (!fp::top_mantissa_all_ones(p.values[i], d)) pending.push_back(i);
        if (pending.empty()) break;
        if (static_cast<int>(iterations) >= opt.iteration_cap)
            throw non_convergence_error(
                "save-evenness: iteration cap " + std::to_string(opt.iteration_cap) +
                    " reached at d=" + std::to_string(d),
                estimate_max_d(ds, d, opt, &save_evenness_forward));
        const int e = e0 + static_cast<int>(iterations);
        if (e + 1 > 1023)
            throw range_exhausted_error("save-evenness: values would pass 2^1024");
        // Same even shift every iteration; the odd shift is the adjacent odd
        // lattice point, and the per-sample bit says which one was used.
        const double a_even = units_value(kOne53 - 2, e);
        const double a_odd = units_value(kOne53 - 3, e);

        std::vector<std::uint8_t> bitmap((n + 7) / 8, 0);
        IterationStats stats;
        stats.index = static_cast<int>(iterations) + 1;
        stats.pending = pending.size();
        stats.region = e;
        for (std::size_t i : pending) {
            const double before = p.values[i];
            const bool even = fp::mantissa_even(before);
            if (!even) bitmap_set(bitmap, i);
            const double shift = even ? a_even : a_odd;
            if (opt.checked) {
                checked_assert(region_of(before) == e,
                               "save-evenness pending value outside current region");
                checked_assert(fp::is_lossless_add_cross_region(before, shift),
                               "save-evenness shift violates the cross-region predicate");
            }
            const double after = before + shift;
            if (opt.checked) {
                checked_assert(region_of(after) == e + 1,
                               "save-evenness output missed the next region");
                checked_assert(to_bits(after - shift) == to_bits(before),
                               "save-evenness step is not exactly invertible");
            }
            p.values[i] = after;
        }
        meta.evenness_bitmaps.push_back(std::move(bitmap));
        if (opt.stats) opt.stats->push_back(stats);
        iterations += 1;
    }
    meta.iteration_count = iterations;

    PreprocessedDataset pd;
    pd.technique = Technique::SaveEvenness;
    pd.values = std::move(p.values);
    pd.alignment = std::move(p.rec);
    pd.metadata = std::move(meta);
    return pd;
}

std::vector<double> save_evenness_inverse(const PreprocessedDataset& pd,
                                          const Options& opt) {
    fp::require_round_to_nearest();
    const auto* meta = std::get_if<EvennessMetadata>(&pd.metadata);
    if (!meta || pd.technique != Technique::SaveEvenness)
        throw contract_error("save-evenness inverse: metadata mismatch");
    validate_d(meta->d);
    const std::size_t n = pd.values.size();
    if (meta->evenness_bitmaps.size() != meta->iteration_count)
        throw integrity_error("save-evenness: bitmap count differs from iteration count");
    for (const auto& bm : meta->evenness_bitmaps)
        if (bm.size() != (n + 7) / 8)
            throw integrity_error("save-evenness: bitmap length mismatch");

    const int e0 = pd.alignment.reference_e_star;
    std::vector<double> values = pd.values;
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] != 0.0) live.push_back(i);

    for (std::uint32_t k = meta->iteration_count; k >= 1; --k) {
        const int e_src = e0 + static_cast<int>(k) - 1;
        const int e_hi = e_src + 1;
        const double a_even = units_value(kOne53 - 2, e_src);
        const double a_odd = units_value(kOne53 - 3, e_src);
        const auto& bitmap = meta->evenness_bitmaps[k - 1];
        for (std::size_t i : live) {
            double& v = values[i];
            if (region_of(v) != e_hi) continue;
            const bool was_odd = bitmap_get(bitmap, i);
            const double x = v - (was_odd ? a_odd : a_even);
            if (region_of(x) != e_src)
                throw integrity_error("save-evenness inverse: value left the region");
            if (fp::mantissa_even(x) == was_odd)
                throw integrity_error(
                    "save-evenness inverse: recovered parity disagrees with metadata");
            v = x;
        }
    }
    apply_alignment_shift(values, live, meta->a_align, e0, /*add=*/true, opt);
    restore_alignment(values, pd.alignment);
    return values;
}

// ---------------------------------------------------------------------------

std::vector<double> inverse(const PreprocessedDataset& pd, const Options& opt) {
    switch (pd.technique) {
        case Technique::CompactBins: return compact_bins_inverse(pd, opt);
        case Technique::MultiplyShift: return multiply_shift_inverse(pd, opt);
        case Technique::EvenOddSeparate: return even_odd_separate_inverse(pd, opt);
        case Technique::SaveEvenness: return save_evenness_inverse(pd, opt);
        case Technique::Identity: return pd.values;
    }
    throw contract_error("inverse: unknown technique");
}

}  // namespace fpprep::tfm
