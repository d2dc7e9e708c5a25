#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "fpprep/errors.hpp"
#include "fpprep/fp_core.hpp"

// The four invertible preprocessing techniques, plus the exponent-alignment
// and zero-handling stages that reduce an arbitrary non-negative dataset to
// the single-region form the techniques operate on.
//
// Every arithmetic step a forward pass performs is exact (the inverse is
// bit-exact by construction): multiplications are powers of two, additions
// satisfy either the cross-region same-parity condition or the within-region
// trailing-zero condition from fp_core.
namespace fpprep::tfm {

enum class Technique : std::uint8_t {
    CompactBins = 0,
    MultiplyShift = 1,
    EvenOddSeparate = 2,
    SaveEvenness = 3,
    Identity = 4,
};

const char* technique_name(Technique t);

/// Undo record for the alignment stage: per-sample exponent deltas relative
/// to the reference region, plus which samples were +0.0 and bypassed.
struct AlignmentRecord {
    int reference_e_star = 0;
    std::vector<std::int16_t> exponent_deltas;  // original e* minus reference
    std::vector<std::uint8_t> zero_bitmap;      // ceil(n/8) bytes, MSB-first; empty if no zeros

    bool has_zeros() const { return !zero_bitmap.empty(); }
    bool is_zero(std::size_t i) const {
        return has_zeros() && (zero_bitmap[i / 8] >> (7 - i % 8)) & 1;
    }
    bool trivial_deltas() const;
};

struct CompactBinsMetadata {
    std::uint32_t k = 1;
    std::vector<std::uint64_t> boundaries;  // k-1 ascending indices into the sorted unique values
    std::vector<double> shifts;             // k per-bin shift values (signed)
};

struct MultiplyShiftMetadata {
    int d = 1;
    double a1 = 0.0;  // first-iteration shift; later ones derive from d and the region
    std::uint32_t iteration_count = 0;
};

struct EvenOddSeparateMetadata {
    double a_align = 0.0;
    int d = 1;
    double w0 = 0.0;  // initial width bound; the whole shift schedule regenerates from it
    std::uint32_t iteration_count = 0;
};

struct EvennessMetadata {
    double a_align = 0.0;
    int d = 1;
    std::uint32_t iteration_count = 0;
    // One bitmap per iteration, ceil(n/8) bytes each, MSB-first: bit = mantissa
    // parity of the sample before that iteration's shift (0 for bystanders).
    std::vector<std::vector<std::uint8_t>> evenness_bitmaps;
};

struct IdentityMetadata {};

using TechniqueMetadata =
    std::variant<CompactBinsMetadata, MultiplyShiftMetadata, EvenOddSeparateMetadata,
                 EvennessMetadata, IdentityMetadata>;

struct PreprocessedDataset {
    Technique technique = Technique::Identity;
    std::vector<double> values;
    AlignmentRecord alignment;
    TechniqueMetadata metadata = IdentityMetadata{};
};

/// Per-iteration observability for tests and diagnostics.
struct IterationStats {
    int index = 0;
    std::size_t pending = 0;
    int region = 0;           // source region of the iteration
    double span_before = 0.0; // pending span entering the iteration
    double span_scaled = 0.0; // pending span after the scale step (multiply/shift only)
    double even_lo = 0.0, even_hi = 0.0;  // even-input output window
    double odd_lo = 0.0, odd_hi = 0.0;    // odd-input output window
};

struct Options {
    bool checked = false;     // assert the fp_core predicate on every addition
    int iteration_cap = 64;
    bool estimate_max_d = true;  // on failure, search for the largest workable d
    std::vector<IterationStats>* stats = nullptr;
};

/// Scales every value by an exact power of two into the most common input
/// region. Zeros are recorded and passed through. Rejects negative values,
/// -0.0, NaN, infinities and subnormals.
std::pair<std::vector<double>, AlignmentRecord> align_exponents(
    std::span<const double> ds);

PreprocessedDataset compact_bins_forward(std::span<const double> ds, std::uint32_t k,
                                         int d, const Options& opt = {});
std::vector<double> compact_bins_inverse(const PreprocessedDataset& pd,
                                         const Options& opt = {});
/// Largest d a compact-bins pass with k bins can guarantee on this dataset
/// (0 when even d = 1 does not fit).
int compact_bins_max_d(std::span<const double> ds, std::uint32_t k);

PreprocessedDataset multiply_shift_forward(std::span<const double> ds, int d,
                                           const Options& opt = {});
std::vector<double> multiply_shift_inverse(const PreprocessedDataset& pd,
                                           const Options& opt = {});

PreprocessedDataset even_odd_separate_forward(std::span<const double> ds, int d,
                                              const Options& opt = {});
std::vector<double> even_odd_separate_inverse(const PreprocessedDataset& pd,
                                              const Options& opt = {});

PreprocessedDataset save_evenness_forward(std::span<const double> ds, int d,
                                          const Options& opt = {});
std::vector<double> save_evenness_inverse(const PreprocessedDataset& pd,
                                          const Options& opt = {});

/// Dispatch on pd.technique.
std::vector<double> inverse(const PreprocessedDataset& pd, const Options& opt = {});

/// The multiply-and-shift per-iteration addend for a source region, before
/// and after rounding it down onto the within-region-lossless lattice.
double multiply_shift_shift_raw(int e_star, int d);
double multiply_shift_shift(int e_star, int d);

/// Idealized width recurrence for the even/odd split: next = 2*w - 2^(e*-d).
/// Used for width estimates; the transform itself tracks exact bounds.
double even_odd_w_next(double w, int e_star, int d);

}  // namespace fpprep::tfm
