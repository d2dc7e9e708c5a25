#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fpprep/errors.hpp"

// Deduplication-style compressor: one shared base pattern plus a short
// per-value deviation holding only the bit positions on which the dataset
// disagrees. The preprocessing techniques exist to shrink that deviation.
namespace fpprep::gd {

struct GdArchive {
    std::uint64_t shared_mask = 0;   // bit positions every value agrees on
    std::uint64_t shared_value = 0;  // the agreed bits; zero elsewhere
    std::uint64_t n = 0;
    std::uint8_t deviation_width = 64;  // popcount(~shared_mask)
    std::vector<std::uint8_t> deviations;  // n * width bits, MSB-first, padded at the end
    std::uint8_t pass_id = 0;  // second-stage byte compressor; 0 = none
};

GdArchive gd_compress(std::span<const double> values);
std::vector<double> gd_decompress(const GdArchive& archive);

/// On-disk layout: "FPGD", version byte, fields in declared order,
/// little-endian, deviation bits padded to a byte boundary at the end only.
std::vector<std::uint8_t> serialize(const GdArchive& archive);
GdArchive deserialize(std::span<const std::uint8_t> bytes);

std::size_t archive_size_bytes(const GdArchive& archive);

/// Optional second pass over the serialized archive payload. The default
/// implementation is a no-op; external byte compressors can be plugged in
/// for comparison runs.
class ByteCompressor {
public:
    virtual ~ByteCompressor() = default;
    virtual std::uint8_t id() const = 0;
    virtual std::vector<std::uint8_t> compress(std::span<const std::uint8_t> bytes) const = 0;
    virtual std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> bytes) const = 0;
};

class NoopByteCompressor final : public ByteCompressor {
public:
    std::uint8_t id() const override { return 0; }
    std::vector<std::uint8_t> compress(std::span<const std::uint8_t> bytes) const override {
        return {bytes.begin(), bytes.end()};
    }
    std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> bytes) const override {
        return {bytes.begin(), bytes.end()};
    }
};

/// (compressed + metadata) / original, all in bits. Lower is better.
double compression_ratio(std::uint64_t compressed_bits, std::uint64_t metadata_bits,
                         std::uint64_t original_bits);

}  // namespace fpprep::gd
