#include "fpprep/gd.hpp"

#include <bit>
#include <cstring>

#include "fpprep/fp_core.hpp"

namespace fpprep::gd {

namespace {

constexpr char kMagic[4] = {'F', 'P', 'G', 'D'};
constexpr std::uint8_t kVersion = 1;

void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}

std::uint64_t get_u64le(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[at + i]) << (8 * i);
    return v;
}

}  // namespace

GdArchive gd_compress(std::span<const double> values) {
    if (values.empty())
        throw contract_error("gd_compress: empty input");

    const fp::SharedBitsSummary shared = fp::shared_bits(values);
    GdArchive a;
    a.shared_mask = shared.shared_mask;
    a.shared_value = shared.shared_value;
    a.n = values.size();
    a.deviation_width = static_cast<std::uint8_t>(64 - shared.s_tot);

    a.deviations.assign((a.n * a.deviation_width + 7) / 8, 0);
    std::size_t bit = 0;
    for (double v : values) {
        const std::uint64_t b = fp::to_bits(v);
        for (int pos = 63; pos >= 0; --pos) {
            if ((a.shared_mask >> pos) & 1) continue;
            if ((b >> pos) & 1)
                a.deviations[bit / 8] |= std::uint8_t(1u << (7 - bit % 8));
            bit += 1;
        }
    }
    return a;
}

std::vector<double> gd_decompress(const GdArchive& a) {
    if (a.deviation_width != std::popcount(~a.shared_mask))
        throw integrity_error("gd archive: deviation width disagrees with mask");
    if (a.shared_value & ~a.shared_mask)
        throw integrity_error("gd archive: shared value has bits outside the mask");
    if (a.deviations.size() != (a.n * a.deviation_width + 7) / 8)
        throw integrity_error("gd archive: deviation payload size mismatch");

    std::vector<double> out(a.n);
    std::size_t bit = 0;
    for (std::uint64_t i = 0; i < a.n; ++i) {
        std::uint64_t b = a.shared_value;
        for (int pos = 63; pos >= 0; --pos) {
            if ((a.shared_mask >> pos) & 1) continue;
            const std::uint64_t d = (a.deviations[bit / 8] >> (7 - bit % 8)) & 1;
            b |= d << pos;
            bit += 1;
        }
        out[i] = fp::from_bits(b);
    }
    return out;
}

std::vector<std::uint8_t> serialize(const GdArchive& a) {
    std::vector<std::uint8_t> out;
    out.reserve(archive_size_bytes(a));
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kVersion);
    put_u64le(out, a.shared_mask);
    put_u64le(out, a.shared_value);
    put_u64le(out, a.n);
    out.push_back(a.deviation_width);
    out.insert(out.end(), a.deviations.begin(), a.deviations.end());
    out.push_back(a.pass_id);
    return out;
}

GdArchive deserialize(std::span<const std::uint8_t> bytes) {
    constexpr std::size_t fixed = 4 + 1 + 8 + 8 + 8 + 1 + 1;
    if (bytes.size() < fixed)
        throw integrity_error("gd archive truncated");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw integrity_error("bad gd archive magic");
    if (bytes[4] != kVersion)
        throw integrity_error("unsupported gd archive version");

    GdArchive a;
    a.shared_mask = get_u64le(bytes, 5);
    a.shared_value = get_u64le(bytes, 13);
    a.n = get_u64le(bytes, 21);
    a.deviation_width = bytes[29];
    if (a.deviation_width > 64)
        throw integrity_error("gd archive: deviation width exceeds 64");
    if (a.deviation_width != std::popcount(~a.shared_mask))
        throw integrity_error("gd archive: deviation width disagrees with mask");
    const std::size_t payload = (a.n * a.deviation_width + 7) / 8;
    if (bytes.size() != fixed + payload)
        throw integrity_error("gd archive: length disagrees with element count");
    a.deviations.assign(bytes.begin() + 30, bytes.begin() + 30 + payload);
    a.pass_id = bytes[30 + payload];
    return a;
}

std::size_t archive_size_bytes(const GdArchive& a) {
    return 4 + 1 + 8 + 8 + 8 + 1 + a.deviations.size() + 1;
}

double compression_ratio(std::uint64_t compressed_bits, std::uint64_t metadata_bits,
                         std::uint64_t original_bits) {
    if (original_bits == 0)
        throw contract_error("compression_ratio: original size must be positive");
    return (static_cast<double>(compressed_bits) + static_cast<double>(metadata_bits)) /
           static_cast<double>(original_bits);
}

}  // namespace fpprep::gd
