#include "fpprep/codec.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <string>

namespace fpprep::codec {

namespace {

constexpr char kMagic[4] = {'F', 'P', 'P', '1'};
constexpr std::size_t kHeaderBytes = 4 + 1 + 8;
constexpr std::uint8_t kFlagDeltas = 0x01;
constexpr std::uint8_t kFlagZeros = 0x02;

void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(v & 0xFF);
    out.push_back(v >> 8);
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}

void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}

void put_f64le(std::vector<std::uint8_t>& out, double v) {
    put_u64le(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t position() const { return pos_; }

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint16_t u16le() {
        need(2);
        std::uint16_t v = bytes_[pos_] | (std::uint16_t(bytes_[pos_ + 1]) << 8);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32le() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64le() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64le() { return std::bit_cast<double>(u64le()); }

    std::span<const std::uint8_t> block(std::size_t len) {
        need(len);
        auto s = bytes_.subspan(pos_, len);
        pos_ += len;
        return s;
    }

    void need(std::size_t len) const {
        if (remaining() < len)
            throw integrity_error("container truncated");
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void write(std::uint64_t value, int bits) {
        for (int i = bits - 1; i >= 0; --i) {
            if (fill_ == 0) {
                out_.push_back(0);
                fill_ = 8;
            }
            fill_ -= 1;
            out_.back() |= std::uint8_t(((value >> i) & 1) << fill_);
        }
    }

private:
    std::vector<std::uint8_t>& out_;
    int fill_ = 0;  // free bits left in the last byte
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t read(int bits) {
        std::uint64_t v = 0;
        for (int i = 0; i < bits; ++i) {
            const std::size_t byte = pos_ / 8;
            if (byte >= bytes_.size())
                throw integrity_error("bit-packed field truncated");
            v = (v << 1) | ((bytes_[byte] >> (7 - pos_ % 8)) & 1);
            pos_ += 1;
        }
        return v;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

int boundary_bits(std::size_t unique_count) {
    if (unique_count <= 1) return 0;
    return std::bit_width(unique_count - 1);
}

std::size_t nonzero_unique_count(const std::vector<double>& values) {
    std::vector<std::uint64_t> v;
    v.reserve(values.size());
    for (double x : values)
        if (x != 0.0) v.push_back(std::bit_cast<std::uint64_t>(x));
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v.size();
}

struct AlignmentLayout {
    bool deltas = false;
    bool zeros = false;
    std::int16_t min_delta = 0;
    int width = 0;
};

AlignmentLayout alignment_layout(const tfm::AlignmentRecord& rec) {
    AlignmentLayout l;
    l.zeros = rec.has_zeros();
    if (!rec.trivial_deltas()) {
        l.deltas = true;
        std::int16_t lo = 0, hi = 0;
        bool first = true;
        for (std::int16_t d : rec.exponent_deltas) {
            if (first) {
                lo = hi = d;
                first = false;
            } else {
                lo = std::min(lo, d);
                hi = std::max(hi, d);
            }
        }
        l.min_delta = lo;
        l.width = std::max(1, static_cast<int>(std::bit_width(std::uint32_t(hi - lo))));
    }
    return l;
}

std::size_t alignment_section_size(const tfm::AlignmentRecord& rec, std::size_t n) {
    const AlignmentLayout l = alignment_layout(rec);
    std::size_t size = 2 + 1;  // reference region + flags
    if (l.deltas) size += 2 + 1 + (n * l.width + 7) / 8;
    if (l.zeros) size += (n + 7) / 8;
    return size;
}

void encode_alignment(std::vector<std::uint8_t>& out, const tfm::AlignmentRecord& rec,
                      std::size_t n) {
    const AlignmentLayout l = alignment_layout(rec);
    put_u16le(out, static_cast<std::uint16_t>(rec.reference_e_star));
    out.push_back((l.deltas ? kFlagDeltas : 0) | (l.zeros ? kFlagZeros : 0));
    if (l.deltas) {
        put_u16le(out, static_cast<std::uint16_t>(l.min_delta));
        out.push_back(static_cast<std::uint8_t>(l.width));
        BitWriter bw(out);
        for (std::size_t i = 0; i < n; ++i) {
            const std::int16_t d = i < rec.exponent_deltas.size() ? rec.exponent_deltas[i] : 0;
            bw.write(std::uint64_t(std::uint32_t(d - l.min_delta)), l.width);
        }
    }
    if (l.zeros) out.insert(out.end(), rec.zero_bitmap.begin(), rec.zero_bitmap.end());
}

tfm::AlignmentRecord decode_alignment(Reader& r, std::size_t n) {
    tfm::AlignmentRecord rec;
    rec.reference_e_star = static_cast<std::int16_t>(r.u16le());
    if (rec.reference_e_star < -1022 || rec.reference_e_star > 1023)
        throw integrity_error("alignment reference region out of range");
    const std::uint8_t flags = r.u8();
    if (flags & ~(kFlagDeltas | kFlagZeros))
        throw integrity_error("alignment section has unknown flags");
    rec.exponent_deltas.assign(n, 0);
    if (flags & kFlagDeltas) {
        const auto min_delta = static_cast<std::int16_t>(r.u16le());
        const int width = r.u8();
        if (width < 1 || width > 16)
            throw integrity_error("alignment delta width out of range");
        BitReader br(r.block((n * std::size_t(width) + 7) / 8));
        for (std::size_t i = 0; i < n; ++i) {
            const auto raw = static_cast<std::int32_t>(br.read(width));
            rec.exponent_deltas[i] = static_cast<std::int16_t>(min_delta + raw);
        }
    }
    if (flags & kFlagZeros) {
        const auto bm = r.block((n + 7) / 8);
        rec.zero_bitmap.assign(bm.begin(), bm.end());
    }
    return rec;
}

}  // namespace

std::size_t alignment_size_bytes(const tfm::PreprocessedDataset& pd) {
    if (pd.technique == tfm::Technique::Identity) return 0;
    return alignment_section_size(pd.alignment, pd.values.size());
}

std::size_t metadata_size_bytes(const tfm::PreprocessedDataset& pd) {
    const std::size_t n = pd.values.size();
    switch (pd.technique) {
        case tfm::Technique::Identity:
            return 0;
        case tfm::Technique::CompactBins: {
            const auto& m = std::get<tfm::CompactBinsMetadata>(pd.metadata);
            const int b = boundary_bits(nonzero_unique_count(pd.values));
            return (std::size_t(m.k) * 64 + std::size_t(m.k - 1) * b + 7) / 8;
        }
        case tfm::Technique::MultiplyShift:
            return 1 + 4 + 8;
        case tfm::Technique::EvenOddSeparate:
            return 1 + 4 + 8 + 8;
        case tfm::Technique::SaveEvenness: {
            const auto& m = std::get<tfm::EvennessMetadata>(pd.metadata);
            return 1 + 4 + 8 + std::size_t(m.iteration_count) * ((n + 7) / 8);
        }
    }
    throw contract_error("metadata_size_bytes: unknown technique");
}

std::vector<std::uint8_t> encode(const tfm::PreprocessedDataset& pd) {
    const std::size_t n = pd.values.size();
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + alignment_size_bytes(pd) + metadata_size_bytes(pd) + 8 * n);
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(static_cast<std::uint8_t>(pd.technique));
    put_u64le(out, n);

    if (pd.technique != tfm::Technique::Identity)
        encode_alignment(out, pd.alignment, n);

    switch (pd.technique) {
        case tfm::Technique::Identity:
            break;
        case tfm::Technique::CompactBins: {
            const auto& m = std::get<tfm::CompactBinsMetadata>(pd.metadata);
            if (m.shifts.size() != m.k || m.boundaries.size() + 1 != m.k)
                throw contract_error("encode: inconsistent compact-bins metadata");
            for (double s : m.shifts) put_f64le(out, s);
            const int b = boundary_bits(nonzero_unique_count(pd.values));
            BitWriter bw(out);
            for (std::uint64_t idx : m.boundaries) bw.write(idx, b);
            break;
        }
        case tfm::Technique::MultiplyShift: {
            const auto& m = std::get<tfm::MultiplyShiftMetadata>(pd.metadata);
            out.push_back(static_cast<std::uint8_t>(m.d));
            put_u32le(out, m.iteration_count);
            put_f64le(out, m.a1);
            break;
        }
        case tfm::Technique::EvenOddSeparate: {
            const auto& m = std::get<tfm::EvenOddSeparateMetadata>(pd.metadata);
            out.push_back(static_cast<std::uint8_t>(m.d));
            put_u32le(out, m.iteration_count);
            put_f64le(out, m.a_align);
            put_f64le(out, m.w0);
            break;
        }
        case tfm::Technique::SaveEvenness: {
            const auto& m = std::get<tfm::EvennessMetadata>(pd.metadata);
            if (m.evenness_bitmaps.size() != m.iteration_count)
                throw contract_error("encode: evenness bitmap count mismatch");
            out.push_back(static_cast<std::uint8_t>(m.d));
            put_u32le(out, m.iteration_count);
            put_f64le(out, m.a_align);
            for (const auto& bm : m.evenness_bitmaps) {
                if (bm.size() != (n + 7) / 8)
                    throw contract_error("encode: evenness bitmap length mismatch");
                out.insert(out.end(), bm.begin(), bm.end());
            }
            break;
        }
    }

    for (double v : pd.values) put_f64le(out, v);
    return out;
}

tfm::PreprocessedDataset decode(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto magic = r.block(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw integrity_error("bad container magic");
    const std::uint8_t tech_byte = r.u8();
    if (tech_byte > 4)
        throw integrity_error("unknown technique id " + std::to_string(tech_byte));
    const auto technique = static_cast<tfm::Technique>(tech_byte);
    const std::uint64_t n = r.u64le();
    if (n > (std::uint64_t{1} << 40))
        throw integrity_error("implausible element count");

    tfm::PreprocessedDataset pd;
    pd.technique = technique;
    if (technique != tfm::Technique::Identity)
        pd.alignment = decode_alignment(r, n);

    if (r.remaining() < 8 * n)
        throw integrity_error("container length disagrees with element count");
    const std::size_t block_len = r.remaining() - 8 * n;

    // Values live at the tail; bins metadata needs them decoded first.
    const auto block = r.block(block_len);
    pd.values.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) pd.values[i] = r.f64le();

    Reader br(block);
    switch (technique) {
        case tfm::Technique::Identity: {
            if (block_len != 0)
                throw integrity_error("identity container has unexpected metadata");
            pd.metadata = tfm::IdentityMetadata{};
            break;
        }
        case tfm::Technique::CompactBins: {
            const std::size_t l = nonzero_unique_count(pd.values);
            const int b = boundary_bits(l);
            // Recover k from the block size: 8*size is within [k*(64+b) - b,
            // k*(64+b) - b + 7].
            const std::size_t k = (8 * block_len + b) / (64 + std::size_t(b));
            if (k < 1 || (std::size_t(k) * 64 + (k - 1) * b + 7) / 8 != block_len)
                throw integrity_error("compact bins: metadata size is impossible");
            tfm::CompactBinsMetadata m;
            m.k = static_cast<std::uint32_t>(k);
            m.shifts.resize(k);
            for (std::size_t i = 0; i < k; ++i) m.shifts[i] = br.f64le();
            BitReader bits(br.block(block_len - 8 * k));
            m.boundaries.resize(k - 1);
            for (std::size_t i = 0; i + 1 < k; ++i) m.boundaries[i] = bits.read(b);
            pd.metadata = std::move(m);
            break;
        }
        case tfm::Technique::MultiplyShift: {
            if (block_len != 13)
                throw integrity_error("multiply-shift metadata block has wrong size");
            tfm::MultiplyShiftMetadata m;
            m.d = br.u8();
            m.iteration_count = br.u32le();
            m.a1 = br.f64le();
            if (m.d < 1 || m.d > 52)
                throw integrity_error("multiply-shift: d out of range");
            pd.metadata = m;
            break;
        }
        case tfm::Technique::EvenOddSeparate: {
            if (block_len != 21)
                throw integrity_error("even/odd metadata block has wrong size");
            tfm::EvenOddSeparateMetadata m;
            m.d = br.u8();
            m.iteration_count = br.u32le();
            m.a_align = br.f64le();
            m.w0 = br.f64le();
            if (m.d < 1 || m.d > 52)
                throw integrity_error("even/odd: d out of range");
            pd.metadata = m;
            break;
        }
        case tfm::Technique::SaveEvenness: {
            if (block_len < 13)
                throw integrity_error("save-evenness metadata block has wrong size");
            tfm::EvennessMetadata m;
            m.d = br.u8();
            m.iteration_count = br.u32le();
            m.a_align = br.f64le();
            if (m.d < 1 || m.d > 52)
                throw integrity_error("save-evenness: d out of range");
            const std::size_t per = (n + 7) / 8;
            const std::size_t body = block_len - 13;
            if (per == 0 || body != std::size_t(m.iteration_count) * per)
                throw integrity_error("save-evenness: bitmap payload size mismatch");
            for (std::uint32_t i = 0; i < m.iteration_count; ++i) {
                const auto bm = br.block(per);
                m.evenness_bitmaps.emplace_back(bm.begin(), bm.end());
            }
            pd.metadata = std::move(m);
            break;
        }
    }
    if (r.remaining() != 0)
        throw integrity_error("trailing bytes after the values block");
    return pd;
}

}  // namespace fpprep::codec
