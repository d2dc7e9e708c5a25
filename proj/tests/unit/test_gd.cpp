#include <doctest.h>

#include <random>
#include <vector>

#include "fpprep/fp_core.hpp"
#include "fpprep/gd.hpp"

using namespace fpprep;

namespace {

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (fp::to_bits(a[i]) != fp::to_bits(b[i])) return false;
    return true;
}

}  // namespace

TEST_CASE("constant datasets compress to the header alone") {
    const std::vector<double> ds(1000, 6.75);
    const gd::GdArchive a = gd::gd_compress(ds);
    CHECK(a.deviation_width == 0);
    CHECK(a.deviations.empty());
    CHECK(gd::archive_size_bytes(a) == 31);
    CHECK(bits_equal(gd::gd_decompress(a), ds));
}

TEST_CASE("one differing bit costs one packed bit per value") {
    const std::vector<double> ds{1.0, 1.5};
    const gd::GdArchive a = gd::gd_compress(ds);
    CHECK(a.deviation_width == 1);
    REQUIRE(a.deviations.size() == 1);
    CHECK(a.deviations[0] == 0x40);  // 1.0 -> 0, 1.5 -> 1, MSB-first
    CHECK(gd::archive_size_bytes(a) == 32);
    CHECK(bits_equal(gd::gd_decompress(a), ds));
}

TEST_CASE("round trip over arbitrary bit patterns including NaN payloads") {
    std::mt19937_64 rng(29);
    std::vector<double> ds(317);
    for (auto& v : ds) v = fp::from_bits(rng());
    ds[0] = fp::from_bits(0x7FF8DEADBEEF1234ull);  // NaN with payload
    ds[1] = fp::from_bits(0xFFF0000000000000ull);  // -inf
    const gd::GdArchive a = gd::gd_compress(ds);
    CHECK(bits_equal(gd::gd_decompress(a), ds));

    const auto bytes = gd::serialize(a);
    CHECK(bytes == gd::serialize(a));
    const gd::GdArchive back = gd::deserialize(bytes);
    CHECK(bits_equal(gd::gd_decompress(back), ds));
}

TEST_CASE("archive size decreases strictly as shared bits grow") {
    const std::uint64_t base = 0x4010aabbccddeeffull;
    std::size_t last = ~std::size_t{0};
    for (int shared : {0, 8, 32, 56, 63, 64}) {
        std::vector<double> ds(64);
        const std::uint64_t low_mask =
            shared == 64 ? 0 : (~std::uint64_t{0}) >> shared;
        for (std::size_t i = 0; i < ds.size(); ++i)
            ds[i] = fp::from_bits(i % 2 ? base | low_mask : base & ~low_mask);
        const gd::GdArchive a = gd::gd_compress(ds);
        CHECK(a.deviation_width == 64 - shared);
        const std::size_t size = gd::archive_size_bytes(a);
        CHECK(size < last);
        last = size;
        CHECK(bits_equal(gd::gd_decompress(a), ds));
    }
}

TEST_CASE("archive deserialization rejects malformed bytes") {
    const gd::GdArchive a = gd::gd_compress(std::vector<double>{1.0, 2.0, 3.0});
    const auto bytes = gd::serialize(a);

    auto bad_magic = bytes;
    bad_magic[0] = 'Z';
    CHECK_THROWS_AS(gd::deserialize(bad_magic), integrity_error);

    auto bad_version = bytes;
    bad_version[4] = 9;
    CHECK_THROWS_AS(gd::deserialize(bad_version), integrity_error);

    auto bad_width = bytes;
    bad_width[29] += 1;
    CHECK_THROWS_AS(gd::deserialize(bad_width), integrity_error);

    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(gd::deserialize(truncated), integrity_error);

    CHECK_THROWS_AS(gd::gd_compress(std::span<const double>{}), contract_error);
}

TEST_CASE("compression ratio") {
    CHECK(gd::compression_ratio(6400, 0, 64000) == 0.1);
    CHECK_THROWS_AS(gd::compression_ratio(1, 1, 0), contract_error);

    const std::vector<double> constant(1000, 2.5);
    const double cr_constant = gd::compression_ratio(
        8 * gd::archive_size_bytes(gd::gd_compress(constant)), 0, 64 * constant.size());
    CHECK(cr_constant < 0.01);

    std::mt19937_64 rng(31);
    std::vector<double> noise(1000);
    for (auto& v : noise) v = fp::from_bits(rng());
    const double cr_noise = gd::compression_ratio(
        8 * gd::archive_size_bytes(gd::gd_compress(noise)), 0, 64 * noise.size());
    CHECK(cr_noise >= 1.0);
}

namespace {

// Toy second-stage pass for the plug-in interface test.
class XorByteCompressor final : public gd::ByteCompressor {
public:
    std::uint8_t id() const override { return 7; }
    std::vector<std::uint8_t> compress(std::span<const std::uint8_t> bytes) const override {
        std::vector<std::uint8_t> out(bytes.begin(), bytes.end());
        for (auto& b : out) b ^= 0x5A;
        return out;
    }
    std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> bytes) const override {
        return compress(bytes);
    }
};

}  // namespace

TEST_CASE("second-stage byte compressor hook") {
    const gd::NoopByteCompressor noop;
    const std::vector<std::uint8_t> payload{1, 2, 3, 250};
    CHECK(noop.id() == 0);
    CHECK(noop.decompress(noop.compress(payload)) == payload);

    const XorByteCompressor xs;
    gd::GdArchive a = gd::gd_compress(std::vector<double>{1.0, 1.5, 1.25});
    a.pass_id = xs.id();
    const auto passed = xs.compress(gd::serialize(a));
    const gd::GdArchive back = gd::deserialize(xs.decompress(passed));
    CHECK(back.pass_id == xs.id());
}
