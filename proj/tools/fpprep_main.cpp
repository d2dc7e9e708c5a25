#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpprep/bench.hpp"
#include "fpprep/codec.hpp"
#include "fpprep/fp_core.hpp"
#include "fpprep/gd.hpp"
#include "fpprep/transforms.hpp"

namespace {

using namespace fpprep;

tfm::Technique technique_from_name(const std::string& name) {
    if (name == "bins") return tfm::Technique::CompactBins;
    if (name == "mulshift") return tfm::Technique::MultiplyShift;
    if (name == "evenodd") return tfm::Technique::EvenOddSeparate;
    if (name == "evenness") return tfm::Technique::SaveEvenness;
    throw CLI::ValidationError("--technique must be one of bins,mulshift,evenodd,evenness");
}

std::vector<int> parse_d_range(const std::string& spec) {
    const auto colon = spec.find(':');
    auto parse_int = [&](const std::string& s) {
        int v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw CLI::ValidationError("--d-range expects D or A:B");
        return v;
    };
    std::vector<int> out;
    if (colon == std::string::npos) {
        out.push_back(parse_int(spec));
        return out;
    }
    const int a = parse_int(spec.substr(0, colon));
    const int b = parse_int(spec.substr(colon + 1));
    if (a < 1 || b < a)
        throw CLI::ValidationError("--d-range bounds must satisfy 1 <= A <= B");
    for (int d = a; d <= b; ++d) out.push_back(d);
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw error("cannot open output file " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw error("write failed for " + path);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw error("cannot open output file " + path);
    out << text;
    if (!out)
        throw error("write failed for " + path);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw error("cannot open input file " + path);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

constexpr char kBundleMagic[4] = {'F', 'P', 'P', 'C'};

std::vector<std::uint8_t> bundle(const std::vector<std::uint8_t>& container,
                                 std::size_t n,
                                 const std::vector<std::uint8_t>& archive) {
    // container minus the trailing raw values block, then the gd archive.
    const std::size_t prefix_len = container.size() - 8 * n;
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kBundleMagic, kBundleMagic + 4);
    for (int i = 0; i < 4; ++i)
        out.push_back((prefix_len >> (8 * i)) & 0xFF);
    out.insert(out.end(), container.begin(), container.begin() + prefix_len);
    out.insert(out.end(), archive.begin(), archive.end());
    return out;
}

std::vector<double> unbundle(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kBundleMagic, 4) != 0)
        throw integrity_error("bad compressed-file magic");
    std::size_t prefix_len = 0;
    for (int i = 0; i < 4; ++i) prefix_len |= std::size_t(bytes[4 + i]) << (8 * i);
    if (8 + prefix_len > bytes.size())
        throw integrity_error("compressed file truncated");
    const auto prefix = bytes.subspan(8, prefix_len);
    const auto archive_bytes = bytes.subspan(8 + prefix_len);

    const gd::GdArchive archive = gd::deserialize(archive_bytes);
    const std::vector<double> values = gd::gd_decompress(archive);

    std::vector<std::uint8_t> container(prefix.begin(), prefix.end());
    for (double v : values) {
        const std::uint64_t b = fp::to_bits(v);
        for (int i = 0; i < 8; ++i) container.push_back((b >> (8 * i)) & 0xFF);
    }
    return tfm::inverse(codec::decode(container));
}

std::string values_to_csv(std::span<const double> values) {
    std::string out = "value\n";
    for (double v : values) {
        out += format_double(v);
        out.push_back('\n');
    }
    return out;
}

struct CommonArgs {
    std::string input;
    std::string column = "0";
    std::size_t limit = 1000;
    std::string technique = "bins";
    std::string d_range;
    std::vector<std::uint32_t> bins_k;
    bool checked = false;
};

void add_ingest_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--input", args.input, "CSV input path")->required();
    cmd->add_option("--column", args.column, "column name or 0-based index");
    cmd->add_option("--limit", args.limit, "number of data rows to ingest");
}

void add_grid_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--technique", args.technique,
                    "one of bins,mulshift,evenodd,evenness");
    cmd->add_option("--d-range", args.d_range, "shared-bit targets, D or A:B");
    cmd->add_option("--bins-k", args.bins_k, "bin counts for the bins technique")
        ->delimiter(',');
    cmd->add_flag("--checked", args.checked,
                  "assert the losslessness predicate on every addition");
}

bench::RunConfig make_config(const CommonArgs& args) {
    bench::RunConfig config;
    config.input_path = args.input;
    config.column = args.column;
    config.row_limit = args.limit;
    config.technique = technique_from_name(args.technique);
    if (!args.d_range.empty()) config.d_grid = parse_d_range(args.d_range);
    config.k_grid = args.bins_k;
    config.checked = args.checked;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lossless floating-point preprocessing benchmark"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string format = "csv";
    std::string output;
    bool stable_output = false;
    int d_single = 0;
    std::uint32_t k_single = 8;

    auto* ingest_cmd = app.add_subcommand("ingest-check", "parse and validate a CSV column");
    add_ingest_options(ingest_cmd, args);

    auto* sweep_cmd = app.add_subcommand("sweep", "run a technique over a parameter grid");
    add_ingest_options(sweep_cmd, args);
    add_grid_options(sweep_cmd, args);
    sweep_cmd->add_option("--format", format, "report format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sweep_cmd->add_option("--output", output, "report path (stdout when omitted)");
    sweep_cmd->add_flag("--stable-output", stable_output,
                        "report wall_ms as 0 so identical runs emit identical bytes");

    auto* verify_cmd =
        app.add_subcommand("verify", "round-trip every grid point and report mismatches");
    add_ingest_options(verify_cmd, args);
    add_grid_options(verify_cmd, args);

    auto* compress_cmd = app.add_subcommand("compress", "preprocess and compress one column");
    add_ingest_options(compress_cmd, args);
    add_grid_options(compress_cmd, args);
    compress_cmd->add_option("--d", d_single, "shared-bit target");
    compress_cmd->add_option("--k", k_single, "bin count (bins technique)");
    compress_cmd->add_option("--output", output, "compressed file path")->required();

    auto* decompress_cmd = app.add_subcommand("decompress", "restore a compressed file to CSV");
    decompress_cmd->add_option("--input", args.input, "compressed file path")->required();
    decompress_cmd->add_option("--output", output, "CSV path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        fp::require_round_to_nearest();

        if (ingest_cmd->parsed()) {
            const bench::RunConfig config{args.input, args.column, args.limit};
            const std::vector<double> data = bench::ingest(config);
            const fp::SharedBitsSummary shared = fp::shared_bits(data);
            std::cout << "rows: " << data.size() << "\n"
                      << "first: " << format_double(data.front()) << "\n"
                      << "last: " << format_double(data.back()) << "\n"
                      << "shared bits: sign=" << shared.s_sign << " exponent=" << shared.s_e
                      << " mantissa=" << shared.s_m << " total=" << shared.s_tot << "\n";
            return 0;
        }

        if (sweep_cmd->parsed()) {
            bench::RunConfig config = make_config(args);
            config.stable_output = stable_output;
            const std::vector<double> data = bench::ingest(config);
            const bench::Report report = bench::sweep(config, data);
            write_text(output, format == "json" ? bench::emit_json(report)
                                                : bench::emit_csv(report));
            return 0;
        }

        if (verify_cmd->parsed()) {
            bench::RunConfig config = make_config(args);
            const std::vector<double> data = bench::ingest(config);
            const std::vector<int> d_grid =
                config.d_grid.empty() ? std::vector<int>{1, 2, 3, 4} : config.d_grid;
            const std::vector<std::uint32_t> k_grid =
                config.k_grid.empty() ? std::vector<std::uint32_t>{1, 2, 8, 32}
                                      : config.k_grid;
            tfm::Options opt;
            opt.checked = args.checked;
            bool all_ok = true;
            auto run_point = [&](int d, std::uint32_t k, const std::string& name) {
                const bench::VerifyResult r =
                    bench::verify_roundtrip(data, config.technique, d, k, opt);
                if (!r.applicable) {
                    std::cout << "skip " << name << ": " << r.detail << "\n";
                } else if (r.ok) {
                    std::cout << "pass " << name << "\n";
                } else {
                    all_ok = false;
                    std::cout << "FAIL " << name << ": " << r.detail;
                    if (r.detail.rfind("bit mismatch", 0) == 0) {
                        char buf[64];
                        std::snprintf(buf, sizeof buf, " expected=%016llx actual=%016llx",
                                      static_cast<unsigned long long>(r.expected_bits),
                                      static_cast<unsigned long long>(r.actual_bits));
                        std::cout << buf;
                    }
                    std::cout << "\n";
                }
            };
            if (config.technique == tfm::Technique::CompactBins) {
                for (std::uint32_t k : k_grid)
                    for (int d : d_grid)
                        run_point(d, k, "bins k=" + std::to_string(k) +
                                            " d=" + std::to_string(d));
            } else {
                for (int d : d_grid)
                    run_point(d, 0, std::string(tfm::technique_name(config.technique)) +
                                        " d=" + std::to_string(d));
            }
            return all_ok ? 0 : 1;
        }

        if (compress_cmd->parsed()) {
            bench::RunConfig config = make_config(args);
            const std::vector<double> data = bench::ingest(config);
            int d = d_single;
            if (d == 0 && !config.d_grid.empty()) d = config.d_grid.front();
            if (config.technique == tfm::Technique::CompactBins && d == 0)
                d = tfm::compact_bins_max_d(data, k_single);
            if (d == 0) d = 4;
            tfm::Options opt;
            opt.checked = args.checked;
            const tfm::PreprocessedDataset pd =
                bench::run_forward(data, config.technique, d, k_single, opt);
            const auto container = codec::encode(pd);
            const auto archive = gd::serialize(gd::gd_compress(pd.values));
            const auto out = bundle(container, pd.values.size(), archive);
            write_file(output, out);
            std::cout << "compressed " << data.size() << " values: " << out.size()
                      << " bytes (raw " << 8 * data.size() << ")\n";
            return 0;
        }

        if (decompress_cmd->parsed()) {
            const auto bytes = read_file(args.input);
            const std::vector<double> values = unbundle(bytes);
            write_text(output, values_to_csv(values));
            return 0;
        }
    } catch (const parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
