#include "fpprep/bench.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "fpprep/codec.hpp"
#include "fpprep/fp_core.hpp"
#include "fpprep/gd.hpp"

namespace fpprep::bench {

const char* const kReportSchema =
    "technique,param,cr_prep,cr_noprep,delta_cr,z,s_m,s_e,s_tot,iterations,status,"
    "wall_ms";

const char* status_name(PointStatus s) {
    switch (s) {
        case PointStatus::Ok: return "ok";
        case PointStatus::Capacity: return "capacity";
        case PointStatus::NonConvergence: return "non_convergence";
        case PointStatus::RangeExhausted: return "range_exhausted";
        case PointStatus::Inapplicable: return "inapplicable";
    }
    return "?";
}

namespace {

std::optional<PointStatus> status_from_name(const std::string& name) {
    for (PointStatus s : {PointStatus::Ok, PointStatus::Capacity,
                          PointStatus::NonConvergence, PointStatus::RangeExhausted,
                          PointStatus::Inapplicable})
        if (name == status_name(s)) return s;
    return std::nullopt;
}

// Minimal RFC-4180 record reader: quoted fields may hold commas, escaped
// quotes and line breaks. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool quoted = false;
    bool any = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(static_cast<char>(c));
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                break;
            case '\r':
                break;
            case '\n':
                fields.push_back(std::move(field));
                return true;
            default:
                field.push_back(static_cast<char>(c));
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return s.substr(b, e - b);
}

double parse_cell(const std::string& raw, std::size_t row) {
    const std::string cell = trim(raw);
    if (cell.empty())
        throw parse_error("empty cell at data row " + std::to_string(row), row);
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw parse_error("unparseable cell \"" + cell + "\" at data row " +
                              std::to_string(row),
                          row);
    if (std::signbit(value))
        throw unsupported_input_error("negative value " + cell + " at data row " +
                                      std::to_string(row) +
                                      ": dataset scope is non-negative values");
    return value;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

std::uint32_t iterations_of(const tfm::PreprocessedDataset& pd) {
    if (const auto* m = std::get_if<tfm::MultiplyShiftMetadata>(&pd.metadata))
        return m->iteration_count;
    if (const auto* m = std::get_if<tfm::EvenOddSeparateMetadata>(&pd.metadata))
        return m->iteration_count;
    if (const auto* m = std::get_if<tfm::EvennessMetadata>(&pd.metadata))
        return m->iteration_count;
    return 0;
}

}  // namespace

std::vector<double> ingest_csv(std::istream& in, const std::string& column,
                               std::size_t row_limit) {
    if (row_limit < 1)
        throw contract_error("ingest: row limit must be at least 1");
    std::vector<std::string> fields;
    if (!read_record(in, fields))
        throw parse_error("input has no header row", 0);

    std::size_t col = fields.size();
    for (std::size_t i = 0; i < fields.size(); ++i)
        if (trim(fields[i]) == column) {
            col = i;
            break;
        }
    if (col == fields.size()) {
        // Fall back to a 0-based index.
        std::size_t idx = 0;
        const std::string c = trim(column);
        auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), idx);
        if (ec == std::errc{} && ptr == c.data() + c.size() && idx < fields.size())
            col = idx;
    }
    if (col == fields.size())
        throw parse_error("column \"" + column + "\" not found in header", 0);

    std::vector<double> out;
    out.reserve(row_limit);
    std::size_t row = 0;
    while (out.size() < row_limit && read_record(in, fields)) {
        row += 1;
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        if (col >= fields.size())
            throw parse_error("data row " + std::to_string(row) + " has only " +
                                  std::to_string(fields.size()) + " fields",
                              row);
        out.push_back(parse_cell(fields[col], row));
    }
    if (out.empty())
        throw parse_error("no data rows in input", 0);
    return out;
}

std::vector<double> ingest(const RunConfig& config) {
    std::ifstream in(config.input_path, std::ios::binary);
    if (!in)
        throw error("cannot open input file " + config.input_path);
    return ingest_csv(in, config.column, config.row_limit);
}

tfm::PreprocessedDataset run_forward(std::span<const double> ds,
                                     tfm::Technique technique, int d, std::uint32_t k,
                                     const tfm::Options& opt) {
    switch (technique) {
        case tfm::Technique::CompactBins:
            return tfm::compact_bins_forward(ds, k, d, opt);
        case tfm::Technique::MultiplyShift:
            return tfm::multiply_shift_forward(ds, d, opt);
        case tfm::Technique::EvenOddSeparate:
            return tfm::even_odd_separate_forward(ds, d, opt);
        case tfm::Technique::SaveEvenness:
            return tfm::save_evenness_forward(ds, d, opt);
        case tfm::Technique::Identity:
            break;
    }
    throw contract_error("run_forward: technique must be one of the four transforms");
}

VerifyResult verify_container(std::span<const double> ds,
                              std::span<const std::uint8_t> container_bytes,
                              const tfm::Options& opt) {
    VerifyResult r;
    try {
        const auto decoded = codec::decode(container_bytes);
        const auto restored = tfm::inverse(decoded, opt);
        if (restored.size() != ds.size()) {
            r.detail = "restored length differs";
            return r;
        }
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (fp::to_bits(restored[i]) != fp::to_bits(ds[i])) {
                r.first_mismatch = i;
                r.expected_bits = fp::to_bits(ds[i]);
                r.actual_bits = fp::to_bits(restored[i]);
                r.detail = "bit mismatch at element " + std::to_string(i);
                return r;
            }
        }
    } catch (const error& e) {
        r.detail = e.what();
        return r;
    }
    r.ok = true;
    return r;
}

VerifyResult verify_roundtrip(std::span<const double> ds, tfm::Technique technique,
                              int d, std::uint32_t k, const tfm::Options& opt) {
    VerifyResult r;
    tfm::PreprocessedDataset pd;
    try {
        pd = run_forward(ds, technique, d, k, opt);
    } catch (const error& e) {
        r.applicable = false;
        r.detail = e.what();
        return r;
    }
    try {
        const auto bytes = codec::encode(pd);
        return verify_container(ds, bytes, opt);
    } catch (const error& e) {
        r.detail = e.what();
        return r;
    }
}

namespace {

struct GridPoint {
    int d = 0;
    std::uint32_t k = 0;
    std::string param;
};

std::vector<GridPoint> build_grid(const RunConfig& config,
                                  std::span<const double> data) {
    std::vector<GridPoint> grid;
    if (config.technique == tfm::Technique::CompactBins) {
        const std::vector<std::uint32_t> ks =
            config.k_grid.empty() ? std::vector<std::uint32_t>{1, 2, 8, 32}
                                  : config.k_grid;
        if (config.d_grid.empty()) {
            // Auto mode: the largest d each bin count can guarantee.
            for (std::uint32_t k : ks) {
                GridPoint p;
                p.k = k;
                p.param = "k=" + std::to_string(k);
                try {
                    p.d = tfm::compact_bins_max_d(data, k);
                } catch (const contract_error&) {
                    p.d = -1;  // k exceeds the unique-value count
                } catch (const error&) {
                    p.d = 0;
                }
                grid.push_back(std::move(p));
            }
        } else {
            for (std::uint32_t k : ks)
                for (int d : config.d_grid)
                    grid.push_back(GridPoint{
                        d, k, "k=" + std::to_string(k) + ":d=" + std::to_string(d)});
        }
    } else {
        const std::vector<int> ds =
            config.d_grid.empty() ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8}
                                  : config.d_grid;
        for (int d : ds)
            grid.push_back(GridPoint{d, 0, "d=" + std::to_string(d)});
    }
    return grid;
}

}  // namespace

Report sweep(const RunConfig& config, std::span<const double> data) {
    fp::require_round_to_nearest();
    Report report;
    if (data.empty())
        throw contract_error("sweep: empty dataset");

    const gd::GdArchive raw_archive = gd::gd_compress(data);
    const std::uint64_t raw_bits = 8 * gd::archive_size_bytes(raw_archive);
    const std::uint64_t original_bits = 64 * data.size();
    const double cr_noprep = gd::compression_ratio(raw_bits, 0, original_bits);

    tfm::Options opt;
    opt.checked = config.checked;
    opt.iteration_cap = config.iteration_cap;

    for (const GridPoint& point : build_grid(config, data)) {
        ReportRow row;
        row.technique = tfm::technique_name(config.technique);
        row.param = point.param;
        const auto start = std::chrono::steady_clock::now();
        try {
            if (point.d < 0)
                throw contract_error("bin count exceeds the unique-value count");
            if (point.d < 1)
                throw capacity_error("no feasible shared-bit target", 0);
            const tfm::PreprocessedDataset pd =
                run_forward(data, config.technique, point.d, point.k, opt);

            const auto bytes = codec::encode(pd);
            const auto restored = tfm::inverse(codec::decode(bytes), opt);
            if (restored.size() != data.size())
                throw check_error("sweep: restored length differs");
            for (std::size_t i = 0; i < data.size(); ++i)
                if (fp::to_bits(restored[i]) != fp::to_bits(data[i]))
                    throw check_error("sweep: round trip failed at element " +
                                      std::to_string(i));

            const gd::GdArchive archive = gd::gd_compress(pd.values);
            const std::uint64_t prep_bits = 8 * gd::archive_size_bytes(archive);
            const std::uint64_t overhead_bits =
                8 * (bytes.size() - (4 + 1 + 8) - 8 * data.size());
            row.cr_prep = gd::compression_ratio(prep_bits, overhead_bits, original_bits);
            row.cr_noprep = cr_noprep;
            row.delta_cr = (row.cr_prep - row.cr_noprep) / row.cr_noprep;
            row.z = static_cast<double>(codec::metadata_size_bytes(pd)) /
                    static_cast<double>(gd::archive_size_bytes(archive));
            const fp::SharedBitsSummary shared = fp::shared_bits(pd.values);
            row.s_m = shared.s_m;
            row.s_e = shared.s_e;
            row.s_tot = shared.s_tot;
            row.iterations = iterations_of(pd);
            row.status = PointStatus::Ok;
        } catch (const capacity_error&) {
            row.status = PointStatus::Capacity;
        } catch (const non_convergence_error&) {
            row.status = PointStatus::NonConvergence;
        } catch (const range_exhausted_error&) {
            row.status = PointStatus::RangeExhausted;
        } catch (const contract_error&) {
            row.status = PointStatus::Inapplicable;
        }
        const auto stop = std::chrono::steady_clock::now();
        row.wall_ms =
            config.stable_output
                ? 0.0
                : std::chrono::duration<double, std::milli>(stop - start).count();
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string emit_csv(const Report& report) {
    std::string out = kReportSchema;
    out.push_back('\n');
    for (const ReportRow& r : report.rows) {
        out += r.technique;
        out.push_back(',');
        out += r.param;
        out.push_back(',');
        if (r.status == PointStatus::Ok) {
            out += format_double(r.cr_prep);
            out.push_back(',');
            out += format_double(r.cr_noprep);
            out.push_back(',');
            out += format_double(r.delta_cr);
            out.push_back(',');
            out += format_double(r.z);
            out.push_back(',');
            out += std::to_string(r.s_m);
            out.push_back(',');
            out += std::to_string(r.s_e);
            out.push_back(',');
            out += std::to_string(r.s_tot);
            out.push_back(',');
            out += std::to_string(r.iterations);
            out.push_back(',');
        } else {
            out += ",,,,,,,,";
        }
        out += status_name(r.status);
        out.push_back(',');
        out += format_double(r.wall_ms);
        out.push_back('\n');
    }
    return out;
}

std::string emit_json(const Report& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const ReportRow& r : report.rows) {
        nlohmann::json j;
        j["technique"] = r.technique;
        j["param"] = r.param;
        j["status"] = status_name(r.status);
        j["wall_ms"] = r.wall_ms;
        if (r.status == PointStatus::Ok) {
            j["cr_prep"] = r.cr_prep;
            j["cr_noprep"] = r.cr_noprep;
            j["delta_cr"] = r.delta_cr;
            j["z"] = r.z;
            j["s_m"] = r.s_m;
            j["s_e"] = r.s_e;
            j["s_tot"] = r.s_tot;
            j["iterations"] = r.iterations;
        }
        rows.push_back(std::move(j));
    }
    return rows.dump(2) + "\n";
}

Report parse_json(const std::string& text) {
    Report report;
    const nlohmann::json rows = nlohmann::json::parse(text);
    if (!rows.is_array())
        throw integrity_error("report json: expected an array of rows");
    for (const auto& j : rows) {
        ReportRow r;
        r.technique = j.at("technique").get<std::string>();
        r.param = j.at("param").get<std::string>();
        const auto status = status_from_name(j.at("status").get<std::string>());
        if (!status)
            throw integrity_error("report json: unknown status");
        r.status = *status;
        r.wall_ms = j.at("wall_ms").get<double>();
        if (r.status == PointStatus::Ok) {
            r.cr_prep = j.at("cr_prep").get<double>();
            r.cr_noprep = j.at("cr_noprep").get<double>();
            r.delta_cr = j.at("delta_cr").get<double>();
            r.z = j.at("z").get<double>();
            r.s_m = j.at("s_m").get<int>();
            r.s_e = j.at("s_e").get<int>();
            r.s_tot = j.at("s_tot").get<int>();
            r.iterations = j.at("iterations").get<std::uint32_t>();
        }
        report.rows.push_back(std::move(r));
    }
    return report;
}

}  // namespace fpprep::bench
