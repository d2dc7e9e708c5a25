#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpprep/transforms.hpp"

// Benchmark harness: ingest a CSV column, sweep techniques over a parameter
// grid, measure compression with and without preprocessing, verify every
// round trip, and emit plot-ready reports.
namespace fpprep::bench {

struct RunConfig {
    std::string input_path;
    std::string column;      // header name, or a 0-based index in digits
    std::size_t row_limit = 1000;
    tfm::Technique technique = tfm::Technique::CompactBins;
    std::vector<int> d_grid;             // shared-bit targets
    std::vector<std::uint32_t> k_grid;   // compact bins only
    bool checked = false;
    bool stable_output = false;  // report wall_ms as 0 for byte-identical output
    int iteration_cap = 64;
};

enum class PointStatus {
    Ok,
    Capacity,
    NonConvergence,
    RangeExhausted,
    Inapplicable,
};

const char* status_name(PointStatus s);

struct ReportRow {
    std::string technique;
    std::string param;
    PointStatus status = PointStatus::Ok;
    // Metrics below are meaningful only when status == Ok.
    double cr_prep = 0.0;
    double cr_noprep = 0.0;
    double delta_cr = 0.0;
    double z = 0.0;
    int s_m = 0;
    int s_e = 0;
    int s_tot = 0;
    std::uint32_t iterations = 0;
    double wall_ms = 0.0;

    bool operator==(const ReportRow&) const = default;
};

struct Report {
    std::vector<ReportRow> rows;
    bool operator==(const Report&) const = default;
};

/// Column order of the CSV report.
extern const char* const kReportSchema;

/// Reads the configured column, first row_limit values. Decimal text parses
/// to nearest double. Negative values are out of scope and rejected.
std::vector<double> ingest(const RunConfig& config);
std::vector<double> ingest_csv(std::istream& in, const std::string& column,
                               std::size_t row_limit);

/// Runs the configured grid. Every emitted row is round-trip verified first;
/// grid points the technique cannot serve are emitted with their status.
Report sweep(const RunConfig& config, std::span<const double> data);

std::string emit_csv(const Report& report);
std::string emit_json(const Report& report);
Report parse_json(const std::string& text);

struct VerifyResult {
    bool applicable = true;  // false: forward itself reported a clean error
    bool ok = false;
    std::size_t first_mismatch = 0;
    std::uint64_t expected_bits = 0;
    std::uint64_t actual_bits = 0;
    std::string detail;
};

/// forward -> encode -> decode -> inverse, compared bit-for-bit against ds.
VerifyResult verify_roundtrip(std::span<const double> ds, tfm::Technique technique,
                              int d, std::uint32_t k, const tfm::Options& opt = {});

/// decode -> inverse on existing container bytes, compared against ds.
/// Reports the first differing element and both bit patterns on mismatch.
VerifyResult verify_container(std::span<const double> ds,
                              std::span<const std::uint8_t> container_bytes,
                              const tfm::Options& opt = {});

/// Convenience dispatch used by the sweep and the CLI.
tfm::PreprocessedDataset run_forward(std::span<const double> ds,
                                     tfm::Technique technique, int d, std::uint32_t k,
                                     const tfm::Options& opt = {});

}  // namespace fpprep::bench
