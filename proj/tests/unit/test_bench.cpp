#include <doctest.h>

#include <sstream>
#include <vector>

#include "fpprep/bench.hpp"
#include "fpprep/codec.hpp"
#include "fpprep/fp_core.hpp"
#include "support/synthetic.hpp"

using namespace fpprep;

TEST_CASE("csv ingestion") {
    SUBCASE("column by name, row limit applies") {
        std::istringstream in("id,fare\n1,10.25\n2,7.5\n3,99.0\n");
        const auto values = bench::ingest_csv(in, "fare", 2);
        CHECK(values == std::vector<double>{10.25, 7.5});
    }
    SUBCASE("column by index") {
        std::istringstream in("a,b\n1.5,2.5\n");
        CHECK(bench::ingest_csv(in, "1", 10) == std::vector<double>{2.5});
    }
    SUBCASE("quoted fields") {
        std::istringstream in("\"name, long\",v\n\"x,y\",4.25\n");
        CHECK(bench::ingest_csv(in, "v", 10) == std::vector<double>{4.25});
    }
    SUBCASE("unparseable cell reports its data row") {
        std::istringstream in(
            "v\n1\n2\n3\n4\n5\n6\nabc\n8\n");
        try {
            bench::ingest_csv(in, "v", 100);
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK(e.row == 7);
        }
    }
    SUBCASE("negative values are out of scope") {
        std::istringstream in("v\n1.5\n-1.5\n");
        CHECK_THROWS_AS(bench::ingest_csv(in, "v", 10), unsupported_input_error);
    }
    SUBCASE("missing column") {
        std::istringstream in("a,b\n1,2\n");
        CHECK_THROWS_AS(bench::ingest_csv(in, "zzz", 10), parse_error);
    }
    SUBCASE("decimal text parses to nearest double") {
        std::istringstream in("v\n97.31\n");
        CHECK(bench::ingest_csv(in, "v", 1) == std::vector<double>{97.31});
    }
}

TEST_CASE("report emission") {
    bench::Report report;
    bench::ReportRow row;
    row.technique = "bins";
    row.param = "k=8";
    row.status = bench::PointStatus::Ok;
    row.cr_prep = 0.5;
    row.cr_noprep = 0.625;
    row.delta_cr = (0.5 - 0.625) / 0.625;
    row.z = 0.03125;
    row.s_m = 12;
    row.s_e = 11;
    row.s_tot = 24;
    row.iterations = 0;
    row.wall_ms = 0.0;
    report.rows.push_back(row);
    bench::ReportRow failed;
    failed.technique = "evenodd";
    failed.param = "d=40";
    failed.status = bench::PointStatus::NonConvergence;
    report.rows.push_back(failed);

    SUBCASE("csv columns match the documented schema") {
        const std::string csv = bench::emit_csv(report);
        std::istringstream lines(csv);
        std::string line;
        std::getline(lines, line);
        CHECK(line ==
              "technique,param,cr_prep,cr_noprep,delta_cr,z,s_m,s_e,s_tot,iterations,"
              "status,wall_ms");
        std::getline(lines, line);
        CHECK(line == "bins,k=8,0.5,0.625,-0.2,0.03125,12,11,24,0,ok,0");
        std::getline(lines, line);
        CHECK(line == "evenodd,d=40,,,,,,,,,non_convergence,0");
    }
    SUBCASE("json round-trips") {
        const std::string json = bench::emit_json(report);
        CHECK(bench::parse_json(json) == report);
    }
}

TEST_CASE("sweep behavior") {
    SUBCASE("constant dataset: identity transform, no regression at the first point") {
        const auto ds = synthetic::constant_family(500, 1);
        bench::RunConfig config;
        config.technique = tfm::Technique::MultiplyShift;
        config.d_grid = {1};
        config.stable_output = true;
        const bench::Report report = bench::sweep(config, ds);
        REQUIRE(report.rows.size() == 1);
        CHECK(report.rows[0].status == bench::PointStatus::Ok);
        CHECK(report.rows[0].delta_cr <= 0.0);
        CHECK(report.rows[0].iterations == 0);
        CHECK(report.rows[0].s_tot == 64);
    }
    SUBCASE("fare-like data: some bins point improves compression") {
        const auto ds = synthetic::fare_like(1000, 2);
        bench::RunConfig config;
        config.technique = tfm::Technique::CompactBins;
        config.k_grid = {1, 2, 8, 32};
        config.stable_output = true;
        const bench::Report report = bench::sweep(config, ds);
        REQUIRE(report.rows.size() == 4);
        bool improved = false;
        for (const auto& row : report.rows)
            if (row.status == bench::PointStatus::Ok && row.delta_cr < 0.0)
                improved = true;
        CHECK(improved);
    }
    SUBCASE("error grid points become status rows, not failures") {
        const auto ds = synthetic::uniform_region0(300, 3);
        bench::RunConfig config;
        config.technique = tfm::Technique::EvenOddSeparate;
        config.d_grid = {1, 40};
        config.stable_output = true;
        const bench::Report report = bench::sweep(config, ds);
        REQUIRE(report.rows.size() == 2);
        CHECK(report.rows[0].status == bench::PointStatus::Ok);
        CHECK(report.rows[1].status == bench::PointStatus::NonConvergence);
    }
    SUBCASE("identical configs emit identical bytes under stable output") {
        const auto ds = synthetic::fare_like(400, 4);
        bench::RunConfig config;
        config.technique = tfm::Technique::SaveEvenness;
        config.d_grid = {1, 2, 4, 8};
        config.stable_output = true;
        const std::string a = bench::emit_csv(bench::sweep(config, ds));
        const std::string b = bench::emit_csv(bench::sweep(config, ds));
        CHECK(a == b);
        CHECK(bench::emit_json(bench::sweep(config, ds)) ==
              bench::emit_json(bench::sweep(config, ds)));
    }
}

TEST_CASE("verification") {
    const auto ds = synthetic::uniform_region0(200, 5);
    SUBCASE("valid runs pass") {
        const auto r = bench::verify_roundtrip(ds, tfm::Technique::SaveEvenness, 6, 0);
        CHECK(r.applicable);
        CHECK(r.ok);
    }
    SUBCASE("forward errors are reported as not applicable") {
        const auto r = bench::verify_roundtrip(ds, tfm::Technique::EvenOddSeparate, 40, 0);
        CHECK(!r.applicable);
        CHECK(!r.detail.empty());
    }
    SUBCASE("a corrupted container yields the first mismatching index") {
        tfm::PreprocessedDataset id;
        id.technique = tfm::Technique::Identity;
        id.values = ds;
        auto bytes = codec::encode(id);
        // Flip a low-order mantissa bit of element 3 inside the values block.
        bytes[13 + 3 * 8] ^= 1;
        const auto r = bench::verify_container(ds, bytes);
        CHECK(!r.ok);
        CHECK(r.first_mismatch == 3);
        CHECK(r.expected_bits == fp::to_bits(ds[3]));
        CHECK(r.actual_bits == (fp::to_bits(ds[3]) ^ 1));
    }
}
