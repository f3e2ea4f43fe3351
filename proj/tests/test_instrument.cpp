#include <doctest.h>

#include <stdexcept>

#include <thread>
#include <vector>

#include "fastnn/instrument.hpp"

using namespace fastnn;

TEST_CASE("record_fetch counts exactly") {
    FetchCounter c;
    CHECK(c.a_fetches() == 0);
    CHECK(c.b_fetches() == 0);
    for (int i = 0; i < 16; ++i) record_fetch(c, FetchKind::B);
    CHECK(c.b_fetches() == 16);
    CHECK(c.a_fetches() == 0);
    record_fetch(c, FetchKind::A);
    CHECK(c.a_fetches() == 1);
}

TEST_CASE("record_fetch is exact under concurrent callers") {
    FetchCounter c;
    std::vector<std::thread> workers;
    for (int w = 0; w < 4; ++w)
        workers.emplace_back([&c] {
            for (int i = 0; i < 100; ++i) record_fetch(c, FetchKind::B);
        });
    for (auto& t : workers) t.join();
    CHECK(c.b_fetches() == 400);
}

namespace {

RunReport sample_report() {
    RunReport r;
    r.backend = "single";
    r.metric = "l2";
    r.precision = "full";
    r.height1 = 4;
    r.width1 = 6;
    r.height2 = 4;
    r.width2 = 6;
    r.dim = 8;
    r.grid_stride = 2;
    r.max_iters = 10;
    r.convergence_fraction = 0.99;
    r.block_size = 16;
    r.seed = 7;
    r.a_block_fetches = 12;
    r.b_block_fetches = 12;
    r.iterations = 3;
    r.samples = 6;
    r.converged = 6;
    r.converged_fraction = 1.0;
    r.matches_emitted = 6;
    r.active_history = {4, 1, 0};
    return r;
}

}  // namespace

TEST_CASE("report JSON round trip") {
    const RunReport r = sample_report();
    const std::string json = render_report(r, ReportFormat::Json);
    CHECK(parse_report_json(json) == r);

    RunReport with_agreement = r;
    with_agreement.hybrid_full_argmin_agreement = 0.875;
    CHECK(parse_report_json(render_report(with_agreement, ReportFormat::Json)) ==
          with_agreement);
}

TEST_CASE("empty report renders valid JSON with zero fields") {
    const RunReport zero;
    const RunReport parsed = parse_report_json(render_report(zero, ReportFormat::Json));
    CHECK(parsed == zero);
    CHECK(parsed.subsample_us == 0.0);
    CHECK(parsed.b_block_fetches == 0);
}

TEST_CASE("CSV header is the documented column list") {
    const std::string csv = render_report(sample_report(), ReportFormat::Csv);
    const std::string header = csv.substr(0, csv.find('\n'));
    CHECK(header ==
          "backend,metric,precision,height1,width1,height2,width2,dim,k,grid_stride,max_iters,"
          "convergence_fraction,block_size,seed,subsample_us,forward_nn_us,reverse_nn_us,"
          "harvest_us,a_block_fetches,b_block_fetches,iterations,samples,converged,"
          "converged_fraction,half_saturated,half_saturation_events,"
          "hybrid_full_argmin_agreement,matches_emitted,duplicates_dropped");
    CHECK(header == kRunReportCsvHeader);
}

TEST_CASE("report serialization is byte stable") {
    const RunReport r = sample_report();
    CHECK(render_report(r, ReportFormat::Json) == render_report(r, ReportFormat::Json));
    CHECK(render_report(r, ReportFormat::Csv) == render_report(r, ReportFormat::Csv));
}

TEST_CASE("argmin agreement rate") {
    const std::vector<std::uint32_t> a{1, 2, 3, 4}, b{1, 2, 9, 4};
    CHECK(argmin_agreement(a, b) == 0.75);
    CHECK(argmin_agreement(a, a) == 1.0);
    CHECK_THROWS_AS(argmin_agreement(a, std::vector<std::uint32_t>{1}), std::invalid_argument);
}

TEST_CASE("median of timing samples") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median({5.0}) == 5.0);
    CHECK_THROWS_AS(median({}), std::invalid_argument);
}
