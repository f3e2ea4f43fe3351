#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fastnn/core.hpp"

namespace fastnn {

/// Exact logical block-fetch accounting. One fetch = one load of a block's
/// descriptors by a kernel call, the unit of the (P/BS)^2 vs (P/BS) memory
/// access claim. Counts are exact under concurrent callers.
struct FetchCounter {
    std::atomic<std::uint64_t> a_block_fetches{0};
    std::atomic<std::uint64_t> b_block_fetches{0};
    std::atomic<std::uint64_t> half_saturation_events{0};

    void reset() {
        a_block_fetches.store(0, std::memory_order_relaxed);
        b_block_fetches.store(0, std::memory_order_relaxed);
        half_saturation_events.store(0, std::memory_order_relaxed);
    }
    std::uint64_t a_fetches() const { return a_block_fetches.load(std::memory_order_relaxed); }
    std::uint64_t b_fetches() const { return b_block_fetches.load(std::memory_order_relaxed); }
    std::uint64_t saturations() const {
        return half_saturation_events.load(std::memory_order_relaxed);
    }
};

enum class FetchKind { A, B };

inline void record_fetch(FetchCounter& counter, FetchKind which) {
    auto& slot = which == FetchKind::A ? counter.a_block_fetches : counter.b_block_fetches;
    slot.fetch_add(1, std::memory_order_relaxed);
}

/// Everything one matching run reports: phase timings (microseconds), exact
/// fetch counts, convergence statistics, the half-precision saturation flag,
/// and an echo of the configuration that produced the run.
struct RunReport {
    // config echo
    std::string backend;    // bruteforce | double | single | hybrid
    std::string metric;     // l2 | dot
    std::string precision;  // full | hybrid
    std::uint32_t height1 = 0, width1 = 0, height2 = 0, width2 = 0, dim = 0;
    std::uint32_t k = 0, grid_stride = 0, max_iters = 0;
    double convergence_fraction = 0.0;
    std::uint32_t block_size = 0;
    std::uint64_t seed = 0;

    // measurements
    double subsample_us = 0.0;
    double forward_nn_us = 0.0;
    double reverse_nn_us = 0.0;
    double harvest_us = 0.0;
    std::uint64_t a_block_fetches = 0;
    std::uint64_t b_block_fetches = 0;
    std::uint32_t iterations = 0;
    std::uint32_t samples = 0;
    std::uint32_t converged = 0;
    double converged_fraction = 0.0;
    bool half_saturated = false;
    std::uint64_t half_saturation_events = 0;
    // argmin agreement rate between hybrid and full paths, in [0,1];
    // negative means "not measured" and renders as null / empty.
    double hybrid_full_argmin_agreement = -1.0;
    std::uint32_t matches_emitted = 0;
    std::uint32_t duplicates_dropped = 0;
    // active set size after each iteration (JSON only, not in CSV)
    std::vector<std::uint32_t> active_history;

    bool operator==(const RunReport&) const = default;
};

enum class ReportFormat { Json, Csv };

/// Fixed column list of the CSV rendering, also the JSON key order.
extern const char* const kRunReportCsvHeader;

/// Deterministic field order; JSON round-trips losslessly via parse_report_json.
std::string render_report(const RunReport& report, ReportFormat format);
RunReport parse_report_json(const std::string& text);

/// Fraction of positions where the two nearest arrays agree. Arrays must have
/// equal length; length zero yields 1.
double argmin_agreement(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

/// Median of a sample set (average of the two middle values for even sizes).
double median(std::vector<double> values);

/// Monotonic wall-clock timer accumulating elapsed microseconds into a sink.
class ScopedTimerUs {
  public:
    explicit ScopedTimerUs(double& sink)
        : sink_(sink), start_(std::chrono::steady_clock::now()) {}
    ~ScopedTimerUs() {
        auto end = std::chrono::steady_clock::now();
        sink_ += std::chrono::duration<double, std::micro>(end - start_).count();
    }
    ScopedTimerUs(const ScopedTimerUs&) = delete;
    ScopedTimerUs& operator=(const ScopedTimerUs&) = delete;

  private:
    double& sink_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace fastnn
