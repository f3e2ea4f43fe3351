#include "fastnn/instrument.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fastnn {

const char* const kRunReportCsvHeader =
    "backend,metric,precision,height1,width1,height2,width2,dim,k,grid_stride,max_iters,"
    "convergence_fraction,block_size,seed,subsample_us,forward_nn_us,reverse_nn_us,harvest_us,"
    "a_block_fetches,b_block_fetches,iterations,samples,converged,converged_fraction,"
    "half_saturated,half_saturation_events,hybrid_full_argmin_agreement,matches_emitted,"
    "duplicates_dropped";

namespace {

nlohmann::ordered_json report_to_json(const RunReport& r) {
    nlohmann::ordered_json j;
    j["backend"] = r.backend;
    j["metric"] = r.metric;
    j["precision"] = r.precision;
    j["height1"] = r.height1;
    j["width1"] = r.width1;
    j["height2"] = r.height2;
    j["width2"] = r.width2;
    j["dim"] = r.dim;
    j["k"] = r.k;
    j["grid_stride"] = r.grid_stride;
    j["max_iters"] = r.max_iters;
    j["convergence_fraction"] = r.convergence_fraction;
    j["block_size"] = r.block_size;
    j["seed"] = r.seed;
    j["subsample_us"] = r.subsample_us;
    j["forward_nn_us"] = r.forward_nn_us;
    j["reverse_nn_us"] = r.reverse_nn_us;
    j["harvest_us"] = r.harvest_us;
    j["a_block_fetches"] = r.a_block_fetches;
    j["b_block_fetches"] = r.b_block_fetches;
    j["iterations"] = r.iterations;
    j["samples"] = r.samples;
    j["converged"] = r.converged;
    j["converged_fraction"] = r.converged_fraction;
    j["half_saturated"] = r.half_saturated;
    j["half_saturation_events"] = r.half_saturation_events;
    if (r.hybrid_full_argmin_agreement >= 0.0)
        j["hybrid_full_argmin_agreement"] = r.hybrid_full_argmin_agreement;
    else
        j["hybrid_full_argmin_agreement"] = nullptr;
    j["matches_emitted"] = r.matches_emitted;
    j["duplicates_dropped"] = r.duplicates_dropped;
    j["active_history"] = r.active_history;
    return j;
}

}  // namespace

std::string render_report(const RunReport& r, ReportFormat format) {
    if (format == ReportFormat::Json) {
        return report_to_json(r).dump(2) + "\n";
    }
    std::ostringstream out;
    out << kRunReportCsvHeader << "\n";
    out << r.backend << ',' << r.metric << ',' << r.precision << ',' << r.height1 << ','
        << r.width1 << ',' << r.height2 << ',' << r.width2 << ',' << r.dim << ',' << r.k << ','
        << r.grid_stride << ',' << r.max_iters << ',' << r.convergence_fraction << ','
        << r.block_size << ',' << r.seed << ',' << r.subsample_us << ',' << r.forward_nn_us << ','
        << r.reverse_nn_us << ',' << r.harvest_us << ',' << r.a_block_fetches << ','
        << r.b_block_fetches << ',' << r.iterations << ',' << r.samples << ',' << r.converged
        << ',' << r.converged_fraction << ',' << (r.half_saturated ? 1 : 0) << ','
        << r.half_saturation_events << ',';
    if (r.hybrid_full_argmin_agreement >= 0.0) out << r.hybrid_full_argmin_agreement;
    out << ',' << r.matches_emitted << ',' << r.duplicates_dropped << "\n";
    return out.str();
}

RunReport parse_report_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    RunReport r;
    r.backend = j.at("backend").get<std::string>();
    r.metric = j.at("metric").get<std::string>();
    r.precision = j.at("precision").get<std::string>();
    r.height1 = j.at("height1").get<std::uint32_t>();
    r.width1 = j.at("width1").get<std::uint32_t>();
    r.height2 = j.at("height2").get<std::uint32_t>();
    r.width2 = j.at("width2").get<std::uint32_t>();
    r.dim = j.at("dim").get<std::uint32_t>();
    r.k = j.at("k").get<std::uint32_t>();
    r.grid_stride = j.at("grid_stride").get<std::uint32_t>();
    r.max_iters = j.at("max_iters").get<std::uint32_t>();
    r.convergence_fraction = j.at("convergence_fraction").get<double>();
    r.block_size = j.at("block_size").get<std::uint32_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.subsample_us = j.at("subsample_us").get<double>();
    r.forward_nn_us = j.at("forward_nn_us").get<double>();
    r.reverse_nn_us = j.at("reverse_nn_us").get<double>();
    r.harvest_us = j.at("harvest_us").get<double>();
    r.a_block_fetches = j.at("a_block_fetches").get<std::uint64_t>();
    r.b_block_fetches = j.at("b_block_fetches").get<std::uint64_t>();
    r.iterations = j.at("iterations").get<std::uint32_t>();
    r.samples = j.at("samples").get<std::uint32_t>();
    r.converged = j.at("converged").get<std::uint32_t>();
    r.converged_fraction = j.at("converged_fraction").get<double>();
    r.half_saturated = j.at("half_saturated").get<bool>();
    r.half_saturation_events = j.at("half_saturation_events").get<std::uint64_t>();
    const auto& agreement = j.at("hybrid_full_argmin_agreement");
    r.hybrid_full_argmin_agreement = agreement.is_null() ? -1.0 : agreement.get<double>();
    r.matches_emitted = j.at("matches_emitted").get<std::uint32_t>();
    r.duplicates_dropped = j.at("duplicates_dropped").get<std::uint32_t>();
    r.active_history = j.at("active_history").get<std::vector<std::uint32_t>>();
    return r;
}

double argmin_agreement(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("argmin_agreement: arrays must have equal length");
    if (a.empty()) return 1.0;
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) ++same;
    return static_cast<double>(same) / static_cast<double>(a.size());
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace fastnn
