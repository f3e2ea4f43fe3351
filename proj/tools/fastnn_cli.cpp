// fastnn command line: synthetic pair generation, reciprocal matching,
// oracle verification, and desk-scale benchmarking of the NN backends.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fastnn/core.hpp"
#include "fastnn/instrument.hpp"
#include "fastnn/io.hpp"
#include "fastnn/nn.hpp"
#include "fastnn/reciprocal.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // verification failure or runtime/data error
constexpr int kExitUsage = 2;    // flag validation or guard violation

struct GuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenOptions {
    std::uint32_t height = 64, width = 48, dim = 24;
    std::uint64_t seed = 1;
    double noise = 0.0;
    std::string permute = "random";
    std::string out_dir;
};

int run_gen(const GenOptions& opt) {
    const auto pair = fastnn::gen_matched_pair(opt.height, opt.width, opt.dim, opt.seed,
                                               opt.noise, fastnn::permute_from_string(opt.permute));
    const fs::path dir(opt.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    fastnn::save_fmap(pair.d1, dir / "d1.fmap");
    fastnn::save_fmap(pair.d2, dir / "d2.fmap");
    fastnn::save_ground_truth(pair.truth, dir / "truth.json");
    fastnn::save_manifest({"d1.fmap", "d2.fmap", "truth.json"}, dir / "manifest.json");
    std::cout << "wrote " << (dir / "d1.fmap").string() << ", " << (dir / "d2.fmap").string()
              << ", " << (dir / "truth.json").string() << ", "
              << (dir / "manifest.json").string() << "\n";
    return kExitOk;
}

struct MatchOptions {
    std::string in1, in2, manifest;
    std::string backend = "single";
    std::uint32_t stride = 8;
    std::uint32_t k = 0;
    std::uint32_t max_iters = 10;
    double convergence = 0.99;
    std::string metric = "l2";
    std::string precision = "full";
    std::uint32_t block_size = 4096;
    unsigned threads = 1;
    std::uint64_t seed = 0;
    std::string out;
    std::string report_path;
    std::string report_format = "json";
};

void resolve_manifest(const std::string& manifest, std::string& in1, std::string& in2,
                      std::string* truth) {
    const fs::path mpath(manifest);
    const auto m = fastnn::load_manifest(mpath);
    const fs::path base = mpath.parent_path();
    in1 = (base / m.fmap1).string();
    in2 = (base / m.fmap2).string();
    if (truth && !m.ground_truth.empty()) *truth = (base / m.ground_truth).string();
}

int run_match(MatchOptions opt) {
    // flag combinations are rejected before any file is touched
    fastnn::MatchConfig cfg;
    cfg.k = opt.k;
    cfg.grid_stride = opt.k > 0 ? 0 : opt.stride;  // an explicit k overrides the grid stride
    cfg.max_iters = opt.max_iters;
    cfg.convergence_fraction = opt.convergence;
    cfg.metric = fastnn::metric_from_string(opt.metric);
    cfg.precision = fastnn::precision_from_string(opt.precision);
    cfg.block_size = opt.block_size;
    const auto backend = fastnn::backend_from_string(opt.backend);
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw GuardError(e.what());
    }

    if (!opt.manifest.empty()) resolve_manifest(opt.manifest, opt.in1, opt.in2, nullptr);
    const auto d1 = fastnn::load_fmap(opt.in1);
    const auto d2 = fastnn::load_fmap(opt.in2);

    auto outcome = fastnn::reciprocal_match(d1, d2, cfg, backend, opt.threads);
    outcome.report.seed = opt.seed;

    std::ofstream mf(opt.out);
    if (!mf) throw std::runtime_error("cannot open " + opt.out + " for writing");
    for (const auto& p : outcome.matches.pairs) {
        ordered_json line;
        line["i"] = p.i;
        line["j"] = p.j;
        line["iter"] = p.iteration;
        mf << line.dump() << "\n";
    }
    if (!mf) throw std::runtime_error("write failed: " + opt.out);

    const auto format = opt.report_format == "csv" ? fastnn::ReportFormat::Csv
                                                   : fastnn::ReportFormat::Json;
    const std::string rendered = fastnn::render_report(outcome.report, format);
    if (opt.report_path.empty()) {
        std::cout << rendered;
    } else {
        std::ofstream rf(opt.report_path);
        if (!rf) throw std::runtime_error("cannot open " + opt.report_path + " for writing");
        rf << rendered;
    }
    std::cerr << "matches: " << outcome.matches.pairs.size() << " (of "
              << outcome.report.samples << " samples, " << outcome.report.iterations
              << " iterations)\n";
    return kExitOk;
}

struct VerifyOptions {
    std::string matches;
    std::string in1, in2, manifest;
    std::string metric = "l2";
    std::uint32_t cap = 16384;
};

int run_verify(const VerifyOptions& opt) {
    std::string in1 = opt.in1, in2 = opt.in2;
    if (!opt.manifest.empty()) resolve_manifest(opt.manifest, in1, in2, nullptr);
    const auto d1 = fastnn::load_fmap(in1);
    const auto d2 = fastnn::load_fmap(in2);
    if (d1.pixel_count() > opt.cap || d2.pixel_count() > opt.cap)
        throw GuardError("map exceeds the quadratic-oracle cap (" + std::to_string(opt.cap) +
                         " pixels); shrink the instance or raise --cap");

    std::ifstream mf(opt.matches);
    if (!mf) throw std::runtime_error("cannot open " + opt.matches);
    std::vector<fastnn::MatchPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(mf, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        pairs.push_back({j.at("i").get<std::uint32_t>(), j.at("j").get<std::uint32_t>(),
                         j.at("iter").get<std::uint32_t>()});
    }

    const auto oracle = fastnn::mutual_nn_exact(d1, d2, fastnn::metric_from_string(opt.metric));
    std::vector<std::int64_t> forward(d1.pixel_count(), -1);
    for (const auto& p : oracle.pairs) forward[p.i] = p.j;

    std::size_t violations = 0;
    for (const auto& p : pairs) {
        const bool ok = p.i < forward.size() && forward[p.i] == static_cast<std::int64_t>(p.j);
        if (!ok) {
            ++violations;
            std::cout << "violation: pair (" << p.i << ", " << p.j
                      << ") is not a mutual nearest neighbor\n";
        }
    }
    std::cout << "matched: " << pairs.size() << " oracle_total: " << oracle.pairs.size()
              << " violations: " << violations << "\n";
    return violations == 0 ? kExitOk : kExitFailure;
}

struct BenchOptions {
    std::string sizes = "512x384";
    std::string block_sizes = "4096";
    std::string backends = "double,single,hybrid";
    std::string metric = "l2";
    std::uint32_t dim = 24;
    std::uint32_t repeats = 5;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "csv";
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

struct BenchRow {
    std::uint32_t height, width, dim, pixels, block_size;
    std::string backend, precision, metric;
    std::uint32_t repeats;
    double median_us, min_us, max_us;
    std::uint64_t a_fetches, b_fetches;
    double agreement = -1.0;  // vs full-precision single loop; <0 = n/a
    bool saturated = false;
};

const char* const kBenchCsvHeader =
    "height,width,dim,pixels,block_size,backend,precision,metric,repeats,median_us,min_us,"
    "max_us,a_block_fetches,b_block_fetches,argmin_agreement_vs_full,half_saturated";

int run_bench(const BenchOptions& opt) {
    const auto metric = fastnn::metric_from_string(opt.metric);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> sizes;
    for (const auto& s : split(opt.sizes, ',')) {
        const auto x = s.find('x');
        if (x == std::string::npos)
            throw GuardError("bad --sizes entry '" + s + "' (expected HEIGHTxWIDTH)");
        sizes.emplace_back(static_cast<std::uint32_t>(std::stoul(s.substr(0, x))),
                           static_cast<std::uint32_t>(std::stoul(s.substr(x + 1))));
    }
    std::vector<std::uint32_t> block_sizes;
    for (const auto& s : split(opt.block_sizes, ','))
        block_sizes.push_back(static_cast<std::uint32_t>(std::stoul(s)));
    std::vector<fastnn::NnBackend> backends;
    for (const auto& s : split(opt.backends, ','))
        backends.push_back(fastnn::backend_from_string(s));
    if (sizes.empty() || block_sizes.empty() || backends.empty() || opt.repeats == 0)
        throw GuardError("bench sweep must name at least one size, block size and backend");

    std::vector<BenchRow> rows;
    for (const auto& [h, w] : sizes) {
        const auto A = fastnn::gen_random(h, w, opt.dim, opt.seed, /*normalize=*/true);
        const auto B = fastnn::gen_random(h, w, opt.dim, opt.seed + 1, /*normalize=*/true);
        for (const std::uint32_t bs : block_sizes) {
            const auto part_a = fastnn::make_partition(A.pixel_count(), bs);
            const auto part_b = fastnn::make_partition(B.pixel_count(), bs);
            // untimed full-precision reference for agreement columns
            fastnn::NnResult full_ref;
            const bool want_ref =
                std::any_of(backends.begin(), backends.end(),
                            [](fastnn::NnBackend b) { return b == fastnn::NnBackend::HybridCast; });
            if (want_ref) {
                fastnn::FetchCounter scratch;
                full_ref = fastnn::nn_single_loop(A, B, part_a, metric,
                                                  fastnn::PrecisionMode::Full, scratch);
            }
            for (const auto backend : backends) {
                BenchRow row;
                row.height = h;
                row.width = w;
                row.dim = opt.dim;
                row.pixels = A.pixel_count();
                row.block_size = bs;
                row.backend = fastnn::to_string(backend);
                row.precision =
                    backend == fastnn::NnBackend::HybridCast ? "hybrid" : "full";
                row.metric = opt.metric;
                row.repeats = opt.repeats;

                std::vector<double> times;
                fastnn::NnResult result;
                fastnn::FetchCounter counter;
                for (std::uint32_t r = 0; r < opt.repeats; ++r) {
                    counter.reset();
                    double us = 0.0;
                    {
                        fastnn::ScopedTimerUs timer(us);
                        switch (backend) {
                            case fastnn::NnBackend::Bruteforce:
                                result = fastnn::nn_bruteforce(A, B, metric);
                                break;
                            case fastnn::NnBackend::DoubleLoop:
                                result = fastnn::nn_double_loop(A, B, part_a, part_b, metric,
                                                                fastnn::PrecisionMode::Full,
                                                                counter);
                                break;
                            case fastnn::NnBackend::SingleLoop:
                                result = fastnn::nn_single_loop(A, B, part_a, metric,
                                                                fastnn::PrecisionMode::Full,
                                                                counter);
                                break;
                            case fastnn::NnBackend::HybridCast:
                                result = fastnn::nn_hybridcast(A, B, part_a, metric, counter);
                                break;
                        }
                    }
                    times.push_back(us);
                }
                row.median_us = fastnn::median(times);
                row.min_us = *std::min_element(times.begin(), times.end());
                row.max_us = *std::max_element(times.begin(), times.end());
                row.a_fetches = counter.a_fetches();
                row.b_fetches = counter.b_fetches();
                row.saturated = counter.saturations() > 0;
                if (backend == fastnn::NnBackend::HybridCast && want_ref)
                    row.agreement = fastnn::argmin_agreement(result.nearest, full_ref.nearest);
                rows.push_back(std::move(row));
            }
        }
    }

    std::ostringstream out;
    if (opt.format == "csv") {
        out << kBenchCsvHeader << "\n";
        for (const auto& r : rows) {
            out << r.height << ',' << r.width << ',' << r.dim << ',' << r.pixels << ','
                << r.block_size << ',' << r.backend << ',' << r.precision << ',' << r.metric
                << ',' << r.repeats << ',' << std::fixed << std::setprecision(3) << r.median_us
                << ',' << r.min_us << ',' << r.max_us << std::defaultfloat << ',' << r.a_fetches
                << ',' << r.b_fetches << ',';
            if (r.agreement >= 0.0)
                out << std::fixed << std::setprecision(6) << r.agreement << std::defaultfloat;
            out << ',' << (r.saturated ? 1 : 0) << "\n";
        }
    } else if (opt.format == "json") {
        ordered_json arr = ordered_json::array();
        for (const auto& r : rows) {
            ordered_json j;
            j["height"] = r.height;
            j["width"] = r.width;
            j["dim"] = r.dim;
            j["pixels"] = r.pixels;
            j["block_size"] = r.block_size;
            j["backend"] = r.backend;
            j["precision"] = r.precision;
            j["metric"] = r.metric;
            j["repeats"] = r.repeats;
            j["median_us"] = r.median_us;
            j["min_us"] = r.min_us;
            j["max_us"] = r.max_us;
            j["a_block_fetches"] = r.a_fetches;
            j["b_block_fetches"] = r.b_fetches;
            if (r.agreement >= 0.0)
                j["argmin_agreement_vs_full"] = r.agreement;
            else
                j["argmin_agreement_vs_full"] = nullptr;
            j["half_saturated"] = r.saturated;
            arr.push_back(std::move(j));
        }
        out << arr.dump(2) << "\n";
    } else {
        throw GuardError("unknown --format '" + opt.format + "' (expected csv or json)");
    }

    if (opt.out.empty()) {
        std::cout << out.str();
    } else {
        std::ofstream f(opt.out);
        if (!f) throw std::runtime_error("cannot open " + opt.out + " for writing");
        f << out.str();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fast reciprocal nearest-neighbor matching over dense feature maps"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* cgen = app.add_subcommand("gen", "generate a synthetic matched pair with ground truth");
    cgen->add_option("--height", gen.height)->check(CLI::PositiveNumber);
    cgen->add_option("--width", gen.width)->check(CLI::PositiveNumber);
    cgen->add_option("--dim", gen.dim)->check(CLI::PositiveNumber);
    cgen->add_option("--seed", gen.seed);
    cgen->add_option("--noise", gen.noise)->check(CLI::NonNegativeNumber);
    cgen->add_option("--permute", gen.permute)->check(CLI::IsMember({"identity", "random"}));
    cgen->add_option("-o,--out", gen.out_dir, "output directory")->required();

    MatchOptions match;
    auto* cmatch = app.add_subcommand("match", "run reciprocal matching on two fmap files");
    cmatch->add_option("in1", match.in1, "first feature map (.fmap)");
    cmatch->add_option("in2", match.in2, "second feature map (.fmap)");
    cmatch->add_option("--manifest", match.manifest, "pair manifest instead of positional files");
    cmatch->add_option("--backend", match.backend)
        ->check(CLI::IsMember({"bruteforce", "double", "single", "hybrid"}));
    cmatch->add_option("--stride", match.stride, "subsample grid stride");
    cmatch->add_option("--k", match.k, "target sample count (overrides --stride when set)");
    cmatch->add_option("--max-iters", match.max_iters)->check(CLI::PositiveNumber);
    cmatch->add_option("--convergence", match.convergence, "stop fraction in (0,1]");
    cmatch->add_option("--metric", match.metric)->check(CLI::IsMember({"l2", "dot"}));
    cmatch->add_option("--precision", match.precision)->check(CLI::IsMember({"full", "hybrid"}));
    cmatch->add_option("--block-size", match.block_size)->check(CLI::PositiveNumber);
    cmatch->add_option("--threads", match.threads)->check(CLI::PositiveNumber);
    cmatch->add_option("--seed", match.seed, "echoed into the report");
    cmatch->add_option("-o,--out", match.out, "matches output (JSON lines)")->required();
    cmatch->add_option("--report", match.report_path, "report path (stdout when omitted)");
    cmatch->add_option("--report-format", match.report_format)
        ->check(CLI::IsMember({"json", "csv"}));

    VerifyOptions verify;
    auto* cverify =
        app.add_subcommand("verify", "check a match file against the exhaustive mutual-NN oracle");
    cverify->add_option("--matches", verify.matches)->required();
    cverify->add_option("in1", verify.in1);
    cverify->add_option("in2", verify.in2);
    cverify->add_option("--manifest", verify.manifest);
    cverify->add_option("--metric", verify.metric)->check(CLI::IsMember({"l2", "dot"}));
    cverify->add_option("--cap", verify.cap, "max pixels per map for the quadratic oracle");

    BenchOptions bench;
    auto* cbench = app.add_subcommand("bench", "sweep backends and report timings and fetches");
    cbench->add_option("--sizes", bench.sizes, "comma list of HEIGHTxWIDTH");
    cbench->add_option("--block-sizes", bench.block_sizes, "comma list of BS values");
    cbench->add_option("--backends", bench.backends, "comma list of backends");
    cbench->add_option("--metric", bench.metric)->check(CLI::IsMember({"l2", "dot"}));
    cbench->add_option("--dim", bench.dim)->check(CLI::PositiveNumber);
    cbench->add_option("--repeats", bench.repeats)->check(CLI::PositiveNumber);
    cbench->add_option("--seed", bench.seed);
    cbench->add_option("-o,--out", bench.out, "output path (stdout when omitted)");
    cbench->add_option("--format", bench.format)->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cgen->parsed()) return run_gen(gen);
        if (cmatch->parsed()) {
            if (match.manifest.empty() && (match.in1.empty() || match.in2.empty()))
                throw GuardError("match needs two fmap files or --manifest");
            return run_match(match);
        }
        if (cverify->parsed()) {
            if (verify.manifest.empty() && (verify.in1.empty() || verify.in2.empty()))
                throw GuardError("verify needs two fmap files or --manifest");
            return run_verify(verify);
        }
        if (cbench->parsed()) return run_bench(bench);
    } catch (const GuardError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
