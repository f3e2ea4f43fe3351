// Python bindings: feature maps travel as numpy float32 arrays of shape
// (H, W, d); nearest/match results come back as numpy arrays plus the JSON
// run report.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "fastnn/half.hpp"
#include "fastnn/instrument.hpp"
#include "fastnn/io.hpp"
#include "fastnn/kernels.hpp"
#include "fastnn/nn.hpp"
#include "fastnn/reciprocal.hpp"

namespace py = pybind11;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

namespace {

fastnn::FeatureMap map_from_array(const FloatArray& arr) {
    if (arr.ndim() != 3)
        throw std::invalid_argument("feature map must have shape (H, W, d)");
    const auto h = static_cast<std::uint32_t>(arr.shape(0));
    const auto w = static_cast<std::uint32_t>(arr.shape(1));
    const auto d = static_cast<std::uint32_t>(arr.shape(2));
    std::vector<float> data(arr.data(), arr.data() + arr.size());
    return fastnn::FeatureMap::from_data(h, w, d, std::move(data));
}

py::array array_from_map(const fastnn::FeatureMap& m) {
    py::array_t<float> arr({static_cast<py::ssize_t>(m.height), static_cast<py::ssize_t>(m.width),
                            static_cast<py::ssize_t>(m.dim)});
    std::memcpy(arr.mutable_data(), m.data.data(), m.data.size() * sizeof(float));
    return arr;
}

py::array_t<std::uint32_t> u32_array(const std::vector<std::uint32_t>& v) {
    py::array_t<std::uint32_t> arr(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::memcpy(arr.mutable_data(), v.data(), v.size() * sizeof(std::uint32_t));
    return arr;
}

py::array_t<float> f32_array(const std::vector<float>& v) {
    py::array_t<float> arr(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::memcpy(arr.mutable_data(), v.data(), v.size() * sizeof(float));
    return arr;
}

py::dict nn_result_dict(const fastnn::NnResult& r, const fastnn::FetchCounter& c) {
    py::dict out;
    out["nearest"] = u32_array(r.nearest);
    out["min_dist"] = f32_array(r.min_dist);
    out["a_block_fetches"] = c.a_fetches();
    out["b_block_fetches"] = c.b_fetches();
    out["half_saturation_events"] = c.saturations();
    return out;
}

}  // namespace

PYBIND11_MODULE(_fastnn, m) {
    m.doc() = "fast reciprocal nearest-neighbor matching over dense feature maps";

    m.def(
        "gen_random",
        [](std::uint32_t height, std::uint32_t width, std::uint32_t dim, std::uint64_t seed,
           bool normalize) {
            return array_from_map(fastnn::gen_random(height, width, dim, seed, normalize));
        },
        py::arg("height"), py::arg("width"), py::arg("dim"), py::arg("seed"),
        py::arg("normalize") = true);

    m.def(
        "gen_matched_pair",
        [](std::uint32_t height, std::uint32_t width, std::uint32_t dim, std::uint64_t seed,
           double noise_sigma, const std::string& permute) {
            const auto pair = fastnn::gen_matched_pair(height, width, dim, seed, noise_sigma,
                                                       fastnn::permute_from_string(permute));
            py::dict out;
            out["d1"] = array_from_map(pair.d1);
            out["d2"] = array_from_map(pair.d2);
            out["truth"] = u32_array(pair.truth.map);
            out["noise_sigma"] = pair.truth.noise_sigma;
            out["permute"] = permute;
            return out;
        },
        py::arg("height"), py::arg("width"), py::arg("dim"), py::arg("seed"),
        py::arg("noise_sigma") = 0.0, py::arg("permute") = "random");

    m.def(
        "write_fmap",
        [](const FloatArray& arr, const std::string& path) {
            fastnn::save_fmap(map_from_array(arr), path);
        },
        py::arg("map"), py::arg("path"));
    m.def(
        "read_fmap", [](const std::string& path) { return array_from_map(fastnn::load_fmap(path)); },
        py::arg("path"));

    m.def(
        "dist_scalar",
        [](const std::vector<float>& a, const std::vector<float>& b, const std::string& metric) {
            return fastnn::dist_scalar(a, b, fastnn::metric_from_string(metric));
        },
        py::arg("a"), py::arg("b"), py::arg("metric") = "l2");

    m.def("to_half_round", [](float x) { return fastnn::to_half_round(x); }, py::arg("x"),
          "nearest binary16 value, round to nearest even, widened back to float32");

    m.def(
        "block_distances",
        [](const FloatArray& queries, const FloatArray& targets, const std::string& metric,
           const std::string& precision) {
            if (queries.ndim() != 2 || targets.ndim() != 2)
                throw std::invalid_argument("block_distances expects 2-D (n, d) arrays");
            const fastnn::DescriptorsView q{queries.data(),
                                            static_cast<std::uint32_t>(queries.shape(0)),
                                            static_cast<std::uint32_t>(queries.shape(1))};
            const fastnn::DescriptorsView t{targets.data(),
                                            static_cast<std::uint32_t>(targets.shape(0)),
                                            static_cast<std::uint32_t>(targets.shape(1))};
            fastnn::FetchCounter counter;
            const auto mat =
                fastnn::block_distances(q, t, fastnn::metric_from_string(metric),
                                        fastnn::precision_from_string(precision), counter);
            py::array_t<float> out({static_cast<py::ssize_t>(mat.rows),
                                    static_cast<py::ssize_t>(mat.cols)});
            std::memcpy(out.mutable_data(), mat.data.data(), mat.data.size() * sizeof(float));
            return out;
        },
        py::arg("queries"), py::arg("targets"), py::arg("metric") = "l2",
        py::arg("precision") = "full");

    m.def(
        "nn_bruteforce",
        [](const FloatArray& A, const FloatArray& B, const std::string& metric) {
            const auto a = map_from_array(A);
            const auto b = map_from_array(B);
            fastnn::FetchCounter counter;
            return nn_result_dict(
                fastnn::nn_bruteforce(a, b, fastnn::metric_from_string(metric)), counter);
        },
        py::arg("A"), py::arg("B"), py::arg("metric") = "l2");

    m.def(
        "nn_double_loop",
        [](const FloatArray& A, const FloatArray& B, std::uint32_t block_size,
           const std::string& metric, const std::string& precision, unsigned threads) {
            const auto a = map_from_array(A);
            const auto b = map_from_array(B);
            fastnn::FetchCounter counter;
            const auto r = fastnn::nn_double_loop(
                a, b, fastnn::make_partition(a.pixel_count(), block_size),
                fastnn::make_partition(b.pixel_count(), block_size),
                fastnn::metric_from_string(metric), fastnn::precision_from_string(precision),
                counter, threads);
            return nn_result_dict(r, counter);
        },
        py::arg("A"), py::arg("B"), py::arg("block_size") = 4096, py::arg("metric") = "l2",
        py::arg("precision") = "full", py::arg("threads") = 1);

    m.def(
        "nn_single_loop",
        [](const FloatArray& A, const FloatArray& B, std::uint32_t block_size,
           const std::string& metric, const std::string& precision, unsigned threads) {
            const auto a = map_from_array(A);
            const auto b = map_from_array(B);
            fastnn::FetchCounter counter;
            const auto r = fastnn::nn_single_loop(
                a, b, fastnn::make_partition(a.pixel_count(), block_size),
                fastnn::metric_from_string(metric), fastnn::precision_from_string(precision),
                counter, threads);
            return nn_result_dict(r, counter);
        },
        py::arg("A"), py::arg("B"), py::arg("block_size") = 4096, py::arg("metric") = "l2",
        py::arg("precision") = "full", py::arg("threads") = 1);

    m.def(
        "nn_hybridcast",
        [](const FloatArray& A, const FloatArray& B, std::uint32_t block_size,
           const std::string& metric, unsigned threads) {
            const auto a = map_from_array(A);
            const auto b = map_from_array(B);
            fastnn::FetchCounter counter;
            const auto r = fastnn::nn_hybridcast(
                a, b, fastnn::make_partition(a.pixel_count(), block_size),
                fastnn::metric_from_string(metric), counter, threads);
            return nn_result_dict(r, counter);
        },
        py::arg("A"), py::arg("B"), py::arg("block_size") = 4096, py::arg("metric") = "l2",
        py::arg("threads") = 1);

    m.def(
        "grid_subsample",
        [](std::uint32_t height, std::uint32_t width, std::uint32_t k, std::uint32_t stride) {
            const fastnn::FeatureMap shape(height, width, 1);
            const auto ids = fastnn::grid_subsample(shape, k, stride);
            std::vector<std::uint32_t> flat;
            flat.reserve(ids.size());
            for (const auto id : ids) flat.push_back(id.index);
            return u32_array(flat);
        },
        py::arg("height"), py::arg("width"), py::arg("k") = 0, py::arg("stride") = 8);

    m.def(
        "mutual_nn_exact",
        [](const FloatArray& D1, const FloatArray& D2, const std::string& metric) {
            const auto d1 = map_from_array(D1);
            const auto d2 = map_from_array(D2);
            const auto set =
                fastnn::mutual_nn_exact(d1, d2, fastnn::metric_from_string(metric));
            py::array_t<std::uint32_t> out(
                {static_cast<py::ssize_t>(set.pairs.size()), static_cast<py::ssize_t>(2)});
            auto view = out.mutable_unchecked<2>();
            for (py::ssize_t r = 0; r < static_cast<py::ssize_t>(set.pairs.size()); ++r) {
                view(r, 0) = set.pairs[r].i;
                view(r, 1) = set.pairs[r].j;
            }
            return out;
        },
        py::arg("D1"), py::arg("D2"), py::arg("metric") = "l2");

    m.def(
        "reciprocal_match",
        [](const FloatArray& D1, const FloatArray& D2, const std::string& backend,
           std::uint32_t k, std::uint32_t stride, std::uint32_t max_iters, double convergence,
           const std::string& metric, const std::string& precision, std::uint32_t block_size,
           unsigned threads) {
            const auto d1 = map_from_array(D1);
            const auto d2 = map_from_array(D2);
            fastnn::MatchConfig cfg;
            cfg.k = k;
            cfg.grid_stride = k > 0 ? 0 : stride;
            cfg.max_iters = max_iters;
            cfg.convergence_fraction = convergence;
            cfg.metric = fastnn::metric_from_string(metric);
            cfg.precision = fastnn::precision_from_string(precision);
            cfg.block_size = block_size;
            const auto out = fastnn::reciprocal_match(
                d1, d2, cfg, fastnn::backend_from_string(backend), threads);

            py::array_t<std::uint32_t> matches(
                {static_cast<py::ssize_t>(out.matches.pairs.size()), static_cast<py::ssize_t>(3)});
            auto view = matches.mutable_unchecked<2>();
            for (py::ssize_t r = 0; r < static_cast<py::ssize_t>(out.matches.pairs.size()); ++r) {
                view(r, 0) = out.matches.pairs[r].i;
                view(r, 1) = out.matches.pairs[r].j;
                view(r, 2) = out.matches.pairs[r].iteration;
            }
            return py::make_tuple(matches,
                                  fastnn::render_report(out.report, fastnn::ReportFormat::Json));
        },
        py::arg("D1"), py::arg("D2"), py::arg("backend") = "single", py::arg("k") = 0,
        py::arg("stride") = 8, py::arg("max_iters") = 10, py::arg("convergence") = 0.99,
        py::arg("metric") = "l2", py::arg("precision") = "full", py::arg("block_size") = 4096,
        py::arg("threads") = 1);
}
