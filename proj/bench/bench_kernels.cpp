// Serial reference kernels against the OpenMP kernels on the layer shapes of
// the two networks, plus sliding-window versus full-image inference.
//
//   ./bench_kernels --benchmark_filter=Conv

#include <benchmark/benchmark.h>

#include <random>

#include "sonarprop/models.hpp"
#include "sonarprop/proposals.hpp"
#include "sonarprop/reference.hpp"
#include "sonarprop/synth.hpp"

using namespace sonarprop;

namespace {

Tensor random(std::vector<std::size_t> shape, std::uint64_t seed) {
    Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (float& v : t.values()) v = u(rng);
    return t;
}

struct ConvCase {
    std::size_t c, hw, o, k;
    Padding pad;
};

// FCN layers 1-4 and the first CNN layer.
const ConvCase kConvCases[] = {
    {1, 96, 24, 3, Padding::same},  {24, 96, 24, 1, Padding::same}, {24, 48, 24, 3, Padding::same},
    {24, 48, 24, 1, Padding::same}, {1, 96, 32, 5, Padding::valid}, {32, 46, 32, 5, Padding::valid},
};

template <bool Reference>
void BM_ConvForward(benchmark::State& state) {
    const ConvCase& cc = kConvCases[state.range(0)];
    const Tensor x = random({cc.c, cc.hw, cc.hw}, 1), w = random({cc.o, cc.c, cc.k, cc.k}, 2), b = random({cc.o}, 3);
    const ConvSpec spec{cc.o, cc.k, cc.k, cc.pad};
    for (auto _ : state) {
        if constexpr (Reference)
            benchmark::DoNotOptimize(reference::conv2d_forward(x, w, b, spec));
        else
            benchmark::DoNotOptimize(conv2d_forward(x, w, b, spec));
    }
    state.counters["MAC/s"] = benchmark::Counter(
        static_cast<double>(cc.o * cc.c * cc.k * cc.k * conv_output_extent(cc.hw, cc.k, cc.pad) *
                            conv_output_extent(cc.hw, cc.k, cc.pad)),
        benchmark::Counter::kIsIterationInvariantRate);
}

template <bool Reference>
void BM_ConvBackward(benchmark::State& state) {
    const ConvCase& cc = kConvCases[state.range(0)];
    const std::size_t out = conv_output_extent(cc.hw, cc.k, cc.pad);
    const Tensor x = random({cc.c, cc.hw, cc.hw}, 1), w = random({cc.o, cc.c, cc.k, cc.k}, 2);
    const Tensor g = random({cc.o, out, out}, 4);
    const ConvSpec spec{cc.o, cc.k, cc.k, cc.pad};
    for (auto _ : state) {
        if constexpr (Reference)
            benchmark::DoNotOptimize(reference::conv2d_backward(x, w, g, spec));
        else
            benchmark::DoNotOptimize(conv2d_backward(x, w, g, spec));
    }
}

template <bool Reference>
void BM_MaxPool(benchmark::State& state) {
    const Tensor x = random({24, 96, 96}, 5);
    for (auto _ : state) {
        if constexpr (Reference)
            benchmark::DoNotOptimize(reference::maxpool2d(x, 2));
        else
            benchmark::DoNotOptimize(maxpool2d(x, 2));
    }
}

template <bool Reference>
void BM_Dense(benchmark::State& state) {
    // CNN hidden layer: 14112 -> 96.
    const Tensor x = random({32, 21, 21}, 6), w = random({96, 32 * 21 * 21}, 7), b = random({96}, 8);
    for (auto _ : state) {
        if constexpr (Reference)
            benchmark::DoNotOptimize(reference::dense_forward(x, w, b));
        else
            benchmark::DoNotOptimize(dense_forward(x, w, b));
    }
}

const GrayImage& bench_image() {
    static const GrayImage img = synth_sonar_image(640, 480, 2, 3).image;
    return img;
}

void BM_FcnFullImage(benchmark::State& state) {
    const Network conv = fc_to_conv(build_fcn_tiny(1));
    for (auto _ : state) benchmark::DoNotOptimize(objectness_map_fcn(conv, bench_image()));
}

void BM_FcnSlidingWindow(benchmark::State& state) {
    const Network net = build_fcn_tiny(1);
    for (auto _ : state) benchmark::DoNotOptimize(objectness_map_sliding(net, bench_image(), 4));
}

}  // namespace

BENCHMARK(BM_ConvForward<true>)->Name("ConvForward/reference")->DenseRange(0, 5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<false>)->Name("ConvForward/openmp")->DenseRange(0, 5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<true>)->Name("ConvBackward/reference")->DenseRange(0, 5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<false>)->Name("ConvBackward/openmp")->DenseRange(0, 5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxPool<true>)->Name("MaxPool/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MaxPool<false>)->Name("MaxPool/openmp")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Dense<true>)->Name("Dense/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Dense<false>)->Name("Dense/openmp")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FcnFullImage)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FcnSlidingWindow)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
