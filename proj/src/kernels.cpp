#include "sonarprop/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "sonarprop/errors.hpp"

namespace sonarprop {

namespace detail {

namespace {

#if defined(__AVX512F__)
constexpr std::size_t kLanes = 16;
#else
constexpr std::size_t kLanes = 8;
#endif
using vec = float __attribute__((vector_size(kLanes * sizeof(float))));

inline vec load(const float* p) {
    vec v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

inline void store(float* p, vec v) { std::memcpy(p, &v, sizeof v); }

inline float hsum(vec v) {
    float s = 0.0f;
    for (std::size_t l = 0; l < kLanes; ++l) s += v[l];
    return s;
}

constexpr std::size_t kRowBlock = 6;
constexpr std::size_t kColBlock = 2 * kLanes;

// R x kColBlock register tile: C[0..R, 0..kColBlock] (+)= A[0..R, :] * B[:, 0..kColBlock].
template <std::size_t R>
inline void gemm_tile(std::size_t k, const float* a, std::size_t lda, const float* b, std::size_t ldb, float* c,
                      std::size_t ldc, bool accumulate) {
    vec acc[R][2] = {};
    for (std::size_t p = 0; p < k; ++p) {
        const vec b0 = load(b + p * ldb);
        const vec b1 = load(b + p * ldb + kLanes);
        for (std::size_t r = 0; r < R; ++r) {
            const float av = a[r * lda + p];
            acc[r][0] += av * b0;
            acc[r][1] += av * b1;
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        float* crow = c + r * ldc;
        if (accumulate) {
            store(crow, load(crow) + acc[r][0]);
            store(crow + kLanes, load(crow + kLanes) + acc[r][1]);
        } else {
            store(crow, acc[r][0]);
            store(crow + kLanes, acc[r][1]);
        }
    }
}

inline void gemm_rows(std::size_t rows, std::size_t k, const float* a, std::size_t lda, const float* b,
                      std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
    switch (rows) {
        case 1: gemm_tile<1>(k, a, lda, b, ldb, c, ldc, accumulate); break;
        case 2: gemm_tile<2>(k, a, lda, b, ldb, c, ldc, accumulate); break;
        case 3: gemm_tile<3>(k, a, lda, b, ldb, c, ldc, accumulate); break;
        case 4: gemm_tile<4>(k, a, lda, b, ldb, c, ldc, accumulate); break;
        case 5: gemm_tile<5>(k, a, lda, b, ldb, c, ldc, accumulate); break;
        default: gemm_tile<kRowBlock>(k, a, lda, b, ldb, c, ldc, accumulate); break;
    }
}

// Leftover columns (fewer than kColBlock), one row at a time.
inline void gemm_edge(std::size_t rows, std::size_t cols, std::size_t k, const float* a, std::size_t lda,
                      const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
    for (std::size_t r = 0; r < rows; ++r) {
        float* crow = c + r * ldc;
        float acc[kColBlock] = {};
        for (std::size_t p = 0; p < k; ++p) {
            const float av = a[r * lda + p];
            const float* brow = b + p * ldb;
            for (std::size_t j = 0; j < cols; ++j) acc[j] += av * brow[j];
        }
        for (std::size_t j = 0; j < cols; ++j) crow[j] = accumulate ? crow[j] + acc[j] : acc[j];
    }
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
    const std::ptrdiff_t col_blocks = static_cast<std::ptrdiff_t>((n + kColBlock - 1) / kColBlock);
    const bool parallel = m * n * k > (1u << 18);
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t cb = 0; cb < col_blocks; ++cb) {
        const std::size_t n0 = static_cast<std::size_t>(cb) * kColBlock;
        const std::size_t cols = std::min(kColBlock, n - n0);
        for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock) {
            const std::size_t rows = std::min(kRowBlock, m - i0);
            if (cols == kColBlock)
                gemm_rows(rows, k, a + i0 * lda, lda, b + n0, ldb, c + i0 * ldc + n0, ldc, accumulate);
            else
                gemm_edge(rows, cols, k, a + i0 * lda, lda, b + n0, ldb, c + i0 * ldc + n0, ldc, accumulate);
        }
    }
}

namespace {

constexpr std::size_t kDotTile = 4;

// C[i0+r, j0+s] += sum_p A[i0+r, p] * B[j0+s, p] for r < ri, s < sj.
void dot_tile(std::size_t ri, std::size_t sj, std::size_t k, const float* a, std::size_t lda, const float* b,
              std::size_t ldb, float* c, std::size_t ldc) {
    vec acc[kDotTile][kDotTile] = {};
    std::size_t p = 0;
    if (ri == kDotTile && sj == kDotTile) {
        for (; p + kLanes <= k; p += kLanes) {
            vec av[kDotTile], bv[kDotTile];
            for (std::size_t r = 0; r < kDotTile; ++r) av[r] = load(a + r * lda + p);
            for (std::size_t s = 0; s < kDotTile; ++s) bv[s] = load(b + s * ldb + p);
            for (std::size_t r = 0; r < kDotTile; ++r)
                for (std::size_t s = 0; s < kDotTile; ++s) acc[r][s] += av[r] * bv[s];
        }
    } else {
        for (; p + kLanes <= k; p += kLanes)
            for (std::size_t r = 0; r < ri; ++r) {
                const vec av = load(a + r * lda + p);
                for (std::size_t s = 0; s < sj; ++s) acc[r][s] += av * load(b + s * ldb + p);
            }
    }
    for (std::size_t r = 0; r < ri; ++r)
        for (std::size_t s = 0; s < sj; ++s) {
            float total = hsum(acc[r][s]);
            for (std::size_t q = p; q < k; ++q) total += a[r * lda + q] * b[s * ldb + q];
            c[r * ldc + s] += total;
        }
}

}  // namespace

void gemm_nt_accumulate(std::size_t m, std::size_t n, std::size_t k, const float* a,
                        std::size_t lda, const float* b, std::size_t ldb, float* c,
                        std::size_t ldc) {
    const bool parallel = m * n * k > (1u << 18);
    const std::ptrdiff_t col_tiles = static_cast<std::ptrdiff_t>((n + kDotTile - 1) / kDotTile);
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t jt = 0; jt < col_tiles; ++jt) {
        const std::size_t j0 = static_cast<std::size_t>(jt) * kDotTile;
        const std::size_t sj = std::min(kDotTile, n - j0);
        for (std::size_t i0 = 0; i0 < m; i0 += kDotTile)
            dot_tile(std::min(kDotTile, m - i0), sj, k, a + i0 * lda, lda, b + j0 * ldb, ldb, c + i0 * ldc + j0,
                     ldc);
    }
}

}  // namespace detail

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, Padding padding) {
    if (padding == Padding::same) return in;
    return in >= kernel ? in - kernel + 1 : 0;
}

namespace {

constexpr std::size_t kIm2colBudget = std::size_t{1} << 18;  // floats per column chunk

struct ConvGeometry {
    std::size_t channels, height, width;
    std::size_t out_channels, kh, kw;
    std::size_t out_h, out_w;
    std::size_t pad_top, pad_left;

    std::size_t patch_len() const { return channels * kh * kw; }
    bool pointwise() const { return kh == 1 && kw == 1; }
};

ConvGeometry check_conv(const Tensor& input, const Tensor& weights, const ConvSpec& spec) {
    if (spec.stride != 1) throw InvalidInput("conv2d: only stride 1 is supported");
    if (spec.kernel_h < 1 || spec.kernel_w < 1) throw InvalidInput("conv2d: kernel extents must be >= 1");
    if (input.rank() != 3) throw InvalidInput("conv2d: input must be C x H x W, got " + shape_string(input.shape()));
    if (weights.rank() != 4) throw InvalidInput("conv2d: weights must be O x C x kh x kw");
    ConvGeometry g{};
    g.channels = input.dim(0);
    g.height = input.dim(1);
    g.width = input.dim(2);
    g.out_channels = weights.dim(0);
    g.kh = weights.dim(2);
    g.kw = weights.dim(3);
    if (weights.dim(1) != g.channels || g.kh != spec.kernel_h || g.kw != spec.kernel_w ||
        g.out_channels != spec.out_channels)
        throw InvalidInput("conv2d: weights " + shape_string(weights.shape()) +
                           " do not match input " + shape_string(input.shape()));
    g.out_h = conv_output_extent(g.height, g.kh, spec.padding);
    g.out_w = conv_output_extent(g.width, g.kw, spec.padding);
    if (g.out_h == 0 || g.out_w == 0)
        throw InvalidInput("conv2d: kernel larger than input under valid padding");
    if (spec.padding == Padding::same) {
        g.pad_top = (g.kh - 1) / 2;
        g.pad_left = (g.kw - 1) / 2;
    }
    return g;
}

// cols[(c*kh+ky)*kw+kx][(r-r0)*out_w + x] = input[c][r+ky-pad_top][x+kx-pad_left].
void im2col(const ConvGeometry& g, const float* in, std::size_t r0, std::size_t r1, float* cols) {
    const std::size_t ncols = (r1 - r0) * g.out_w;
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(g.patch_len());
#pragma omp parallel for schedule(static) if (rows * static_cast<std::ptrdiff_t>(ncols) > (1 << 16))
    for (std::ptrdiff_t row = 0; row < rows; ++row) {
        const std::size_t kx = static_cast<std::size_t>(row) % g.kw;
        const std::size_t ky = (static_cast<std::size_t>(row) / g.kw) % g.kh;
        const std::size_t c = static_cast<std::size_t>(row) / (g.kw * g.kh);
        float* dst = cols + static_cast<std::size_t>(row) * ncols;
        const float* plane = in + c * g.height * g.width;
        for (std::size_t r = r0; r < r1; ++r) {
            float* out = dst + (r - r0) * g.out_w;
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(r + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(g.height)) {
                std::fill(out, out + g.out_w, 0.0f);
                continue;
            }
            const float* src = plane + static_cast<std::size_t>(sy) * g.width;
            const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad_left);
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.out_w),
                                                               static_cast<std::ptrdiff_t>(g.width) - shift);
            std::fill(out, out + std::max<std::ptrdiff_t>(lo, 0), 0.0f);
            if (hi > lo) std::memcpy(out + lo, src + lo + shift, static_cast<std::size_t>(hi - lo) * sizeof(float));
            std::fill(out + std::max(hi, lo), out + g.out_w, 0.0f);
        }
    }
}

std::size_t rows_per_chunk(const ConvGeometry& g) {
    const std::size_t per_row = g.patch_len() * g.out_w;
    return std::clamp<std::size_t>(kIm2colBudget / std::max<std::size_t>(per_row, 1), 1, g.out_h);
}

// Few output channels: im2col would dwarf the arithmetic, so accumulate
// shifted input rows directly.
void conv_direct(const ConvGeometry& g, const float* in, const float* w, float* out) {
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(g.out_channels * g.out_h);
#pragma omp parallel for schedule(static) if (rows * static_cast<std::ptrdiff_t>(g.out_w * g.patch_len()) > (1 << 16))
    for (std::ptrdiff_t idx = 0; idx < rows; ++idx) {
        const std::size_t o = static_cast<std::size_t>(idx) / g.out_h, y = static_cast<std::size_t>(idx) % g.out_h;
        float* dst = out + (o * g.out_h + y) * g.out_w;
        std::fill(dst, dst + g.out_w, 0.0f);
        for (std::size_t c = 0; c < g.channels; ++c) {
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
                if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(g.height)) continue;
                const float* src = in + (c * g.height + static_cast<std::size_t>(sy)) * g.width;
                const float* wrow = w + ((o * g.channels + c) * g.kh + ky) * g.kw;
                for (std::size_t kx = 0; kx < g.kw; ++kx) {
                    const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad_left);
                    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
                    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.out_w),
                                                                       static_cast<std::ptrdiff_t>(g.width) - shift);
                    const float wv = wrow[kx];
                    const float* s = src + shift;
                    for (std::ptrdiff_t x = lo; x < hi; ++x) dst[x] += wv * s[x];
                }
            }
        }
    }
}

// out (O x out_h x out_w) = correlation of in with w under the padding in g, no bias.
void conv_apply(const ConvGeometry& g, const float* in, const float* w, float* out) {
    const std::size_t plane = g.out_h * g.out_w;
    const std::size_t k = g.patch_len();
    if (g.pointwise() && g.pad_top == 0 && g.pad_left == 0 && g.out_h == g.height && g.out_w == g.width) {
        detail::gemm_nn(g.out_channels, plane, k, w, k, in, plane, out, plane, false);
        return;
    }
    if (g.out_channels < 4) {
        conv_direct(g, in, w, out);
        return;
    }
    const std::size_t chunk = rows_per_chunk(g);
    std::vector<float> cols(k * chunk * g.out_w);
    for (std::size_t r0 = 0; r0 < g.out_h; r0 += chunk) {
        const std::size_t r1 = std::min(g.out_h, r0 + chunk);
        const std::size_t ncols = (r1 - r0) * g.out_w;
        im2col(g, in, r0, r1, cols.data());
        detail::gemm_nn(g.out_channels, ncols, k, w, k, cols.data(), ncols, out + r0 * g.out_w, plane, false);
    }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec) {
    const ConvGeometry g = check_conv(input, weights, spec);
    if (bias.size() != g.out_channels) throw InvalidInput("conv2d: bias length does not match out channels");
    Tensor out({g.out_channels, g.out_h, g.out_w});
    conv_apply(g, input.data(), weights.data(), out.data());
    const std::size_t plane = g.out_h * g.out_w;
    for (std::size_t o = 0; o < g.out_channels; ++o) {
        float* dst = out.data() + o * plane;
        const float b = bias[o];
        for (std::size_t i = 0; i < plane; ++i) dst[i] += b;
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                          const ConvSpec& spec, bool need_input_grad) {
    const ConvGeometry g = check_conv(input, weights, spec);
    if (grad_out.rank() != 3 || grad_out.dim(0) != g.out_channels || grad_out.dim(1) != g.out_h ||
        grad_out.dim(2) != g.out_w)
        throw InvalidInput("conv2d_backward: grad_out " + shape_string(grad_out.shape()) +
                           " does not match forward output");
    const std::size_t plane = g.out_h * g.out_w;
    const std::size_t k = g.patch_len();

    ConvGrads grads;
    grads.weights = Tensor(weights.shape());
    grads.bias = Tensor({g.out_channels});
    for (std::size_t o = 0; o < g.out_channels; ++o) {
        const float* src = grad_out.data() + o * plane;
        float s = 0.0f;
        for (std::size_t i = 0; i < plane; ++i) s += src[i];
        grads.bias[o] = s;
    }

    // dW = grad_out (O x P) * cols^T (P x K).
    if (g.pointwise()) {
        detail::gemm_nt_accumulate(g.out_channels, k, plane, grad_out.data(), plane, input.data(), plane,
                                   grads.weights.data(), k);
    } else {
        const std::size_t chunk = rows_per_chunk(g);
        std::vector<float> cols(k * chunk * g.out_w);
        for (std::size_t r0 = 0; r0 < g.out_h; r0 += chunk) {
            const std::size_t r1 = std::min(g.out_h, r0 + chunk);
            const std::size_t ncols = (r1 - r0) * g.out_w;
            im2col(g, input.data(), r0, r1, cols.data());
            detail::gemm_nt_accumulate(g.out_channels, k, ncols, grad_out.data() + r0 * g.out_w, plane,
                                       cols.data(), ncols, grads.weights.data(), k);
        }
    }

    // dX is the correlation of grad_out with the spatially flipped, channel
    // transposed kernel, padded by the complement of the forward padding.
    if (need_input_grad) {
        std::vector<float> flipped(weights.size());
        for (std::size_t o = 0; o < g.out_channels; ++o)
            for (std::size_t c = 0; c < g.channels; ++c)
                for (std::size_t ky = 0; ky < g.kh; ++ky)
                    for (std::size_t kx = 0; kx < g.kw; ++kx)
                        flipped[((c * g.out_channels + o) * g.kh + (g.kh - 1 - ky)) * g.kw + (g.kw - 1 - kx)] =
                            weights[((o * g.channels + c) * g.kh + ky) * g.kw + kx];
        ConvGeometry t{};
        t.channels = g.out_channels;
        t.height = g.out_h;
        t.width = g.out_w;
        t.out_channels = g.channels;
        t.kh = g.kh;
        t.kw = g.kw;
        t.out_h = g.height;
        t.out_w = g.width;
        t.pad_top = g.kh - 1 - g.pad_top;
        t.pad_left = g.kw - 1 - g.pad_left;
        grads.input = Tensor(input.shape());
        conv_apply(t, grad_out.data(), flipped.data(), grads.input.data());
    }
    return grads;
}

PoolResult maxpool2d(const Tensor& input, std::size_t size) {
    if (size < 1) throw InvalidInput("maxpool2d: size must be >= 1");
    if (input.rank() != 3) throw InvalidInput("maxpool2d: input must be C x H x W");
    const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
    const std::size_t oh = height / size, ow = width / size;
    if (oh == 0 || ow == 0) throw InvalidInput("maxpool2d: input smaller than pooling window");
    PoolResult result{Tensor({channels, oh, ow}), std::vector<std::uint32_t>(channels * oh * ow)};
    const float* in = input.data();
#pragma omp parallel for schedule(static) if (channels * oh * ow > 4096)
    for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(channels); ++cc) {
        const std::size_t c = static_cast<std::size_t>(cc);
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                std::size_t best = (c * height + y * size) * width + x * size;
                float best_value = in[best];
                for (std::size_t dy = 0; dy < size; ++dy) {
                    const std::size_t row = (c * height + y * size + dy) * width + x * size;
                    for (std::size_t dx = 0; dx < size; ++dx) {
                        if (in[row + dx] > best_value) {
                            best_value = in[row + dx];
                            best = row + dx;
                        }
                    }
                }
                const std::size_t o = (c * oh + y) * ow + x;
                result.output[o] = best_value;
                result.argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return result;
}

Tensor maxpool2d_backward(const std::vector<std::size_t>& input_shape,
                          std::span<const std::uint32_t> argmax, const Tensor& grad_out) {
    if (argmax.size() != grad_out.size()) throw InvalidInput("maxpool2d_backward: argmax length mismatch");
    Tensor grad(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        if (argmax[i] >= grad.size()) throw InvalidInput("maxpool2d_backward: argmax out of range");
        grad[argmax[i]] += grad_out[i];
    }
    return grad;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    if (weights.rank() != 2) throw InvalidInput("dense: weights must be M x N");
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    if (input.size() != n)
        throw InvalidInput("dense: input length " + std::to_string(input.size()) +
                           " does not match weights " + shape_string(weights.shape()));
    if (bias.size() != m) throw InvalidInput("dense: bias length does not match weights");
    Tensor out({m});
    const float* x = input.data();
#pragma omp parallel for schedule(static) if (m * n > (1u << 16))
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        const float* row = weights.data() + static_cast<std::size_t>(i) * n;
        float lanes[16] = {};
        std::size_t j = 0;
        for (; j + 16 <= n; j += 16)
            for (std::size_t l = 0; l < 16; ++l) lanes[l] += row[j + l] * x[j + l];
        float s = bias[static_cast<std::size_t>(i)];
        for (; j < n; ++j) s += row[j] * x[j];
        for (float lane : lanes) s += lane;
        out[static_cast<std::size_t>(i)] = s;
    }
    return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
    if (weights.rank() != 2) throw InvalidInput("dense_backward: weights must be M x N");
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    if (input.size() != n || grad_out.size() != m)
        throw InvalidInput("dense_backward: shapes do not match weights " + shape_string(weights.shape()));
    DenseGrads grads{Tensor(input.shape()), Tensor(weights.shape()), Tensor({m})};
    const float* x = input.data();
#pragma omp parallel for schedule(static) if (m * n > (1u << 16))
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        const float g = grad_out[static_cast<std::size_t>(i)];
        float* row = grads.weights.data() + static_cast<std::size_t>(i) * n;
        for (std::size_t j = 0; j < n; ++j) row[j] = g * x[j];
    }
    for (std::size_t i = 0; i < m; ++i) {
        grads.bias[i] = grad_out[i];
        const float g = grad_out[i];
        const float* row = weights.data() + i * n;
        float* gin = grads.input.data();
        for (std::size_t j = 0; j < n; ++j) gin[j] += g * row[j];
    }
    return grads;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (float& v : y.values()) v = v > 0.0f ? v : 0.0f;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
    if (x.size() != grad_out.size()) throw InvalidInput("relu_backward: shape mismatch");
    Tensor g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0f ? grad_out[i] : 0.0f;
    return g;
}

Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    for (float& v : y.values()) {
        // Saturating at the float limits would return exactly 0 or 1.
        const float clamped = std::clamp(v, -80.0f, 80.0f);
        v = 1.0f / (1.0f + std::exp(-clamped));
        v = std::clamp(v, 1e-7f, 1.0f - 6e-8f);
    }
    return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out) {
    if (y.size() != grad_out.size()) throw InvalidInput("sigmoid_backward: shape mismatch");
    Tensor g(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = grad_out[i] * y[i] * (1.0f - y[i]);
    return g;
}

Tensor bilinear_resize(const Tensor& input, std::size_t target_h, std::size_t target_w) {
    if (target_h < 1 || target_w < 1) throw InvalidInput("bilinear_resize: target extents must be >= 1");
    if (input.rank() != 3 || input.dim(0) != 1) throw InvalidInput("bilinear_resize: input must be 1 x h x w");
    const std::size_t h = input.dim(1), w = input.dim(2);
    if (h == target_h && w == target_w) return input;
    Tensor out({1, target_h, target_w});
    const double sy = target_h > 1 ? static_cast<double>(h - 1) / static_cast<double>(target_h - 1) : 0.0;
    const double sx = target_w > 1 ? static_cast<double>(w - 1) / static_cast<double>(target_w - 1) : 0.0;
#pragma omp parallel for schedule(static) if (target_h * target_w > 65536)
    for (std::ptrdiff_t yy = 0; yy < static_cast<std::ptrdiff_t>(target_h); ++yy) {
        const double fy = static_cast<double>(yy) * sy;
        const std::size_t y0 = std::min(static_cast<std::size_t>(fy), h - 1);
        const std::size_t y1 = std::min(y0 + 1, h - 1);
        const float wy = static_cast<float>(fy - static_cast<double>(y0));
        for (std::size_t x = 0; x < target_w; ++x) {
            const double fx = static_cast<double>(x) * sx;
            const std::size_t x0 = std::min(static_cast<std::size_t>(fx), w - 1);
            const std::size_t x1 = std::min(x0 + 1, w - 1);
            const float wx = static_cast<float>(fx - static_cast<double>(x0));
            const float top = input.at(0, y0, x0) + wx * (input.at(0, y0, x1) - input.at(0, y0, x0));
            const float bottom = input.at(0, y1, x0) + wx * (input.at(0, y1, x1) - input.at(0, y1, x0));
            float v = top + wy * (bottom - top);
            // Keep within the convex hull of the four neighbours despite rounding.
            const float lo = std::min({input.at(0, y0, x0), input.at(0, y0, x1), input.at(0, y1, x0), input.at(0, y1, x1)});
            const float hi = std::max({input.at(0, y0, x0), input.at(0, y0, x1), input.at(0, y1, x0), input.at(0, y1, x1)});
            out.at(0, static_cast<std::size_t>(yy), x) = std::clamp(v, lo, hi);
        }
    }
    return out;
}

float xcorr2d_normalized(const Tensor& image, const Tensor& templ) {
    if (image.shape() != templ.shape())
        throw InvalidInput("xcorr2d_normalized: size mismatch " + shape_string(image.shape()) + " vs " +
                           shape_string(templ.shape()));
    const std::size_t n = image.size();
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += image[i];
        mean_b += templ[i];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = image[i] - mean_a;
        const double db = templ[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a <= 0.0 || var_b <= 0.0) return 0.0f;
    const double r = cov / std::sqrt(var_a * var_b);
    return static_cast<float>(std::clamp(r, -1.0, 1.0));
}

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw InvalidInput("mse_loss: shape mismatch " + shape_string(pred.shape()) + " vs " +
                           shape_string(target.shape()));
    LossResult result{0.0f, Tensor(pred.shape())};
    const float scale = 2.0f / static_cast<float>(pred.size());
    float sum = 0.0f;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const float d = pred[i] - target[i];
        sum += d * d;
        result.gradient[i] = scale * d;
    }
    result.value = sum / static_cast<float>(pred.size());
    return result;
}

}  // namespace sonarprop
