#include "sonarprop/reference.hpp"

#include <cmath>

#include "sonarprop/errors.hpp"

namespace sonarprop::reference {

namespace {

struct Pads {
    long top = 0, left = 0;
    std::size_t out_h = 0, out_w = 0;
};

Pads pads_for(const Tensor& input, const Tensor& weights, const ConvSpec& spec) {
    if (input.rank() != 3 || weights.rank() != 4 || weights.dim(1) != input.dim(0))
        throw InvalidInput("reference::conv2d: shape mismatch");
    Pads p;
    const std::size_t kh = weights.dim(2), kw = weights.dim(3);
    if (spec.padding == Padding::same) {
        p.top = static_cast<long>((kh - 1) / 2);
        p.left = static_cast<long>((kw - 1) / 2);
        p.out_h = input.dim(1);
        p.out_w = input.dim(2);
    } else {
        if (input.dim(1) < kh || input.dim(2) < kw) throw InvalidInput("reference::conv2d: kernel too large");
        p.out_h = input.dim(1) - kh + 1;
        p.out_w = input.dim(2) - kw + 1;
    }
    return p;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec) {
    const Pads p = pads_for(input, weights, spec);
    const std::size_t out_c = weights.dim(0), in_c = input.dim(0);
    const long h = static_cast<long>(input.dim(1)), w = static_cast<long>(input.dim(2));
    const std::size_t kh = weights.dim(2), kw = weights.dim(3);
    Tensor out({out_c, p.out_h, p.out_w});
    for (std::size_t o = 0; o < out_c; ++o)
        for (std::size_t y = 0; y < p.out_h; ++y)
            for (std::size_t x = 0; x < p.out_w; ++x) {
                double acc = bias[o];
                for (std::size_t c = 0; c < in_c; ++c)
                    for (std::size_t ky = 0; ky < kh; ++ky)
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const long sy = static_cast<long>(y + ky) - p.top;
                            const long sx = static_cast<long>(x + kx) - p.left;
                            if (sy < 0 || sx < 0 || sy >= h || sx >= w) continue;
                            acc += static_cast<double>(input.at(c, sy, sx)) *
                                   weights[((o * in_c + c) * kh + ky) * kw + kx];
                        }
                out.at(o, y, x) = static_cast<float>(acc);
            }
    return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                          const ConvSpec& spec) {
    const Pads p = pads_for(input, weights, spec);
    const std::size_t out_c = weights.dim(0), in_c = input.dim(0);
    const long h = static_cast<long>(input.dim(1)), w = static_cast<long>(input.dim(2));
    const std::size_t kh = weights.dim(2), kw = weights.dim(3);
    ConvGrads g{Tensor(input.shape()), Tensor(weights.shape()), Tensor({out_c})};
    for (std::size_t o = 0; o < out_c; ++o)
        for (std::size_t y = 0; y < p.out_h; ++y)
            for (std::size_t x = 0; x < p.out_w; ++x) {
                const float go = grad_out.at(o, y, x);
                g.bias[o] += go;
                for (std::size_t c = 0; c < in_c; ++c)
                    for (std::size_t ky = 0; ky < kh; ++ky)
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const long sy = static_cast<long>(y + ky) - p.top;
                            const long sx = static_cast<long>(x + kx) - p.left;
                            if (sy < 0 || sx < 0 || sy >= h || sx >= w) continue;
                            const std::size_t wi = ((o * in_c + c) * kh + ky) * kw + kx;
                            g.weights[wi] += go * input.at(c, sy, sx);
                            g.input.at(c, sy, sx) += go * weights[wi];
                        }
            }
    return g;
}

Tensor maxpool2d(const Tensor& input, std::size_t size) {
    const std::size_t ch = input.dim(0), oh = input.dim(1) / size, ow = input.dim(2) / size;
    Tensor out({ch, oh, ow});
    for (std::size_t c = 0; c < ch; ++c)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                float m = input.at(c, y * size, x * size);
                for (std::size_t dy = 0; dy < size; ++dy)
                    for (std::size_t dx = 0; dx < size; ++dx)
                        if (input.at(c, y * size + dy, x * size + dx) > m)
                            m = input.at(c, y * size + dy, x * size + dx);
                out.at(c, y, x) = m;
            }
    return out;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    if (input.size() != n) throw InvalidInput("reference::dense: length mismatch");
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
        double acc = bias[i];
        for (std::size_t j = 0; j < n; ++j) acc += static_cast<double>(weights[i * n + j]) * input[j];
        out[i] = static_cast<float>(acc);
    }
    return out;
}

Tensor bilinear_resize(const Tensor& input, std::size_t target_h, std::size_t target_w) {
    const std::size_t h = input.dim(1), w = input.dim(2);
    Tensor out({1, target_h, target_w});
    for (std::size_t y = 0; y < target_h; ++y)
        for (std::size_t x = 0; x < target_w; ++x) {
            const double fy = target_h > 1 ? double(y) * double(h - 1) / double(target_h - 1) : 0.0;
            const double fx = target_w > 1 ? double(x) * double(w - 1) / double(target_w - 1) : 0.0;
            const auto y0 = static_cast<std::size_t>(std::floor(fy));
            const auto x0 = static_cast<std::size_t>(std::floor(fx));
            const std::size_t y1 = y0 + 1 < h ? y0 + 1 : y0;
            const std::size_t x1 = x0 + 1 < w ? x0 + 1 : x0;
            const double ty = fy - double(y0), tx = fx - double(x0);
            const double v = (1 - ty) * ((1 - tx) * input.at(0, y0, x0) + tx * input.at(0, y0, x1)) +
                             ty * ((1 - tx) * input.at(0, y1, x0) + tx * input.at(0, y1, x1));
            out.at(0, y, x) = static_cast<float>(v);
        }
    return out;
}

double pearson(const Tensor& a, const Tensor& b) {
    const double n = static_cast<double>(a.size());
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
        saa += double(a[i]) * a[i];
        sbb += double(b[i]) * b[i];
        sab += double(a[i]) * b[i];
    }
    const double cov = sab - sa * sb / n;
    const double va = saa - sa * sa / n;
    const double vb = sbb - sb * sb / n;
    if (va <= 0 || vb <= 0) return 0.0;
    return cov / std::sqrt(va * vb);
}

}  // namespace sonarprop::reference
