#include "fsgcc/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace fsgcc {

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (auto& v : out.data) v = std::max(0.0, v);
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
    if (!input.same_shape(grad_out)) {
        throw std::invalid_argument("relu_backward: shape mismatch");
    }
    Tensor grad = grad_out;
    for (std::size_t i = 0; i < grad.data.size(); ++i) {
        if (input.data[i] <= 0.0) grad.data[i] = 0.0;
    }
    return grad;
}

Tensor upsample_nearest_2x(const Tensor& input) {
    Tensor out(input.n, input.c, input.h * 2, input.w * 2);
    for (int b = 0; b < input.n; ++b) {
        for (int ch = 0; ch < input.c; ++ch) {
            const double* src = input.plane(b, ch);
            double* dst = out.plane(b, ch);
            for (int y = 0; y < input.h; ++y) {
                for (int x = 0; x < input.w; ++x) {
                    const double v = src[y * input.w + x];
                    const int oy = 2 * y, ox = 2 * x;
                    dst[oy * out.w + ox] = v;
                    dst[oy * out.w + ox + 1] = v;
                    dst[(oy + 1) * out.w + ox] = v;
                    dst[(oy + 1) * out.w + ox + 1] = v;
                }
            }
        }
    }
    return out;
}

Tensor upsample_nearest_2x_backward(const Tensor& grad_out) {
    if (grad_out.h % 2 != 0 || grad_out.w % 2 != 0) {
        throw std::invalid_argument("upsample_nearest_2x_backward: odd spatial dims");
    }
    Tensor grad(grad_out.n, grad_out.c, grad_out.h / 2, grad_out.w / 2);
    for (int b = 0; b < grad.n; ++b) {
        for (int ch = 0; ch < grad.c; ++ch) {
            const double* src = grad_out.plane(b, ch);
            double* dst = grad.plane(b, ch);
            for (int y = 0; y < grad.h; ++y) {
                for (int x = 0; x < grad.w; ++x) {
                    const int oy = 2 * y, ox = 2 * x;
                    dst[y * grad.w + x] = src[oy * grad_out.w + ox] +
                                          src[oy * grad_out.w + ox + 1] +
                                          src[(oy + 1) * grad_out.w + ox] +
                                          src[(oy + 1) * grad_out.w + ox + 1];
                }
            }
        }
    }
    return grad;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) {
        throw std::invalid_argument("concat_channels: batch/spatial dims differ");
    }
    Tensor out(a.n, a.c + b.c, a.h, a.w);
    for (int bi = 0; bi < a.n; ++bi) {
        for (int ch = 0; ch < a.c; ++ch) {
            std::copy_n(a.plane(bi, ch), static_cast<std::size_t>(a.h) * a.w,
                        out.plane(bi, ch));
        }
        for (int ch = 0; ch < b.c; ++ch) {
            std::copy_n(b.plane(bi, ch), static_cast<std::size_t>(b.h) * b.w,
                        out.plane(bi, a.c + ch));
        }
    }
    return out;
}

void concat_channels_backward(const Tensor& grad_out, int a_channels, Tensor& grad_a,
                              Tensor& grad_b) {
    grad_a = Tensor(grad_out.n, a_channels, grad_out.h, grad_out.w);
    grad_b = Tensor(grad_out.n, grad_out.c - a_channels, grad_out.h, grad_out.w);
    for (int bi = 0; bi < grad_out.n; ++bi) {
        for (int ch = 0; ch < a_channels; ++ch) {
            std::copy_n(grad_out.plane(bi, ch), static_cast<std::size_t>(grad_out.h) * grad_out.w,
                        grad_a.plane(bi, ch));
        }
        for (int ch = a_channels; ch < grad_out.c; ++ch) {
            std::copy_n(grad_out.plane(bi, ch), static_cast<std::size_t>(grad_out.h) * grad_out.w,
                        grad_b.plane(bi, ch - a_channels));
        }
    }
}

double mse_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target)) {
        throw std::invalid_argument("mse_loss: shape mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.data.size());
}

Tensor mse_loss_backward(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target)) {
        throw std::invalid_argument("mse_loss_backward: shape mismatch");
    }
    Tensor grad(pred.n, pred.c, pred.h, pred.w);
    const double scale = 2.0 / static_cast<double>(pred.data.size());
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        grad.data[i] = scale * (pred.data[i] - target.data[i]);
    }
    return grad;
}

}  // namespace fsgcc
