#pragma once

#include <cstddef>
#include <vector>

namespace fsgcc {

// Dense NCHW tensor of doubles. Height indexes frequency bands, width lags.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0) {}

    std::size_t size() const { return data.size(); }

    std::size_t index(int b, int ch, int y, int x) const {
        return ((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x;
    }
    double& at(int b, int ch, int y, int x) { return data[index(b, ch, y, x)]; }
    double at(int b, int ch, int y, int x) const { return data[index(b, ch, y, x)]; }

    double* plane(int b, int ch) { return data.data() + ((static_cast<std::size_t>(b) * c + ch) * h) * w; }
    const double* plane(int b, int ch) const {
        return data.data() + ((static_cast<std::size_t>(b) * c + ch) * h) * w;
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

// Elementwise max(0, x).
Tensor relu(const Tensor& input);

// Gradient mask: passes grad where the forward input was strictly positive.
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

// Each spatial cell replicated into a 2x2 block.
Tensor upsample_nearest_2x(const Tensor& input);

Tensor upsample_nearest_2x_backward(const Tensor& grad_out);

// Channel concatenation [a | b]; batch and spatial dims must match.
Tensor concat_channels(const Tensor& a, const Tensor& b);

void concat_channels_backward(const Tensor& grad_out, int a_channels, Tensor& grad_a,
                              Tensor& grad_b);

// Mean of squared elementwise differences.
double mse_loss(const Tensor& pred, const Tensor& target);

// d(mse)/d(pred) = 2 (pred - target) / numel.
Tensor mse_loss_backward(const Tensor& pred, const Tensor& target);

}  // namespace fsgcc
