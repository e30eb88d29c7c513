#include "fsgcc/dsp.hpp"

#include <cmath>
#include <stdexcept>

namespace fsgcc {

void SampleBuffer::validate() const {
    if (sample_rate_hz <= 0.0) {
        throw std::invalid_argument("SampleBuffer: sample rate must be positive");
    }
    for (double v : samples) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("SampleBuffer: non-finite sample");
        }
    }
}

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

namespace {

// bit-reversal permutation followed by iterative butterflies
void fft_radix2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv_n;
    }
}

}  // namespace

void fft_inplace(std::vector<cplx>& data, bool inverse) {
    if (!is_power_of_two(data.size())) {
        throw std::invalid_argument("fft: length must be a power of two, got " +
                                    std::to_string(data.size()));
    }
    fft_radix2(data, inverse);
}

std::vector<cplx> fft(const std::vector<cplx>& data, bool inverse) {
    std::vector<cplx> out = data;
    fft_inplace(out, inverse);
    return out;
}

Spectrum fft_real(const std::vector<double>& x) {
    std::vector<cplx> buf(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) buf[i] = cplx(x[i], 0.0);
    fft_inplace(buf, false);
    return Spectrum{std::move(buf)};
}

std::vector<double> hann_window(int n) {
    if (n < 2) {
        throw std::invalid_argument("hann_window: n must be >= 2");
    }
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        w[static_cast<std::size_t>(i)] =
            0.5 * (1.0 - std::cos(2.0 * M_PI * i / static_cast<double>(n - 1)));
    }
    return w;
}

std::vector<double> make_window(WindowKind kind, int n) {
    if (kind == WindowKind::Hann) return hann_window(n);
    return std::vector<double>(static_cast<std::size_t>(n), 1.0);
}

int stft_frame_count(std::size_t signal_length, int frame_length, int hop) {
    if (signal_length < static_cast<std::size_t>(frame_length)) return 0;
    return static_cast<int>((signal_length - static_cast<std::size_t>(frame_length)) /
                            static_cast<std::size_t>(hop)) +
           1;
}

StftFrameSet stft(const SampleBuffer& buffer, int frame_length, double overlap_fraction,
                  WindowKind window_kind) {
    if (!is_power_of_two(static_cast<std::size_t>(frame_length))) {
        throw std::invalid_argument("stft: frame_length must be a power of two");
    }
    if (overlap_fraction < 0.0 || overlap_fraction >= 1.0) {
        throw std::invalid_argument("stft: overlap_fraction must be in [0, 1)");
    }
    const int hop = static_cast<int>(std::lround(frame_length * (1.0 - overlap_fraction)));
    if (hop < 1) {
        throw std::invalid_argument("stft: overlap too large, hop would be zero");
    }

    StftFrameSet out;
    out.frame_length = frame_length;
    out.hop = hop;
    out.window_kind = window_kind;

    const int n_frames = stft_frame_count(buffer.size(), frame_length, hop);
    if (n_frames == 0) {
        out.input_too_short = true;
        return out;
    }

    const std::vector<double> window = make_window(window_kind, frame_length);
    std::vector<cplx> frame(static_cast<std::size_t>(frame_length));
    out.frames.reserve(static_cast<std::size_t>(n_frames));
    for (int f = 0; f < n_frames; ++f) {
        const std::size_t start = static_cast<std::size_t>(f) * static_cast<std::size_t>(hop);
        for (int i = 0; i < frame_length; ++i) {
            frame[static_cast<std::size_t>(i)] =
                cplx(buffer.samples[start + static_cast<std::size_t>(i)] *
                         window[static_cast<std::size_t>(i)],
                     0.0);
        }
        fft_inplace(frame, false);
        out.frames.push_back(Spectrum{frame});
    }
    return out;
}

}  // namespace fsgcc
