#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace fsgcc {

using cplx = std::complex<double>;

// Real-valued discrete-time signal plus its sample rate.
struct SampleBuffer {
    std::vector<double> samples;
    double sample_rate_hz = 0.0;

    SampleBuffer() = default;
    SampleBuffer(std::vector<double> s, double fs) : samples(std::move(s)), sample_rate_hz(fs) {}

    std::size_t size() const { return samples.size(); }
    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }

    // throws std::invalid_argument on NaN/Inf samples or non-positive rate
    void validate() const;
};

// Complex DFT bins of one frame; bins.size() == dft_length.
struct Spectrum {
    std::vector<cplx> bins;

    std::size_t dft_length() const { return bins.size(); }
};

enum class WindowKind { Rectangular, Hann };

struct StftFrameSet {
    std::vector<Spectrum> frames;
    int frame_length = 0;
    int hop = 0;
    WindowKind window_kind = WindowKind::Hann;
    bool input_too_short = false;  // buffer shorter than one frame
};

bool is_power_of_two(std::size_t n);

// In-place radix-2 FFT. Forward: X[k] = sum_n x[n] e^{-j 2pi kn/N}.
// Inverse carries the 1/N factor. Non-power-of-two lengths are rejected.
void fft_inplace(std::vector<cplx>& data, bool inverse);

std::vector<cplx> fft(const std::vector<cplx>& data, bool inverse);

// Forward FFT of a real signal (zero imaginary parts).
Spectrum fft_real(const std::vector<double>& x);

// Symmetric Hann: w[i] = 0.5 (1 - cos(2 pi i / (n-1))), zero at both ends.
std::vector<double> hann_window(int n);

std::vector<double> make_window(WindowKind kind, int n);

// Frame f covers samples [f*hop, f*hop + frame_length); the final partial
// frame is dropped. overlap_fraction in [0,1); hop = frame_length*(1-overlap).
StftFrameSet stft(const SampleBuffer& buffer, int frame_length, double overlap_fraction,
                  WindowKind window_kind);

int stft_frame_count(std::size_t signal_length, int frame_length, int hop);

}  // namespace fsgcc
