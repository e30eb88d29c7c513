#pragma once

#include <cstdint>
#include <utility>

#include "fsgcc/dsp.hpp"

namespace fsgcc {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

double distance(const Vec3& a, const Vec3& b);

// Shoebox room with one source and a microphone pair. snr_db == +infinity
// renders without additive noise.
struct RoomSetup {
    Vec3 room_dims;  // meters
    Vec3 mic_1;
    Vec3 mic_2;
    Vec3 source;
    double t60_s = 0.0;
    double snr_db = 0.0;
    double speed_of_sound = 343.0;    // m/s
    double sample_rate_hz = 44100.0;  // Hz

    void validate() const;
};

struct Rir {
    std::vector<double> taps;
    double sample_rate_hz = 0.0;
};

struct RenderOptions {
    // rendered length = source length + tail; 4095 keeps the frame count of a
    // 2 s utterance at the reference 177 under the drop-tail framing policy
    int tail_samples = 4095;
    // cap on the simulated impulse response; 0.5 s discards under 0.1% of the
    // reverberant energy for t60 <= 1 s
    double rir_max_duration_s = 0.5;
};

// Ground-truth delay in samples: round(((|s-m1| - |s-m2|)/c) * fs),
// half away from zero.
int true_tdoa(const RoomSetup& setup);

// Largest physically admissible |lag| plus a 2-sample margin.
int admissible_max_lag(const RoomSetup& setup);

// Image-source impulse response for one microphone. Uniform wall reflection
// coefficients from Eyring's inversion of t60; fractional delays realized
// with an 81-tap Hann-windowed sinc; taps before the direct arrival are
// zeroed. duration_s == 0 selects direct delay + 1.3 * t60 automatically;
// max_order < 0 leaves the reflection count bounded only by the duration.
Rir image_source_rir(const RoomSetup& setup, int mic_index, int max_order = -1,
                     double duration_s = 0.0);

double eyring_reflection_coefficient(const Vec3& room_dims, double t60_s);

// Convolves the source with each microphone's impulse response, trims to
// source length + tail, and adds independent white Gaussian noise per channel
// scaled to the exact target SNR against the reverberant signal power.
std::pair<SampleBuffer, SampleBuffer> render_mic_signals(const RoomSetup& setup,
                                                         const SampleBuffer& source_signal,
                                                         uint64_t noise_seed,
                                                         const RenderOptions& options = {});

// Linear convolution via zero-padded FFT.
std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace fsgcc
