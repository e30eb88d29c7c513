#include "fsgcc/synth.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fsgcc/prng.hpp"

namespace fsgcc {

namespace {

// two-pole resonator (bandpass) driven by the excitation signal
struct Resonator {
    double a1 = 0.0, a2 = 0.0;
    double y1 = 0.0, y2 = 0.0;

    Resonator(double freq_hz, double bandwidth_hz, double fs) {
        const double r = std::exp(-M_PI * bandwidth_hz / fs);
        a1 = 2.0 * r * std::cos(2.0 * M_PI * freq_hz / fs);
        a2 = -r * r;
    }

    double step(double x) {
        const double y = x + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        return y;
    }
};

}  // namespace

SampleBuffer synth_speech_like(double duration_s, uint64_t seed, double sample_rate_hz) {
    if (duration_s <= 0.0) {
        throw std::invalid_argument("synth_speech_like: duration must be positive");
    }
    const double fs = sample_rate_hz;
    const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs));

    Prng prng(mix_seed(seed, 0x5EEC));

    // formant frequencies jittered per seed; the first formant dominates the
    // spectrum and sets the autocorrelation main-lobe width
    const double f1 = 570.0 + prng.uniform(-40.0, 40.0);
    const double f2 = 1250.0 + prng.uniform(-120.0, 120.0);
    const double f3 = 2450.0 + prng.uniform(-180.0, 180.0);
    Resonator r1(f1, 90.0, fs), r2(f2, 140.0, fs), r3(f3, 220.0, fs);
    const double g1 = 1.0, g2 = 0.18, g3 = 0.06;

    // syllabic envelope mixing two slow rates
    const double rate_a = prng.uniform(4.0, 8.0);
    const double rate_b = prng.uniform(4.0, 8.0);
    const double phase_a = prng.uniform(0.0, 2.0 * M_PI);
    const double phase_b = prng.uniform(0.0, 2.0 * M_PI);
    const double floor_level = 0.25;

    std::vector<double> out(n, 0.0);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = prng.gaussian();
        const double v = g1 * r1.step(x) + g2 * r2.step(x) + g3 * r3.step(x);
        const double t = static_cast<double>(i) / fs;
        const double mod = 0.5 + 0.25 * std::sin(2.0 * M_PI * rate_a * t + phase_a) +
                           0.25 * std::sin(2.0 * M_PI * rate_b * t + phase_b);
        const double env = floor_level + (1.0 - floor_level) * mod;
        out[i] = env * v;
        peak = std::max(peak, std::abs(out[i]));
    }
    if (peak > 0.0) {
        const double scale = 0.9 / peak;
        for (auto& v : out) v *= scale;
    }
    return SampleBuffer(std::move(out), fs);
}

}  // namespace fsgcc
