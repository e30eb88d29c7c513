#include "fsgcc/gcc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fsgcc {

Spectrum phat_spectrum(const Spectrum& x1_spec, const Spectrum& x2_spec) {
    if (x1_spec.dft_length() != x2_spec.dft_length()) {
        throw std::invalid_argument("phat_spectrum: DFT lengths differ");
    }
    const std::size_t n = x1_spec.dft_length();
    Spectrum out;
    out.bins.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const cplx cross = x1_spec.bins[k] * std::conj(x2_spec.bins[k]);
        out.bins[k] = cross / (std::abs(cross) + kPhatEpsilon);
    }
    return out;
}

GccVector gcc_phat_from_spectra(const Spectrum& x1_spec, const Spectrum& x2_spec) {
    const std::size_t n = x1_spec.dft_length();
    if (!is_power_of_two(n)) {
        throw std::invalid_argument("gcc_phat: DFT length must be a power of two");
    }

    bool all_zero = true;
    for (std::size_t k = 0; k < n && all_zero; ++k) {
        if (std::abs(x1_spec.bins[k]) > 0.0 || std::abs(x2_spec.bins[k]) > 0.0) all_zero = false;
    }

    GccVector out;
    out.values.assign(n, 0.0);
    if (all_zero) {
        out.degenerate = true;
        return out;
    }

    Spectrum psi = phat_spectrum(x1_spec, x2_spec);
    fft_inplace(psi.bins, true);

    // circular shift: output index tau + N/2 holds lag tau
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        out.values[(i + half) % n] = psi.bins[i].real();
    }
    return out;
}

GccVector gcc_phat(const std::vector<double>& x1_frame, const std::vector<double>& x2_frame) {
    if (x1_frame.size() != x2_frame.size()) {
        throw std::invalid_argument("gcc_phat: frames must have equal length");
    }
    return gcc_phat_from_spectra(fft_real(x1_frame), fft_real(x2_frame));
}

std::optional<int> argmax_lag_centered(const std::vector<double>& values, int max_lag) {
    const int n = static_cast<int>(values.size());
    const int half = n / 2;
    if (max_lag > half) {
        throw std::invalid_argument("argmax_lag_centered: max_lag exceeds N/2");
    }
    bool any_nonzero = false;
    for (double v : values) {
        if (v != 0.0) {
            any_nonzero = true;
            break;
        }
    }
    if (!any_nonzero) return std::nullopt;

    // visit lags ordered by |tau| with negative first so that the first
    // strict maximum wins ties per the documented rule
    int best_tau = 0;
    double best = values[static_cast<std::size_t>(half)];
    for (int mag = 1; mag <= max_lag; ++mag) {
        for (int tau : {-mag, mag}) {
            const int idx = tau + half;
            if (idx < 0 || idx >= n) continue;
            const double v = values[static_cast<std::size_t>(idx)];
            if (v > best) {
                best = v;
                best_tau = tau;
            }
        }
    }
    return best_tau;
}

std::optional<int> estimate_tdoa_gcc(const GccVector& gcc, int max_lag) {
    if (gcc.degenerate) return std::nullopt;
    return argmax_lag_centered(gcc.values, max_lag);
}

double correlation_time(const SampleBuffer& signal) {
    signal.validate();
    const std::size_t n = signal.size();
    if (n < 4) {
        throw std::invalid_argument("correlation_time: signal too short");
    }
    double energy = 0.0;
    for (double v : signal.samples) energy += v * v;
    if (energy <= 0.0) {
        throw std::invalid_argument("correlation_time: silent signal");
    }

    // linear (non-circular) autocorrelation via zero-padded FFT
    std::size_t padded = 1;
    while (padded < 2 * n) padded <<= 1;
    std::vector<cplx> buf(padded, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) buf[i] = cplx(signal.samples[i], 0.0);
    fft_inplace(buf, false);
    for (auto& b : buf) b = cplx(std::norm(b), 0.0);
    fft_inplace(buf, true);

    const double r0 = buf[0].real();
    // walk outward from zero lag until the normalized value drops below 1/2;
    // linear interpolation locates the crossing
    const std::size_t max_tau = n - 1;
    double half_width = -1.0;
    double prev = 1.0;
    for (std::size_t tau = 1; tau <= max_tau; ++tau) {
        const double r = buf[tau].real() / r0;
        if (r < 0.5) {
            const double frac = (prev - 0.5) / (prev - r);
            half_width = static_cast<double>(tau - 1) + frac;
            break;
        }
        prev = r;
    }
    if (half_width < 0.0) {
        throw std::invalid_argument("correlation_time: autocorrelation never decays below half");
    }
    return 2.0 * half_width;  // full width, symmetric around zero lag
}

}  // namespace fsgcc
