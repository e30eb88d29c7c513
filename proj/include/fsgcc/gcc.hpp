#pragma once

#include <optional>
#include <vector>

#include "fsgcc/dsp.hpp"

namespace fsgcc {

// Cross-correlation values indexed by lag, zero lag stored at index N/2.
struct GccVector {
    std::vector<double> values;  // length N, lag tau at index tau + N/2
    bool degenerate = false;     // set when both frames were all-zero

    int dft_length() const { return static_cast<int>(values.size()); }
    int lag_to_index(int tau) const { return tau + dft_length() / 2; }
    double at_lag(int tau) const { return values[static_cast<std::size_t>(lag_to_index(tau))]; }
};

// denominator guard for zero-magnitude bins
inline constexpr double kPhatEpsilon = 1e-12;

// Unit-modulus cross-power spectrum: X1[k] conj(X2[k]) / (|X1[k] X2[k]| + eps).
Spectrum phat_spectrum(const Spectrum& x1_spec, const Spectrum& x2_spec);

// Inverse DFT (1/N convention) of the PHAT spectrum, circularly shifted so
// zero lag sits at index N/2.
GccVector gcc_phat(const std::vector<double>& x1_frame, const std::vector<double>& x2_frame);
GccVector gcc_phat_from_spectra(const Spectrum& x1_spec, const Spectrum& x2_spec);

// Argmax over |tau| <= max_lag; ties break toward the smallest |tau|,
// negative lag first. Degenerate (all-zero) input yields nullopt.
std::optional<int> estimate_tdoa_gcc(const GccVector& gcc, int max_lag);

// Shared tie-break rule over a centered lag sequence of length n (zero lag at
// n/2); used by both full-band and band-averaged estimators.
std::optional<int> argmax_lag_centered(const std::vector<double>& values, int max_lag);

// Full width at half maximum of the normalized autocorrelation, in samples.
// Rejects silent signals and signals whose autocorrelation never decays
// below one half (e.g. pure DC).
double correlation_time(const SampleBuffer& signal);

}  // namespace fsgcc
