#pragma once

#include <optional>
#include <vector>

#include "fsgcc/dsp.hpp"
#include "fsgcc/gcc.hpp"

namespace fsgcc {

enum class SpectralWindowShape { Rectangular, Hann };

// Sub-band analysis configuration: a spectral window with B nonzero bins is
// swept across the PHAT spectrum in hops of M bins, producing L bands.
struct FsGccConfig {
    int dft_length = 2048;     // N
    int window_support = 128;  // B, count of nonzero window bins
    int hop_bins = 29;         // M
    int band_count = 32;       // L
    SpectralWindowShape window_shape = SpectralWindowShape::Hann;

    void validate() const;
};

// L x N complex matrix of stacked sub-band cross-correlations. Rows are
// bands, columns are lags with zero lag centered at column N/2.
struct FsGccMatrix {
    std::vector<cplx> entries;  // row-major, L rows of N columns
    FsGccConfig config;

    int rows() const { return config.band_count; }
    int cols() const { return config.dft_length; }
    cplx& at(int l, int n) { return entries[static_cast<std::size_t>(l) * cols() + n]; }
    const cplx& at(int l, int n) const {
        return entries[static_cast<std::size_t>(l) * cols() + n];
    }
};

// Real L x N matrix of magnitudes (same lag-centered column convention).
struct MagnitudeMatrix {
    std::vector<double> entries;
    int band_count = 0;
    int width = 0;

    double& at(int l, int n) { return entries[static_cast<std::size_t>(l) * width + n]; }
    double at(int l, int n) const { return entries[static_cast<std::size_t>(l) * width + n]; }
};

MagnitudeMatrix magnitude(const FsGccMatrix& fs);

// Zero-centered spectral window of length N with exactly B nonzero bins.
// Odd B yields exact mirror symmetry Phi[k] == Phi[N-k]; even B is symmetric
// about the half-bin boundary (Phi[k] == Phi[N-1-k]). Unit peak.
std::vector<double> spectral_window(const FsGccConfig& config);

// Builds the sub-band GCC matrix: row l is the inverse DFT (1/N) of the PHAT
// spectrum shifted by l*hop_bins and weighted by the spectral window. Window
// taps that would fall beyond the Nyquist bin contribute zero. Rows are
// circularly shifted so zero lag is centered.
FsGccMatrix fs_gcc(const Spectrum& x1_spec, const Spectrum& x2_spec, const FsGccConfig& config);

// Argmax over |tau| <= max_lag of the band-wise average, same tie-break as
// estimate_tdoa_gcc. All-zero matrices yield nullopt.
std::optional<int> band_average_tdoa(const MagnitudeMatrix& mag, int max_lag);

// Band-wise average as a centered lag sequence (used for peak-SNR measures).
std::vector<double> band_average(const MagnitudeMatrix& mag);

// Columns [center - width/2, center + width/2) around zero lag.
MagnitudeMatrix crop_lags(const MagnitudeMatrix& mag, int width);

}  // namespace fsgcc
