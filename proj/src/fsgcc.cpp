#include "fsgcc/fsgcc.hpp"

#include <cmath>
#include <stdexcept>

namespace fsgcc {

void FsGccConfig::validate() const {
    if (!is_power_of_two(static_cast<std::size_t>(dft_length))) {
        throw std::invalid_argument("FsGccConfig: dft_length must be a power of two");
    }
    if (window_support < 1 || window_support > dft_length) {
        throw std::invalid_argument("FsGccConfig: window_support must be in [1, N]");
    }
    if (hop_bins < 1) {
        throw std::invalid_argument("FsGccConfig: hop_bins must be >= 1");
    }
    if (band_count < 1) {
        throw std::invalid_argument("FsGccConfig: band_count must be >= 1");
    }
    // band centers may approach Nyquist; window tails crossing it are
    // truncated, so only the center itself must stay below the limit
    if ((band_count - 1) * hop_bins > dft_length / 2) {
        throw std::invalid_argument("FsGccConfig: last band center exceeds the Nyquist bin");
    }
}

MagnitudeMatrix magnitude(const FsGccMatrix& fs) {
    MagnitudeMatrix out;
    out.band_count = fs.rows();
    out.width = fs.cols();
    out.entries.resize(fs.entries.size());
    for (std::size_t i = 0; i < fs.entries.size(); ++i) {
        out.entries[i] = std::abs(fs.entries[i]);
    }
    return out;
}

std::vector<double> spectral_window(const FsGccConfig& config) {
    const int n = config.dft_length;
    const int b = config.window_support;
    if (b > n) {
        throw std::invalid_argument("spectral_window: window_support exceeds dft_length");
    }
    std::vector<double> phi(static_cast<std::size_t>(n), 0.0);

    // nonzero support is the B consecutive offsets centered on bin 0
    // (odd B) or on the half-bin boundary below it (even B)
    const int lo = -(b / 2);
    const int hi = lo + b - 1;
    double peak = 0.0;
    for (int d = lo; d <= hi; ++d) {
        double v = 1.0;
        if (config.window_shape == SpectralWindowShape::Hann) {
            // raised cosine over the support, strictly positive at the edges
            const double x = (b % 2 == 1) ? static_cast<double>(d) / b
                                          : (2.0 * d + 1.0) / (2.0 * b);
            v = 0.5 * (1.0 + std::cos(2.0 * M_PI * x));
        }
        const int k = ((d % n) + n) % n;
        phi[static_cast<std::size_t>(k)] = v;
        peak = std::max(peak, v);
    }
    if (peak > 0.0) {
        for (auto& v : phi) v /= peak;
    }
    return phi;
}

FsGccMatrix fs_gcc(const Spectrum& x1_spec, const Spectrum& x2_spec, const FsGccConfig& config) {
    config.validate();
    const int n = config.dft_length;
    if (static_cast<int>(x1_spec.dft_length()) != n ||
        static_cast<int>(x2_spec.dft_length()) != n) {
        throw std::invalid_argument("fs_gcc: spectra length must equal config.dft_length");
    }

    const Spectrum psi = phat_spectrum(x1_spec, x2_spec);
    const std::vector<double> phi = spectral_window(config);

    FsGccMatrix out;
    out.config = config;
    out.entries.assign(static_cast<std::size_t>(config.band_count) * n, cplx(0.0, 0.0));

    const int half = n / 2;
    std::vector<cplx> band(static_cast<std::size_t>(n));
    for (int l = 0; l < config.band_count; ++l) {
        const int shift = l * config.hop_bins;
        for (int k = 0; k < n; ++k) {
            const double w = phi[static_cast<std::size_t>(k)];
            if (w == 0.0) {
                band[static_cast<std::size_t>(k)] = cplx(0.0, 0.0);
                continue;
            }
            // signed window offset; the band draws the PHAT bin shift+d
            const int d = (k <= half) ? k : k - n;
            const int pos = shift + d;
            if (pos > half) {  // tail beyond Nyquist: truncated
                band[static_cast<std::size_t>(k)] = cplx(0.0, 0.0);
                continue;
            }
            const int src = ((pos % n) + n) % n;
            band[static_cast<std::size_t>(k)] = psi.bins[static_cast<std::size_t>(src)] * w;
        }
        fft_inplace(band, true);
        for (int i = 0; i < n; ++i) {
            out.at(l, (i + half) % n) = band[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

std::vector<double> band_average(const MagnitudeMatrix& mag) {
    std::vector<double> avg(static_cast<std::size_t>(mag.width), 0.0);
    for (int l = 0; l < mag.band_count; ++l) {
        for (int n = 0; n < mag.width; ++n) {
            avg[static_cast<std::size_t>(n)] += mag.at(l, n);
        }
    }
    const double inv = 1.0 / static_cast<double>(mag.band_count);
    for (auto& v : avg) v *= inv;
    return avg;
}

std::optional<int> band_average_tdoa(const MagnitudeMatrix& mag, int max_lag) {
    return argmax_lag_centered(band_average(mag), max_lag);
}

MagnitudeMatrix crop_lags(const MagnitudeMatrix& mag, int width) {
    if (width > mag.width) {
        throw std::invalid_argument("crop_lags: requested width exceeds matrix width");
    }
    const int start = mag.width / 2 - width / 2;
    MagnitudeMatrix out;
    out.band_count = mag.band_count;
    out.width = width;
    out.entries.resize(static_cast<std::size_t>(mag.band_count) * width);
    for (int l = 0; l < mag.band_count; ++l) {
        for (int n = 0; n < width; ++n) {
            out.at(l, n) = mag.at(l, start + n);
        }
    }
    return out;
}

}  // namespace fsgcc
