#include "fsgcc/room.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsgcc/prng.hpp"

namespace fsgcc {

double distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

bool strictly_inside(const Vec3& p, const Vec3& dims) {
    return p.x > 0.0 && p.x < dims.x && p.y > 0.0 && p.y < dims.y && p.z > 0.0 && p.z < dims.z;
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    return std::sin(M_PI * x) / (M_PI * x);
}

}  // namespace

void RoomSetup::validate() const {
    if (room_dims.x <= 0.0 || room_dims.y <= 0.0 || room_dims.z <= 0.0) {
        throw std::invalid_argument("RoomSetup: room dimensions must be positive");
    }
    if (!strictly_inside(mic_1, room_dims) || !strictly_inside(mic_2, room_dims) ||
        !strictly_inside(source, room_dims)) {
        throw std::invalid_argument("RoomSetup: positions must be strictly inside the room");
    }
    if (distance(mic_1, mic_2) == 0.0) {
        throw std::invalid_argument("RoomSetup: microphones must not coincide");
    }
    if (t60_s < 0.0) {
        throw std::invalid_argument("RoomSetup: t60 must be non-negative");
    }
    if (speed_of_sound <= 0.0 || sample_rate_hz <= 0.0) {
        throw std::invalid_argument("RoomSetup: c and fs must be positive");
    }
}

int true_tdoa(const RoomSetup& setup) {
    setup.validate();
    const double d1 = distance(setup.source, setup.mic_1);
    const double d2 = distance(setup.source, setup.mic_2);
    const double delay = (d1 - d2) / setup.speed_of_sound * setup.sample_rate_hz;
    return static_cast<int>(std::llround(delay));  // half away from zero
}

int admissible_max_lag(const RoomSetup& setup) {
    const double spacing = distance(setup.mic_1, setup.mic_2);
    return static_cast<int>(
               std::ceil(spacing * setup.sample_rate_hz / setup.speed_of_sound)) +
           2;
}

double eyring_reflection_coefficient(const Vec3& room_dims, double t60_s) {
    if (t60_s <= 0.0) return 0.0;
    const double volume = room_dims.x * room_dims.y * room_dims.z;
    const double surface = 2.0 * (room_dims.x * room_dims.y + room_dims.x * room_dims.z +
                                  room_dims.y * room_dims.z);
    const double absorption = 1.0 - std::exp(-0.161 * volume / (surface * t60_s));
    return std::sqrt(std::max(0.0, 1.0 - absorption));
}

Rir image_source_rir(const RoomSetup& setup, int mic_index, int max_order, double duration_s) {
    setup.validate();
    if (mic_index != 1 && mic_index != 2) {
        throw std::invalid_argument("image_source_rir: mic_index must be 1 or 2");
    }
    const Vec3 mic = (mic_index == 1) ? setup.mic_1 : setup.mic_2;
    const double direct_m = distance(setup.source, mic);
    if (direct_m == 0.0) {
        throw std::invalid_argument("image_source_rir: source coincides with microphone");
    }

    const double fs = setup.sample_rate_hz;
    const double meters_per_sample = setup.speed_of_sound / fs;
    const double direct_samples = direct_m / meters_per_sample;

    constexpr int kSincTaps = 81;
    constexpr int kSincHalf = kSincTaps / 2;

    if (duration_s <= 0.0) {
        duration_s = (direct_samples + kSincHalf + 2) / fs + 1.3 * setup.t60_s;
    }
    const int n_samples = std::max(kSincTaps, static_cast<int>(std::ceil(duration_s * fs)));

    const double beta = eyring_reflection_coefficient(setup.room_dims, setup.t60_s);

    Rir rir;
    rir.sample_rate_hz = fs;
    rir.taps.assign(static_cast<std::size_t>(n_samples), 0.0);

    // positions in sample units
    const double sx = setup.source.x / meters_per_sample;
    const double sy = setup.source.y / meters_per_sample;
    const double sz = setup.source.z / meters_per_sample;
    const double rx = mic.x / meters_per_sample;
    const double ry = mic.y / meters_per_sample;
    const double rz = mic.z / meters_per_sample;
    const double lx = setup.room_dims.x / meters_per_sample;
    const double ly = setup.room_dims.y / meters_per_sample;
    const double lz = setup.room_dims.z / meters_per_sample;

    const double reach = static_cast<double>(n_samples) + kSincHalf;
    const int n1 = (setup.t60_s > 0.0 || max_order != 0)
                       ? static_cast<int>(std::ceil(reach / (2.0 * lx)))
                       : 0;
    const int n2 = (setup.t60_s > 0.0 || max_order != 0)
                       ? static_cast<int>(std::ceil(reach / (2.0 * ly)))
                       : 0;
    const int n3 = (setup.t60_s > 0.0 || max_order != 0)
                       ? static_cast<int>(std::ceil(reach / (2.0 * lz)))
                       : 0;

    const double gain_scale = 1.0 / (4.0 * M_PI * meters_per_sample);

    for (int mx = -n1; mx <= n1; ++mx) {
        const double rmx = 2.0 * mx * lx;
        for (int my = -n2; my <= n2; ++my) {
            const double rmy = 2.0 * my * ly;
            for (int mz = -n3; mz <= n3; ++mz) {
                const double rmz = 2.0 * mz * lz;
                for (int q = 0; q <= 1; ++q) {
                    const double px = (1 - 2 * q) * sx - rx + rmx;
                    const int ox = std::abs(mx - q) + std::abs(mx);
                    for (int j = 0; j <= 1; ++j) {
                        const double py = (1 - 2 * j) * sy - ry + rmy;
                        const int oy = std::abs(my - j) + std::abs(my);
                        for (int k = 0; k <= 1; ++k) {
                            const double pz = (1 - 2 * k) * sz - rz + rmz;
                            const int oz = std::abs(mz - k) + std::abs(mz);

                            const int order = ox + oy + oz;
                            if (max_order >= 0 && order > max_order) continue;
                            if (beta == 0.0 && order > 0) continue;

                            const double dist = std::sqrt(px * px + py * py + pz * pz);
                            if (dist - kSincHalf >= n_samples) continue;

                            const double gain =
                                std::pow(beta, static_cast<double>(order)) / dist * gain_scale;

                            const int base = static_cast<int>(std::floor(dist));
                            const double frac = dist - base;
                            for (int n = 0; n < kSincTaps; ++n) {
                                const int idx = base + n - kSincHalf;
                                if (idx < 0 || idx >= n_samples) continue;
                                const double t = (n - kSincHalf) - frac;
                                const double w =
                                    0.5 * (1.0 + std::cos(2.0 * M_PI * t / kSincTaps));
                                rir.taps[static_cast<std::size_t>(idx)] += gain * w * sinc(t);
                            }
                        }
                    }
                }
            }
        }
    }

    // nothing arrives before the direct path
    const int first = static_cast<int>(std::floor(direct_samples));
    for (int i = 0; i < std::min(first, n_samples); ++i) rir.taps[static_cast<std::size_t>(i)] = 0.0;

    return rir;
}

std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t out_len = a.size() + b.size() - 1;
    std::size_t padded = 1;
    while (padded < out_len) padded <<= 1;

    std::vector<cplx> fa(padded, cplx(0.0, 0.0));
    std::vector<cplx> fb(padded, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) fa[i] = cplx(a[i], 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) fb[i] = cplx(b[i], 0.0);
    fft_inplace(fa, false);
    fft_inplace(fb, false);
    for (std::size_t i = 0; i < padded; ++i) fa[i] *= fb[i];
    fft_inplace(fa, true);

    std::vector<double> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
    return out;
}

namespace {

double mean_square(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

}  // namespace

std::pair<SampleBuffer, SampleBuffer> render_mic_signals(const RoomSetup& setup,
                                                         const SampleBuffer& source_signal,
                                                         uint64_t noise_seed,
                                                         const RenderOptions& options) {
    setup.validate();
    source_signal.validate();
    if (mean_square(source_signal.samples) == 0.0) {
        throw std::invalid_argument("render_mic_signals: silent source, SNR undefined");
    }

    const std::size_t out_len = source_signal.size() + static_cast<std::size_t>(options.tail_samples);
    std::pair<SampleBuffer, SampleBuffer> out;

    for (int mic = 1; mic <= 2; ++mic) {
        const Vec3& mic_pos = (mic == 1) ? setup.mic_1 : setup.mic_2;
        const double direct_s =
            distance(setup.source, mic_pos) / setup.speed_of_sound + 83.0 / setup.sample_rate_hz;
        double duration_s = direct_s + 1.3 * setup.t60_s;
        if (options.rir_max_duration_s > 0.0) {
            duration_s = std::min(duration_s, std::max(options.rir_max_duration_s, direct_s));
        }
        const Rir rir = image_source_rir(setup, mic, -1, duration_s);
        std::vector<double> wet = fft_convolve(source_signal.samples, rir.taps);
        wet.resize(out_len, 0.0);

        if (std::isfinite(setup.snr_db)) {
            const double sig_power = mean_square(wet);
            Prng prng(mix_seed(noise_seed, static_cast<uint64_t>(mic)));
            std::vector<double> noise(out_len);
            for (auto& v : noise) v = prng.gaussian();
            const double noise_power = mean_square(noise);
            const double target_power = sig_power / std::pow(10.0, setup.snr_db / 10.0);
            const double scale = noise_power > 0.0 ? std::sqrt(target_power / noise_power) : 0.0;
            for (std::size_t i = 0; i < out_len; ++i) wet[i] += scale * noise[i];
        }

        SampleBuffer buf(std::move(wet), setup.sample_rate_hz);
        if (mic == 1) {
            out.first = std::move(buf);
        } else {
            out.second = std::move(buf);
        }
    }
    return out;
}

}  // namespace fsgcc
