#include "fsgcc/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace fsgcc {

namespace {

[[noreturn]] void parse_error(const std::string& path, std::streamoff offset,
                              const std::string& what) {
    throw std::runtime_error("WAV parse error in " + path + " at byte " +
                             std::to_string(static_cast<long long>(offset)) + ": " + what);
}

uint32_t read_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

SampleBuffer load_wav(const std::string& path, double target_rate_hz) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_wav: cannot open " + path);
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12) parse_error(path, 0, "file shorter than RIFF header");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0) parse_error(path, 0, "missing RIFF tag");
    if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) parse_error(path, 8, "missing WAVE tag");

    uint16_t audio_format = 0, num_channels = 0, bits = 0;
    uint32_t sample_rate = 0;
    bool have_fmt = false;
    std::vector<double> mono;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const uint32_t chunk_size = read_u32(chunk + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_size > bytes.size()) {
            parse_error(path, static_cast<std::streamoff>(pos), "chunk overruns file");
        }
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (chunk_size < 16) {
                parse_error(path, static_cast<std::streamoff>(pos), "fmt chunk too short");
            }
            audio_format = read_u16(bytes.data() + body);
            num_channels = read_u16(bytes.data() + body + 2);
            sample_rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            if (num_channels == 0) {
                parse_error(path, static_cast<std::streamoff>(body + 2), "zero channels");
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) {
                parse_error(path, static_cast<std::streamoff>(pos), "data chunk before fmt");
            }
            if (audio_format == 1 && bits == 16) {
                const std::size_t total = chunk_size / 2;
                const std::size_t frames = total / num_channels;
                mono.resize(frames);
                for (std::size_t f = 0; f < frames; ++f) {
                    const std::size_t o = body + 2 * f * num_channels;
                    const int16_t raw = static_cast<int16_t>(
                        static_cast<uint16_t>(bytes[o] | (bytes[o + 1] << 8)));
                    mono[f] = static_cast<double>(raw) / 32768.0;  // first channel
                }
            } else if (audio_format == 3 && bits == 32) {
                const std::size_t total = chunk_size / 4;
                const std::size_t frames = total / num_channels;
                mono.resize(frames);
                for (std::size_t f = 0; f < frames; ++f) {
                    const std::size_t o = body + 4 * f * num_channels;
                    float v;
                    std::memcpy(&v, bytes.data() + o, 4);
                    mono[f] = static_cast<double>(v);
                }
            } else {
                parse_error(path, static_cast<std::streamoff>(pos),
                            "unsupported format (want 16-bit PCM or 32-bit float), format=" +
                                std::to_string(audio_format) + " bits=" + std::to_string(bits));
            }
        }
        pos = body + chunk_size + (chunk_size & 1);  // chunks are word aligned
    }

    if (!have_fmt || mono.empty()) {
        parse_error(path, static_cast<std::streamoff>(bytes.size()), "missing fmt or data chunk");
    }

    double peak = 0.0;
    for (double v : mono) peak = std::max(peak, std::abs(v));
    if (peak > 1.0) {
        for (auto& v : mono) v /= peak;
    }

    SampleBuffer buf(std::move(mono), static_cast<double>(sample_rate));
    if (target_rate_hz > 0.0 && std::abs(target_rate_hz - buf.sample_rate_hz) > 1e-9) {
        buf = resample(buf, target_rate_hz);
    }
    return buf;
}

void save_wav(const std::string& path, const SampleBuffer& buffer) {
    buffer.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("save_wav: cannot open " + path);
    }
    const uint32_t n = static_cast<uint32_t>(buffer.size());
    const uint32_t rate = static_cast<uint32_t>(std::lround(buffer.sample_rate_hz));
    const uint32_t data_bytes = n * 2;
    const uint32_t riff_size = 36 + data_bytes;

    auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };

    out.write("RIFF", 4);
    put_u32(riff_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(rate);
    put_u32(rate * 2);
    put_u16(2);
    put_u16(16);
    out.write("data", 4);
    put_u32(data_bytes);
    for (double v : buffer.samples) {
        const double clamped = std::clamp(v, -1.0, 1.0);
        const int16_t q = static_cast<int16_t>(std::lround(clamped * 32767.0));
        out.write(reinterpret_cast<const char*>(&q), 2);
    }
}

SampleBuffer resample(const SampleBuffer& input, double target_rate_hz) {
    input.validate();
    if (target_rate_hz <= 0.0) {
        throw std::invalid_argument("resample: target rate must be positive");
    }
    const double ratio = target_rate_hz / input.sample_rate_hz;
    const std::size_t out_len =
        static_cast<std::size_t>(std::floor(static_cast<double>(input.size()) * ratio));
    std::vector<double> out(out_len, 0.0);

    constexpr int kHalfTaps = 32;
    // anti-aliasing cutoff at the lower of the two Nyquist limits
    const double cutoff = std::min(1.0, ratio);

    for (std::size_t i = 0; i < out_len; ++i) {
        const double center = static_cast<double>(i) / ratio;
        const int lo = static_cast<int>(std::floor(center)) - kHalfTaps + 1;
        const int hi = static_cast<int>(std::floor(center)) + kHalfTaps;
        double acc = 0.0;
        for (int k = lo; k <= hi; ++k) {
            if (k < 0 || k >= static_cast<int>(input.size())) continue;
            const double t = (static_cast<double>(k) - center) * cutoff;
            double sinc_v = 1.0;
            if (t != 0.0) sinc_v = std::sin(M_PI * t) / (M_PI * t);
            const double x = (static_cast<double>(k) - center) / kHalfTaps;
            if (std::abs(x) >= 1.0) continue;
            const double w = 0.5 * (1.0 + std::cos(M_PI * x));
            acc += input.samples[static_cast<std::size_t>(k)] * sinc_v * w * cutoff;
        }
        out[i] = acc;
    }
    return SampleBuffer(std::move(out), target_rate_hz);
}

}  // namespace fsgcc
