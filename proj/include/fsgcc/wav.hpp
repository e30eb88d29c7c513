#pragma once

#include <string>

#include "fsgcc/dsp.hpp"

namespace fsgcc {

// Reads a RIFF WAV (16-bit PCM or 32-bit IEEE float), takes the first
// channel, normalizes to peak <= 1 and resamples to target_rate_hz with a
// windowed sinc when rates differ. Malformed headers raise a parse error
// carrying the byte offset.
SampleBuffer load_wav(const std::string& path, double target_rate_hz);

// 16-bit PCM writer.
void save_wav(const std::string& path, const SampleBuffer& buffer);

// Windowed-sinc rate conversion (Hann window, 32 taps per side).
SampleBuffer resample(const SampleBuffer& input, double target_rate_hz);

}  // namespace fsgcc
