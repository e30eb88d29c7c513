#pragma once

#include <cstdint>

#include "fsgcc/dsp.hpp"

namespace fsgcc {

// Speech-like test source: formant-filtered noise with a 4-8 Hz syllabic
// amplitude envelope. The spectral shape is calibrated so the correlation
// time lands in the 12-30 sample range at 44.1 kHz; the envelope floor keeps
// every 100 ms window non-silent.
SampleBuffer synth_speech_like(double duration_s, uint64_t seed,
                               double sample_rate_hz = 44100.0);

}  // namespace fsgcc
