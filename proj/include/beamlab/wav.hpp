#pragma once

#include <string>

#include "beamlab/stft.hpp"

namespace beamlab {

// RIFF PCM reader, int16 or float32. Channel order for scene files is
// [front-left, rear-left, front-right, rear-right].
// Rejects sample rates other than `expected_rate` unless allow_resample is
// set, in which case a polyphase windowed-sinc resampler is applied.
TimeTrackSet read_wav(const std::string& path, double expected_rate = 24000.0,
                      bool allow_resample = false);

void write_wav(const std::string& path, const TimeTrackSet& tracks,
               bool as_float = true);

std::vector<float> resample(const std::vector<float>& in, double from_rate,
                            double to_rate);

}  // namespace beamlab
