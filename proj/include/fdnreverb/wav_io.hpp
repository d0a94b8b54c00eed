// Mono WAV reading (16-bit PCM and 32-bit float, plain or extensible
// format) and 32-bit float writing.
#pragma once

#include <string>

#include "fdnreverb/types.hpp"

namespace fdnreverb {

/// Reads a mono WAV file. Multi-channel files are rejected with guidance
/// to pre-mix; non-finite samples are rejected. With require_nonzero set
/// (the RIR loading path), an all-zero signal is rejected as degenerate.
SampledRir read_wav_mono(const std::string& path, bool require_nonzero = false);

/// Writes a mono 32-bit IEEE float WAV file.
void write_wav_float32(const std::string& path, const SampledRir& rir);

}  // namespace fdnreverb
