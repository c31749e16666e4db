#pragma once

#include "audexplain/audio.hpp"

#include <string>

namespace audexplain {

/// Reads a RIFF/WAVE file (PCM 16-bit or IEEE float 32-bit, 1-2 channels).
/// Multichannel input is averaged to mono; integer samples scale to [-1, 1).
/// Errors: unreadable_file, malformed_wav, unsupported_encoding,
/// zero_length_audio.
AudioBuffer load_wav(const std::string& path);

/// Writes a 32-bit float mono WAV, little-endian. Samples are written
/// verbatim (no clipping) so load_wav(save_wav(b)) is bit-exact.
/// Errors: invalid_argument (empty), non_finite_sample, unwritable_path.
void save_wav(const AudioBuffer& buffer, const std::string& path);

} // namespace audexplain
