#pragma once

#include "audexplain/error.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace audexplain {

/// Mono sample sequence at a fixed rate. Samples are nominally in [-1, 1]
/// but are not clipped in memory; clipping happens only when rendering to
/// a sound file for listening.
struct AudioBuffer {
    std::vector<float> samples;
    int sample_rate = 16000;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration_seconds() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

bool all_finite(const AudioBuffer& buffer);

/// Throws Error(non_finite_sample) naming `context` if any sample is NaN/Inf.
void require_finite(const AudioBuffer& buffer, const std::string& context);

float peak_abs(const AudioBuffer& buffer);
double rms(const float* samples, std::size_t n);

/// Sum of buffers accumulated in double, truncated/padded behaviour is not
/// provided here: lengths must match exactly.
void accumulate(std::vector<double>& acc, const AudioBuffer& buffer);

/// Round a double accumulator back to a float buffer.
AudioBuffer to_buffer(const std::vector<double>& acc, int sample_rate);

} // namespace audexplain
