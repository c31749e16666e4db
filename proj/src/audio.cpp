#include "audexplain/audio.hpp"

#include "audexplain/kernels.hpp"

#include <cmath>

namespace audexplain {

bool all_finite(const AudioBuffer& buffer) {
    for (float v : buffer.samples) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void require_finite(const AudioBuffer& buffer, const std::string& context) {
    if (!all_finite(buffer)) {
        throw Error(ErrorCode::non_finite_sample, context + ": buffer contains NaN or Inf");
    }
}

float peak_abs(const AudioBuffer& buffer) {
    return kernels::active().max_abs_f32(buffer.samples.data(), buffer.samples.size());
}

double rms(const float* samples, std::size_t n) {
    if (n == 0) return 0.0;
    return std::sqrt(kernels::active().sum_squares_f32(samples, n) / static_cast<double>(n));
}

void accumulate(std::vector<double>& acc, const AudioBuffer& buffer) {
    if (acc.size() != buffer.samples.size()) {
        throw Error(ErrorCode::dimension_mismatch, "accumulate: length mismatch");
    }
    kernels::active().accumulate_f32_f64(buffer.samples.data(), acc.data(), acc.size());
}

AudioBuffer to_buffer(const std::vector<double>& acc, int sample_rate) {
    AudioBuffer out;
    out.sample_rate = sample_rate;
    out.samples.resize(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        out.samples[i] = static_cast<float>(acc[i]);
    }
    return out;
}

} // namespace audexplain
