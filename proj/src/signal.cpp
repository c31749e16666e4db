#include "audexplain/signal.hpp"

#include "audexplain/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace audexplain {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Reflection padding index without edge duplication: ... x2 x1 | x0 x1 x2 ...
std::size_t reflect_index(std::ptrdiff_t j, std::size_t len) {
    if (len == 1) return 0;
    const std::ptrdiff_t period = 2 * static_cast<std::ptrdiff_t>(len) - 2;
    std::ptrdiff_t m = j % period;
    if (m < 0) m += period;
    if (m >= static_cast<std::ptrdiff_t>(len)) m = period - m;
    return static_cast<std::size_t>(m);
}

} // namespace

Fft::Fft(std::size_t n) : n_(n) {
    if (!is_power_of_two(n)) {
        throw Error(ErrorCode::invalid_argument, "FFT size must be a power of two");
    }
    bit_reverse_.resize(n);
    std::size_t log2n = 0;
    while ((std::size_t{1} << log2n) < n) ++log2n;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rev = 0;
        for (std::size_t b = 0; b < log2n; ++b) {
            if (i & (std::size_t{1} << b)) rev |= std::size_t{1} << (log2n - 1 - b);
        }
        bit_reverse_[i] = rev;
    }
    twiddles_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double angle = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
        twiddles_[k] = {std::cos(angle), std::sin(angle)};
    }
}

void Fft::transform(std::complex<double>* data, bool inverse) const {
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j = bit_reverse_[i];
        if (j > i) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n_ / len;
        for (std::size_t start = 0; start < n_; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                std::complex<double> w = twiddles_[k * stride];
                if (inverse) w = std::conj(w);
                const std::complex<double> even = data[start + k];
                const std::complex<double> odd = data[start + k + half] * w;
                data[start + k] = even + odd;
                data[start + k + half] = even - odd;
            }
        }
    }
}

void Fft::forward(std::complex<double>* data) const { transform(data, false); }

void Fft::inverse(std::complex<double>* data) const {
    transform(data, true);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) data[i] *= scale;
}

std::vector<double> hann_window_periodic(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n)));
    }
    return w;
}

double hz_to_mel_slaney(double hz) {
    constexpr double break_hz = 1000.0;
    constexpr double break_mel = 15.0;
    constexpr double linear_step = 200.0 / 3.0;
    const double log_step = std::log(6.4) / 27.0;
    if (hz < break_hz) return hz / linear_step;
    return break_mel + std::log(hz / break_hz) / log_step;
}

double mel_to_hz_slaney(double mel) {
    constexpr double break_hz = 1000.0;
    constexpr double break_mel = 15.0;
    constexpr double linear_step = 200.0 / 3.0;
    const double log_step = std::log(6.4) / 27.0;
    if (mel < break_mel) return mel * linear_step;
    return break_hz * std::exp((mel - break_mel) * log_step);
}

MelFilterbank build_mel_filterbank(std::size_t n_mels, std::size_t num_bins,
                                   int sample_rate, int n_fft) {
    const double nyquist = sample_rate / 2.0;
    const double mel_max = hz_to_mel_slaney(nyquist);

    std::vector<double> edges_hz(n_mels + 2);
    for (std::size_t i = 0; i < n_mels + 2; ++i) {
        edges_hz[i] = mel_to_hz_slaney(mel_max * static_cast<double>(i) /
                                       static_cast<double>(n_mels + 1));
    }

    const double bin_hz = static_cast<double>(sample_rate) / n_fft;
    MelFilterbank fb;
    fb.filters.resize(n_mels);
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double left = edges_hz[m];
        const double center = edges_hz[m + 1];
        const double right = edges_hz[m + 2];
        auto& filter = fb.filters[m];
        filter.center_hz = center;

        const double enorm = 2.0 / (right - left); // unit area per triangle
        std::vector<double> weights;
        std::size_t first = 0;
        bool started = false;
        for (std::size_t f = 0; f < num_bins; ++f) {
            const double freq = static_cast<double>(f) * bin_hz;
            if (freq > right) break;
            double v = 0.0;
            if (freq >= left && freq <= center && center > left) {
                v = (freq - left) / (center - left);
            } else if (freq > center && right > center) {
                v = (right - freq) / (right - center);
            }
            if (v > 0.0) {
                if (!started) {
                    first = f;
                    started = true;
                }
                weights.push_back(v * enorm);
            } else if (started) {
                weights.push_back(0.0);
            }
        }
        while (!weights.empty() && weights.back() == 0.0) weights.pop_back();
        filter.first_bin = first;
        filter.weights = std::move(weights);
    }
    return fb;
}

ComplexSpectrogram stft(const AudioBuffer& buffer, int n_fft, int hop_length) {
    if (buffer.empty()) {
        throw Error(ErrorCode::invalid_argument, "stft: buffer must have at least one sample");
    }
    if (n_fft <= 0 || hop_length <= 0 || hop_length > n_fft) {
        throw Error(ErrorCode::invalid_argument, "stft: need n_fft > 0 and 0 < hop <= n_fft");
    }

    const std::size_t len = buffer.size();
    const std::size_t nfft = static_cast<std::size_t>(n_fft);
    const std::size_t hop = static_cast<std::size_t>(hop_length);
    const std::size_t pad = nfft / 2;
    const std::size_t num_frames = len / hop + 1;
    const std::size_t num_bins = nfft / 2 + 1;

    std::vector<float> padded(len + 2 * pad);
    for (std::size_t i = 0; i < padded.size(); ++i) {
        padded[i] = buffer.samples[reflect_index(
            static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad), len)];
    }

    const std::vector<double> window = hann_window_periodic(nfft);
    const Fft plan(nfft);

    ComplexSpectrogram spec;
    spec.num_bins = num_bins;
    spec.num_frames = num_frames;
    spec.n_fft = n_fft;
    spec.hop_length = hop_length;
    spec.sample_rate = buffer.sample_rate;
    spec.bins.resize(num_bins * num_frames);

    std::vector<double> frame(nfft);
    std::vector<std::complex<double>> work(nfft);
    const auto& ops = kernels::active();
    for (std::size_t t = 0; t < num_frames; ++t) {
        ops.window_mul_f32_f64(padded.data() + t * hop, window.data(), frame.data(), nfft);
        for (std::size_t i = 0; i < nfft; ++i) work[i] = {frame[i], 0.0};
        plan.forward(work.data());
        std::copy(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(num_bins),
                  spec.bins.begin() + static_cast<std::ptrdiff_t>(t * num_bins));
    }
    return spec;
}

AudioBuffer istft(const ComplexSpectrogram& spec, std::size_t length) {
    const std::size_t nfft = static_cast<std::size_t>(spec.n_fft);
    const std::size_t hop = static_cast<std::size_t>(spec.hop_length);
    if (nfft == 0 || hop == 0 || spec.num_bins != nfft / 2 + 1 ||
        spec.bins.size() != spec.num_bins * spec.num_frames || spec.num_frames == 0) {
        throw Error(ErrorCode::dimension_mismatch, "istft: inconsistent spectrogram dimensions");
    }

    const std::size_t pad = nfft / 2;
    const std::size_t total = (spec.num_frames - 1) * hop + nfft;
    std::vector<double> acc(total, 0.0);
    std::vector<double> window_sq_sum(total, 0.0);

    const std::vector<double> window = hann_window_periodic(nfft);
    const Fft plan(nfft);

    std::vector<std::complex<double>> work(nfft);
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
        const std::complex<double>* frame_bins = spec.bins.data() + t * spec.num_bins;
        for (std::size_t f = 0; f < spec.num_bins; ++f) work[f] = frame_bins[f];
        for (std::size_t f = spec.num_bins; f < nfft; ++f) {
            work[f] = std::conj(frame_bins[nfft - f]);
        }
        plan.inverse(work.data());
        double* out = acc.data() + t * hop;
        double* wss = window_sq_sum.data() + t * hop;
        for (std::size_t i = 0; i < nfft; ++i) {
            out[i] += work[i].real() * window[i];
            wss[i] += window[i] * window[i];
        }
    }

    for (std::size_t i = 0; i < total; ++i) {
        acc[i] = window_sq_sum[i] > 1e-11 ? acc[i] / window_sq_sum[i] : 0.0;
    }

    const std::size_t natural = (spec.num_frames - 1) * hop;
    const std::size_t want = length == 0 ? natural : length;

    AudioBuffer out;
    out.sample_rate = spec.sample_rate;
    out.samples.assign(want, 0.0f);
    for (std::size_t i = 0; i < want && pad + i < total; ++i) {
        out.samples[i] = static_cast<float>(acc[pad + i]);
    }
    return out;
}

MelSpectrogram mel_spectrogram(const AudioBuffer& buffer, std::size_t n_mels,
                               int n_fft, int hop_length) {
    if (buffer.size() < static_cast<std::size_t>(n_fft)) {
        throw Error(ErrorCode::invalid_argument, "mel_spectrogram: buffer shorter than n_fft");
    }
    const ComplexSpectrogram spec = stft(buffer, n_fft, hop_length);
    const MelFilterbank fb =
        build_mel_filterbank(n_mels, spec.num_bins, buffer.sample_rate, n_fft);

    MelSpectrogram mel;
    mel.n_mels = n_mels;
    mel.num_frames = spec.num_frames;
    mel.sample_rate = buffer.sample_rate;
    mel.values.resize(n_mels * spec.num_frames);

    const auto& ops = kernels::active();
    std::vector<double> mag(spec.num_bins);
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
        ops.complex_mag_f64(spec.bins.data() + t * spec.num_bins, mag.data(), spec.num_bins);
        for (std::size_t m = 0; m < n_mels; ++m) {
            const auto& filter = fb.filters[m];
            const double mel_mag =
                filter.weights.empty()
                    ? 0.0
                    : ops.dot_f64(filter.weights.data(), mag.data() + filter.first_bin,
                                  filter.weights.size());
            mel.values[t * n_mels + m] = std::log(mel_mag + kLogFloor);
        }
    }
    return mel;
}

AudioBuffer trim_silence(const AudioBuffer& buffer, double threshold_db,
                         std::size_t frame_length) {
    if (threshold_db <= 0.0) {
        throw Error(ErrorCode::invalid_argument, "trim_silence: threshold_db must be > 0");
    }
    if (frame_length == 0) {
        throw Error(ErrorCode::invalid_argument, "trim_silence: frame_length must be > 0");
    }
    const std::size_t len = buffer.size();
    const std::size_t num_frames = (len + frame_length - 1) / frame_length;
    if (num_frames == 0) {
        throw Error(ErrorCode::empty_after_trim, "trim_silence: empty input");
    }

    std::vector<double> frame_rms(num_frames);
    double max_rms = 0.0;
    for (std::size_t f = 0; f < num_frames; ++f) {
        const std::size_t start = f * frame_length;
        const std::size_t n = std::min(frame_length, len - start);
        frame_rms[f] = rms(buffer.samples.data() + start, n);
        max_rms = std::max(max_rms, frame_rms[f]);
    }
    if (max_rms <= 0.0) {
        throw Error(ErrorCode::empty_after_trim, "trim_silence: all frames silent");
    }

    const double cutoff = max_rms * std::pow(10.0, -threshold_db / 20.0);
    AudioBuffer out;
    out.sample_rate = buffer.sample_rate;
    out.samples.reserve(len);
    for (std::size_t f = 0; f < num_frames; ++f) {
        if (frame_rms[f] < cutoff) continue;
        const std::size_t start = f * frame_length;
        const std::size_t n = std::min(frame_length, len - start);
        out.samples.insert(out.samples.end(), buffer.samples.begin() + start,
                           buffer.samples.begin() + start + n);
    }
    if (out.samples.empty()) {
        throw Error(ErrorCode::empty_after_trim, "trim_silence: nothing above threshold");
    }
    return out;
}

AudioBuffer resample(const AudioBuffer& buffer, int target_rate) {
    if (target_rate <= 0) {
        throw Error(ErrorCode::invalid_argument, "resample: target_rate must be > 0");
    }
    if (target_rate == buffer.sample_rate) return buffer;

    const double ratio = static_cast<double>(target_rate) / buffer.sample_rate;
    const std::size_t out_len =
        static_cast<std::size_t>(std::llround(static_cast<double>(buffer.size()) * ratio));

    AudioBuffer out;
    out.sample_rate = target_rate;
    out.samples.resize(out_len);
    if (buffer.empty() || out_len == 0) {
        out.samples.clear();
        return out;
    }

    // Cutoff relative to the input Nyquist; the kernel widens by 1/cutoff
    // when downsampling so it stays band-limited.
    const double cutoff = std::min(1.0, ratio);
    constexpr double base_half_width = 32.0;
    const double half_width = base_half_width / cutoff;
    const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(buffer.size());

    for (std::size_t j = 0; j < out_len; ++j) {
        const double center = static_cast<double>(j) / ratio;
        const std::ptrdiff_t k_lo =
            std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(center - half_width)));
        const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(
            len - 1, static_cast<std::ptrdiff_t>(std::floor(center + half_width)));
        double acc = 0.0;
        for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) {
            const double t = static_cast<double>(k) - center;
            const double x = cutoff * t;
            const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
            const double u = t / half_width;
            const double taper = 0.5 * (1.0 + std::cos(kPi * u)); // Hann taper
            acc += static_cast<double>(buffer.samples[static_cast<std::size_t>(k)]) *
                   cutoff * sinc * taper;
        }
        out.samples[j] = static_cast<float>(acc);
    }
    return out;
}

} // namespace audexplain
