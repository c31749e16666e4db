#pragma once

#include "audexplain/audio.hpp"

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace audexplain {

/// Complex STFT matrix, frame-major: bin f of frame t sits at
/// `bins[t * num_bins + f]`. num_bins = n_fft/2 + 1.
struct ComplexSpectrogram {
    std::vector<std::complex<double>> bins;
    std::size_t num_bins = 0;
    std::size_t num_frames = 0;
    int n_fft = 0;
    int hop_length = 0;
    int sample_rate = 0;
    std::string window = "hann-periodic";

    std::complex<double>& at(std::size_t f, std::size_t t) {
        return bins[t * num_bins + f];
    }
    std::complex<double> at(std::size_t f, std::size_t t) const {
        return bins[t * num_bins + f];
    }
};

/// Log-mel matrix, frame-major: mel m of frame t at `values[t * n_mels + m]`.
struct MelSpectrogram {
    std::vector<double> values;
    std::size_t n_mels = 0;
    std::size_t num_frames = 0;
    int sample_rate = 0;

    double at(std::size_t m, std::size_t t) const { return values[t * n_mels + m]; }
};

inline constexpr int kDefaultNFft = 1024;
inline constexpr int kDefaultHop = 512;
inline constexpr int kDefaultNMels = 128;
inline constexpr double kLogFloor = 1e-10;

/// Radix-2 FFT plan with precomputed twiddles; n must be a power of two.
class Fft {
public:
    explicit Fft(std::size_t n);
    std::size_t size() const { return n_; }
    void forward(std::complex<double>* data) const;
    void inverse(std::complex<double>* data) const; // includes the 1/n factor

private:
    void transform(std::complex<double>* data, bool inverse) const;

    std::size_t n_;
    std::vector<std::size_t> bit_reverse_;
    std::vector<std::complex<double>> twiddles_; // exp(-2*pi*i*k/n), k < n/2
};

std::vector<double> hann_window_periodic(std::size_t n);

/// Triangular filters on the Slaney mel scale, 0 Hz to Nyquist, each
/// normalized to unit area (Slaney normalization).
struct MelFilterbank {
    struct Filter {
        std::size_t first_bin = 0;
        std::vector<double> weights;
        double center_hz = 0.0;
    };
    std::vector<Filter> filters;
};

MelFilterbank build_mel_filterbank(std::size_t n_mels, std::size_t num_bins,
                                   int sample_rate, int n_fft);

double hz_to_mel_slaney(double hz);
double mel_to_hz_slaney(double mel);

/// Centered STFT: periodic Hann, reflection padding of n_fft/2 on both sides,
/// floor(len/hop) + 1 frames.
ComplexSpectrogram stft(const AudioBuffer& buffer, int n_fft = kDefaultNFft,
                        int hop_length = kDefaultHop);

/// Overlap-add inverse with window-square normalization. `length` trims or
/// zero-pads the result; 0 keeps the natural (num_frames-1)*hop samples.
AudioBuffer istft(const ComplexSpectrogram& spec, std::size_t length = 0);

/// Log-mel features: log(filterbank . |STFT| + 1e-10).
MelSpectrogram mel_spectrogram(const AudioBuffer& buffer, std::size_t n_mels = kDefaultNMels,
                               int n_fft = kDefaultNFft, int hop_length = kDefaultHop);

/// Deletes 512-sample frames whose RMS sits more than threshold_db below the
/// loudest frame; remaining frames are concatenated in order.
AudioBuffer trim_silence(const AudioBuffer& buffer, double threshold_db = 60.0,
                         std::size_t frame_length = 512);

/// Band-limited windowed-sinc resampling, cutoff at the lower Nyquist.
AudioBuffer resample(const AudioBuffer& buffer, int target_rate);

} // namespace audexplain
