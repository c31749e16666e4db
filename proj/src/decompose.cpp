#include "audexplain/decompose.hpp"

#include "audexplain/kernels.hpp"
#include "audexplain/signal.hpp"
#include "audexplain/wav.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace audexplain {

namespace {

// residual = mix - sum(parts), accumulated in double
AudioBuffer compute_residual(const AudioBuffer& mix, const std::vector<Component>& parts) {
    std::vector<double> acc(mix.size(), 0.0);
    for (const auto& part : parts) accumulate(acc, part.audio);
    AudioBuffer residual;
    residual.sample_rate = mix.sample_rate;
    residual.samples.resize(mix.size());
    for (std::size_t i = 0; i < mix.size(); ++i) {
        residual.samples[i] = static_cast<float>(static_cast<double>(mix.samples[i]) - acc[i]);
    }
    return residual;
}

// Sliding median over a single row; the window shrinks at the borders.
void median_filter_row(const double* src, double* dst, std::size_t n, std::size_t kernel) {
    const std::size_t half = kernel / 2;
    std::vector<double> window;
    window.reserve(kernel);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        window.assign(src + lo, src + hi + 1);
        const std::size_t mid = window.size() / 2;
        std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid),
                         window.end());
        double med = window[mid];
        if (window.size() % 2 == 0) {
            const double lower =
                *std::max_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid));
            med = 0.5 * (med + lower);
        }
        dst[i] = med;
    }
}

} // namespace

Decomposition oracle_decompose(const AudioBuffer& mix, const std::vector<LabeledBuffer>& stems) {
    if (stems.empty()) {
        throw Error(ErrorCode::invalid_argument, "oracle_decompose: no stems");
    }
    Decomposition d;
    d.mix = mix;
    d.tau = 1;
    for (const auto& stem : stems) {
        if (stem.audio.sample_rate != mix.sample_rate) {
            throw Error(ErrorCode::dimension_mismatch,
                        "oracle_decompose: stem '" + stem.label + "' sample rate " +
                            std::to_string(stem.audio.sample_rate) + " != mix rate " +
                            std::to_string(mix.sample_rate));
        }
        const std::size_t diff = stem.audio.size() > mix.size() ? stem.audio.size() - mix.size()
                                                                : mix.size() - stem.audio.size();
        if (diff > 1) {
            throw Error(ErrorCode::dimension_mismatch,
                        "oracle_decompose: stem '" + stem.label + "' length differs from mix by " +
                            std::to_string(diff) + " samples");
        }
        Component c;
        c.label = stem.label;
        c.segment_index = 0;
        c.audio = stem.audio;
        c.audio.samples.resize(mix.size(), 0.0f); // pad or truncate the one allowed sample
        d.components.push_back(std::move(c));
        d.source_labels.push_back(stem.label);
    }
    d.residual = compute_residual(mix, d.components);
    return d;
}

Decomposition hpss_decompose(const AudioBuffer& mix, std::size_t harmonic_kernel_frames,
                             std::size_t percussive_kernel_bins) {
    if (mix.size() < static_cast<std::size_t>(kDefaultNFft)) {
        throw Error(ErrorCode::invalid_argument, "hpss_decompose: mix shorter than n_fft");
    }

    const ComplexSpectrogram spec = stft(mix);
    const std::size_t F = spec.num_bins;
    const std::size_t T = spec.num_frames;

    std::vector<double> mag(F * T); // frame-major like the spectrogram
    kernels::active().complex_mag_f64(spec.bins.data(), mag.data(), F * T);

    // Harmonic: median along time per bin. Percussive: median along
    // frequency per frame.
    std::vector<double> harmonic(F * T), percussive(F * T);
    std::vector<double> row(T), filtered(T);
    for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t t = 0; t < T; ++t) row[t] = mag[t * F + f];
        median_filter_row(row.data(), filtered.data(), T, harmonic_kernel_frames);
        for (std::size_t t = 0; t < T; ++t) harmonic[t * F + f] = filtered[t];
    }
    std::vector<double> col_filtered(F);
    for (std::size_t t = 0; t < T; ++t) {
        median_filter_row(mag.data() + t * F, col_filtered.data(), F, percussive_kernel_bins);
        std::copy(col_filtered.begin(), col_filtered.end(), percussive.begin() + static_cast<std::ptrdiff_t>(t * F));
    }

    constexpr double eps = 1e-10;
    ComplexSpectrogram harmonic_spec = spec;
    ComplexSpectrogram percussive_spec = spec;
    for (std::size_t i = 0; i < F * T; ++i) {
        const double h2 = harmonic[i] * harmonic[i];
        const double p2 = percussive[i] * percussive[i];
        const double denom = h2 + p2 + eps;
        harmonic_spec.bins[i] = spec.bins[i] * (h2 / denom);
        percussive_spec.bins[i] = spec.bins[i] * (p2 / denom);
    }

    Decomposition d;
    d.mix = mix;
    d.tau = 1;
    d.source_labels = {"harmonic", "percussive"};
    Component h;
    h.label = "harmonic";
    h.audio = istft(harmonic_spec, mix.size());
    Component p;
    p.label = "percussive";
    p.audio = istft(percussive_spec, mix.size());
    d.components.push_back(std::move(h));
    d.components.push_back(std::move(p));
    d.residual = compute_residual(mix, d.components);
    return d;
}

Decomposition segment_time(const Decomposition& d, std::size_t tau) {
    if (tau < 1) {
        throw Error(ErrorCode::invalid_argument, "segment_time: tau must be >= 1");
    }
    const std::size_t len = d.mix.size();
    if (len < tau) {
        throw Error(ErrorCode::invalid_argument, "segment_time: mix shorter than tau");
    }

    // Collapse to per-source sums first so re-segmentation composes.
    std::vector<std::vector<double>> per_source(d.source_labels.size(),
                                                std::vector<double>(len, 0.0));
    for (const auto& c : d.components) {
        const auto it = std::find(d.source_labels.begin(), d.source_labels.end(), c.label);
        const std::size_t s = static_cast<std::size_t>(it - d.source_labels.begin());
        accumulate(per_source[s], c.audio);
    }

    Decomposition out;
    out.mix = d.mix;
    out.residual = d.residual;
    out.source_labels = d.source_labels;
    out.tau = tau;

    const std::size_t window = len / tau;
    for (std::size_t s = 0; s < per_source.size(); ++s) {
        for (std::size_t k = 0; k < tau; ++k) {
            const std::size_t start = k * window;
            const std::size_t stop = k + 1 == tau ? len : start + window;
            Component c;
            c.label = d.source_labels[s];
            c.segment_index = k;
            c.audio.sample_rate = d.mix.sample_rate;
            c.audio.samples.assign(len, 0.0f);
            for (std::size_t i = start; i < stop; ++i) {
                c.audio.samples[i] = static_cast<float>(per_source[s][i]);
            }
            out.components.push_back(std::move(c));
        }
    }
    return out;
}

AudioBuffer remix(const Decomposition& d, const InterpretableMask& mask, bool include_residual) {
    if (mask.size() != d.components.size()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "remix: mask length " + std::to_string(mask.size()) + " != d' " +
                        std::to_string(d.components.size()));
    }
    std::vector<double> acc(d.mix.size(), 0.0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask.bits[i]) accumulate(acc, d.components[i].audio);
    }
    if (include_residual) accumulate(acc, d.residual);
    return to_buffer(acc, d.mix.sample_rate);
}

StemDirectory load_stem_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    if (!fs::is_directory(root)) {
        throw Error(ErrorCode::unreadable_file, "'" + dir + "' is not a directory");
    }
    const fs::path mix_path = root / "mix.wav";
    if (!fs::exists(mix_path)) {
        throw Error(ErrorCode::unreadable_file, "'" + dir + "' has no mix.wav");
    }

    StemDirectory result;
    result.mix = load_wav(mix_path.string());

    std::vector<std::string> labels;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        if (p.extension() != ".wav" || p.filename() == "mix.wav") continue;
        labels.push_back(p.stem().string());
    }
    std::sort(labels.begin(), labels.end());
    if (labels.empty()) {
        throw Error(ErrorCode::invalid_argument, "'" + dir + "' contains no stem wavs");
    }
    for (const auto& label : labels) {
        result.stems.push_back({label, load_wav((root / (label + ".wav")).string())});
    }
    return result;
}

} // namespace audexplain
