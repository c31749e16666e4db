#pragma once

#include "audexplain/audio.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace audexplain {

/// One interpretable component: a (source, time-segment) pair rendered as a
/// full-length buffer that is zero outside its segment.
struct Component {
    std::string label;
    std::size_t segment_index = 0;
    AudioBuffer audio;

    /// "label" when the decomposition has one segment, "label:k" otherwise.
    std::string display_label(std::size_t tau) const {
        return tau == 1 ? label : label + ":" + std::to_string(segment_index);
    }
};

/// Ordered component list (source-major, segment-minor) plus the residual
/// that makes reconstruction exact: mix == sum(components) + residual.
struct Decomposition {
    AudioBuffer mix;
    std::vector<Component> components;
    AudioBuffer residual;
    std::vector<std::string> source_labels;
    std::size_t tau = 1;

    std::size_t num_components() const { return components.size(); } // d' = C * tau

    std::vector<std::string> component_labels() const {
        std::vector<std::string> labels;
        labels.reserve(components.size());
        for (const auto& c : components) labels.push_back(c.display_label(tau));
        return labels;
    }
};

/// Binary presence vector over the d' components.
struct InterpretableMask {
    std::vector<std::uint8_t> bits;

    static InterpretableMask all_ones(std::size_t n) {
        InterpretableMask m;
        m.bits.assign(n, 1);
        return m;
    }
    std::size_t size() const { return bits.size(); }
    bool operator==(const InterpretableMask& other) const { return bits == other.bits; }
};

struct LabeledBuffer {
    std::string label;
    AudioBuffer audio;
};

/// Ground-truth stems as components (tau = 1); residual = mix - sum(stems).
/// Stems may differ from the mix by at most one sample and are zero-padded
/// to match.
Decomposition oracle_decompose(const AudioBuffer& mix, const std::vector<LabeledBuffer>& stems);

/// Median-filtering harmonic/percussive separation; the deterministic
/// stand-in separator. Components are labeled "harmonic" and "percussive".
Decomposition hpss_decompose(const AudioBuffer& mix, std::size_t harmonic_kernel_frames = 31,
                             std::size_t percussive_kernel_bins = 31);

/// Re-segments every source into tau equal hard time windows (the last one
/// absorbs the remainder). Safe to call repeatedly: segmentation is always
/// relative to the per-source sum.
Decomposition segment_time(const Decomposition& d, std::size_t tau);

/// Sum of the masked-in components, plus the residual when requested.
/// No clipping: clipping happens only on file write.
AudioBuffer remix(const Decomposition& d, const InterpretableMask& mask, bool include_residual);

/// Provider interface: oracle stems, HPSS, and stem directories all sit
/// behind this so the explanation pipeline does not care which one runs.
class Decomposer {
public:
    virtual ~Decomposer() = default;
    virtual Decomposition decompose(const AudioBuffer& mix) const = 0;
    virtual std::string name() const = 0;
};

class HpssDecomposer final : public Decomposer {
public:
    HpssDecomposer(std::size_t harmonic_kernel_frames = 31, std::size_t percussive_kernel_bins = 31)
        : harmonic_kernel_(harmonic_kernel_frames), percussive_kernel_(percussive_kernel_bins) {}
    Decomposition decompose(const AudioBuffer& mix) const override {
        return hpss_decompose(mix, harmonic_kernel_, percussive_kernel_);
    }
    std::string name() const override { return "hpss"; }

private:
    std::size_t harmonic_kernel_;
    std::size_t percussive_kernel_;
};

/// Oracle decomposer over in-memory stems (ignores nothing: the mix passed
/// to decompose() must be the mix the stems belong to).
class OracleDecomposer final : public Decomposer {
public:
    explicit OracleDecomposer(std::vector<LabeledBuffer> stems) : stems_(std::move(stems)) {}
    Decomposition decompose(const AudioBuffer& mix) const override {
        return oracle_decompose(mix, stems_);
    }
    std::string name() const override { return "oracle"; }

private:
    std::vector<LabeledBuffer> stems_;
};

/// Loads `mix.wav` plus one `<label>.wav` per source from a directory;
/// labels come from filenames, sorted lexicographically.
struct StemDirectory {
    AudioBuffer mix;
    std::vector<LabeledBuffer> stems;
};

StemDirectory load_stem_directory(const std::string& dir);

} // namespace audexplain
