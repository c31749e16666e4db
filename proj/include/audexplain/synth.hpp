#pragma once

#include "audexplain/analyze.hpp"
#include "audexplain/decompose.hpp"
#include "audexplain/explain.hpp"
#include "audexplain/predict.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace audexplain {

/// Parameters of the synthetic two-class dataset: class timbres differ by
/// harmonic rolloff, the confounder is a percussive click track, plus a bass
/// accompaniment. Per-stem amplitudes stay <= 1 pre-mix; mixes are
/// normalized to peak 0.9 with the gain recorded so stem sums stay exact.
struct SynthSpec {
    std::string class_a_label = "bright"; // confounder-associated class
    std::string class_b_label = "mellow";
    double class_a_rolloff = 1.3;
    double class_a_f0_min_hz = 170.0;
    double class_a_f0_max_hz = 240.0;
    double class_b_rolloff = 1.6;
    double class_b_f0_min_hz = 360.0;
    double class_b_f0_max_hz = 500.0;
    double lead_amplitude = 0.6;
    // Harmonic stems stay below this, so the top mel bands carry click
    // energy exclusively and the confounder is separable from the timbres.
    double harmonic_max_hz = 3200.0;

    double click_rate_hz = 8.0;
    double burst_ms = 5.0;
    double confounder_amplitude = 0.7;

    double bass_f0_min_hz = 45.0;
    double bass_f0_max_hz = 80.0;
    double bass_rolloff = 2.5;
    double bass_amplitude = 0.35;

    // Optional second accompaniment (pad); off by default. When enabled,
    // every example gains a fourth stem "pad.wav".
    double pad_amplitude = 0.0;
    double pad_f0_min_hz = 120.0;
    double pad_f0_max_hz = 160.0;
    double pad_rolloff = 2.0;

    double amplitude_jitter = 0.3; // relative per-example level variation
    double snippet_seconds = 2.0;
    int sample_rate = 16000;
    std::size_t max_partials = 40;
    double mix_peak = 0.9;

    std::size_t train_count = 200;
    std::size_t valid_count = 50;
    std::size_t test_matched_count = 50;
    std::size_t test_swapped_count = 50;
    std::uint64_t seed = 0;
};

struct SynthExample {
    std::string id;
    std::string split;
    AudioBuffer mix;
    std::vector<LabeledBuffer> stems; // sorted by label: bass, confounder, target
    std::string class_label;
    bool confounder_present = false;
    std::uint64_t seed = 0;
    double normalization = 1.0;
};

/// train/valid/test_matched follow confounder <=> class A; test_swapped is
/// the opposite. Every split is balanced 50:50.
struct ConfoundedDataset {
    SynthSpec spec;
    std::vector<SynthExample> train;
    std::vector<SynthExample> valid;
    std::vector<SynthExample> test_matched;
    std::vector<SynthExample> test_swapped;
};

/// Sum of partials k*f0 with amplitudes k^-rolloff and random phases under
/// an exponential envelope, peak-normalized. The fundamental is always
/// present; higher partials only below Nyquist (and below max_partial_hz
/// when that is set).
AudioBuffer synth_harmonic(double f0_hz, double rolloff, double duration_s, std::uint64_t seed,
                           int sample_rate = 16000, std::size_t max_partials = 40,
                           double max_partial_hz = 0.0);

/// Decaying white-noise bursts at the given rate with +-10% seeded jitter,
/// peak-normalized.
AudioBuffer synth_percussive(double rate_hz, double duration_s, std::uint64_t seed,
                             int sample_rate = 16000, double burst_ms = 5.0);

ConfoundedDataset build_confounded_dataset(const SynthSpec& spec);

/// On-disk layout: <root>/<split>/<id>/{mix,target,confounder,bass}.wav +
/// meta.json. The silent confounder stem is written too so every example
/// has the same component set.
void write_dataset(const ConfoundedDataset& dataset, const std::string& root);
ConfoundedDataset load_dataset(const std::string& root);

struct RunStat {
    double mean = 0.0;
    double sd = 0.0;
};

struct ExperimentRun {
    std::uint64_t seed = 0;
    double acc_matched = 0.0;
    double acc_swapped = 0.0;
    double confounder_rate_oracle = 0.0;
    double confounder_rate_hpss = 0.0;
    std::size_t predicted_confounder_class = 0; // denominator of the rates
    GlobalSummary outcomes_oracle; // four-way confusion split of top components
    GlobalSummary outcomes_hpss;
};

struct ExperimentReport {
    std::vector<ExperimentRun> runs;
    RunStat acc_matched;
    RunStat acc_swapped;
    RunStat confounder_rate_oracle;
    RunStat confounder_rate_hpss;
    bool has_hpss = false;
    std::string config_digest;
};

/// The full desk-scale protocol: per seeded run, build dataset -> train ->
/// evaluate both test sets -> explain every swapped-test snippet with the
/// oracle decomposition (and optionally HPSS) -> count how often the
/// confounder gets the top positive weight among examples predicted as the
/// confounder-associated class. Reports mean +- SD over runs.
ExperimentReport run_confounder_experiment(const SynthSpec& spec, const TrainOptions& train_options,
                                           const ExplainConfig& explain_config, std::size_t n_runs,
                                           bool with_hpss);

/// JSON report plus a per-run CSV (with .json mirror) next to it.
void save_experiment_report(const ExperimentReport& report, const std::string& json_path,
                            const std::string& csv_path);

std::string format_experiment_summary(const ExperimentReport& report);

} // namespace audexplain
