#include "audexplain/synth.hpp"

#include "audexplain/kernels.hpp"
#include "audexplain/rng.hpp"
#include "audexplain/wav.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace audexplain {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void stat_from(const std::vector<double>& values, RunStat& stat) {
    if (values.empty()) return;
    double total = 0.0;
    for (double v : values) total += v;
    stat.mean = total / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) {
        const double d = v - stat.mean;
        sq += d * d;
    }
    stat.sd = std::sqrt(sq / static_cast<double>(values.size()));
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

AudioBuffer zeros_like(std::size_t n, int sample_rate) {
    AudioBuffer out;
    out.sample_rate = sample_rate;
    out.samples.assign(n, 0.0f);
    return out;
}

} // namespace

AudioBuffer synth_harmonic(double f0_hz, double rolloff, double duration_s, std::uint64_t seed,
                           int sample_rate, std::size_t max_partials, double max_partial_hz) {
    if (f0_hz <= 0.0) {
        throw Error(ErrorCode::invalid_argument, "synth_harmonic: f0 must be > 0");
    }
    const std::size_t len = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    if (len == 0) {
        throw Error(ErrorCode::invalid_argument, "synth_harmonic: zero duration");
    }

    const double nyquist = sample_rate / 2.0;
    const double ceiling = max_partial_hz > 0.0 ? std::min(max_partial_hz, nyquist) : nyquist;
    Rng rng(seed);
    std::vector<double> acc(len, 0.0);
    for (std::size_t k = 1; k <= max_partials; ++k) {
        const double freq = static_cast<double>(k) * f0_hz;
        if (k > 1 && freq >= ceiling) break; // fundamental always sounds
        const double amplitude = std::pow(static_cast<double>(k), -rolloff);
        const double phase = rng.uniform(0.0, kTwoPi);
        // Two-tap resonator: s[n] = 2 cos(w) s[n-1] - s[n-2]
        const double omega = kTwoPi * freq / sample_rate;
        const double c = 2.0 * std::cos(omega);
        double prev2 = std::sin(phase - omega);
        double prev1 = std::sin(phase);
        acc[0] += amplitude * prev1;
        for (std::size_t n = 1; n < len; ++n) {
            const double s = c * prev1 - prev2;
            prev2 = prev1;
            prev1 = s;
            acc[n] += amplitude * s;
        }
    }

    // Exponential amplitude envelope, then peak normalization.
    const double decay = std::exp(-1.0 / (0.75 * duration_s * sample_rate));
    double envelope = 1.0;
    double peak = 0.0;
    for (std::size_t n = 0; n < len; ++n) {
        acc[n] *= envelope;
        envelope *= decay;
        peak = std::max(peak, std::fabs(acc[n]));
    }
    if (peak > 0.0) {
        const double gain = 1.0 / peak;
        for (double& v : acc) v *= gain;
    }
    return to_buffer(acc, sample_rate);
}

AudioBuffer synth_percussive(double rate_hz, double duration_s, std::uint64_t seed,
                             int sample_rate, double burst_ms) {
    if (rate_hz <= 0.0) {
        throw Error(ErrorCode::invalid_argument, "synth_percussive: rate must be > 0");
    }
    const std::size_t len = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    if (len == 0) {
        throw Error(ErrorCode::invalid_argument, "synth_percussive: zero duration");
    }

    Rng rng(seed);
    const std::size_t burst_len =
        std::max<std::size_t>(1, static_cast<std::size_t>(burst_ms * 1e-3 * sample_rate));
    const double burst_tau = std::max(1.0, burst_ms * 1e-3 * sample_rate / 4.0);

    std::vector<double> acc(len, 0.0);
    double onset_s = 0.0;
    while (onset_s < duration_s) {
        const std::size_t start = static_cast<std::size_t>(std::llround(onset_s * sample_rate));
        for (std::size_t i = 0; i < burst_len && start + i < len; ++i) {
            const double noise = rng.uniform(-1.0, 1.0);
            acc[start + i] += noise * std::exp(-static_cast<double>(i) / burst_tau);
        }
        const double jitter = rng.uniform(-0.1, 0.1);
        onset_s += (1.0 + jitter) / rate_hz;
    }

    double peak = 0.0;
    for (double v : acc) peak = std::max(peak, std::fabs(v));
    if (peak > 0.0) {
        const double gain = 1.0 / peak;
        for (double& v : acc) v *= gain;
    }
    return to_buffer(acc, sample_rate);
}

namespace {

void validate_spec(const SynthSpec& spec) {
    if (spec.class_a_rolloff == spec.class_b_rolloff) {
        throw Error(ErrorCode::invalid_argument,
                    "SynthSpec: class timbres must differ (distinct rolloff exponents)");
    }
    for (double amplitude : {spec.lead_amplitude, spec.confounder_amplitude, spec.bass_amplitude,
                             spec.pad_amplitude}) {
        if (amplitude < 0.0 || amplitude > 1.0) {
            throw Error(ErrorCode::invalid_argument,
                        "SynthSpec: stem amplitudes must lie in [0, 1] pre-mix");
        }
    }
    if (spec.mix_peak <= 0.0 || spec.snippet_seconds <= 0.0 || spec.sample_rate <= 0) {
        throw Error(ErrorCode::invalid_argument, "SynthSpec: bad mix_peak/snippet/sample_rate");
    }
}

SynthExample make_example(const SynthSpec& spec, const std::string& split, std::size_t index,
                          std::uint64_t split_stream, bool swapped_rule) {
    const bool is_class_a = index % 2 == 0; // alternate for exact 50:50
    const bool confounder = swapped_rule ? !is_class_a : is_class_a;
    const std::uint64_t example_seed =
        derive_seed(spec.seed, split_stream * 1000003ULL + index);
    Rng rng(example_seed);

    const std::size_t len =
        static_cast<std::size_t>(std::llround(spec.snippet_seconds * spec.sample_rate));

    const double lead_f0 = is_class_a ? rng.uniform(spec.class_a_f0_min_hz, spec.class_a_f0_max_hz)
                                      : rng.uniform(spec.class_b_f0_min_hz, spec.class_b_f0_max_hz);
    const double bass_f0 = rng.uniform(spec.bass_f0_min_hz, spec.bass_f0_max_hz);
    const double pad_f0 = rng.uniform(spec.pad_f0_min_hz, spec.pad_f0_max_hz);
    const double lead_gain =
        spec.lead_amplitude * (1.0 + spec.amplitude_jitter * rng.uniform(-1.0, 1.0));
    const double bass_gain =
        spec.bass_amplitude * (1.0 + spec.amplitude_jitter * rng.uniform(-1.0, 1.0));
    const std::uint64_t lead_seed = rng.next_u64();
    const std::uint64_t bass_seed = rng.next_u64();
    const std::uint64_t click_seed = rng.next_u64();
    const std::uint64_t pad_seed = rng.next_u64();

    const double rolloff = is_class_a ? spec.class_a_rolloff : spec.class_b_rolloff;
    AudioBuffer target = synth_harmonic(lead_f0, rolloff, spec.snippet_seconds, lead_seed,
                                        spec.sample_rate, spec.max_partials, spec.harmonic_max_hz);
    AudioBuffer bass = synth_harmonic(bass_f0, spec.bass_rolloff, spec.snippet_seconds, bass_seed,
                                      spec.sample_rate, spec.max_partials, spec.harmonic_max_hz);
    AudioBuffer clicks =
        confounder && spec.confounder_amplitude > 0.0
            ? synth_percussive(spec.click_rate_hz, spec.snippet_seconds, click_seed,
                               spec.sample_rate, spec.burst_ms)
            : zeros_like(len, spec.sample_rate);

    const auto& ops = kernels::active();
    ops.scale_f32(target.samples.data(), static_cast<float>(lead_gain), target.samples.data(),
                  target.samples.size());
    ops.scale_f32(bass.samples.data(), static_cast<float>(bass_gain), bass.samples.data(),
                  bass.samples.size());
    if (confounder && spec.confounder_amplitude > 0.0) {
        ops.scale_f32(clicks.samples.data(), static_cast<float>(spec.confounder_amplitude),
                      clicks.samples.data(), clicks.samples.size());
    }

    const bool with_pad = spec.pad_amplitude > 0.0;
    AudioBuffer pad;
    if (with_pad) {
        pad = synth_harmonic(pad_f0, spec.pad_rolloff, spec.snippet_seconds, pad_seed,
                             spec.sample_rate, spec.max_partials, spec.harmonic_max_hz);
        const double pad_gain =
            spec.pad_amplitude * (1.0 + spec.amplitude_jitter * rng.uniform(-1.0, 1.0));
        ops.scale_f32(pad.samples.data(), static_cast<float>(pad_gain), pad.samples.data(),
                      pad.samples.size());
    }

    // Normalize the mix to the target peak by scaling every stem with the
    // same gain; the sum then stays exact by construction.
    std::vector<double> raw_mix(len, 0.0);
    accumulate(raw_mix, target);
    accumulate(raw_mix, bass);
    accumulate(raw_mix, clicks);
    if (with_pad) accumulate(raw_mix, pad);
    double peak = 0.0;
    for (double v : raw_mix) peak = std::max(peak, std::fabs(v));
    const float gain = peak > 0.0 ? static_cast<float>(spec.mix_peak / peak) : 1.0f;
    ops.scale_f32(target.samples.data(), gain, target.samples.data(), target.samples.size());
    ops.scale_f32(bass.samples.data(), gain, bass.samples.data(), bass.samples.size());
    ops.scale_f32(clicks.samples.data(), gain, clicks.samples.data(), clicks.samples.size());
    if (with_pad) {
        ops.scale_f32(pad.samples.data(), gain, pad.samples.data(), pad.samples.size());
    }

    SynthExample ex;
    ex.split = split;
    std::ostringstream id;
    id << split << "-" << std::setw(4) << std::setfill('0') << index;
    ex.id = id.str();
    ex.class_label = is_class_a ? spec.class_a_label : spec.class_b_label;
    ex.confounder_present = confounder;
    ex.seed = example_seed;
    ex.normalization = static_cast<double>(gain);
    // label-sorted stem order, matching the on-disk convention
    ex.stems.push_back({"bass", std::move(bass)});
    ex.stems.push_back({"confounder", std::move(clicks)});
    if (with_pad) ex.stems.push_back({"pad", std::move(pad)});
    ex.stems.push_back({"target", std::move(target)});

    std::vector<double> acc(len, 0.0);
    for (const auto& stem : ex.stems) accumulate(acc, stem.audio);
    ex.mix = to_buffer(acc, spec.sample_rate);
    return ex;
}

std::vector<SynthExample> make_split(const SynthSpec& spec, const std::string& split,
                                     std::size_t count, std::uint64_t stream, bool swapped_rule) {
    if (count < 4 || count % 2 != 0) {
        throw Error(ErrorCode::invalid_argument,
                    "build_confounded_dataset: split '" + split +
                        "' needs an even count >= 4 for a balanced split, got " +
                        std::to_string(count));
    }
    std::vector<SynthExample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(make_example(spec, split, i, stream, swapped_rule));
    }
    return out;
}

} // namespace

ConfoundedDataset build_confounded_dataset(const SynthSpec& spec) {
    validate_spec(spec);
    ConfoundedDataset dataset;
    dataset.spec = spec;
    dataset.train = make_split(spec, "train", spec.train_count, 1, false);
    dataset.valid = make_split(spec, "valid", spec.valid_count, 2, false);
    dataset.test_matched = make_split(spec, "test_matched", spec.test_matched_count, 3, false);
    dataset.test_swapped = make_split(spec, "test_swapped", spec.test_swapped_count, 4, true);
    return dataset;
}

void write_dataset(const ConfoundedDataset& dataset, const std::string& root) {
    const auto write_split = [&root](const std::vector<SynthExample>& split) {
        for (const auto& ex : split) {
            const fs::path dir = fs::path(root) / ex.split / ex.id;
            fs::create_directories(dir);
            save_wav(ex.mix, (dir / "mix.wav").string());
            for (const auto& stem : ex.stems) {
                save_wav(stem.audio, (dir / (stem.label + ".wav")).string());
            }
            json meta;
            meta["id"] = ex.id;
            meta["split"] = ex.split;
            meta["class_label"] = ex.class_label;
            meta["confounder_present"] = ex.confounder_present;
            meta["seed"] = ex.seed;
            meta["normalization"] = ex.normalization;
            meta["sample_rate"] = ex.mix.sample_rate;
            meta["rng"] = kRngAlgorithm;
            std::ofstream meta_file(dir / "meta.json", std::ios::trunc);
            if (!meta_file) {
                throw Error(ErrorCode::io_error, "cannot write meta.json under '" + dir.string() + "'");
            }
            meta_file << meta.dump(2) << "\n";
        }
    };
    write_split(dataset.train);
    write_split(dataset.valid);
    write_split(dataset.test_matched);
    write_split(dataset.test_swapped);
}

ConfoundedDataset load_dataset(const std::string& root) {
    ConfoundedDataset dataset;
    const auto load_split = [&root](const std::string& split, std::vector<SynthExample>& out) {
        const fs::path dir = fs::path(root) / split;
        if (!fs::is_directory(dir)) return;
        std::vector<std::string> ids;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_directory()) ids.push_back(entry.path().filename().string());
        }
        std::sort(ids.begin(), ids.end());
        for (const auto& id : ids) {
            const fs::path ex_dir = dir / id;
            SynthExample ex;
            ex.id = id;
            ex.split = split;
            ex.mix = load_wav((ex_dir / "mix.wav").string());
            const StemDirectory stems = load_stem_directory(ex_dir.string());
            ex.stems = stems.stems;
            std::ifstream meta_file(ex_dir / "meta.json");
            if (meta_file) {
                json meta;
                try {
                    meta_file >> meta;
                    ex.class_label = meta.value("class_label", "");
                    ex.confounder_present = meta.value("confounder_present", false);
                    ex.seed = meta.value("seed", std::uint64_t{0});
                    ex.normalization = meta.value("normalization", 1.0);
                } catch (const json::exception& e) {
                    throw Error(ErrorCode::protocol_violation,
                                "meta.json under '" + ex_dir.string() + "': " + e.what());
                }
            }
            out.push_back(std::move(ex));
        }
    };
    load_split("train", dataset.train);
    load_split("valid", dataset.valid);
    load_split("test_matched", dataset.test_matched);
    load_split("test_swapped", dataset.test_swapped);
    return dataset;
}

namespace {

std::vector<LabeledAudio> to_labeled(const std::vector<SynthExample>& split) {
    std::vector<LabeledAudio> out;
    out.reserve(split.size());
    for (const auto& ex : split) out.push_back({ex.mix, ex.class_label});
    return out;
}

double split_accuracy(const LinearClassifier& model, const std::vector<SynthExample>& split,
                      std::vector<std::string>* predicted_out = nullptr) {
    std::vector<AudioBuffer> mixes;
    mixes.reserve(split.size());
    for (const auto& ex : split) mixes.push_back(ex.mix);
    const std::vector<Prediction> predictions = predict(model, mixes);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < split.size(); ++i) {
        const auto& p = predictions[i];
        const std::size_t argmax = static_cast<std::size_t>(
            std::max_element(p.probabilities.begin(), p.probabilities.end()) -
            p.probabilities.begin());
        const std::string& label = p.labels[argmax];
        if (predicted_out) predicted_out->push_back(label);
        if (label == split[i].class_label) ++hits;
    }
    return split.empty() ? 0.0 : static_cast<double>(hits) / split.size();
}

std::string outcome_of(const std::string& truth, const std::string& predicted,
                       const std::string& positive) {
    if (truth == positive) {
        return predicted == positive ? "TP" : "FN";
    }
    return predicted == positive ? "FP" : "TN";
}

} // namespace

ExperimentReport run_confounder_experiment(const SynthSpec& spec,
                                           const TrainOptions& train_options,
                                           const ExplainConfig& explain_config, std::size_t n_runs,
                                           bool with_hpss) {
    if (n_runs < 1) {
        throw Error(ErrorCode::invalid_argument, "run_confounder_experiment: n_runs must be >= 1");
    }

    ExperimentReport report;
    report.has_hpss = with_hpss;
    std::vector<double> acc_m, acc_s, rate_o, rate_h;

    for (std::size_t r = 0; r < n_runs; ++r) {
        try {
            ExperimentRun run;
            run.seed = derive_seed(spec.seed, 0xE0ULL + r);
            SynthSpec run_spec = spec;
            run_spec.seed = run.seed;

            const ConfoundedDataset dataset = build_confounded_dataset(run_spec);
            const LinearClassifier model =
                train_builtin(to_labeled(dataset.train), to_labeled(dataset.valid), train_options,
                              derive_seed(run.seed, 0x7AULL));
            const BuiltinPredictor predictor(model);

            run.acc_matched = split_accuracy(model, dataset.test_matched);
            std::vector<std::string> predicted;
            run.acc_swapped = split_accuracy(model, dataset.test_swapped, &predicted);

            // Explanations target the confounder-associated class, mirroring
            // "which component made the model say class A".
            const std::string& positive = spec.class_a_label;
            std::vector<Explanation> oracle_explanations;
            std::vector<Explanation> hpss_explanations;
            std::vector<std::string> outcomes;
            std::size_t predicted_positive = 0, oracle_hits = 0, hpss_hits = 0;

            for (std::size_t i = 0; i < dataset.test_swapped.size(); ++i) {
                const SynthExample& ex = dataset.test_swapped[i];
                const OracleDecomposer oracle(ex.stems);
                const ExplainResult oracle_result =
                    explain_instance(ex.mix, oracle, predictor, positive, explain_config, ex.id);
                oracle_explanations.push_back(oracle_result.explanation);
                outcomes.push_back(outcome_of(ex.class_label, predicted[i], positive));

                const bool is_positive_prediction = predicted[i] == positive;
                if (is_positive_prediction) {
                    ++predicted_positive;
                    if (top_component_label(oracle_result.explanation) == "confounder") {
                        ++oracle_hits;
                    }
                }

                if (with_hpss) {
                    const HpssDecomposer hpss;
                    const ExplainResult hpss_result =
                        explain_instance(ex.mix, hpss, predictor, positive, explain_config, ex.id);
                    hpss_explanations.push_back(hpss_result.explanation);
                    if (is_positive_prediction &&
                        top_component_label(hpss_result.explanation) == "percussive") {
                        ++hpss_hits;
                    }
                }
            }

            run.predicted_confounder_class = predicted_positive;
            run.confounder_rate_oracle =
                predicted_positive == 0
                    ? 0.0
                    : static_cast<double>(oracle_hits) / static_cast<double>(predicted_positive);
            run.outcomes_oracle = aggregate_top_components(oracle_explanations, outcomes);
            if (with_hpss) {
                run.confounder_rate_hpss =
                    predicted_positive == 0
                        ? 0.0
                        : static_cast<double>(hpss_hits) / static_cast<double>(predicted_positive);
                run.outcomes_hpss = aggregate_top_components(hpss_explanations, outcomes);
            }

            acc_m.push_back(run.acc_matched);
            acc_s.push_back(run.acc_swapped);
            rate_o.push_back(run.confounder_rate_oracle);
            if (with_hpss) rate_h.push_back(run.confounder_rate_hpss);
            report.runs.push_back(std::move(run));
        } catch (const Error& err) {
            throw Error(err.code(), "run " + std::to_string(r) + ": " + err.what());
        }
    }

    stat_from(acc_m, report.acc_matched);
    stat_from(acc_s, report.acc_swapped);
    stat_from(rate_o, report.confounder_rate_oracle);
    if (with_hpss) stat_from(rate_h, report.confounder_rate_hpss);

    report.config_digest = "v1;experiment;seed=" + std::to_string(spec.seed) +
                           ";runs=" + std::to_string(n_runs) +
                           ";train=" + std::to_string(spec.train_count) +
                           ";valid=" + std::to_string(spec.valid_count) +
                           ";test=" + std::to_string(spec.test_matched_count) + "+" +
                           std::to_string(spec.test_swapped_count) +
                           ";hpss=" + (with_hpss ? "1" : "0") + ";rng=" + kRngAlgorithm;
    return report;
}

namespace {

json summary_to_json(const GlobalSummary& summary) {
    json bins = json::object();
    for (const auto& [outcome, histogram] : summary.outcome_bins) {
        json h = json::object();
        for (const auto& [label, count] : histogram) h[label] = count;
        bins[outcome] = std::move(h);
    }
    return bins;
}

} // namespace

void save_experiment_report(const ExperimentReport& report, const std::string& json_path,
                            const std::string& csv_path) {
    json doc;
    doc["config_digest"] = report.config_digest;
    doc["has_hpss"] = report.has_hpss;
    doc["summary"] = {
        {"acc_matched", {{"mean", report.acc_matched.mean}, {"sd", report.acc_matched.sd}}},
        {"acc_swapped", {{"mean", report.acc_swapped.mean}, {"sd", report.acc_swapped.sd}}},
        {"confounder_rate_oracle",
         {{"mean", report.confounder_rate_oracle.mean}, {"sd", report.confounder_rate_oracle.sd}}},
    };
    if (report.has_hpss) {
        doc["summary"]["confounder_rate_hpss"] = {{"mean", report.confounder_rate_hpss.mean},
                                                  {"sd", report.confounder_rate_hpss.sd}};
    }
    json runs = json::array();
    for (const auto& run : report.runs) {
        json entry;
        entry["seed"] = run.seed;
        entry["acc_matched"] = run.acc_matched;
        entry["acc_swapped"] = run.acc_swapped;
        entry["confounder_rate_oracle"] = run.confounder_rate_oracle;
        entry["predicted_confounder_class"] = run.predicted_confounder_class;
        entry["outcomes_oracle"] = summary_to_json(run.outcomes_oracle);
        if (report.has_hpss) {
            entry["confounder_rate_hpss"] = run.confounder_rate_hpss;
            entry["outcomes_hpss"] = summary_to_json(run.outcomes_hpss);
        }
        runs.push_back(std::move(entry));
    }
    doc["runs"] = std::move(runs);

    std::ofstream file(json_path, std::ios::trunc);
    if (!file) {
        throw Error(ErrorCode::io_error, "cannot write '" + json_path + "'");
    }
    file << doc.dump(2) << "\n";

    // Per-run CSV with JSON mirror.
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) {
        throw Error(ErrorCode::io_error, "cannot write '" + csv_path + "'");
    }
    csv << "run,seed,acc_matched,acc_swapped,confounder_rate_oracle";
    if (report.has_hpss) csv << ",confounder_rate_hpss";
    csv << "\r\n";
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        const auto& run = report.runs[r];
        csv << r << "," << run.seed << "," << format_double(run.acc_matched) << ","
            << format_double(run.acc_swapped) << "," << format_double(run.confounder_rate_oracle);
        if (report.has_hpss) csv << "," << format_double(run.confounder_rate_hpss);
        csv << "\r\n";
    }
    csv.flush();
    if (!csv) {
        throw Error(ErrorCode::io_error, "write failure on '" + csv_path + "'");
    }

    json mirror;
    mirror["rows"] = doc["runs"];
    std::ofstream mirror_file(csv_mirror_path(csv_path), std::ios::trunc);
    if (!mirror_file) {
        throw Error(ErrorCode::io_error, "cannot write '" + csv_mirror_path(csv_path) + "'");
    }
    mirror_file << mirror.dump(2) << "\n";
}

std::string format_experiment_summary(const ExperimentReport& report) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << "runs: " << report.runs.size() << "\n";
    out << "acc_matched           " << report.acc_matched.mean << " +- " << report.acc_matched.sd
        << "\n";
    out << "acc_swapped           " << report.acc_swapped.mean << " +- " << report.acc_swapped.sd
        << "\n";
    out << "confounder_rate oracle " << report.confounder_rate_oracle.mean << " +- "
        << report.confounder_rate_oracle.sd << "\n";
    if (report.has_hpss) {
        out << "confounder_rate hpss   " << report.confounder_rate_hpss.mean << " +- "
            << report.confounder_rate_hpss.sd << "\n";
    }
    return out.str();
}

} // namespace audexplain
