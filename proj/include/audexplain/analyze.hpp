#pragma once

#include "audexplain/explain.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace audexplain {

/// Per-outcome histogram of most-important components. Outcome categories
/// are caller-defined (confusion cells for binary tasks, predicted-tag
/// buckets for taggers); histogram keys are component labels plus
/// "none-positive".
struct GlobalSummary {
    std::vector<std::string> component_labels;
    std::map<std::string, std::map<std::string, std::size_t>> outcome_bins;
    std::map<std::string, std::size_t> totals;
};

GlobalSummary aggregate_top_components(const std::vector<Explanation>& explanations,
                                       const std::vector<std::string>& outcomes);

/// Model parameter randomization test output. Plain histograms cover every
/// snippet; the `*_positive` ones count only snippets the model under
/// analysis predicted as the target label, which is the denominator the
/// confounder-detection protocol uses.
struct SanityReport {
    std::vector<std::string> component_labels;
    std::vector<std::uint64_t> model_seeds;
    std::vector<std::map<std::string, std::size_t>> per_model;
    std::map<std::string, std::size_t> aggregate;
    std::map<std::string, std::size_t> aggregate_positive;
    std::size_t aggregate_positive_total = 0;
    std::map<std::string, std::size_t> trained_reference;
    std::map<std::string, std::size_t> reference_positive;
    std::size_t reference_positive_total = 0;
    bool has_reference = false;
    std::size_t snippets_per_model = 0;
    double normalized_entropy = 0.0; // of the aggregate, over real components

    double aggregate_rate(const std::string& label) const;
    double reference_rate(const std::string& label) const;
    /// Share of label among predicted-as-target explanations.
    double aggregate_positive_rate(const std::string& label) const;
    double reference_positive_rate(const std::string& label) const;
};

using ModelFactory = std::function<std::unique_ptr<Predictor>(std::uint64_t seed)>;

/// One snippet to analyze plus the decomposer that knows how to split it
/// (oracle stems are per-snippet; HPSS can be shared).
struct SanityInstance {
    AudioBuffer audio;
    std::shared_ptr<const Decomposer> decomposer;
};

/// Explains every snippet under n_models freshly seeded models and records
/// which component each explanation selects. A trained reference predictor,
/// when given, is analyzed the same way for contrast.
SanityReport sanity_check(const ModelFactory& model_factory,
                          const std::vector<SanityInstance>& instances, std::size_t n_models,
                          const std::string& target_label, const ExplainConfig& config,
                          std::uint64_t base_seed, const Predictor* trained_reference = nullptr);

/// Convenience overload: one decomposer for every snippet.
SanityReport sanity_check(const ModelFactory& model_factory,
                          const std::vector<AudioBuffer>& snippets, std::size_t n_models,
                          const Decomposer& decomposer, const std::string& target_label,
                          const ExplainConfig& config, std::uint64_t base_seed,
                          const Predictor* trained_reference = nullptr);

/// Entropy of the histogram restricted to real component labels (the
/// "none-positive" bucket is excluded), normalized by log(#labels).
double normalized_selection_entropy(const std::map<std::string, std::size_t>& histogram,
                                    const std::vector<std::string>& component_labels);

// CSV exports (RFC 4180, header row); each writes a JSON mirror next to the
// CSV with the extension swapped to .json.
void export_coefficients(const std::vector<Explanation>& explanations, const std::string& path);
void export_faithfulness(const std::vector<Explanation>& explanations, const std::string& path);
void export_global_summary(const GlobalSummary& summary, const std::string& path);
void export_sanity_report(const SanityReport& report, const std::string& path);

std::string csv_mirror_path(const std::string& csv_path);

} // namespace audexplain
