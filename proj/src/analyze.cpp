#include "audexplain/analyze.hpp"

#include "audexplain/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace audexplain {

using nlohmann::json;

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string csv_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : file_(path, std::ios::trunc) {
        if (!file_) {
            throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
        }
    }
    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) file_ << ',';
            file_ << csv_escape(fields[i]);
        }
        file_ << "\r\n";
    }
    void close(const std::string& path) {
        file_.flush();
        if (!file_) {
            throw Error(ErrorCode::io_error, "write failure on '" + path + "'");
        }
    }

private:
    std::ofstream file_;
};

void write_json_file(const json& doc, const std::string& path) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) {
        throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
    }
    file << doc.dump(2) << "\n";
}

json histogram_to_json(const std::map<std::string, std::size_t>& histogram) {
    json out = json::object();
    for (const auto& [label, count] : histogram) out[label] = count;
    return out;
}

} // namespace

std::string csv_mirror_path(const std::string& csv_path) {
    const std::size_t dot = csv_path.find_last_of('.');
    const std::size_t slash = csv_path.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return csv_path + ".json";
    }
    return csv_path.substr(0, dot) + ".json";
}

GlobalSummary aggregate_top_components(const std::vector<Explanation>& explanations,
                                       const std::vector<std::string>& outcomes) {
    if (explanations.size() != outcomes.size()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "aggregate_top_components: explanations and outcomes differ in length");
    }
    GlobalSummary summary;
    if (explanations.empty()) return summary;

    summary.component_labels = explanations[0].component_labels;
    for (const auto& e : explanations) {
        if (e.component_labels != summary.component_labels) {
            throw Error(ErrorCode::dimension_mismatch,
                        "aggregate_top_components: mixed component orderings break "
                        "cross-example comparability");
        }
    }
    for (std::size_t i = 0; i < explanations.size(); ++i) {
        summary.outcome_bins[outcomes[i]][top_component_label(explanations[i])] += 1;
        summary.totals[outcomes[i]] += 1;
    }
    return summary;
}

double normalized_selection_entropy(const std::map<std::string, std::size_t>& histogram,
                                    const std::vector<std::string>& component_labels) {
    if (component_labels.size() < 2) return 0.0;
    std::size_t total = 0;
    for (const auto& label : component_labels) {
        const auto it = histogram.find(label);
        if (it != histogram.end()) total += it->second;
    }
    if (total == 0) return 0.0;
    double entropy = 0.0;
    for (const auto& label : component_labels) {
        const auto it = histogram.find(label);
        if (it == histogram.end() || it->second == 0) continue;
        const double p = static_cast<double>(it->second) / static_cast<double>(total);
        entropy -= p * std::log(p);
    }
    return entropy / std::log(static_cast<double>(component_labels.size()));
}

namespace {

double histogram_rate(const std::map<std::string, std::size_t>& histogram,
                      const std::string& label) {
    std::size_t total = 0;
    for (const auto& [_, count] : histogram) total += count;
    if (total == 0) return 0.0;
    const auto it = histogram.find(label);
    return it == histogram.end() ? 0.0 : static_cast<double>(it->second) / total;
}

} // namespace

double SanityReport::aggregate_rate(const std::string& label) const {
    return histogram_rate(aggregate, label);
}

double SanityReport::reference_rate(const std::string& label) const {
    return histogram_rate(trained_reference, label);
}

double SanityReport::aggregate_positive_rate(const std::string& label) const {
    return histogram_rate(aggregate_positive, label);
}

double SanityReport::reference_positive_rate(const std::string& label) const {
    return histogram_rate(reference_positive, label);
}

SanityReport sanity_check(const ModelFactory& model_factory,
                          const std::vector<SanityInstance>& instances, std::size_t n_models,
                          const std::string& target_label, const ExplainConfig& config,
                          std::uint64_t base_seed, const Predictor* trained_reference) {
    if (n_models < 2) {
        throw Error(ErrorCode::invalid_argument, "sanity_check: n_models must be >= 2");
    }
    if (instances.empty()) {
        throw Error(ErrorCode::invalid_argument, "sanity_check: no snippets");
    }
    for (const auto& instance : instances) {
        if (!instance.decomposer) {
            throw Error(ErrorCode::invalid_argument, "sanity_check: missing decomposer");
        }
    }

    SanityReport report;
    report.snippets_per_model = instances.size();

    auto analyze_with = [&](const Predictor& predictor, std::map<std::string, std::size_t>& hist,
                            std::map<std::string, std::size_t>& positive_hist,
                            std::size_t& positive_total, const std::string& context) {
        for (std::size_t s = 0; s < instances.size(); ++s) {
            try {
                const ExplainResult result = explain_instance(
                    instances[s].audio, *instances[s].decomposer, predictor, target_label, config,
                    context + ":snippet-" + std::to_string(s));
                if (report.component_labels.empty()) {
                    report.component_labels = result.explanation.component_labels;
                }
                const std::string top = top_component_label(result.explanation);
                hist[top] += 1;

                const Prediction instance_prediction =
                    predictor.predict_batch({instances[s].audio}).at(0);
                const auto argmax = std::max_element(instance_prediction.probabilities.begin(),
                                                     instance_prediction.probabilities.end()) -
                                    instance_prediction.probabilities.begin();
                if (instance_prediction.labels[static_cast<std::size_t>(argmax)] == target_label) {
                    positive_hist[top] += 1;
                    ++positive_total;
                }
            } catch (const Error& err) {
                throw Error(err.code(), context + ", snippet " + std::to_string(s) + ": " +
                                            err.what());
            }
        }
    };

    for (std::size_t m = 0; m < n_models; ++m) {
        const std::uint64_t seed = derive_seed(base_seed, m);
        report.model_seeds.push_back(seed);
        const std::unique_ptr<Predictor> predictor = model_factory(seed);
        std::map<std::string, std::size_t> hist;
        analyze_with(*predictor, hist, report.aggregate_positive, report.aggregate_positive_total,
                     "model " + std::to_string(m));
        for (const auto& [label, count] : hist) report.aggregate[label] += count;
        report.per_model.push_back(std::move(hist));
    }

    if (trained_reference != nullptr) {
        analyze_with(*trained_reference, report.trained_reference, report.reference_positive,
                     report.reference_positive_total, "reference");
        report.has_reference = true;
    }

    report.normalized_entropy =
        normalized_selection_entropy(report.aggregate, report.component_labels);
    return report;
}

SanityReport sanity_check(const ModelFactory& model_factory,
                          const std::vector<AudioBuffer>& snippets, std::size_t n_models,
                          const Decomposer& decomposer, const std::string& target_label,
                          const ExplainConfig& config, std::uint64_t base_seed,
                          const Predictor* trained_reference) {
    const std::shared_ptr<const Decomposer> shared(&decomposer, [](const Decomposer*) {});
    std::vector<SanityInstance> instances;
    instances.reserve(snippets.size());
    for (const auto& snippet : snippets) instances.push_back({snippet, shared});
    return sanity_check(model_factory, instances, n_models, target_label, config, base_seed,
                        trained_reference);
}

void export_coefficients(const std::vector<Explanation>& explanations, const std::string& path) {
    CsvWriter csv(path);
    std::vector<std::string> header = {"instance_id", "target_label", "black_box_score"};
    if (!explanations.empty()) {
        for (const auto& label : explanations[0].component_labels) header.push_back(label);
    }
    csv.row(header);

    json rows = json::array();
    for (const auto& e : explanations) {
        std::vector<std::string> fields = {e.instance_id, e.target_label,
                                           csv_number(e.observed_score)};
        for (double c : e.coefficients) fields.push_back(csv_number(c));
        csv.row(fields);

        json row;
        row["instance_id"] = e.instance_id;
        row["target_label"] = e.target_label;
        row["black_box_score"] = e.observed_score;
        row["coefficients"] = e.coefficients;
        rows.push_back(std::move(row));
    }
    csv.close(path);

    json doc;
    doc["component_labels"] =
        explanations.empty() ? std::vector<std::string>{} : explanations[0].component_labels;
    doc["rows"] = std::move(rows);
    write_json_file(doc, csv_mirror_path(path));
}

void export_faithfulness(const std::vector<Explanation>& explanations, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"instance_id", "black_box_score", "surrogate_score", "faithfulness_r"});
    json rows = json::array();
    for (const auto& e : explanations) {
        const double surrogate = e.surrogate_score_at_instance();
        csv.row({e.instance_id, csv_number(e.observed_score), csv_number(surrogate),
                 csv_number(e.faithfulness_r)});
        json row;
        row["instance_id"] = e.instance_id;
        row["black_box_score"] = e.observed_score;
        row["surrogate_score"] = surrogate;
        row["faithfulness_r"] = e.faithfulness_r;
        rows.push_back(std::move(row));
    }
    csv.close(path);
    json doc;
    doc["rows"] = std::move(rows);
    write_json_file(doc, csv_mirror_path(path));
}

void export_global_summary(const GlobalSummary& summary, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"outcome", "component", "count"});
    for (const auto& [outcome, histogram] : summary.outcome_bins) {
        for (const auto& [label, count] : histogram) {
            csv.row({outcome, label, std::to_string(count)});
        }
    }
    csv.close(path);

    json doc;
    doc["component_labels"] = summary.component_labels;
    json bins = json::object();
    for (const auto& [outcome, histogram] : summary.outcome_bins) {
        bins[outcome] = histogram_to_json(histogram);
    }
    doc["outcome_bins"] = std::move(bins);
    json totals = json::object();
    for (const auto& [outcome, count] : summary.totals) totals[outcome] = count;
    doc["totals"] = std::move(totals);
    write_json_file(doc, csv_mirror_path(path));
}

void export_sanity_report(const SanityReport& report, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"model", "component", "count"});
    for (std::size_t m = 0; m < report.per_model.size(); ++m) {
        for (const auto& [label, count] : report.per_model[m]) {
            csv.row({"model-" + std::to_string(m), label, std::to_string(count)});
        }
    }
    for (const auto& [label, count] : report.aggregate) {
        csv.row({"aggregate", label, std::to_string(count)});
    }
    for (const auto& [label, count] : report.aggregate_positive) {
        csv.row({"aggregate-predicted-target", label, std::to_string(count)});
    }
    if (report.has_reference) {
        for (const auto& [label, count] : report.trained_reference) {
            csv.row({"reference", label, std::to_string(count)});
        }
        for (const auto& [label, count] : report.reference_positive) {
            csv.row({"reference-predicted-target", label, std::to_string(count)});
        }
    }
    csv.close(path);

    json doc;
    doc["component_labels"] = report.component_labels;
    doc["model_seeds"] = report.model_seeds;
    doc["snippets_per_model"] = report.snippets_per_model;
    json per_model = json::array();
    for (const auto& hist : report.per_model) per_model.push_back(histogram_to_json(hist));
    doc["per_model"] = std::move(per_model);
    doc["aggregate"] = histogram_to_json(report.aggregate);
    doc["aggregate_predicted_target"] = histogram_to_json(report.aggregate_positive);
    doc["aggregate_predicted_target_total"] = report.aggregate_positive_total;
    if (report.has_reference) {
        doc["trained_reference"] = histogram_to_json(report.trained_reference);
        doc["reference_predicted_target"] = histogram_to_json(report.reference_positive);
        doc["reference_predicted_target_total"] = report.reference_positive_total;
    }
    doc["normalized_entropy"] = report.normalized_entropy;
    write_json_file(doc, csv_mirror_path(path));
}

} // namespace audexplain
