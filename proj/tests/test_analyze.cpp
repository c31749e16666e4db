#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "audexplain/analyze.hpp"

#include "test_support.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace audexplain;
using namespace test_support;
using nlohmann::json;

namespace {

Explanation make_explanation(std::vector<double> coefficients, const std::string& id = "",
                             double score = 0.5) {
    Explanation e;
    e.coefficients = std::move(coefficients);
    e.component_labels = {"bass", "drums", "lead"};
    e.component_labels.resize(e.coefficients.size() <= 3 ? e.coefficients.size() : 3);
    while (e.component_labels.size() < e.coefficients.size()) {
        e.component_labels.push_back("x" + std::to_string(e.component_labels.size()));
    }
    e.instance_id = id;
    e.observed_score = score;
    e.target_label = "guitar";
    e.intercept = 0.05;
    e.n = 8;
    return e;
}

std::string slurp(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    std::ostringstream out;
    out << file.rdbuf();
    return out.str();
}

class ConstantPredictor final : public Predictor {
public:
    explicit ConstantPredictor(double score) : score_(score) {}
    std::vector<std::string> labels() const override { return {"neg", "pos"}; }
    std::vector<Prediction> predict_batch(const std::vector<AudioBuffer>& batch) const override {
        std::vector<Prediction> out(batch.size());
        for (auto& p : out) {
            p.labels = labels();
            p.probabilities = {1.0 - score_, score_};
        }
        return out;
    }
    std::string name() const override { return "const"; }

private:
    double score_;
};

} // namespace

TEST_CASE("aggregate_top_components") {
    SUBCASE("ten drums-on-top false negatives") {
        std::vector<Explanation> explanations(10, make_explanation({0.1, 0.9, 0.2}));
        std::vector<std::string> outcomes(10, "FN");
        const GlobalSummary s = aggregate_top_components(explanations, outcomes);
        REQUIRE(s.outcome_bins.count("FN") == 1);
        CHECK(s.outcome_bins.at("FN").at("drums") == 10);
        CHECK(s.totals.at("FN") == 10);
    }

    SUBCASE("empty input gives an empty summary") {
        const GlobalSummary s = aggregate_top_components({}, {});
        CHECK(s.outcome_bins.empty());
        CHECK(s.totals.empty());
    }

    SUBCASE("histogram counts sum to the bin totals") {
        std::vector<Explanation> explanations = {
            make_explanation({0.5, 0.1, 0.0}), make_explanation({-1.0, -0.5, -0.2}),
            make_explanation({0.0, 0.0, 0.3}), make_explanation({0.2, 0.9, 0.1})};
        std::vector<std::string> outcomes = {"TP", "TP", "FP", "TP"};
        const GlobalSummary s = aggregate_top_components(explanations, outcomes);
        for (const auto& [outcome, histogram] : s.outcome_bins) {
            std::size_t total = 0;
            for (const auto& [_, count] : histogram) total += count;
            CHECK(total == s.totals.at(outcome));
        }
        CHECK(s.outcome_bins.at("TP").at(kNonePositive) == 1);
    }

    SUBCASE("mixed component orderings error") {
        Explanation odd = make_explanation({0.1, 0.2, 0.3});
        odd.component_labels = {"drums", "bass", "lead"};
        std::vector<Explanation> explanations = {make_explanation({0.1, 0.2, 0.3}), odd};
        CHECK_THROWS_AS(aggregate_top_components(explanations, {"TP", "TP"}), Error);
    }

    SUBCASE("order independence") {
        std::vector<Explanation> explanations = {
            make_explanation({0.5, 0.1, 0.0}), make_explanation({0.0, 0.7, 0.0}),
            make_explanation({0.1, 0.0, 0.8}), make_explanation({-0.1, -0.2, -0.3})};
        std::vector<std::string> outcomes = {"TP", "FN", "TP", "FP"};
        const GlobalSummary a = aggregate_top_components(explanations, outcomes);
        std::reverse(explanations.begin(), explanations.end());
        std::reverse(outcomes.begin(), outcomes.end());
        const GlobalSummary b = aggregate_top_components(explanations, outcomes);
        CHECK(a.outcome_bins == b.outcome_bins);
        CHECK(a.totals == b.totals);
    }

    SUBCASE("length mismatch errors") {
        CHECK_THROWS_AS(
            aggregate_top_components({make_explanation({0.1, 0.2, 0.3})}, {"TP", "FP"}), Error);
    }
}

TEST_CASE("normalized_selection_entropy") {
    const std::vector<std::string> labels = {"a", "b", "c"};

    std::map<std::string, std::size_t> flat = {{"a", 10}, {"b", 10}, {"c", 10}};
    CHECK(normalized_selection_entropy(flat, labels) == doctest::Approx(1.0));

    std::map<std::string, std::size_t> peaked = {{"a", 30}};
    CHECK(normalized_selection_entropy(peaked, labels) == doctest::Approx(0.0));

    std::map<std::string, std::size_t> with_none = {{"a", 10}, {"b", 10}, {kNonePositive, 50}};
    // none-positive is excluded from the selection distribution
    CHECK(normalized_selection_entropy(with_none, labels) ==
          doctest::Approx(std::log(2.0) / std::log(3.0)));

    CHECK(normalized_selection_entropy({}, labels) == 0.0);
}

TEST_CASE("export_coefficients") {
    TempDir dir("export-coef");

    SUBCASE("rows x columns match explanations x (3 + d')") {
        std::vector<Explanation> explanations;
        for (int i = 0; i < 5; ++i) {
            explanations.push_back(
                make_explanation({0.1 * i, 0.2, 0.3, -0.1, 0.05}, "snip-" + std::to_string(i)));
        }
        export_coefficients(explanations, dir.str("coef.csv"));
        const std::string text = slurp(dir.str("coef.csv"));
        std::size_t rows = 0, pos = 0;
        while ((pos = text.find("\r\n", pos)) != std::string::npos) {
            ++rows;
            pos += 2;
        }
        CHECK(rows == 6); // header + 5
        const std::string header = text.substr(0, text.find("\r\n"));
        CHECK(std::count(header.begin(), header.end(), ',') == 7); // 8 columns
        CHECK(header.substr(0, 11) == "instance_id");

        // JSON mirror exists and carries the same rows
        const json mirror = json::parse(slurp(dir.str("coef.json")));
        CHECK(mirror.at("rows").size() == 5);
        CHECK(mirror.at("rows")[0].at("instance_id") == "snip-0");
    }

    SUBCASE("zero explanations give a header-only file") {
        export_coefficients({}, dir.str("empty.csv"));
        const std::string text = slurp(dir.str("empty.csv"));
        CHECK(text == "instance_id,target_label,black_box_score\r\n");
    }

    SUBCASE("478 explanations over 5 components: 478 rows x 8 columns") {
        std::vector<Explanation> explanations;
        for (int i = 0; i < 478; ++i) {
            explanations.push_back(
                make_explanation({0.1, 0.2, 0.3, 0.4, 0.5}, "t" + std::to_string(i)));
        }
        export_coefficients(explanations, dir.str("global.csv"));
        const std::string text = slurp(dir.str("global.csv"));
        std::size_t rows = 0, pos = 0;
        while ((pos = text.find("\r\n", pos)) != std::string::npos) {
            ++rows;
            pos += 2;
        }
        CHECK(rows == 479); // header + 478
        const std::string header = text.substr(0, text.find("\r\n"));
        CHECK(std::count(header.begin(), header.end(), ',') == 7); // 3 + 5 columns
    }

    SUBCASE("column order equals component order") {
        Explanation e = make_explanation({1.0, 2.0, 3.0}, "one");
        export_coefficients({e}, dir.str("order.csv"));
        const std::string text = slurp(dir.str("order.csv"));
        CHECK(text.find("bass,drums,lead") != std::string::npos);
        CHECK(text.find("1,2,3") != std::string::npos);
    }
}

TEST_CASE("export_faithfulness") {
    TempDir dir("export-faith");
    std::vector<Explanation> explanations;
    for (int i = 0; i < 4; ++i) {
        Explanation e = make_explanation({0.3, 0.2, 0.1}, "s" + std::to_string(i), 0.65);
        e.faithfulness_r = 1.0;
        e.faithfulness_defined = true;
        explanations.push_back(e);
    }
    export_faithfulness(explanations, dir.str("faith.csv"));
    const std::string text = slurp(dir.str("faith.csv"));
    std::size_t rows = 0, pos = 0;
    while ((pos = text.find("\r\n", pos)) != std::string::npos) {
        ++rows;
        pos += 2;
    }
    CHECK(rows == 5);
    // surrogate score at all-ones = intercept + sum(coefficients)
    CHECK(text.find("0.65,0.65") != std::string::npos);
    CHECK(text.find(",1\r\n") != std::string::npos);

    export_faithfulness({}, dir.str("empty.csv"));
    CHECK(slurp(dir.str("empty.csv")) ==
          "instance_id,black_box_score,surrogate_score,faithfulness_r\r\n");
}

TEST_CASE("sanity_check") {
    const std::vector<AudioBuffer> snippets = {make_sine(300.0, 0.5, 16000, 0.5),
                                               make_sine(600.0, 0.5, 16000, 0.5),
                                               make_noise(8000, 16000, 40, 0.4)};
    std::vector<LabeledBuffer> stems;
    // one shared decomposer: HPSS works on any input
    const HpssDecomposer decomposer;
    ExplainConfig config;
    config.n_max = 8;

    SUBCASE("constant predictors select none-positive everywhere") {
        const auto factory = [](std::uint64_t) {
            return std::make_unique<ConstantPredictor>(0.7);
        };
        const SanityReport report =
            sanity_check(factory, snippets, 3, decomposer, "pos", config, 5);
        REQUIRE(report.per_model.size() == 3);
        for (const auto& hist : report.per_model) {
            std::size_t total = 0;
            for (const auto& [_, count] : hist) total += count;
            CHECK(total == snippets.size()); // invariant: sums to snippet count
            CHECK(hist.at(kNonePositive) == snippets.size());
        }
        CHECK(report.aggregate.at(kNonePositive) == 9);
        CHECK(report.normalized_entropy == 0.0);
    }

    SUBCASE("factory ignoring the seed gives identical per-model histograms") {
        const auto factory = [&snippets](std::uint64_t) {
            // deterministic pseudo-model: scores by buffer energy
            class EnergyPredictor final : public Predictor {
            public:
                std::vector<std::string> labels() const override { return {"neg", "pos"}; }
                std::vector<Prediction> predict_batch(
                    const std::vector<AudioBuffer>& batch) const override {
                    std::vector<Prediction> out;
                    for (const auto& b : batch) {
                        const double e = std::min(1.0, buffer_energy(b) / 2000.0);
                        Prediction p;
                        p.labels = labels();
                        p.probabilities = {1.0 - e, e};
                        out.push_back(std::move(p));
                    }
                    return out;
                }
                std::string name() const override { return "energy"; }
            };
            (void)snippets;
            return std::make_unique<EnergyPredictor>();
        };
        const SanityReport report =
            sanity_check(factory, snippets, 4, decomposer, "pos", config, 6);
        for (std::size_t m = 1; m < report.per_model.size(); ++m) {
            CHECK(report.per_model[m] == report.per_model[0]);
        }
    }

    SUBCASE("n_models < 2 errors") {
        const auto factory = [](std::uint64_t) {
            return std::make_unique<ConstantPredictor>(0.5);
        };
        CHECK_THROWS_AS(sanity_check(factory, snippets, 1, decomposer, "pos", config, 0), Error);
    }

    SUBCASE("report exports cleanly") {
        TempDir dir("sanity-export");
        const auto factory = [](std::uint64_t) {
            return std::make_unique<ConstantPredictor>(0.6);
        };
        const SanityReport report =
            sanity_check(factory, snippets, 2, decomposer, "pos", config, 7);
        export_sanity_report(report, dir.str("sanity.csv"));
        const json mirror = json::parse(slurp(dir.str("sanity.json")));
        CHECK(mirror.at("per_model").size() == 2);
        CHECK(mirror.at("snippets_per_model") == snippets.size());
        const std::string csv = slurp(dir.str("sanity.csv"));
        CHECK(csv.find("model,component,count") == 0);
        CHECK(csv.find("aggregate,") != std::string::npos);
    }
}

TEST_CASE("csv_mirror_path") {
    CHECK(csv_mirror_path("out/coef.csv") == "out/coef.json");
    CHECK(csv_mirror_path("plain") == "plain.json");
    CHECK(csv_mirror_path("a.b/data") == "a.b/data.json");
}

TEST_CASE("csv escaping follows RFC 4180") {
    TempDir dir("csv-escape");
    Explanation e = make_explanation({0.1}, "needs,\"quoting\"");
    e.component_labels = {"bass"};
    export_coefficients({e}, dir.str("esc.csv"));
    const std::string text = slurp(dir.str("esc.csv"));
    CHECK(text.find("\"needs,\"\"quoting\"\"\"") != std::string::npos);
}
