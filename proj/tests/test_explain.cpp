#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "audexplain/explain.hpp"
#include "audexplain/rng.hpp"

#include "test_support.hpp"

#include <cmath>
#include <set>

using namespace audexplain;
using namespace test_support;

namespace {

Neighborhood exhaustive_neighborhood(std::size_t d_prime,
                                     const std::function<double(const InterpretableMask&)>& fn) {
    Neighborhood nb;
    nb.masks = enumerate_neighborhood(d_prime, std::size_t{1} << d_prime, 0);
    nb.exhaustive = true;
    for (const auto& mask : nb.masks) nb.responses.push_back(fn(mask));
    nb.proximity.assign(nb.masks.size(), 1.0);
    return nb;
}

class ConstantPredictor final : public Predictor {
public:
    std::vector<std::string> labels() const override { return {"x", "y"}; }
    std::vector<Prediction> predict_batch(const std::vector<AudioBuffer>& batch) const override {
        std::vector<Prediction> out(batch.size());
        for (auto& p : out) {
            p.labels = labels();
            p.probabilities = {0.3, 0.7};
        }
        return out;
    }
    std::string name() const override { return "constant"; }
};

} // namespace

TEST_CASE("enumerate_neighborhood") {
    SUBCASE("d' = 4 with room for 2^4 is exhaustive, all-ones first") {
        const auto masks = enumerate_neighborhood(4, 1000, 0);
        REQUIRE(masks.size() == 16);
        CHECK(masks[0] == InterpretableMask::all_ones(4));
        std::set<std::vector<std::uint8_t>> unique;
        for (const auto& m : masks) unique.insert(m.bits);
        CHECK(unique.size() == 16);
        // ascending binary order after the instance mask
        CHECK(masks[1].bits == std::vector<std::uint8_t>{0, 0, 0, 0});
        CHECK(masks[2].bits == std::vector<std::uint8_t>{1, 0, 0, 0});
        CHECK(masks[3].bits == std::vector<std::uint8_t>{0, 1, 0, 0});
    }

    SUBCASE("d' = 1 gives {1}, {0}") {
        const auto masks = enumerate_neighborhood(1, 2, 0);
        REQUIRE(masks.size() == 2);
        CHECK(masks[0].bits == std::vector<std::uint8_t>{1});
        CHECK(masks[1].bits == std::vector<std::uint8_t>{0});
    }

    SUBCASE("d' = 20 sampled: n_max distinct masks, reproducible") {
        const auto a = enumerate_neighborhood(20, 512, 1234);
        const auto b = enumerate_neighborhood(20, 512, 1234);
        const auto c = enumerate_neighborhood(20, 512, 999);
        REQUIRE(a.size() == 512);
        CHECK(a[0] == InterpretableMask::all_ones(20));
        std::set<std::vector<std::uint8_t>> unique;
        for (const auto& m : a) unique.insert(m.bits);
        CHECK(unique.size() == 512);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
        bool any_differ = false;
        for (std::size_t i = 1; i < a.size(); ++i) any_differ = any_differ || !(a[i] == c[i]);
        CHECK(any_differ);
    }

    SUBCASE("narrow margin between space and n_max still yields distinct masks") {
        const auto masks = enumerate_neighborhood(5, 24, 7); // 2^5 = 32 > 24
        REQUIRE(masks.size() == 24);
        std::set<std::vector<std::uint8_t>> unique;
        for (const auto& m : masks) unique.insert(m.bits);
        CHECK(unique.size() == 24);
    }

    SUBCASE("preconditions") {
        CHECK_THROWS_AS(enumerate_neighborhood(0, 10, 0), Error);
        CHECK_THROWS_AS(enumerate_neighborhood(3, 1, 0), Error);
    }
}

TEST_CASE("proximity_weights") {
    const auto masks = enumerate_neighborhood(4, 16, 0);

    SUBCASE("uniform is all ones") {
        const auto w = proximity_weights(masks, {KernelKind::uniform, 0.25});
        for (double v : w) CHECK(v == 1.0);
    }

    SUBCASE("exponential: all-ones mask weighs 1, all-zeros weighs exp(-16)") {
        const auto w = proximity_weights(masks, {KernelKind::exponential, 0.25});
        CHECK(w[0] == 1.0); // D = 0
        // find the all-zeros mask
        for (std::size_t i = 0; i < masks.size(); ++i) {
            bool all_zero = true;
            for (auto b : masks[i].bits) all_zero = all_zero && b == 0;
            if (all_zero) {
                CHECK(w[i] == doctest::Approx(std::exp(-16.0)).epsilon(1e-12));
                CHECK(w[i] == doctest::Approx(1.125e-7).epsilon(0.01));
            }
        }
    }

    SUBCASE("width <= 0 errors") {
        CHECK_THROWS_AS(proximity_weights(masks, {KernelKind::exponential, 0.0}), Error);
    }
}

TEST_CASE("fit_surrogate") {
    SUBCASE("affine response recovers (0.8, 0, 0) + 0.1 with r = 1") {
        const Neighborhood nb = exhaustive_neighborhood(
            3, [](const InterpretableMask& m) { return 0.8 * m.bits[0] + 0.1; });
        const Explanation e = fit_surrogate(nb, 0.0);
        CHECK(e.coefficients[0] == doctest::Approx(0.8).epsilon(1e-10));
        CHECK(e.coefficients[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
        CHECK(std::fabs(e.coefficients[2]) <= 1e-10);
        CHECK(e.intercept == doctest::Approx(0.1).epsilon(1e-10));
        CHECK(e.faithfulness_defined);
        CHECK(e.faithfulness_r == doctest::Approx(1.0).epsilon(1e-6));

        // independent oracle agrees
        const WlsOracle oracle = brute_force_wls(nb.masks, nb.responses, nb.proximity, 0.0);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(std::fabs(e.coefficients[k] - oracle.coefficients[k]) <= 1e-10);
        }
    }

    SUBCASE("constant responses: zero coefficients, intercept = constant, r flagged") {
        const Neighborhood nb =
            exhaustive_neighborhood(3, [](const InterpretableMask&) { return 0.42; });
        const Explanation e = fit_surrogate(nb, 0.0);
        for (double c : e.coefficients) CHECK(std::fabs(c) <= 1e-12);
        CHECK(e.intercept == doctest::Approx(0.42));
        CHECK_FALSE(e.faithfulness_defined);
        CHECK(e.faithfulness_r == 0.0);
    }

    SUBCASE("scaling responses scales coefficients, argmax unchanged") {
        Rng rng(50);
        Neighborhood nb = exhaustive_neighborhood(4, [&rng](const InterpretableMask&) {
            return rng.uniform(0.0, 1.0);
        });
        const Explanation base = fit_surrogate(nb, 0.0);
        Neighborhood scaled = nb;
        for (double& y : scaled.responses) y *= 3.5;
        const Explanation e = fit_surrogate(scaled, 0.0);
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(e.coefficients[k] == doctest::Approx(3.5 * base.coefficients[k]).epsilon(1e-9));
        }
        CHECK(top_component(e) == top_component(base));
    }

    SUBCASE("rank-deficient design at lambda = 0 advises ridge") {
        Neighborhood nb;
        nb.masks = {InterpretableMask::all_ones(3), InterpretableMask::all_ones(3),
                    InterpretableMask::all_ones(3), InterpretableMask::all_ones(3)};
        nb.responses = {0.1, 0.2, 0.3, 0.4};
        nb.proximity.assign(4, 1.0);
        try {
            fit_surrogate(nb, 0.0);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::singular_system);
            CHECK(std::string(e.what()).find("ridge_lambda > 0") != std::string::npos);
        }
        CHECK_NOTHROW(fit_surrogate(nb, 1e-3));
    }

    SUBCASE("too few neighbors for lambda = 0") {
        Neighborhood nb;
        nb.masks = {InterpretableMask::all_ones(3), InterpretableMask{{0, 1, 0}}};
        nb.responses = {1.0, 0.5};
        nb.proximity = {1.0, 1.0};
        CHECK_THROWS_AS(fit_surrogate(nb, 0.0), Error);
        CHECK_NOTHROW(fit_surrogate(nb, 1e-3));
    }
}

TEST_CASE("fit_surrogate matches the brute-force oracle on random problems") {
    Rng rng(60);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform_index(5)); // 2..6
        Neighborhood nb;
        nb.masks = enumerate_neighborhood(d, std::size_t{1} << d, 0);
        nb.exhaustive = true;
        for (std::size_t i = 0; i < nb.masks.size(); ++i) {
            nb.responses.push_back(rng.uniform(0.0, 1.0));
        }
        // alternate between uniform and positive random weights, and between
        // lambda = 0 and a small ridge
        const bool uniform = trial % 2 == 0;
        for (std::size_t i = 0; i < nb.masks.size(); ++i) {
            nb.proximity.push_back(uniform ? 1.0 : rng.uniform(0.05, 2.0));
        }
        const double lambda = trial % 3 == 0 ? 0.0 : 1e-3;

        const Explanation e = fit_surrogate(nb, lambda);
        const WlsOracle oracle = brute_force_wls(nb.masks, nb.responses, nb.proximity, lambda);
        for (std::size_t k = 0; k < d; ++k) {
            CHECK(std::fabs(e.coefficients[k] - oracle.coefficients[k]) <= 1e-8);
        }
        CHECK(std::fabs(e.intercept - oracle.intercept) <= 1e-8);
    }
}

TEST_CASE("monotone sensitivity: averaging out a component zeroes its coefficient") {
    Rng rng(61);
    const std::size_t d = 4;
    Neighborhood nb;
    nb.masks = enumerate_neighborhood(d, 16, 0);
    nb.exhaustive = true;
    nb.proximity.assign(16, 1.0);
    std::map<std::vector<std::uint8_t>, double> raw;
    for (const auto& m : nb.masks) raw[m.bits] = rng.uniform(0.0, 1.0);

    // replace the dependence on component 2 by its mean over that bit
    for (const auto& m : nb.masks) {
        auto flipped = m.bits;
        flipped[2] = m.bits[2] ? 0 : 1;
        nb.responses.push_back(0.5 * (raw[m.bits] + raw[flipped]));
    }
    const Explanation e = fit_surrogate(nb, 0.0);
    CHECK(std::fabs(e.coefficients[2]) <= 1e-6);
}

TEST_CASE("top_component") {
    Explanation e;
    e.component_labels = {"a", "b", "c"};

    e.coefficients = {0.2, -0.5, 0.7};
    CHECK(top_component(e) == std::size_t{2});
    CHECK(top_component_label(e) == "c");

    e.coefficients = {-0.1, -0.2, -0.3};
    CHECK_FALSE(top_component(e).has_value());
    CHECK(top_component_label(e) == kNonePositive);

    e.coefficients = {0.4, 0.4, 0.1};
    CHECK(top_component(e) == std::size_t{0}); // tie -> lowest index
}

TEST_CASE("explain_instance end to end") {
    const int rate = 16000;
    std::vector<LabeledBuffer> stems = {
        {"bass", make_sine(110.0, 2.0, rate, 0.4)},
        {"mid", make_sine(440.0, 2.0, rate, 0.4)},
        {"treble", make_sine(1760.0, 2.0, rate, 0.4)},
    };
    std::vector<double> acc(stems[0].audio.size(), 0.0);
    for (const auto& s : stems) accumulate(acc, s.audio);
    const AudioBuffer mix = to_buffer(acc, rate);
    const OracleDecomposer decomposer(stems);

    ExplainConfig config;
    config.n_max = 64;
    config.ridge_lambda = 0.0;

    SUBCASE("constant black box gives all-zero coefficients") {
        const ConstantPredictor predictor;
        const ExplainResult r = explain_instance(mix, decomposer, predictor, "y", config);
        for (double c : r.explanation.coefficients) CHECK(std::fabs(c) <= 1e-12);
        CHECK(top_component_label(r.explanation) == kNonePositive);
    }

    SUBCASE("energy-of-component-k black box puts k strictly on top") {
        // response = correlation of the remix with stem k, so only the mask
        // bit of component k moves the score
        class StemCorrelationPredictor final : public Predictor {
        public:
            StemCorrelationPredictor(AudioBuffer stem) : stem_(std::move(stem)) {}
            std::vector<std::string> labels() const override { return {"off", "on"}; }
            std::vector<Prediction> predict_batch(
                const std::vector<AudioBuffer>& batch) const override {
                std::vector<Prediction> out;
                for (const auto& b : batch) {
                    double corr = 0.0;
                    for (std::size_t i = 0; i < b.size(); ++i) {
                        corr += static_cast<double>(b.samples[i]) * stem_.samples[i];
                    }
                    const double score = std::min(1.0, std::max(0.0, corr / 6400.0));
                    Prediction p;
                    p.labels = labels();
                    p.probabilities = {1.0 - score, score};
                    out.push_back(std::move(p));
                }
                return out;
            }
            std::string name() const override { return "stem-corr"; }

        private:
            AudioBuffer stem_;
        };

        for (std::size_t k = 0; k < 3; ++k) {
            const StemCorrelationPredictor predictor(stems[k].audio);
            const ExplainResult r = explain_instance(mix, decomposer, predictor, "on", config);
            const auto top = top_component(r.explanation);
            REQUIRE(top.has_value());
            CHECK(*top == k);
            for (std::size_t j = 0; j < 3; ++j) {
                if (j != k) CHECK(r.explanation.coefficients[k] > r.explanation.coefficients[j]);
            }
            // verified against the closed-form fit on the same neighborhood
            Neighborhood nb;
            nb.masks = enumerate_neighborhood(3, config.n_max, config.seed);
            for (const auto& m : nb.masks) {
                nb.responses.push_back(
                    predictor.predict_batch({remix(r.decomposition, m, true)})[0].probability_of(
                        "on"));
            }
            nb.proximity.assign(nb.masks.size(), 1.0);
            const WlsOracle oracle = brute_force_wls(nb.masks, nb.responses, nb.proximity, 0.0);
            for (std::size_t j = 0; j < 3; ++j) {
                CHECK(std::fabs(r.explanation.coefficients[j] - oracle.coefficients[j]) <= 1e-8);
            }
        }
    }

    SUBCASE("same seed twice gives identical explanations") {
        const ConstantPredictor predictor;
        const ExplainResult a = explain_instance(mix, decomposer, predictor, "y", config, "id-1");
        const ExplainResult b = explain_instance(mix, decomposer, predictor, "y", config, "id-1");
        CHECK(a.explanation.coefficients == b.explanation.coefficients);
        CHECK(a.explanation.intercept == b.explanation.intercept);
        CHECK(explanation_to_json(a.explanation) == explanation_to_json(b.explanation));
    }

    SUBCASE("unknown target label is rejected up front") {
        const ConstantPredictor predictor;
        CHECK_THROWS_AS(explain_instance(mix, decomposer, predictor, "nope", config), Error);
    }

    SUBCASE("tau = 2 doubles the coefficient count") {
        const ConstantPredictor predictor;
        ExplainConfig seg = config;
        seg.tau = 2;
        const ExplainResult r = explain_instance(mix, decomposer, predictor, "y", seg);
        CHECK(r.explanation.coefficients.size() == 6);
        CHECK(r.explanation.component_labels[0] == "bass:0");
        CHECK(r.explanation.component_labels[1] == "bass:1");
    }

    SUBCASE("stage tags on propagated errors") {
        const ConstantPredictor predictor;
        ExplainConfig bad = config;
        bad.n_max = 1; // violates enumerate precondition
        try {
            explain_instance(mix, decomposer, predictor, "y", bad);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("neighborhood") != std::string::npos);
        }
    }
}

TEST_CASE("permutation equivariance") {
    Rng rng(62);
    const std::size_t d = 4;
    Neighborhood nb;
    nb.masks = enumerate_neighborhood(d, 16, 0);
    nb.exhaustive = true;
    nb.proximity.assign(16, 1.0);
    for (const auto& m : nb.masks) {
        nb.responses.push_back(0.6 * m.bits[0] + 0.3 * m.bits[2] - 0.2 * m.bits[3] +
                               0.1 * rng.uniform());
    }
    const Explanation base = fit_surrogate(nb, 0.0);

    // permute component order (reverse) in the masks
    Neighborhood permuted = nb;
    for (auto& mask : permuted.masks) {
        std::reverse(mask.bits.begin(), mask.bits.end());
    }
    const Explanation flipped = fit_surrogate(permuted, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        CHECK(flipped.coefficients[d - 1 - k] == doctest::Approx(base.coefficients[k]).epsilon(1e-9));
    }
    const auto top_base = top_component(base);
    const auto top_flipped = top_component(flipped);
    REQUIRE(top_base.has_value());
    REQUIRE(top_flipped.has_value());
    CHECK(*top_flipped == d - 1 - *top_base);
}

TEST_CASE("render_explanation") {
    const int rate = 16000;
    std::vector<LabeledBuffer> stems = {
        {"a", make_sine(220.0, 0.5, rate, 0.3)},
        {"b", make_sine(440.0, 0.5, rate, 0.3)},
        {"c", make_sine(880.0, 0.5, rate, 0.3)},
    };
    std::vector<double> acc(stems[0].audio.size(), 0.0);
    for (const auto& s : stems) accumulate(acc, s.audio);
    const Decomposition d = oracle_decompose(to_buffer(acc, rate), stems);

    Explanation e;
    e.component_labels = {"a", "b", "c"};

    SUBCASE("k = d' with all positive = mix minus residual") {
        e.coefficients = {0.3, 0.2, 0.1};
        const AudioBuffer out = render_explanation(d, e, 3);
        const AudioBuffer expected = remix(d, InterpretableMask::all_ones(3), false);
        CHECK(out.samples == expected.samples);
    }

    SUBCASE("k = 1 renders the single top component") {
        e.coefficients = {0.1, 0.9, 0.2};
        const AudioBuffer out = render_explanation(d, e, 1);
        CHECK(out.samples == d.components[1].audio.samples);
    }

    SUBCASE("render equals remix of the selected mask") {
        e.coefficients = {0.5, -0.1, 0.4};
        const AudioBuffer out = render_explanation(d, e, 2);
        InterpretableMask mask;
        mask.bits = {1, 0, 1};
        CHECK(out.samples == remix(d, mask, false).samples);
    }

    SUBCASE("no positive coefficients errors") {
        e.coefficients = {-0.5, -0.1, -0.4};
        CHECK_THROWS_AS(render_explanation(d, e, 2), Error);
    }
}
