#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "audexplain/predict.hpp"
#include "audexplain/rng.hpp"
#include "audexplain/signal.hpp"

#include "test_support.hpp"

#include <cmath>

using namespace audexplain;
using namespace test_support;

namespace {

// Perceptron oracle: proves a labeled feature set is linearly separable by
// actually finding a separating hyperplane. Independent of the trainer.
bool perceptron_separable(const std::vector<std::vector<double>>& features,
                          const std::vector<int>& signs, std::size_t max_rounds = 2000) {
    const std::size_t d = features[0].size();
    std::vector<double> w(d + 1, 0.0);
    for (std::size_t round = 0; round < max_rounds; ++round) {
        bool clean = true;
        for (std::size_t i = 0; i < features.size(); ++i) {
            double activation = w[d];
            for (std::size_t k = 0; k < d; ++k) activation += w[k] * features[i][k];
            if (signs[i] * activation <= 0.0) {
                for (std::size_t k = 0; k < d; ++k) w[k] += signs[i] * features[i][k];
                w[d] += signs[i];
                clean = false;
            }
        }
        if (clean) return true;
    }
    return false;
}

std::vector<LabeledAudio> tone_dataset(double freq_low, double freq_high, std::size_t per_class,
                                       std::uint64_t seed) {
    std::vector<LabeledAudio> out;
    Rng rng(seed);
    for (std::size_t i = 0; i < per_class; ++i) {
        const double jitter_low = freq_low * (1.0 + 0.05 * rng.uniform(-1.0, 1.0));
        const double jitter_high = freq_high * (1.0 + 0.05 * rng.uniform(-1.0, 1.0));
        out.push_back({make_sine(jitter_low, 2.0, 16000, 0.5 + 0.2 * rng.uniform()), "low"});
        out.push_back({make_sine(jitter_high, 2.0, 16000, 0.5 + 0.2 * rng.uniform()), "high"});
    }
    return out;
}

double model_accuracy(const LinearClassifier& model, const std::vector<LabeledAudio>& set) {
    std::vector<AudioBuffer> audio;
    for (const auto& ex : set) audio.push_back(ex.audio);
    const auto predictions = predict(model, audio);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& p = predictions[i];
        const auto argmax = std::max_element(p.probabilities.begin(), p.probabilities.end()) -
                            p.probabilities.begin();
        if (p.labels[static_cast<std::size_t>(argmax)] == set[i].label) ++hits;
    }
    return static_cast<double>(hits) / set.size();
}

} // namespace

TEST_CASE("extract_features") {
    SUBCASE("silence -> constant log(1e-10) before standardization") {
        AudioBuffer silent;
        silent.sample_rate = 16000;
        silent.samples.assign(32000, 0.0f);
        const auto f = extract_features(silent);
        REQUIRE(f.size() == 128);
        for (double v : f) CHECK(v == doctest::Approx(std::log(1e-10)).epsilon(1e-12));
    }

    SUBCASE("mean pooling: features equal the frame-mean computed directly") {
        const AudioBuffer x = make_noise(32000, 16000, 21, 0.6);
        const MelSpectrogram mel = mel_spectrogram(x);
        const auto f = extract_features(x);
        REQUIRE(f.size() == mel.n_mels);
        for (std::size_t m = 0; m < mel.n_mels; ++m) {
            double mean = 0.0;
            for (std::size_t t = 0; t < mel.num_frames; ++t) mean += mel.at(m, t);
            mean /= static_cast<double>(mel.num_frames);
            CHECK(f[m] == doctest::Approx(mean).epsilon(1e-12));
        }
    }

    SUBCASE("mean pooling: feature(x ++ x) == feature(x) within 1e-3") {
        // Padding-invariant content (every analysis frame sees the same
        // thing), so pooling twice the frames must not move the mean.
        AudioBuffer x;
        x.sample_rate = 16000;
        x.samples.assign(32256, 0.7f); // multiple of the hop
        AudioBuffer xx = x;
        xx.samples.insert(xx.samples.end(), x.samples.begin(), x.samples.end());
        const auto fx = extract_features(x);
        const auto fxx = extract_features(xx);
        for (std::size_t i = 0; i < fx.size(); ++i) {
            CHECK(std::fabs(fx[i] - fxx[i]) <= 1e-3);
        }
    }

    SUBCASE("deterministic signals give identical features") {
        const auto f1 = extract_features(make_sine(440.0, 2.0, 16000));
        const auto f2 = extract_features(make_sine(440.0, 2.0, 16000));
        CHECK(f1 == f2);
    }

    SUBCASE("too-short input and wrong rate error") {
        CHECK_THROWS_AS(extract_features(make_noise(512, 16000, 1)), Error);
        CHECK_THROWS_AS(extract_features(make_noise(32000, 44100, 1)), Error);
    }
}

TEST_CASE("train_builtin") {
    const auto train = tone_dataset(300.0, 2500.0, 12, 100);
    const auto valid = tone_dataset(300.0, 2500.0, 4, 101);

    SUBCASE("separable tones train to accuracy 1.0") {
        // oracle first: confirm the feature clusters really are separable
        std::vector<std::vector<double>> features;
        std::vector<int> signs;
        for (const auto& ex : train) {
            features.push_back(extract_features(ex.audio));
            signs.push_back(ex.label == "low" ? 1 : -1);
        }
        REQUIRE(perceptron_separable(features, signs));

        const LinearClassifier model = train_builtin(train, valid, {}, 42);
        CHECK(model_accuracy(model, train) == 1.0);
        CHECK(model_accuracy(model, valid) == 1.0);
    }

    SUBCASE("single-class dataset errors") {
        std::vector<LabeledAudio> mono;
        for (const auto& ex : train) {
            if (ex.label == "low") mono.push_back(ex);
        }
        CHECK_THROWS_AS(train_builtin(mono, valid, {}, 0), Error);
    }

    SUBCASE("same seed twice gives bit-identical weights") {
        const LinearClassifier a = train_builtin(train, valid, {}, 7);
        const LinearClassifier b = train_builtin(train, valid, {}, 7);
        CHECK(a.weights == b.weights);
        CHECK(a.bias == b.bias);
        CHECK(a.feat_mean == b.feat_mean);
    }
}

TEST_CASE("predict and softmax identities") {
    LinearClassifier model;
    model.labels = {"a", "b", "c"};
    model.feat_mean.assign(128, 0.0);
    model.feat_std.assign(128, 1.0);
    model.weights.assign(3 * 128, 0.0);
    model.bias.assign(3, 0.0);

    SUBCASE("zero parameters give uniform probabilities") {
        const auto p = predict(model, {make_sine(440.0, 2.0, 16000)});
        REQUIRE(p.size() == 1);
        for (double v : p[0].probabilities) CHECK(v == doctest::Approx(1.0 / 3));
    }

    SUBCASE("probabilities sum to 1") {
        Rng rng(5);
        for (auto& w : model.weights) w = rng.normal(0.0, 0.2);
        const auto p = predict(model, {make_noise(32000, 16000, 6, 0.5)});
        double total = 0.0;
        for (double v : p[0].probabilities) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }

    SUBCASE("softmax argmax invariant under constant logit shift") {
        const std::vector<double> logits = {0.3, -1.2, 2.0, 0.9};
        std::vector<double> shifted = logits;
        for (double& v : shifted) v += 17.5;
        const auto p1 = softmax(logits);
        const auto p2 = softmax(shifted);
        const auto arg1 = std::max_element(p1.begin(), p1.end()) - p1.begin();
        const auto arg2 = std::max_element(p2.begin(), p2.end()) - p2.begin();
        CHECK(arg1 == arg2);
        for (std::size_t i = 0; i < p1.size(); ++i) {
            CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-9));
        }
    }

    SUBCASE("batch equals element-wise single prediction") {
        Rng rng(9);
        for (auto& w : model.weights) w = rng.normal(0.0, 0.2);
        const std::vector<AudioBuffer> batch = {make_sine(220.0, 2.0, 16000),
                                                make_sine(880.0, 2.0, 16000),
                                                make_noise(32000, 16000, 10, 0.4)};
        const auto all = predict(model, batch);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto one = predict(model, {batch[i]});
            CHECK(all[i].probabilities == one[0].probabilities);
        }
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    Rng rng(11);
    const std::size_t n_labels = 3, d = 5, batch = 4;
    std::vector<std::vector<double>> features(batch, std::vector<double>(d));
    std::vector<std::size_t> targets(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        for (auto& v : features[i]) v = rng.normal(0.0, 1.0);
        targets[i] = static_cast<std::size_t>(rng.uniform_index(n_labels));
    }
    std::vector<double> weights(n_labels * d), bias(n_labels);
    for (auto& w : weights) w = rng.normal(0.0, 0.5);
    for (auto& b : bias) b = rng.normal(0.0, 0.5);

    std::vector<double> grad_w, grad_b;
    softmax_xent_batch(features, targets, weights, bias, n_labels, grad_w, grad_b);

    const double h = 1e-6;
    std::vector<double> dump_w, dump_b;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        auto plus = weights, minus = weights;
        plus[i] += h;
        minus[i] -= h;
        const double lp = softmax_xent_batch(features, targets, plus, bias, n_labels, dump_w, dump_b);
        const double lm =
            softmax_xent_batch(features, targets, minus, bias, n_labels, dump_w, dump_b);
        const double numeric = (lp - lm) / (2 * h);
        const double denom = std::max(std::fabs(numeric), 1e-8);
        CHECK(std::fabs(grad_w[i] - numeric) / denom <= 1e-4);
    }
    for (std::size_t i = 0; i < bias.size(); ++i) {
        auto plus = bias, minus = bias;
        plus[i] += h;
        minus[i] -= h;
        const double lp =
            softmax_xent_batch(features, targets, weights, plus, n_labels, dump_w, dump_b);
        const double lm =
            softmax_xent_batch(features, targets, weights, minus, n_labels, dump_w, dump_b);
        const double numeric = (lp - lm) / (2 * h);
        const double denom = std::max(std::fabs(numeric), 1e-8);
        CHECK(std::fabs(grad_b[i] - numeric) / denom <= 1e-4);
    }
}

TEST_CASE("randomize") {
    const auto train = tone_dataset(300.0, 2500.0, 8, 200);
    const auto valid = tone_dataset(300.0, 2500.0, 3, 201);
    const LinearClassifier trained = train_builtin(train, valid, {}, 3);

    SUBCASE("same seed reproduces, different seeds differ") {
        const LinearClassifier r1 = randomize(trained, 99);
        const LinearClassifier r2 = randomize(trained, 99);
        const LinearClassifier r3 = randomize(trained, 100);
        CHECK(r1.weights == r2.weights);
        CHECK(r1.bias == r2.bias);
        CHECK(r1.weights != r3.weights);
        CHECK(r1.feat_mean == trained.feat_mean); // standardization retained
        CHECK(r1.feat_std == trained.feat_std);
    }

    SUBCASE("random models hover near chance on a balanced test set") {
        const auto test = tone_dataset(300.0, 2500.0, 10, 202);
        double total = 0.0;
        const std::size_t n_seeds = 48;
        for (std::size_t seed = 0; seed < n_seeds; ++seed) {
            total += model_accuracy(randomize(trained, seed), test);
        }
        const double mean = total / n_seeds;
        CHECK(mean >= 0.3);
        CHECK(mean <= 0.7);
    }
}

TEST_CASE("model save/load round-trip") {
    TempDir dir("model");
    const auto train = tone_dataset(300.0, 2500.0, 6, 300);
    const auto valid = tone_dataset(300.0, 2500.0, 2, 301);
    const LinearClassifier model = train_builtin(train, valid, {}, 5);
    save_model(model, dir.str("model.json"));
    const LinearClassifier back = load_model(dir.str("model.json"));
    CHECK(back.labels == model.labels);
    CHECK(back.weights == model.weights);
    CHECK(back.bias == model.bias);
    CHECK(back.feat_mean == model.feat_mean);
    CHECK(back.feat_std == model.feat_std);
    CHECK(back.feature_config.n_mels == model.feature_config.n_mels);

    CHECK_THROWS_AS(load_model(dir.str("missing.json")), Error);
}
