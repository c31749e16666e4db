#pragma once

#include "audexplain/audio.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace audexplain {

struct Prediction {
    std::vector<double> probabilities;
    std::vector<std::string> labels;

    double probability_of(const std::string& label) const;
};

struct FeatureConfig {
    int sample_rate = 16000;
    int n_fft = 1024;
    int hop_length = 512;
    std::size_t n_mels = 128;
};

/// Time-mean of the log-mel spectrogram per bin, before standardization.
std::vector<double> extract_features(const AudioBuffer& buffer,
                                     const FeatureConfig& config = {});

/// Softmax classifier over mean-pooled log-mel features. Immutable once
/// trained; prediction is a pure function of (model, audio).
struct LinearClassifier {
    std::vector<std::string> labels;
    std::vector<double> weights; // n_labels x n_features, row-major
    std::vector<double> bias;    // n_labels
    std::vector<double> feat_mean;
    std::vector<double> feat_std;
    FeatureConfig feature_config;

    std::size_t num_labels() const { return labels.size(); }
    std::size_t num_features() const { return feat_mean.size(); }

    std::vector<double> standardize(const std::vector<double>& raw) const;
    Prediction predict_features(const std::vector<double>& raw) const;
};

struct LabeledAudio {
    AudioBuffer audio;
    std::string label;
};

struct TrainOptions {
    double learning_rate = 0.01;
    std::size_t batch_size = 16;
    std::size_t max_epochs = 200;
    std::size_t patience = 20;
    double snippet_seconds = 2.0; // random crop length per epoch
};

/// Mini-batch SGD on softmax cross-entropy with early stopping on
/// validation accuracy. Deterministic for a fixed seed.
LinearClassifier train_builtin(const std::vector<LabeledAudio>& train,
                               const std::vector<LabeledAudio>& valid,
                               const TrainOptions& options, std::uint64_t seed);

std::vector<Prediction> predict(const LinearClassifier& model,
                                const std::vector<AudioBuffer>& batch);

/// Fresh parameters ~ N(0, 0.01), feature standardization retained.
LinearClassifier randomize(const LinearClassifier& model, std::uint64_t seed);

void save_model(const LinearClassifier& model, const std::string& path);
LinearClassifier load_model(const std::string& path);

std::vector<double> softmax(std::vector<double> logits);

/// Mean cross-entropy over a batch plus parameter gradients; exposed so the
/// analytic gradient can be checked against finite differences.
double softmax_xent_batch(const std::vector<std::vector<double>>& features,
                          const std::vector<std::size_t>& targets,
                          const std::vector<double>& weights, const std::vector<double>& bias,
                          std::size_t n_labels, std::vector<double>& grad_weights,
                          std::vector<double>& grad_bias);

/// Uniform black-box boundary the explainer talks to.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::vector<std::string> labels() const = 0;
    virtual std::vector<Prediction> predict_batch(const std::vector<AudioBuffer>& batch) const = 0;
    virtual std::string name() const = 0;
};

class BuiltinPredictor final : public Predictor {
public:
    explicit BuiltinPredictor(LinearClassifier model) : model_(std::move(model)) {}
    std::vector<std::string> labels() const override { return model_.labels; }
    std::vector<Prediction> predict_batch(const std::vector<AudioBuffer>& batch) const override {
        return predict(model_, batch);
    }
    std::string name() const override { return "builtin"; }
    const LinearClassifier& model() const { return model_; }

private:
    LinearClassifier model_;
};

struct ExternalCommand {
    std::vector<std::string> argv;

    static ExternalCommand parse(const std::string& command_line);
};

/// Writes the batch as float32 WAVs plus a manifest, runs
/// `<command> <manifest> <result>` once, and parses the result file.
/// Output order matches input order (matched by id). Errors carry the
/// child's diagnostic output.
std::vector<Prediction> external_predict(const ExternalCommand& command,
                                         const std::vector<AudioBuffer>& batch,
                                         const std::vector<std::string>& labels_requested,
                                         const std::string& workdir, double timeout_seconds);

/// Invocations of one command are serialized (shared workdir); run several
/// commands concurrently by giving each its own predictor and workdir.
class ExternalPredictor final : public Predictor {
public:
    ExternalPredictor(ExternalCommand command, std::vector<std::string> labels,
                      std::string workdir, double timeout_seconds = 120.0)
        : command_(std::move(command)), labels_(std::move(labels)),
          workdir_(std::move(workdir)), timeout_seconds_(timeout_seconds) {}

    std::vector<std::string> labels() const override { return labels_; }
    std::vector<Prediction> predict_batch(const std::vector<AudioBuffer>& batch) const override {
        const std::lock_guard<std::mutex> lock(invoke_mutex_);
        return external_predict(command_, batch, labels_, workdir_, timeout_seconds_);
    }
    std::string name() const override { return "external"; }

private:
    ExternalCommand command_;
    std::vector<std::string> labels_;
    std::string workdir_;
    double timeout_seconds_;
    mutable std::mutex invoke_mutex_;
};

} // namespace audexplain
