#include "audexplain/predict.hpp"

#include "audexplain/kernels.hpp"
#include "audexplain/rng.hpp"
#include "audexplain/signal.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace audexplain {

using nlohmann::json;

double Prediction::probability_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) return probabilities[i];
    }
    throw Error(ErrorCode::unknown_label, "prediction has no label '" + label + "'");
}

std::vector<double> extract_features(const AudioBuffer& buffer, const FeatureConfig& config) {
    if (buffer.sample_rate != config.sample_rate) {
        throw Error(ErrorCode::invalid_argument,
                    "extract_features: expected " + std::to_string(config.sample_rate) +
                        " Hz input, got " + std::to_string(buffer.sample_rate));
    }
    if (buffer.size() < static_cast<std::size_t>(config.n_fft)) {
        throw Error(ErrorCode::invalid_argument,
                    "extract_features: input shorter than n_fft (" +
                        std::to_string(buffer.size()) + " < " + std::to_string(config.n_fft) + ")");
    }
    const MelSpectrogram mel =
        mel_spectrogram(buffer, config.n_mels, config.n_fft, config.hop_length);
    std::vector<double> features(config.n_mels, 0.0);
    for (std::size_t t = 0; t < mel.num_frames; ++t) {
        for (std::size_t m = 0; m < mel.n_mels; ++m) features[m] += mel.at(m, t);
    }
    const double inv = 1.0 / static_cast<double>(mel.num_frames);
    for (double& v : features) v *= inv;
    return features;
}

std::vector<double> LinearClassifier::standardize(const std::vector<double>& raw) const {
    if (raw.size() != feat_mean.size()) {
        throw Error(ErrorCode::dimension_mismatch, "standardize: feature dimension mismatch");
    }
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = (raw[i] - feat_mean[i]) / feat_std[i];
    }
    return out;
}

std::vector<double> softmax(std::vector<double> logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& v : logits) {
        v = std::exp(v - peak);
        total += v;
    }
    for (double& v : logits) v /= total;
    return logits;
}

Prediction LinearClassifier::predict_features(const std::vector<double>& raw) const {
    const std::vector<double> f = standardize(raw);
    const std::size_t d = num_features();
    std::vector<double> logits(num_labels());
    const auto& ops = kernels::active();
    for (std::size_t k = 0; k < num_labels(); ++k) {
        logits[k] = ops.dot_f64(weights.data() + k * d, f.data(), d) + bias[k];
    }
    Prediction p;
    p.labels = labels;
    p.probabilities = softmax(std::move(logits));
    return p;
}

std::vector<Prediction> predict(const LinearClassifier& model,
                                const std::vector<AudioBuffer>& batch) {
    std::vector<Prediction> out;
    out.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        try {
            out.push_back(model.predict_features(extract_features(batch[i], model.feature_config)));
        } catch (const Error& err) {
            throw Error(err.code(), "buffer " + std::to_string(i) + ": " + err.what());
        }
    }
    return out;
}

double softmax_xent_batch(const std::vector<std::vector<double>>& features,
                          const std::vector<std::size_t>& targets,
                          const std::vector<double>& weights, const std::vector<double>& bias,
                          std::size_t n_labels, std::vector<double>& grad_weights,
                          std::vector<double>& grad_bias) {
    const std::size_t batch = features.size();
    const std::size_t d = features.empty() ? 0 : features[0].size();
    grad_weights.assign(n_labels * d, 0.0);
    grad_bias.assign(n_labels, 0.0);

    const auto& ops = kernels::active();
    double loss = 0.0;
    std::vector<double> logits(n_labels);
    for (std::size_t i = 0; i < batch; ++i) {
        const double* f = features[i].data();
        for (std::size_t k = 0; k < n_labels; ++k) {
            logits[k] = ops.dot_f64(weights.data() + k * d, f, d) + bias[k];
        }
        const std::vector<double> probs = softmax(logits);
        loss -= std::log(std::max(probs[targets[i]], 1e-300));
        for (std::size_t k = 0; k < n_labels; ++k) {
            const double delta = probs[k] - (k == targets[i] ? 1.0 : 0.0);
            ops.axpy_f64(delta, f, grad_weights.data() + k * d, d);
            grad_bias[k] += delta;
        }
    }
    const double inv = batch == 0 ? 0.0 : 1.0 / static_cast<double>(batch);
    for (double& g : grad_weights) g *= inv;
    for (double& g : grad_bias) g *= inv;
    return loss * inv;
}

namespace {

struct PreparedExample {
    std::vector<double> raw_features; // cached when no crop freedom
    const AudioBuffer* audio = nullptr;
    std::size_t target = 0;
    bool croppable = false;
};

std::vector<double> crop_features(const PreparedExample& ex, const FeatureConfig& config,
                                  std::size_t snippet_len, Rng& rng) {
    if (!ex.croppable) return ex.raw_features;
    const std::size_t slack = ex.audio->size() - snippet_len;
    const std::size_t start = static_cast<std::size_t>(rng.uniform_index(slack + 1));
    AudioBuffer crop;
    crop.sample_rate = ex.audio->sample_rate;
    crop.samples.assign(ex.audio->samples.begin() + static_cast<std::ptrdiff_t>(start),
                        ex.audio->samples.begin() + static_cast<std::ptrdiff_t>(start + snippet_len));
    return extract_features(crop, config);
}

double accuracy(const LinearClassifier& model, const std::vector<std::vector<double>>& feats,
                const std::vector<std::size_t>& targets) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const Prediction p = model.predict_features(feats[i]);
        const std::size_t argmax = static_cast<std::size_t>(
            std::max_element(p.probabilities.begin(), p.probabilities.end()) -
            p.probabilities.begin());
        if (argmax == targets[i]) ++hits;
    }
    return feats.empty() ? 0.0 : static_cast<double>(hits) / feats.size();
}

} // namespace

LinearClassifier train_builtin(const std::vector<LabeledAudio>& train,
                               const std::vector<LabeledAudio>& valid,
                               const TrainOptions& options, std::uint64_t seed) {
    if (train.empty() || valid.empty()) {
        throw Error(ErrorCode::degenerate_dataset, "train_builtin: empty train or validation set");
    }

    std::set<std::string> label_set;
    for (const auto& ex : train) label_set.insert(ex.label);
    if (label_set.size() < 2) {
        throw Error(ErrorCode::degenerate_dataset,
                    "train_builtin: need at least 2 classes, got " +
                        std::to_string(label_set.size()));
    }
    std::vector<std::string> labels(label_set.begin(), label_set.end());
    auto label_index = [&labels](const std::string& name) {
        const auto it = std::find(labels.begin(), labels.end(), name);
        if (it == labels.end()) {
            throw Error(ErrorCode::degenerate_dataset,
                        "train_builtin: validation label '" + name + "' missing from train set");
        }
        return static_cast<std::size_t>(it - labels.begin());
    };

    const FeatureConfig config;
    const std::size_t snippet_len =
        static_cast<std::size_t>(options.snippet_seconds * config.sample_rate);

    auto prepare = [&](const std::vector<LabeledAudio>& set) {
        std::vector<PreparedExample> out;
        out.reserve(set.size());
        for (const auto& ex : set) {
            PreparedExample p;
            p.audio = &ex.audio;
            p.target = label_index(ex.label);
            p.croppable = ex.audio.size() > snippet_len;
            if (!p.croppable) p.raw_features = extract_features(ex.audio, config);
            out.push_back(std::move(p));
        }
        return out;
    };
    std::vector<PreparedExample> train_ex = prepare(train);
    std::vector<PreparedExample> valid_ex = prepare(valid);

    // Standardization statistics from a canonical (center) crop of every
    // training example, frozen before any SGD step.
    Rng rng(seed);
    const std::size_t d = config.n_mels;
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    std::vector<std::vector<double>> canonical(train_ex.size());
    for (std::size_t i = 0; i < train_ex.size(); ++i) {
        if (train_ex[i].croppable) {
            const std::size_t start = (train_ex[i].audio->size() - snippet_len) / 2;
            AudioBuffer crop;
            crop.sample_rate = train_ex[i].audio->sample_rate;
            crop.samples.assign(
                train_ex[i].audio->samples.begin() + static_cast<std::ptrdiff_t>(start),
                train_ex[i].audio->samples.begin() + static_cast<std::ptrdiff_t>(start + snippet_len));
            canonical[i] = extract_features(crop, config);
        } else {
            canonical[i] = train_ex[i].raw_features;
        }
        for (std::size_t k = 0; k < d; ++k) mean[k] += canonical[i][k];
    }
    for (double& v : mean) v /= static_cast<double>(train_ex.size());
    for (const auto& f : canonical) {
        for (std::size_t k = 0; k < d; ++k) {
            const double c = f[k] - mean[k];
            var[k] += c * c;
        }
    }
    std::vector<double> stddev(d);
    for (std::size_t k = 0; k < d; ++k) {
        stddev[k] = std::max(std::sqrt(var[k] / static_cast<double>(train_ex.size())), 1e-8);
    }

    LinearClassifier model;
    model.labels = labels;
    model.feature_config = config;
    model.feat_mean = mean;
    model.feat_std = stddev;
    model.weights.assign(labels.size() * d, 0.0);
    model.bias.assign(labels.size(), 0.0);

    // Pre-standardized validation features (validation is never cropped).
    std::vector<std::vector<double>> valid_feats;
    std::vector<std::size_t> valid_targets;
    for (const auto& ex : valid_ex) {
        std::vector<double> raw = ex.croppable
            ? [&] {
                  const std::size_t start = (ex.audio->size() - snippet_len) / 2;
                  AudioBuffer crop;
                  crop.sample_rate = ex.audio->sample_rate;
                  crop.samples.assign(
                      ex.audio->samples.begin() + static_cast<std::ptrdiff_t>(start),
                      ex.audio->samples.begin() + static_cast<std::ptrdiff_t>(start + snippet_len));
                  return extract_features(crop, config);
              }()
            : ex.raw_features;
        valid_feats.push_back(std::move(raw));
        valid_targets.push_back(ex.target);
    }

    std::vector<double> best_weights = model.weights;
    std::vector<double> best_bias = model.bias;
    double best_accuracy = -1.0;
    std::size_t epochs_since_best = 0;

    std::vector<std::size_t> order(train_ex.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> grad_w, grad_b;
    for (std::size_t epoch = 0; epoch < options.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t off = 0; off < order.size(); off += options.batch_size) {
            const std::size_t take = std::min(options.batch_size, order.size() - off);
            std::vector<std::vector<double>> feats(take);
            std::vector<std::size_t> targets(take);
            for (std::size_t b = 0; b < take; ++b) {
                const PreparedExample& ex = train_ex[order[off + b]];
                feats[b] = model.standardize(crop_features(ex, config, snippet_len, rng));
                targets[b] = ex.target;
            }
            softmax_xent_batch(feats, targets, model.weights, model.bias, labels.size(), grad_w,
                               grad_b);
            kernels::active().axpy_f64(-options.learning_rate, grad_w.data(),
                                       model.weights.data(), model.weights.size());
            kernels::active().axpy_f64(-options.learning_rate, grad_b.data(), model.bias.data(),
                                       model.bias.size());
        }

        const double acc = accuracy(model, valid_feats, valid_targets);
        if (acc > best_accuracy) {
            best_accuracy = acc;
            best_weights = model.weights;
            best_bias = model.bias;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= options.patience) {
            break;
        }
    }

    model.weights = std::move(best_weights);
    model.bias = std::move(best_bias);
    return model;
}

LinearClassifier randomize(const LinearClassifier& model, std::uint64_t seed) {
    LinearClassifier out = model;
    Rng rng(seed);
    const double stddev = 0.1; // N(0, 0.01)
    for (double& w : out.weights) w = rng.normal(0.0, stddev);
    for (double& b : out.bias) b = rng.normal(0.0, stddev);
    return out;
}

void save_model(const LinearClassifier& model, const std::string& path) {
    json doc;
    doc["format"] = "audexplain-model";
    doc["version"] = 1;
    doc["labels"] = model.labels;
    doc["weights"] = model.weights;
    doc["bias"] = model.bias;
    doc["feat_mean"] = model.feat_mean;
    doc["feat_std"] = model.feat_std;
    doc["feature_config"] = {{"sample_rate", model.feature_config.sample_rate},
                             {"n_fft", model.feature_config.n_fft},
                             {"hop_length", model.feature_config.hop_length},
                             {"n_mels", model.feature_config.n_mels}};
    std::ofstream file(path, std::ios::trunc);
    if (!file) {
        throw Error(ErrorCode::unwritable_path, "cannot write model to '" + path + "'");
    }
    file << doc.dump(2) << "\n";
}

LinearClassifier load_model(const std::string& path) {
    std::ifstream file(path);
    if (!file) {
        throw Error(ErrorCode::unreadable_file, "cannot open model '" + path + "'");
    }
    json doc;
    try {
        file >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::protocol_violation, "model '" + path + "': " + e.what());
    }
    try {
        LinearClassifier model;
        model.labels = doc.at("labels").get<std::vector<std::string>>();
        model.weights = doc.at("weights").get<std::vector<double>>();
        model.bias = doc.at("bias").get<std::vector<double>>();
        model.feat_mean = doc.at("feat_mean").get<std::vector<double>>();
        model.feat_std = doc.at("feat_std").get<std::vector<double>>();
        const auto& fc = doc.at("feature_config");
        model.feature_config.sample_rate = fc.at("sample_rate").get<int>();
        model.feature_config.n_fft = fc.at("n_fft").get<int>();
        model.feature_config.hop_length = fc.at("hop_length").get<int>();
        model.feature_config.n_mels = fc.at("n_mels").get<std::size_t>();
        if (model.weights.size() != model.labels.size() * model.feat_mean.size() ||
            model.bias.size() != model.labels.size()) {
            throw Error(ErrorCode::protocol_violation,
                        "model '" + path + "': inconsistent parameter shapes");
        }
        return model;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::protocol_violation, "model '" + path + "': " + e.what());
    }
}

ExternalCommand ExternalCommand::parse(const std::string& command_line) {
    ExternalCommand cmd;
    std::string current;
    for (char c : command_line) {
        if (c == ' ' || c == '\t') {
            if (!current.empty()) {
                cmd.argv.push_back(current);
                current.clear();
            }
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) cmd.argv.push_back(current);
    if (cmd.argv.empty()) {
        throw Error(ErrorCode::invalid_argument, "empty external command");
    }
    return cmd;
}

} // namespace audexplain
