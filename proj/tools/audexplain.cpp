// audexplain: listenable explanations for black-box audio classifiers.
//
// Subcommands: explain, batch-explain, experiment, sanity, synth-data,
// train-builtin. Exit codes: 0 success, 1 runtime failure, 2 usage/config
// error. AUDEXPLAIN_SEED provides the default seed; a config file (JSON or
// flat TOML) provides defaults that flags override. The effective
// configuration is written next to the outputs of every run.
#include "audexplain/analyze.hpp"
#include "audexplain/explain.hpp"
#include "audexplain/rng.hpp"
#include "audexplain/signal.hpp"
#include "audexplain/synth.hpp"
#include "audexplain/wav.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

using namespace audexplain;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int exit_code_for(const Error& error) {
    switch (error.code()) {
        case ErrorCode::invalid_argument:
        case ErrorCode::unknown_label:
        case ErrorCode::unreadable_file:
        case ErrorCode::degenerate_dataset:
            return 2;
        default:
            return 1;
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Config file loading: JSON objects or flat TOML-style `key = value` lines.
// Keys match long option names; underscores are treated as dashes.

std::string normalize_key(std::string key) {
    for (char& c : key) {
        if (c == '_') c = '-';
    }
    return key;
}

std::string strip(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream file(path);
    if (!file) {
        throw Error(ErrorCode::unreadable_file, "cannot open config '" + path + "'");
    }
    std::map<std::string, std::string> values;

    if (fs::path(path).extension() == ".json") {
        json doc;
        try {
            file >> doc;
        } catch (const json::exception& e) {
            throw Error(ErrorCode::invalid_argument, "config '" + path + "': " + e.what());
        }
        if (!doc.is_object()) {
            throw Error(ErrorCode::invalid_argument,
                        "config '" + path + "' must be a JSON object");
        }
        for (const auto& [key, value] : doc.items()) {
            if (value.is_string()) {
                values[normalize_key(key)] = value.get<std::string>();
            } else if (value.is_boolean()) {
                values[normalize_key(key)] = value.get<bool>() ? "true" : "false";
            } else if (value.is_number() || value.is_number_float()) {
                values[normalize_key(key)] = value.dump();
            } else {
                throw Error(ErrorCode::invalid_argument,
                            "config '" + path + "': key '" + key + "' must be a scalar");
            }
        }
        return values;
    }

    // flat TOML subset: `key = value`, # comments, optional quotes
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string trimmed = strip(line);
        if (trimmed.empty() || trimmed.front() == '[') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::invalid_argument,
                        "config '" + path + "' line " + std::to_string(line_no) +
                            ": expected key = value");
        }
        std::string key = strip(trimmed.substr(0, eq));
        std::string value = strip(trimmed.substr(eq + 1));
        if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                                  (value.front() == '\'' && value.back() == '\''))) {
            value = value.substr(1, value.size() - 2);
        }
        values[normalize_key(key)] = value;
    }
    return values;
}

/// Applies config-file values to options the command line left untouched,
/// and can replay the resolved configuration as JSON (so a written effective
/// config re-reads losslessly).
class OptionLayer {
public:
    void bind(CLI::Option* option, std::string& var) {
        entries_.push_back({option, [&var](const std::string& s) { var = s; },
                            [&var] { return json(var); }});
    }
    void bind(CLI::Option* option, double& var) {
        entries_.push_back({option,
                            [option, &var](const std::string& s) {
                                var = parse_double(option->get_name(), s);
                            },
                            [&var] { return json(var); }});
    }
    void bind(CLI::Option* option, bool& var) {
        entries_.push_back({option,
                            [option, &var](const std::string& s) {
                                if (s == "true" || s == "1") var = true;
                                else if (s == "false" || s == "0") var = false;
                                else
                                    throw Error(ErrorCode::invalid_argument,
                                                option->get_name() + ": expected true/false, got '" +
                                                    s + "'");
                            },
                            [&var] { return json(var); }});
    }
    template <typename Int>
    void bind_int(CLI::Option* option, Int& var) {
        entries_.push_back({option,
                            [option, &var](const std::string& s) {
                                var = static_cast<Int>(parse_u64(option->get_name(), s));
                            },
                            [&var] { return json(var); }});
    }

    void apply(const std::map<std::string, std::string>& config) const {
        for (const auto& entry : entries_) {
            if (entry.option->count() > 0) continue; // flag wins
            const std::string key = key_of(entry.option);
            const auto it = config.find(key);
            if (it != config.end()) entry.from_string(it->second);
        }
    }

    json effective() const {
        json doc = json::object();
        for (const auto& entry : entries_) doc[key_of(entry.option)] = entry.to_json();
        return doc;
    }

private:
    static std::string key_of(const CLI::Option* option) {
        std::string name = option->get_name(false, false); // prefers long name
        while (!name.empty() && name.front() == '-') name.erase(name.begin());
        return name;
    }
    static double parse_double(const std::string& name, const std::string& s) {
        try {
            return std::stod(s);
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_argument, name + ": bad number '" + s + "'");
        }
    }
    static std::uint64_t parse_u64(const std::string& name, const std::string& s) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_argument, name + ": bad integer '" + s + "'");
        }
    }

    struct Entry {
        CLI::Option* option;
        std::function<void(const std::string&)> from_string;
        std::function<json()> to_json;
    };
    std::vector<Entry> entries_;
};

void write_effective_config(const OptionLayer& layer, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const fs::path path = fs::path(out_dir) / "effective_config.json";
    std::ofstream file(path, std::ios::trunc);
    if (!file) {
        throw Error(ErrorCode::io_error, "cannot write '" + path.string() + "'");
    }
    file << layer.effective().dump(2) << "\n";
}

std::uint64_t env_seed_default() {
    const char* env = std::getenv("AUDEXPLAIN_SEED");
    if (env == nullptr) return 0;
    try {
        return std::stoull(env);
    } catch (const std::exception&) {
        throw Error(ErrorCode::invalid_argument,
                    std::string("AUDEXPLAIN_SEED is not an integer: '") + env + "'");
    }
}

ProximityKernel parse_kernel(const std::string& text) {
    if (text == "auto") return {KernelKind::automatic, 0.25};
    if (text == "uniform") return {KernelKind::uniform, 0.25};
    if (text == "exponential") return {KernelKind::exponential, 0.25};
    const std::string prefix = "exponential:";
    if (text.rfind(prefix, 0) == 0) {
        try {
            return {KernelKind::exponential, std::stod(text.substr(prefix.size()))};
        } catch (const std::exception&) {
        }
    }
    throw Error(ErrorCode::invalid_argument,
                "--kernel: expected auto|uniform|exponential[:width], got '" + text + "'");
}

AudioBuffer clip_for_listening(AudioBuffer buffer) {
    for (float& s : buffer.samples) s = std::min(1.0f, std::max(-1.0f, s));
    return buffer;
}

// Shared flag bundles -------------------------------------------------------

struct PredictorArgs {
    std::string model_path;
    std::string external_command;
    std::string external_labels;
    double timeout_seconds = 120.0;
    int sample_rate = 16000;

    void add_to(CLI::App* cmd, OptionLayer& layer) {
        layer.bind(cmd->add_option("--model", model_path, "Built-in model JSON"), model_path);
        layer.bind(cmd->add_option("--external", external_command,
                                   "External predictor command (gets <manifest> <result>)"),
                   external_command);
        layer.bind(cmd->add_option("--labels", external_labels,
                                   "Comma-separated labels requested from --external"),
                   external_labels);
        layer.bind(cmd->add_option("--timeout", timeout_seconds,
                                   "External predictor timeout in seconds"),
                   timeout_seconds);
        layer.bind_int(cmd->add_option("--sample-rate", sample_rate,
                                       "Input rate expected by --external predictors"),
                       sample_rate);
    }

    std::unique_ptr<Predictor> build(const std::string& workdir) const {
        if (model_path.empty() == external_command.empty()) {
            throw Error(ErrorCode::invalid_argument,
                        "choose exactly one of --model or --external");
        }
        if (!model_path.empty()) {
            return std::make_unique<BuiltinPredictor>(load_model(model_path));
        }
        if (external_labels.empty()) {
            throw Error(ErrorCode::invalid_argument, "--external requires --labels");
        }
        std::vector<std::string> labels;
        std::string current;
        for (char c : external_labels) {
            if (c == ',') {
                if (!current.empty()) labels.push_back(current);
                current.clear();
            } else {
                current.push_back(c);
            }
        }
        if (!current.empty()) labels.push_back(current);
        return std::make_unique<ExternalPredictor>(ExternalCommand::parse(external_command),
                                                   labels, workdir, timeout_seconds);
    }

    int expected_rate(const Predictor& predictor) const {
        const auto* builtin = dynamic_cast<const BuiltinPredictor*>(&predictor);
        return builtin ? builtin->model().feature_config.sample_rate : sample_rate;
    }
};

struct ExplainArgs {
    std::uint64_t n_max = 1024;
    std::string kernel = "auto";
    double ridge_lambda = 1e-3;
    bool include_residual = true;
    std::uint64_t tau = 1;

    void add_to(CLI::App* cmd, OptionLayer& layer) {
        layer.bind_int(cmd->add_option("--n-max", n_max, "Neighborhood size cap"), n_max);
        layer.bind(cmd->add_option("--kernel", kernel,
                                   "Proximity kernel: auto|uniform|exponential[:width]"),
                   kernel);
        layer.bind(cmd->add_option("--lambda", ridge_lambda, "Ridge penalty"), ridge_lambda);
        layer.bind(cmd->add_flag("--include-residual,!--no-include-residual", include_residual,
                                 "Add the residual to every remix (default on)"),
                   include_residual);
        layer.bind_int(cmd->add_option("--tau", tau, "Time segments per source"), tau);
    }

    ExplainConfig build(std::uint64_t seed) const {
        ExplainConfig config;
        config.n_max = n_max;
        config.kernel = parse_kernel(kernel);
        config.ridge_lambda = ridge_lambda;
        config.include_residual = include_residual;
        config.tau = tau == 0 ? 1 : tau;
        config.seed = seed;
        return config;
    }
};

struct SynthArgs {
    std::uint64_t train_count = 200;
    std::uint64_t valid_count = 50;
    std::uint64_t test_count = 50;

    void add_to(CLI::App* cmd, OptionLayer& layer) {
        layer.bind_int(cmd->add_option("--train-count", train_count, "Training examples"),
                       train_count);
        layer.bind_int(cmd->add_option("--valid-count", valid_count, "Validation examples"),
                       valid_count);
        layer.bind_int(cmd->add_option("--test-count", test_count,
                                       "Examples per test set (matched and swapped)"),
                       test_count);
    }

    SynthSpec build(std::uint64_t seed) const {
        SynthSpec spec;
        spec.train_count = train_count;
        spec.valid_count = valid_count;
        spec.test_matched_count = test_count;
        spec.test_swapped_count = test_count;
        spec.seed = seed;
        return spec;
    }
};

struct TrainArgs {
    double learning_rate = 0.01;
    std::uint64_t batch_size = 16;
    std::uint64_t max_epochs = 200;
    std::uint64_t patience = 20;

    void add_to(CLI::App* cmd, OptionLayer& layer) {
        layer.bind(cmd->add_option("--lr", learning_rate, "SGD learning rate"), learning_rate);
        layer.bind_int(cmd->add_option("--batch", batch_size, "Mini-batch size"), batch_size);
        layer.bind_int(cmd->add_option("--max-epochs", max_epochs, "Epoch cap"), max_epochs);
        layer.bind_int(cmd->add_option("--patience", patience, "Early-stopping patience"),
                       patience);
    }

    TrainOptions build() const {
        TrainOptions options;
        options.learning_rate = learning_rate;
        options.batch_size = batch_size;
        options.max_epochs = max_epochs;
        options.patience = patience;
        return options;
    }
};

std::vector<LabeledAudio> to_labeled(const std::vector<SynthExample>& split) {
    std::vector<LabeledAudio> out;
    out.reserve(split.size());
    for (const auto& ex : split) out.push_back({ex.mix, ex.class_label});
    return out;
}

// ---------------------------------------------------------------------------
// explain

struct ExplainCommand {
    std::vector<std::string> inputs;
    std::string decomposer = "hpss";
    std::string target;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::uint64_t render_top = 0;
    std::uint64_t expect_sources = 0;
    double trim_db = 0.0;
    PredictorArgs predictor;
    ExplainArgs explain;

    int run() {
        fs::create_directories(out_dir);
        const std::unique_ptr<Predictor> black_box =
            predictor.build((fs::path(out_dir) / "predictor-work").string());
        const int want_rate = predictor.expected_rate(*black_box);

        bool any_failed = false;
        for (const auto& input : inputs) {
            try {
                explain_one(input, *black_box, want_rate);
            } catch (const Error& e) {
                std::cerr << "audexplain: " << input << ": " << e.what() << "\n";
                if (exit_code_for(e) == 2) return 2;
                any_failed = true;
            }
        }
        return any_failed ? 1 : 0;
    }

    void explain_one(const std::string& input, const Predictor& black_box, int want_rate) {
        std::unique_ptr<Decomposer> decomp;
        AudioBuffer mix;
        std::size_t source_count = 2; // hpss

        const bool stems_mode = decomposer == "stems" || decomposer == "oracle";
        if (stems_mode) {
            StemDirectory dir = load_stem_directory(input);
            mix = resample(dir.mix, want_rate);
            std::vector<LabeledBuffer> stems;
            for (auto& stem : dir.stems) {
                stems.push_back({stem.label, resample(stem.audio, want_rate)});
            }
            if (trim_db > 0.0) {
                throw Error(ErrorCode::invalid_argument,
                            "--trim-db breaks stem alignment; use it with --decomposer hpss");
            }
            source_count = stems.size();
            decomp = std::make_unique<OracleDecomposer>(std::move(stems));
        } else if (decomposer == "hpss") {
            mix = resample(load_wav(input), want_rate);
            if (trim_db > 0.0) mix = trim_silence(mix, trim_db);
            decomp = std::make_unique<HpssDecomposer>();
        } else {
            throw Error(ErrorCode::invalid_argument,
                        "--decomposer must be hpss, stems, or oracle; got '" + decomposer + "'");
        }

        if (expect_sources > 0 && source_count != expect_sources) {
            throw Error(ErrorCode::invalid_argument,
                        "--sources " + std::to_string(expect_sources) + " but decomposition has " +
                            std::to_string(source_count) + " sources");
        }

        const std::string stem_name = fs::path(input).stem().string();
        const ExplainResult result = explain_instance(mix, *decomp, black_box, target,
                                                      explain.build(seed), stem_name);

        const fs::path json_path = fs::path(out_dir) / (stem_name + ".explanation.json");
        save_explanation(result.explanation, json_path.string());

        if (render_top > 0) {
            const AudioBuffer rendered = clip_for_listening(
                render_explanation(result.decomposition, result.explanation, render_top));
            const fs::path wav_path =
                fs::path(out_dir) / (stem_name + ".top" + std::to_string(render_top) + ".wav");
            save_wav(rendered, wav_path.string());
        }

        std::cout << input << ": target=" << target
                  << " top=" << top_component_label(result.explanation)
                  << " r=" << format_double(result.explanation.faithfulness_r)
                  << " n=" << result.explanation.n << "\n";
    }
};

// ---------------------------------------------------------------------------
// batch-explain

struct BatchExplainCommand {
    std::string input_dir;
    std::string out_dir = ".";
    double snippet_seconds = 3.0;
    std::uint64_t jobs = 1;
    std::string target;
    std::uint64_t seed = 0;
    PredictorArgs predictor;
    ExplainArgs explain;

    int run() {
        fs::create_directories(out_dir);
        fs::create_directories(fs::path(out_dir) / "explanations");
        const std::unique_ptr<Predictor> black_box =
            predictor.build((fs::path(out_dir) / "predictor-work").string());
        const int want_rate = predictor.expected_rate(*black_box);

        std::vector<std::string> files;
        if (fs::is_directory(input_dir)) {
            for (const auto& entry : fs::directory_iterator(input_dir)) {
                if (entry.is_regular_file() && entry.path().extension() == ".wav") {
                    files.push_back(entry.path().string());
                }
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            std::cerr << "audexplain: no input .wav files under '" << input_dir << "'\n";
            return 1;
        }

        // cut every file into fixed snippets, dropping the last partial one
        struct Snippet {
            std::string id;
            AudioBuffer audio;
        };
        std::vector<Snippet> snippets;
        bool any_failed = false;
        const std::size_t snippet_len =
            static_cast<std::size_t>(snippet_seconds * static_cast<double>(want_rate));
        for (const auto& file : files) {
            try {
                const AudioBuffer audio = resample(load_wav(file), want_rate);
                const std::string base = fs::path(file).stem().string();
                for (std::size_t start = 0, k = 0; start + snippet_len <= audio.size();
                     start += snippet_len, ++k) {
                    Snippet s;
                    s.id = base + ":" + std::to_string(k);
                    s.audio.sample_rate = want_rate;
                    s.audio.samples.assign(
                        audio.samples.begin() + static_cast<std::ptrdiff_t>(start),
                        audio.samples.begin() + static_cast<std::ptrdiff_t>(start + snippet_len));
                    snippets.push_back(std::move(s));
                }
            } catch (const Error& e) {
                std::cerr << "audexplain: " << file << ": " << e.what() << "\n";
                any_failed = true;
            }
        }
        if (snippets.empty()) {
            std::cerr << "audexplain: no snippets of " << snippet_seconds << " s to explain\n";
            return 1;
        }

        const HpssDecomposer decomposer;
        const ExplainConfig config = explain.build(seed);
        std::vector<std::optional<Explanation>> results(snippets.size());
        std::vector<std::string> errors(snippets.size());

        const std::size_t worker_count =
            std::max<std::size_t>(1, std::min<std::size_t>(jobs, snippets.size()));
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= snippets.size()) break;
                try {
                    results[i] = explain_instance(snippets[i].audio, decomposer, *black_box,
                                                  target, config, snippets[i].id)
                                     .explanation;
                } catch (const Error& e) {
                    errors[i] = e.what();
                }
            }
        };
        if (worker_count == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < worker_count; ++t) pool.emplace_back(worker);
            for (auto& thread : pool) thread.join();
        }

        std::vector<Explanation> explanations;
        for (std::size_t i = 0; i < snippets.size(); ++i) {
            if (!errors[i].empty()) {
                std::cerr << "audexplain: " << snippets[i].id << ": " << errors[i] << "\n";
                any_failed = true;
                continue;
            }
            std::string file_id = results[i]->instance_id;
            for (char& c : file_id) {
                if (c == ':' || c == '/') c = '_';
            }
            save_explanation(*results[i],
                             (fs::path(out_dir) / "explanations" / (file_id + ".json")).string());
            explanations.push_back(std::move(*results[i]));
        }

        export_coefficients(explanations, (fs::path(out_dir) / "coefficients.csv").string());
        export_faithfulness(explanations, (fs::path(out_dir) / "faithfulness.csv").string());
        std::cout << "explained " << explanations.size() << " snippets from " << files.size()
                  << " files\n";
        return any_failed ? 1 : 0;
    }
};

// ---------------------------------------------------------------------------
// experiment

struct ExperimentCommand {
    std::string out_dir = ".";
    std::uint64_t runs = 10;
    std::uint64_t seed = 0;
    std::string decomposer = "oracle";
    SynthArgs synth;
    TrainArgs train;
    ExplainArgs explain;

    int run() {
        fs::create_directories(out_dir);
        const bool with_hpss = decomposer == "hpss";
        if (!with_hpss && decomposer != "oracle") {
            throw Error(ErrorCode::invalid_argument,
                        "--decomposer must be oracle or hpss; got '" + decomposer + "'");
        }
        const ExperimentReport report = run_confounder_experiment(
            synth.build(seed), train.build(), explain.build(seed), runs, with_hpss);
        save_experiment_report(report, (fs::path(out_dir) / "report.json").string(),
                               (fs::path(out_dir) / "runs.csv").string());
        std::cout << format_experiment_summary(report);
        return 0;
    }
};

// ---------------------------------------------------------------------------
// sanity

struct SanityCommand {
    std::string out_dir = ".";
    std::uint64_t models = 10;
    std::uint64_t seed = 0;
    std::string data_dir;
    std::string model_path;
    SynthArgs synth;
    TrainArgs train;
    ExplainArgs explain;

    int run() {
        if (models < 2) {
            throw Error(ErrorCode::invalid_argument, "--models must be >= 2");
        }
        fs::create_directories(out_dir);
        if (data_dir.empty() != model_path.empty()) {
            throw Error(ErrorCode::invalid_argument,
                        "--data and --model go together (or neither, for the hermetic run)");
        }

        LinearClassifier reference;
        std::vector<SynthExample> snippets;
        std::string target;
        if (!data_dir.empty()) {
            reference = load_model(model_path);
            ConfoundedDataset dataset = load_dataset(data_dir);
            if (dataset.test_swapped.empty()) {
                throw Error(ErrorCode::invalid_argument,
                            "dataset '" + data_dir + "' has no test_swapped split");
            }
            snippets = std::move(dataset.test_swapped);
            // the confounder-associated class carries no confounder in the
            // swapped split
            for (const auto& ex : snippets) {
                if (!ex.confounder_present) {
                    target = ex.class_label;
                    break;
                }
            }
            if (target.empty()) {
                throw Error(ErrorCode::invalid_argument,
                            "dataset '" + data_dir + "': cannot infer the confounder-associated "
                            "class from test_swapped metadata");
            }
        } else {
            const SynthSpec spec = synth.build(seed);
            const ConfoundedDataset dataset = build_confounded_dataset(spec);
            reference = train_builtin(to_labeled(dataset.train), to_labeled(dataset.valid),
                                      train.build(), derive_seed(seed, 0x7AULL));
            snippets = dataset.test_swapped;
            target = spec.class_a_label;
        }

        std::vector<SanityInstance> instances;
        instances.reserve(snippets.size());
        for (const auto& ex : snippets) {
            instances.push_back({ex.mix, std::make_shared<OracleDecomposer>(ex.stems)});
        }

        const ModelFactory factory = [&reference](std::uint64_t model_seed) {
            return std::make_unique<BuiltinPredictor>(randomize(reference, model_seed));
        };
        const BuiltinPredictor trained(reference);
        const SanityReport report = sanity_check(factory, instances, models, target,
                                                 explain.build(seed), seed, &trained);
        export_sanity_report(report, (fs::path(out_dir) / "sanity.csv").string());

        std::cout << "models: " << models << ", snippets per model: " << report.snippets_per_model
                  << "\n";
        std::cout << "random models, confounder rate among predicted-" << target << ": "
                  << format_double(report.aggregate_positive_rate("confounder")) << "\n";
        std::cout << "trained reference, confounder rate among predicted-" << target << ": "
                  << format_double(report.reference_positive_rate("confounder")) << "\n";
        std::cout << "normalized selection entropy: " << format_double(report.normalized_entropy)
                  << "\n";
        return 0; // reporting, not judging
    }
};

// ---------------------------------------------------------------------------
// synth-data / train-builtin

struct SynthDataCommand {
    std::string out_dir;
    std::uint64_t seed = 0;
    SynthArgs synth;

    int run() {
        const ConfoundedDataset dataset = build_confounded_dataset(synth.build(seed));
        write_dataset(dataset, out_dir);
        std::cout << "wrote " << dataset.train.size() << "+" << dataset.valid.size() << "+"
                  << dataset.test_matched.size() << "+" << dataset.test_swapped.size()
                  << " examples under " << out_dir << "\n";
        return 0;
    }
};

struct TrainBuiltinCommand {
    std::string data_dir;
    std::string model_out;
    std::uint64_t seed = 0;
    TrainArgs train;

    int run() {
        const ConfoundedDataset dataset = load_dataset(data_dir);
        if (dataset.train.empty() || dataset.valid.empty()) {
            throw Error(ErrorCode::degenerate_dataset,
                        "dataset '" + data_dir + "' needs train and valid splits");
        }
        const LinearClassifier model = train_builtin(to_labeled(dataset.train),
                                                     to_labeled(dataset.valid), train.build(), seed);
        save_model(model, model_out);

        std::size_t hits = 0;
        std::vector<AudioBuffer> valid_audio;
        for (const auto& ex : dataset.valid) valid_audio.push_back(ex.mix);
        const auto predictions = predict(model, valid_audio);
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const auto& p = predictions[i];
            const auto argmax = std::max_element(p.probabilities.begin(), p.probabilities.end()) -
                                p.probabilities.begin();
            if (p.labels[static_cast<std::size_t>(argmax)] == dataset.valid[i].class_label) ++hits;
        }
        std::cout << "model written to " << model_out << "; validation accuracy "
                  << format_double(static_cast<double>(hits) / predictions.size()) << "\n";
        return 0;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Listenable, model-agnostic explanations for audio classifiers"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "Config file (JSON or flat TOML) with flag defaults")
        ->expected(1);

    std::uint64_t default_seed = 0;
    try {
        default_seed = env_seed_default();
    } catch (const Error& e) {
        std::cerr << "audexplain: " << e.what() << "\n";
        return 2;
    }

    ExplainCommand explain_cmd;
    explain_cmd.seed = default_seed;
    OptionLayer explain_layer;
    CLI::App* explain_app = app.add_subcommand("explain", "Explain single files or stem dirs");
    explain_app->add_option("inputs", explain_cmd.inputs, "WAV files or stem directories")
        ->required();
    explain_layer.bind(explain_app->add_option("--decomposer", explain_cmd.decomposer,
                                               "hpss | stems | oracle"),
                       explain_cmd.decomposer);
    explain_layer.bind(
        explain_app->add_option("--target", explain_cmd.target, "Label to explain")->required(),
        explain_cmd.target);
    explain_layer.bind(explain_app->add_option("--out", explain_cmd.out_dir, "Output directory"),
                       explain_cmd.out_dir);
    explain_layer.bind_int(explain_app->add_option("--seed", explain_cmd.seed, "Random seed"),
                           explain_cmd.seed);
    explain_layer.bind_int(explain_app->add_option("--render-top", explain_cmd.render_top,
                                                   "Render the top-k components as WAV"),
                           explain_cmd.render_top);
    explain_layer.bind_int(explain_app->add_option("--sources", explain_cmd.expect_sources,
                                                   "Fail unless the decomposition has this many sources"),
                           explain_cmd.expect_sources);
    explain_layer.bind(explain_app->add_option("--trim-db", explain_cmd.trim_db,
                                               "Remove frames this many dB below the loudest (0 = off)"),
                       explain_cmd.trim_db);
    explain_cmd.predictor.add_to(explain_app, explain_layer);
    explain_cmd.explain.add_to(explain_app, explain_layer);

    BatchExplainCommand batch_cmd;
    batch_cmd.seed = default_seed;
    OptionLayer batch_layer;
    CLI::App* batch_app =
        app.add_subcommand("batch-explain", "Explain every snippet of every file in a directory");
    batch_layer.bind(
        batch_app->add_option("--input-dir", batch_cmd.input_dir, "Directory of WAV files")
            ->required(),
        batch_cmd.input_dir);
    batch_layer.bind(batch_app->add_option("--out", batch_cmd.out_dir, "Output directory"),
                     batch_cmd.out_dir);
    batch_layer.bind(batch_app->add_option("--snippet-seconds", batch_cmd.snippet_seconds,
                                           "Snippet length (last partial window dropped)"),
                     batch_cmd.snippet_seconds);
    batch_layer.bind_int(batch_app->add_option("--jobs", batch_cmd.jobs, "Parallel snippet jobs"),
                         batch_cmd.jobs);
    batch_layer.bind(
        batch_app->add_option("--target", batch_cmd.target, "Label to explain")->required(),
        batch_cmd.target);
    batch_layer.bind_int(batch_app->add_option("--seed", batch_cmd.seed, "Random seed"),
                         batch_cmd.seed);
    batch_cmd.predictor.add_to(batch_app, batch_layer);
    batch_cmd.explain.add_to(batch_app, batch_layer);

    ExperimentCommand experiment_cmd;
    experiment_cmd.seed = default_seed;
    OptionLayer experiment_layer;
    CLI::App* experiment_app =
        app.add_subcommand("experiment", "Run the synthetic confounder-detection experiment");
    experiment_layer.bind(
        experiment_app->add_option("--out", experiment_cmd.out_dir, "Output directory"),
        experiment_cmd.out_dir);
    experiment_layer.bind_int(experiment_app->add_option("--runs", experiment_cmd.runs,
                                                         "Seeded repetitions"),
                              experiment_cmd.runs);
    experiment_layer.bind_int(experiment_app->add_option("--seed", experiment_cmd.seed,
                                                         "Base random seed"),
                              experiment_cmd.seed);
    experiment_layer.bind(experiment_app->add_option("--decomposer", experiment_cmd.decomposer,
                                                     "oracle | hpss (hpss adds a second rate column)"),
                          experiment_cmd.decomposer);
    experiment_cmd.synth.add_to(experiment_app, experiment_layer);
    experiment_cmd.train.add_to(experiment_app, experiment_layer);
    experiment_cmd.explain.add_to(experiment_app, experiment_layer);

    SanityCommand sanity_cmd;
    sanity_cmd.seed = default_seed;
    OptionLayer sanity_layer;
    CLI::App* sanity_app =
        app.add_subcommand("sanity", "Model parameter randomization test");
    sanity_layer.bind(sanity_app->add_option("--out", sanity_cmd.out_dir, "Output directory"),
                      sanity_cmd.out_dir);
    sanity_layer.bind_int(
        sanity_app->add_option("--models", sanity_cmd.models, "Number of randomized models"),
        sanity_cmd.models);
    sanity_layer.bind_int(sanity_app->add_option("--seed", sanity_cmd.seed, "Base random seed"),
                          sanity_cmd.seed);
    sanity_layer.bind(sanity_app->add_option("--data", sanity_cmd.data_dir,
                                             "Existing dataset directory (with --model)"),
                      sanity_cmd.data_dir);
    sanity_layer.bind(sanity_app->add_option("--model", sanity_cmd.model_path,
                                             "Trained reference model JSON (with --data)"),
                      sanity_cmd.model_path);
    sanity_cmd.synth.add_to(sanity_app, sanity_layer);
    sanity_cmd.train.add_to(sanity_app, sanity_layer);
    sanity_cmd.explain.add_to(sanity_app, sanity_layer);

    SynthDataCommand synth_cmd;
    synth_cmd.seed = default_seed;
    OptionLayer synth_layer;
    CLI::App* synth_app = app.add_subcommand("synth-data", "Write a confounded dataset to disk");
    synth_layer.bind(
        synth_app->add_option("--out", synth_cmd.out_dir, "Dataset root directory")->required(),
        synth_cmd.out_dir);
    synth_layer.bind_int(synth_app->add_option("--seed", synth_cmd.seed, "Random seed"),
                         synth_cmd.seed);
    synth_cmd.synth.add_to(synth_app, synth_layer);

    TrainBuiltinCommand train_cmd;
    train_cmd.seed = default_seed;
    OptionLayer train_layer;
    CLI::App* train_app =
        app.add_subcommand("train-builtin", "Train the built-in classifier on a dataset");
    train_layer.bind(
        train_app->add_option("--data", train_cmd.data_dir, "Dataset root directory")->required(),
        train_cmd.data_dir);
    train_layer.bind(
        train_app->add_option("--model-out", train_cmd.model_out, "Where to write the model JSON")
            ->required(),
        train_cmd.model_out);
    train_layer.bind_int(train_app->add_option("--seed", train_cmd.seed, "Random seed"),
                         train_cmd.seed);
    train_cmd.train.add_to(train_app, train_layer);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::map<std::string, std::string> config;
        if (!config_path.empty()) config = load_config_file(config_path);

        if (explain_app->parsed()) {
            explain_layer.apply(config);
            fs::create_directories(explain_cmd.out_dir);
            write_effective_config(explain_layer, explain_cmd.out_dir);
            return explain_cmd.run();
        }
        if (batch_app->parsed()) {
            batch_layer.apply(config);
            fs::create_directories(batch_cmd.out_dir);
            write_effective_config(batch_layer, batch_cmd.out_dir);
            return batch_cmd.run();
        }
        if (experiment_app->parsed()) {
            experiment_layer.apply(config);
            fs::create_directories(experiment_cmd.out_dir);
            write_effective_config(experiment_layer, experiment_cmd.out_dir);
            return experiment_cmd.run();
        }
        if (sanity_app->parsed()) {
            sanity_layer.apply(config);
            fs::create_directories(sanity_cmd.out_dir);
            write_effective_config(sanity_layer, sanity_cmd.out_dir);
            return sanity_cmd.run();
        }
        if (synth_app->parsed()) {
            synth_layer.apply(config);
            fs::create_directories(synth_cmd.out_dir);
            write_effective_config(synth_layer, synth_cmd.out_dir);
            return synth_cmd.run();
        }
        if (train_app->parsed()) {
            train_layer.apply(config);
            const fs::path out_parent = fs::path(train_cmd.model_out).parent_path();
            write_effective_config(train_layer,
                                   out_parent.empty() ? "." : out_parent.string());
            return train_cmd.run();
        }
    } catch (const Error& e) {
        std::cerr << "audexplain: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "audexplain: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
