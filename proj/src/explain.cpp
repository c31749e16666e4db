#include "audexplain/explain.hpp"

#include "audexplain/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_set>

namespace audexplain {

using nlohmann::json;

namespace {

InterpretableMask mask_from_value(std::uint64_t value, std::size_t d_prime) {
    InterpretableMask mask;
    mask.bits.resize(d_prime);
    for (std::size_t i = 0; i < d_prime; ++i) {
        mask.bits[i] = static_cast<std::uint8_t>((value >> i) & 1);
    }
    return mask;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Symmetric positive-definite solve via Cholesky; returns false on a
// non-positive pivot (rank deficiency at lambda = 0).
bool cholesky_solve(std::vector<double>& a, std::vector<double>& rhs, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
        if (diag <= 1e-12) return false;
        const double root = std::sqrt(diag);
        a[j * n + j] = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = v / root;
        }
    }
    for (std::size_t i = 0; i < n; ++i) { // forward
        double v = rhs[i];
        for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * rhs[k];
        rhs[i] = v / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) { // backward
        double v = rhs[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= a[k * n + ii] * rhs[k];
        rhs[ii] = v / a[ii * n + ii];
    }
    return true;
}

} // namespace

double Explanation::surrogate_score_at_instance() const {
    double total = intercept;
    for (double c : coefficients) total += c;
    return total;
}

std::vector<InterpretableMask> enumerate_neighborhood(std::size_t d_prime, std::size_t n_max,
                                                      std::uint64_t seed) {
    if (d_prime < 1) {
        throw Error(ErrorCode::invalid_argument, "enumerate_neighborhood: d_prime must be >= 1");
    }
    if (n_max < 2) {
        throw Error(ErrorCode::invalid_argument, "enumerate_neighborhood: n_max must be >= 2");
    }

    std::vector<InterpretableMask> masks;
    const bool small_space = d_prime < 63;
    const std::uint64_t space = small_space ? (std::uint64_t{1} << d_prime) : 0;
    const std::uint64_t all_ones_value = small_space ? space - 1 : 0;

    if (small_space && space <= n_max) {
        masks.reserve(space);
        masks.push_back(InterpretableMask::all_ones(d_prime));
        for (std::uint64_t v = 0; v < space; ++v) {
            if (v == all_ones_value) continue;
            masks.push_back(mask_from_value(v, d_prime));
        }
        return masks;
    }

    masks.reserve(n_max);
    masks.push_back(InterpretableMask::all_ones(d_prime));
    Rng rng(seed);
    const std::size_t want = n_max - 1;

    if (small_space && space <= 2 * static_cast<std::uint64_t>(n_max)) {
        // Small margin between space and sample count: shuffle the whole
        // space rather than rejection-sample.
        std::vector<std::uint64_t> values;
        values.reserve(space - 1);
        for (std::uint64_t v = 0; v < space; ++v) {
            if (v != all_ones_value) values.push_back(v);
        }
        rng.shuffle(values);
        for (std::size_t i = 0; i < want && i < values.size(); ++i) {
            masks.push_back(mask_from_value(values[i], d_prime));
        }
        return masks;
    }

    if (small_space) {
        std::unordered_set<std::uint64_t> seen;
        while (seen.size() < want) {
            const std::uint64_t v = rng.uniform_index(space);
            if (v == all_ones_value) continue;
            if (seen.insert(v).second) masks.push_back(mask_from_value(v, d_prime));
        }
        return masks;
    }

    // d' >= 63: draw bits directly; collisions are astronomically unlikely
    // but deduplicate anyway.
    std::unordered_set<std::string> seen;
    while (masks.size() < n_max) {
        InterpretableMask mask;
        mask.bits.resize(d_prime);
        bool all_ones = true;
        for (std::size_t i = 0; i < d_prime; ++i) {
            mask.bits[i] = static_cast<std::uint8_t>(rng.next_u64() & 1);
            all_ones = all_ones && mask.bits[i] == 1;
        }
        if (all_ones) continue;
        std::string key(mask.bits.begin(), mask.bits.end());
        if (seen.insert(std::move(key)).second) masks.push_back(std::move(mask));
    }
    return masks;
}

std::vector<double> proximity_weights(const std::vector<InterpretableMask>& masks,
                                      const ProximityKernel& kernel) {
    if (masks.empty()) {
        throw Error(ErrorCode::invalid_argument, "proximity_weights: no masks");
    }
    if (kernel.kind == KernelKind::automatic) {
        throw Error(ErrorCode::invalid_argument,
                    "proximity_weights: kernel must be resolved to uniform or exponential");
    }
    std::vector<double> weights(masks.size(), 1.0);
    if (kernel.kind == KernelKind::uniform) return weights;

    if (kernel.width <= 0.0) {
        throw Error(ErrorCode::invalid_argument, "proximity_weights: width must be > 0");
    }
    const double d_prime = static_cast<double>(masks[0].size());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        std::size_t zeros = 0;
        for (std::uint8_t b : masks[i].bits) zeros += b == 0 ? 1 : 0;
        const double distance = static_cast<double>(zeros) / d_prime;
        weights[i] = std::exp(-(distance * distance) / (kernel.width * kernel.width));
    }
    return weights;
}

Explanation fit_surrogate(const Neighborhood& neighborhood, double ridge_lambda) {
    const std::size_t n = neighborhood.size();
    const std::size_t d = neighborhood.d_prime();
    if (n == 0 || d == 0) {
        throw Error(ErrorCode::invalid_argument, "fit_surrogate: empty neighborhood");
    }
    if (neighborhood.responses.size() != n || neighborhood.proximity.size() != n) {
        throw Error(ErrorCode::dimension_mismatch,
                    "fit_surrogate: responses/proximity length mismatch");
    }
    for (const auto& mask : neighborhood.masks) {
        if (mask.size() != d) {
            throw Error(ErrorCode::dimension_mismatch, "fit_surrogate: ragged mask lengths");
        }
    }
    if (ridge_lambda < 0.0) {
        throw Error(ErrorCode::invalid_argument, "fit_surrogate: ridge_lambda must be >= 0");
    }
    if (ridge_lambda == 0.0 ? n < d + 1 : n < 2) {
        throw Error(ErrorCode::invalid_argument,
                    "fit_surrogate: too few neighbors (" + std::to_string(n) + ") for d' = " +
                        std::to_string(d));
    }
    double proximity_total = 0.0;
    for (double w : neighborhood.proximity) {
        if (w < 0.0) {
            throw Error(ErrorCode::invalid_argument, "fit_surrogate: negative proximity weight");
        }
        proximity_total += w;
    }
    if (proximity_total <= 0.0) {
        throw Error(ErrorCode::invalid_argument, "fit_surrogate: all proximity weights zero");
    }

    // Augmented design [Z | 1]; normal equations A x = b with the intercept
    // column unpenalized.
    const std::size_t m = d + 1;
    std::vector<double> a(m * m, 0.0);
    std::vector<double> b(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = neighborhood.proximity[i];
        if (w == 0.0) continue;
        const auto& bits = neighborhood.masks[i].bits;
        const double y = neighborhood.responses[i];
        for (std::size_t r = 0; r < m; ++r) {
            const double xr = r < d ? static_cast<double>(bits[r]) : 1.0;
            if (xr == 0.0) continue;
            b[r] += w * xr * y;
            for (std::size_t c = 0; c <= r; ++c) {
                const double xc = c < d ? static_cast<double>(bits[c]) : 1.0;
                a[r * m + c] += w * xr * xc;
            }
        }
    }
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = r + 1; c < m; ++c) a[r * m + c] = a[c * m + r];
    }
    for (std::size_t k = 0; k < d; ++k) a[k * m + k] += ridge_lambda;

    std::vector<double> solution = b;
    std::vector<double> factor = a;
    if (!cholesky_solve(factor, solution, m)) {
        throw Error(ErrorCode::singular_system,
                    "fit_surrogate: singular normal equations at lambda = " +
                        format_double(ridge_lambda) + "; use ridge_lambda > 0");
    }

    Explanation e;
    e.coefficients.assign(solution.begin(), solution.begin() + static_cast<std::ptrdiff_t>(d));
    e.intercept = solution[d];
    e.exhaustive = neighborhood.exhaustive;
    e.n = n;

    // Weighted Pearson correlation between surrogate and observed responses.
    std::vector<double> fitted(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = e.intercept;
        const auto& bits = neighborhood.masks[i].bits;
        for (std::size_t k = 0; k < d; ++k) {
            if (bits[k]) v += e.coefficients[k];
        }
        fitted[i] = v;
    }
    double mean_fit = 0.0, mean_obs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = neighborhood.proximity[i] / proximity_total;
        mean_fit += w * fitted[i];
        mean_obs += w * neighborhood.responses[i];
    }
    double cov = 0.0, var_fit = 0.0, var_obs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = neighborhood.proximity[i] / proximity_total;
        const double df = fitted[i] - mean_fit;
        const double dy = neighborhood.responses[i] - mean_obs;
        cov += w * df * dy;
        var_fit += w * df * df;
        var_obs += w * dy * dy;
    }
    constexpr double tiny = 1e-18;
    if (var_fit > tiny && var_obs > tiny) {
        e.faithfulness_r = cov / std::sqrt(var_fit * var_obs);
        e.faithfulness_defined = true;
    } else {
        e.faithfulness_r = 0.0;
        e.faithfulness_defined = false;
    }
    e.observed_score = neighborhood.responses[0];
    return e;
}

ExplainResult explain_instance(const AudioBuffer& mix, const Decomposer& decomposer,
                               const Predictor& predictor, const std::string& target_label,
                               const ExplainConfig& config, const std::string& instance_id) {
    const std::vector<std::string> known = predictor.labels();
    if (std::find(known.begin(), known.end(), target_label) == known.end()) {
        throw Error(ErrorCode::unknown_label,
                    "explain: target label '" + target_label + "' unknown to predictor");
    }

    ExplainResult result;
    try {
        result.decomposition = decomposer.decompose(mix);
        if (config.tau > 1) {
            result.decomposition = segment_time(result.decomposition, config.tau);
        }
    } catch (const Error& err) {
        rethrow_with_stage(err, "decompose");
    }
    const std::size_t d_prime = result.decomposition.num_components();

    Neighborhood nb;
    try {
        nb.masks = enumerate_neighborhood(d_prime, config.n_max, config.seed);
    } catch (const Error& err) {
        rethrow_with_stage(err, "neighborhood");
    }
    nb.exhaustive = d_prime < 63 && nb.masks.size() == (std::uint64_t{1} << d_prime);

    std::vector<AudioBuffer> remixes;
    remixes.reserve(nb.size());
    try {
        for (const auto& mask : nb.masks) {
            remixes.push_back(remix(result.decomposition, mask, config.include_residual));
        }
    } catch (const Error& err) {
        rethrow_with_stage(err, "remix");
    }

    try {
        const std::vector<Prediction> predictions = predictor.predict_batch(remixes);
        if (predictions.size() != nb.size()) {
            throw Error(ErrorCode::dimension_mismatch, "predictor returned wrong batch size");
        }
        nb.responses.reserve(nb.size());
        for (const auto& p : predictions) nb.responses.push_back(p.probability_of(target_label));
    } catch (const Error& err) {
        rethrow_with_stage(err, "predict");
    }

    ProximityKernel kernel = config.kernel;
    if (kernel.kind == KernelKind::automatic) {
        kernel.kind = nb.exhaustive ? KernelKind::uniform : KernelKind::exponential;
    }
    nb.proximity = proximity_weights(nb.masks, kernel);

    Explanation e;
    try {
        e = fit_surrogate(nb, config.ridge_lambda);
    } catch (const Error& err) {
        rethrow_with_stage(err, "fit");
    }

    e.component_labels = result.decomposition.component_labels();
    e.target_label = target_label;
    e.instance_id = instance_id;
    e.config_digest = "v1;decomposer=" + decomposer.name() + ";predictor=" + predictor.name() +
                      ";target=" + target_label + ";tau=" + std::to_string(config.tau) +
                      ";n_max=" + std::to_string(config.n_max) + ";kernel=" +
                      (kernel.kind == KernelKind::uniform
                           ? std::string("uniform")
                           : "exponential:" + format_double(kernel.width)) +
                      ";lambda=" + format_double(config.ridge_lambda) +
                      ";include_residual=" + (config.include_residual ? "1" : "0") +
                      ";seed=" + std::to_string(config.seed) + ";rng=" + kRngAlgorithm;
    result.explanation = std::move(e);
    return result;
}

std::optional<std::size_t> top_component(const Explanation& e) {
    std::optional<std::size_t> best;
    double best_value = 0.0;
    for (std::size_t i = 0; i < e.coefficients.size(); ++i) {
        if (e.coefficients[i] > 0.0 && (!best || e.coefficients[i] > best_value)) {
            best = i;
            best_value = e.coefficients[i];
        }
    }
    return best;
}

std::string top_component_label(const Explanation& e) {
    const auto index = top_component(e);
    if (!index) return kNonePositive;
    return e.component_labels.empty() ? std::to_string(*index) : e.component_labels[*index];
}

AudioBuffer render_explanation(const Decomposition& d, const Explanation& e, std::size_t k) {
    const std::size_t d_prime = d.num_components();
    if (k < 1 || k > d_prime || e.coefficients.size() != d_prime) {
        throw Error(ErrorCode::invalid_argument, "render_explanation: bad k or size mismatch");
    }
    std::vector<std::size_t> order(d_prime);
    for (std::size_t i = 0; i < d_prime; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&e](std::size_t x, std::size_t y) {
        if (e.coefficients[x] != e.coefficients[y]) return e.coefficients[x] > e.coefficients[y];
        return x < y;
    });

    InterpretableMask mask;
    mask.bits.assign(d_prime, 0);
    std::size_t taken = 0;
    for (std::size_t i = 0; i < d_prime && taken < k; ++i) {
        if (e.coefficients[order[i]] <= 0.0) break;
        mask.bits[order[i]] = 1;
        ++taken;
    }
    if (taken == 0) {
        throw Error(ErrorCode::no_positive_coefficients,
                    "render_explanation: no positive coefficients to render");
    }
    return remix(d, mask, false);
}

std::string explanation_to_json(const Explanation& e) {
    json doc;
    doc["target_label"] = e.target_label;
    doc["component_labels"] = e.component_labels;
    doc["coefficients"] = e.coefficients;
    doc["intercept"] = e.intercept;
    doc["faithfulness_r"] = e.faithfulness_r;
    doc["faithfulness_defined"] = e.faithfulness_defined;
    doc["exhaustive"] = e.exhaustive;
    doc["n"] = e.n;
    doc["config_digest"] = e.config_digest;
    doc["instance_id"] = e.instance_id;
    doc["observed_score"] = e.observed_score;
    return doc.dump(2) + "\n";
}

void save_explanation(const Explanation& e, const std::string& path) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) {
        throw Error(ErrorCode::unwritable_path, "cannot write explanation to '" + path + "'");
    }
    file << explanation_to_json(e);
}

} // namespace audexplain
