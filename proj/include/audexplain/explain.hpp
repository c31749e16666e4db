#pragma once

#include "audexplain/decompose.hpp"
#include "audexplain/predict.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace audexplain {

/// Perturbation set for one instance: binary masks, the black box's score
/// for the target label on each remix, and kernel weights. The first mask
/// is always all-ones (the instance itself).
struct Neighborhood {
    std::vector<InterpretableMask> masks;
    std::vector<double> responses;
    std::vector<double> proximity;
    bool exhaustive = false;

    std::size_t size() const { return masks.size(); }
    std::size_t d_prime() const { return masks.empty() ? 0 : masks[0].size(); }
};

enum class KernelKind {
    automatic, // uniform when exhaustive, exponential otherwise
    uniform,
    exponential,
};

struct ProximityKernel {
    KernelKind kind = KernelKind::automatic;
    double width = 0.25;
};

/// Surrogate fit for one (instance, target label) pair.
struct Explanation {
    std::vector<double> coefficients;
    double intercept = 0.0;
    std::vector<std::string> component_labels;
    double faithfulness_r = 0.0;
    bool faithfulness_defined = false;
    std::string target_label;
    std::string config_digest;
    bool exhaustive = false;
    std::size_t n = 0;
    std::string instance_id;
    double observed_score = 0.0; // black-box score at the all-ones mask

    std::size_t d_prime() const { return coefficients.size(); }
    /// Surrogate prediction at the all-ones mask.
    double surrogate_score_at_instance() const;
};

inline constexpr const char* kNonePositive = "none-positive";

/// All 2^d' masks (all-ones first, then ascending binary order) when that
/// fits in n_max; otherwise all-ones plus n_max-1 distinct masks sampled
/// uniformly without replacement.
std::vector<InterpretableMask> enumerate_neighborhood(std::size_t d_prime, std::size_t n_max,
                                                      std::uint64_t seed);

/// Kernel weights per mask. Exponential uses exp(-D^2/width^2) with D the
/// Hamming distance to all-ones divided by d'. `automatic` is resolved by
/// explain_instance, not here.
std::vector<double> proximity_weights(const std::vector<InterpretableMask>& masks,
                                      const ProximityKernel& kernel);

/// Weighted ridge via normal equations, intercept unpenalized; fills the
/// numeric fields of the Explanation (labels/target/digest are the
/// pipeline's job). Throws singular_system at lambda = 0 on rank-deficient
/// neighborhoods.
Explanation fit_surrogate(const Neighborhood& neighborhood, double ridge_lambda);

struct ExplainConfig {
    std::size_t n_max = 1024;
    ProximityKernel kernel;
    double ridge_lambda = 1e-3;
    bool include_residual = true;
    std::uint64_t seed = 0;
    std::size_t tau = 1;
};

struct ExplainResult {
    Explanation explanation;
    Decomposition decomposition;
};

/// The full pipeline: decompose -> enumerate -> remix -> predict -> fit.
/// Deterministic given (audio, config, seed); stage names are prepended to
/// propagated errors.
ExplainResult explain_instance(const AudioBuffer& mix, const Decomposer& decomposer,
                               const Predictor& predictor, const std::string& target_label,
                               const ExplainConfig& config, const std::string& instance_id = "");

/// Index of the largest strictly positive coefficient (ties -> lowest
/// index); nullopt when no coefficient is positive.
std::optional<std::size_t> top_component(const Explanation& e);

/// Component label of the top component, or "none-positive".
std::string top_component_label(const Explanation& e);

/// Remix of the k components with the largest positive coefficients (fewer
/// if fewer are positive; error if none), residual excluded.
AudioBuffer render_explanation(const Decomposition& d, const Explanation& e, std::size_t k);

std::string explanation_to_json(const Explanation& e);
void save_explanation(const Explanation& e, const std::string& path);

} // namespace audexplain
