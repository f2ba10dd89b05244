#pragma once

#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mining/core_model.hpp"
#include "mining/minmax_solver.hpp"

namespace mining {

enum class Representation : std::uint32_t { Linear = 0, Mlp = 1 };

/**
 * Shared parameters W of the m one-vs-rest logistic heads.
 *
 * LINEAR: logits = x^T w1 + b1 with w1 (d x m).
 * MLP:    logits = relu(x^T w1 + b1)^T w2 + b2 with w1 (d x h), w2 (h x m).
 */
struct ModelParameters {
    Representation representation = Representation::Linear;
    int input_dim = 0;
    int num_classes = 0;
    int hidden = 0;
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;

    static ModelParameters linear(int input_dim, int num_classes);
    static ModelParameters mlp(int input_dim, int hidden, int num_classes);

    /// Gaussian init with the given std for weights; biases start at zero.
    void randomize(std::mt19937_64& rng, double weight_std);

    /// Same shape, all entries zero.
    ModelParameters zeros_like() const;

    Eigen::Index parameter_count() const;
    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& flat);
    bool all_finite() const;
};

struct SgdConfig {
    double learning_rate = 0.001;
    double weight_decay = 0.0005;
    double momentum = 0.9;
    int batch_size = 32;

    void validate() const;
};

/// Head logits for one feature vector.
Eigen::VectorXd forward_logits(const ModelParameters& params, std::span<const double> features);

/// phi_j(x; W) for every head, each in (0, 1).
std::vector<double> predict(const ModelParameters& params, std::span<const double> features);

/// Per-class losses of a label under the model.
std::vector<double> label_losses(const ModelParameters& params, std::span<const double> features,
                                 const LabelVector& label);

/// A labeled sample with per-class weights, the unit the fine-tuning objective sums over.
struct TrainingExample {
    std::vector<double> features;
    LabelVector label;
    std::vector<double> weights;
};

/// Builds weighted examples from labeled records and their latent assignments:
/// weight on class j is the selector max(u, v_j). Records without a label are
/// skipped, as are discarded assignments.
std::vector<TrainingExample> weighted_examples(std::span<const SampleRecord> batch,
                                               std::span<const LatentAssignment> assignments);

/// sum_i sum_j w_ij l_ij, computed from logits with a stable softplus.
double weighted_batch_objective(const ModelParameters& params,
                                std::span<const TrainingExample> examples);
double weighted_batch_objective(const ModelParameters& params, std::span<const SampleRecord> batch,
                                std::span<const LatentAssignment> assignments);

struct ObjectiveGradient {
    double value = 0.0;
    ModelParameters gradient;
};

/// Value and analytic gradient of weighted_batch_objective.
ObjectiveGradient objective_gradient(const ModelParameters& params,
                                     std::span<const TrainingExample> examples);

/**
 * Momentum SGD with L2 weight decay on the weight matrices.
 *
 * The step direction is the objective gradient divided by config.batch_size,
 * plus weight_decay * W. Holds the velocity between steps.
 */
class SgdOptimizer {
public:
    explicit SgdOptimizer(SgdConfig config) : config_(config) { config_.validate(); }

    /// Throws TrainingDiverged when the gradient or the updated parameters are
    /// not finite.
    ModelParameters step(const ModelParameters& params, std::span<const TrainingExample> examples);

    const SgdConfig& config() const { return config_; }
    void reset() { velocity_.reset(); }

private:
    SgdConfig config_;
    std::optional<ModelParameters> velocity_;
};

/// Per-class binary accuracy of the rule phi_j > 0.5 against truth == j.
/// UNDEFINED truth is a negative for every head.
std::vector<double> validation_accuracy(const ModelParameters& params,
                                        std::span<const LabeledSample> validation);

inline constexpr double kAccuracyFloor = 1e-3;

/// Multiclass accuracy: a defined-truth sample is correct when the argmax head
/// matches; an UNDEFINED-truth sample is correct when no head exceeds 0.5.
double classification_accuracy(const ModelParameters& params, std::span<const LabeledSample> test);

/// Checkpoint: "ASMW", u32 version, u32 representation, u32 d, u32 m, u32 h,
/// then all parameters as little-endian f64 in flatten() order.
void save_checkpoint(const ModelParameters& params, const std::filesystem::path& path);
ModelParameters load_checkpoint(const std::filesystem::path& path);

}  // namespace mining
