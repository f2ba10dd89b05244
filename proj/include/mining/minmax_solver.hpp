#pragma once

#include <span>
#include <vector>

#include "mining/core_model.hpp"

namespace mining {

/// Which curriculum partition a sample belongs to when its latent variables
/// are solved. IN_A / IN_B samples are frozen.
enum class Membership { Free, InA, InB };

/**
 * Per-sample latent variables: the annotation flag u, the per-class pseudo-label
 * weights v, and whether the sample fell inside the AL/SL margin band.
 */
struct LatentAssignment {
    int u = 0;
    std::vector<double> v;
    bool discarded = false;

    /// The selector max(u, v_j): the effective training weight on class j.
    double selector(int j) const;

    friend bool operator==(const LatentAssignment&, const LatentAssignment&) = default;
};

/// Upper bound on the pseudo-label weights, kept inside [kMin, kMax].
class EpsilonValue {
public:
    static constexpr double kMin = 0.01;
    static constexpr double kMax = 0.99;

    /// Clamps into [kMin, kMax]; throws NumericInputError on NaN.
    explicit EpsilonValue(double raw);
    double value() const { return value_; }

private:
    double value_;
};

/// eps = max over all (i, j) of 1 - l_ij / lambda_j, clamped.
EpsilonValue compute_epsilon(const LossMatrix& losses, std::span<const double> lambda);

/**
 * Closed-form maximin solution for one sample.
 *
 * With S = sum_j l_j: S > gamma/(1-eps) selects the sample for annotation
 * (u = 1, v = eps), S < gamma selects it for self-learning with the per-class
 * weights of v_weight_for_class, and the closed band in between is discarded.
 */
LatentAssignment solve_sample(std::span<const double> losses, double gamma,
                              std::span<const double> lambda, EpsilonValue epsilon,
                              Membership membership);

/// Minimizer of v*l + lambda/2 (v^2 - 2v) over [0, eps].
double v_weight_for_class(double loss, double lambda, double epsilon);

/// E(u, v) = sum_j max(u, v_j) l_j - gamma u + sum_j lambda_j/2 (v_j^2 - 2 v_j).
double sample_energy(int u, std::span<const double> v, std::span<const double> losses,
                     double gamma, std::span<const double> lambda);

struct OracleResult {
    /// max over u of the grid minimum over v; `discarded` is set when the
    /// alternating fixed-point iteration does not agree across u0 in {0,1}.
    LatentAssignment assignment;
    /// u reached after two alternating (v then u) updates from u0 = 0 / u0 = 1.
    int u_from_zero = 0;
    int u_from_one = 0;
    /// True when both initializations settle on the same u within two rounds and
    /// stay there.
    bool fixed_point_agrees = false;
};

/**
 * Exhaustive verification of solve_sample: evaluates E on a uniform grid of
 * [0, eps]^m (the grid includes eps itself) for both u values, and iterates the
 * alternating u/v updates from both initializations.
 *
 * The grid search exploits that E is separable in v for fixed u, so the
 * product-grid minimum equals the sum of per-coordinate grid minima.
 * Requires grid_step in (0, eps/10] and m <= 5.
 */
OracleResult brute_force_oracle(std::span<const double> losses, double gamma,
                                std::span<const double> lambda, EpsilonValue epsilon,
                                double grid_step);

/// 1-D grid minimizer of v*l + lambda/2 (v^2 - 2v) over {0, h, 2h, ..., eps}.
double grid_minimize_v(double loss, double lambda, double epsilon, double grid_step);

}  // namespace mining
