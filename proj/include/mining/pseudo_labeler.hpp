#pragma once

#include <optional>
#include <span>

#include "mining/core_model.hpp"

namespace mining {

inline constexpr double kProbabilityFloor = 1e-7;

/// Clamps into [1e-7, 1 - 1e-7]; throws NumericInputError outside [0, 1] or on NaN.
double clamp_probability(double phi);

/// -log(phi) for y = +1, -log(1 - phi) for y = -1, on the clamped probability.
double class_loss(int y, double phi);

/// sum_j weights_j * class_loss(y_j, phi_j).
double weighted_label_loss(const LabelVector& y, std::span<const double> predictions,
                           std::span<const double> weights);

/**
 * Pseudo-label for a self-learning sample: the minimizer of the weighted loss over
 * the m+1 admissible label vectors. Returns nullopt (skip) for AL-flagged samples
 * (u = 1) and for samples whose weights are all zero.
 *
 * Ties go to the lowest positive index; the all-negative candidate loses ties to
 * any positive candidate whose weight is non-zero. A zero-weight coordinate never
 * receives a positive label.
 */
std::optional<LabelVector> assign_labels(std::span<const double> predictions,
                                         std::span<const double> weights, int u);

/// True when two or more heads predict positive (phi_j > 0.5, strict).
bool detect_ambiguous(std::span<const double> predictions);

/// Unweighted argmin over the admissible candidates; the label a sample's
/// losses are measured against while it is unlabeled.
LabelVector most_likely_label(std::span<const double> predictions);

}  // namespace mining
