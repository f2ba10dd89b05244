#include "mining/pseudo_labeler.hpp"

#include <algorithm>
#include <cmath>

namespace mining {

double clamp_probability(double phi) {
    if (std::isnan(phi) || phi < 0.0 || phi > 1.0)
        throw NumericInputError("probability outside [0, 1]");
    return std::clamp(phi, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

double class_loss(int y, double phi) {
    const double p = clamp_probability(phi);
    return y > 0 ? -std::log(p) : -std::log1p(-p);
}

double weighted_label_loss(const LabelVector& y, std::span<const double> predictions,
                           std::span<const double> weights) {
    double total = 0.0;
    for (int j = 0; j < y.size(); ++j) {
        const auto k = static_cast<std::size_t>(j);
        if (weights[k] == 0.0) continue;
        total += weights[k] * class_loss(y[j], predictions[k]);
    }
    return total;
}

std::optional<LabelVector> assign_labels(std::span<const double> predictions,
                                         std::span<const double> weights, int u) {
    if (predictions.size() != weights.size() || predictions.empty())
        throw InvalidArgument("assign_labels: predictions and weights must have equal length m >= 1");
    for (double phi : predictions) clamp_probability(phi);
    if (u == 1) return std::nullopt;
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; }))
        return std::nullopt;

    const int m = static_cast<int>(predictions.size());
    const auto candidates = enumerate_label_candidates(m);
    // candidates[0] is all-negative; candidates[j + 1] is positive at j.
    const double all_negative = weighted_label_loss(candidates[0], predictions, weights);
    std::optional<Category> best;
    double best_loss = all_negative;
    for (int j = 0; j < m; ++j) {
        if (weights[static_cast<std::size_t>(j)] == 0.0) continue;
        const double loss =
            weighted_label_loss(candidates[static_cast<std::size_t>(j) + 1], predictions, weights);
        if (best ? loss < best_loss : loss <= best_loss) {
            best = j;
            best_loss = loss;
        }
    }
    return best ? LabelVector::positive(m, *best) : LabelVector::undefined(m);
}

bool detect_ambiguous(std::span<const double> predictions) {
    return std::count_if(predictions.begin(), predictions.end(),
                         [](double phi) { return phi > 0.5; }) >= 2;
}

LabelVector most_likely_label(std::span<const double> predictions) {
    const std::vector<double> ones(predictions.size(), 1.0);
    return *assign_labels(predictions, ones, 0);
}

}  // namespace mining
