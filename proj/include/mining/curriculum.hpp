#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mining/core_model.hpp"
#include "mining/minmax_solver.hpp"

namespace mining {

/**
 * The two curricula as state: the user-annotated set A (with its categories),
 * the user-rejected set B, and the thresholds lambda (per class) and gamma.
 *
 * A and B only grow and never intersect. lambda grows through update_lambda
 * at most tau times and is constant afterwards.
 */
struct CurriculumState {
    int m = 0;
    std::map<SampleId, Category> annotated;
    std::set<SampleId> rejected;
    std::vector<double> lambda;
    double gamma = 0.0;
    int q = 0;
    long iteration = 0;

    friend bool operator==(const CurriculumState&, const CurriculumState&) = default;
};

Membership membership(const CurriculumState& state, SampleId id);

/// A gains `id` with `category`. Re-annotating with the same category is a no-op.
/// Throws ConflictingAnnotation if `id` is in B or already annotated differently,
/// InvalidArgument if the category is out of range.
CurriculumState commit_annotation(CurriculumState state, SampleId id, Category category);

/// B gains `id`. Repeats are no-ops; throws ConflictingAnnotation if `id` is in A.
CurriculumState commit_rejection(CurriculumState state, SampleId id);

/// Routes a decision to commit_annotation or commit_rejection.
CurriculumState commit_decision(CurriculumState state, const AnnotationDecision& decision);

/// lambda_j += alpha * (-log acc_j) while q + 1 <= tau; accuracies are clamped
/// below at kAccuracyFloor. Otherwise returns the state unchanged.
CurriculumState update_lambda(CurriculumState state, std::span<const double> per_class_accuracy,
                              double alpha, int tau);

/// A and B from the seed decisions, lambda = lambda0, gamma = gamma_factor * m.
CurriculumState init_curriculum(const Hyperparameters& hyper,
                                std::span<const AnnotationDecision> seeds);

/// JSON snapshot for checkpoint/resume.
std::string to_json(const CurriculumState& state);
CurriculumState curriculum_from_json(const std::string& text);

}  // namespace mining
