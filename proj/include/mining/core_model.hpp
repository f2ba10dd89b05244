#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mining {

using SampleId = std::int64_t;
using Category = int;

/// Truth sentinel for samples outside the m defined categories. The dataset
/// CSV writes it as -1.
inline constexpr Category kUndefined = -1;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Non-finite or out-of-domain numbers handed to a numeric routine.
struct NumericInputError : std::domain_error {
    using std::domain_error::domain_error;
};

struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A sample cannot be both user-annotated and user-rejected, nor annotated
/// twice with different categories.
struct ConflictingAnnotation : std::logic_error {
    using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

/**
 * One-vs-rest label vector over {-1,+1}^m with at most one +1 entry.
 *
 * The all-negative vector is the undefined category: every head rejects the
 * sample. Construction goes through the named factories so the constraint
 * sum_j |y_j + 1| <= 2 always holds.
 */
class LabelVector {
public:
    static LabelVector undefined(int m);
    static LabelVector positive(int m, Category category);
    /// Validates an arbitrary +-1 vector; throws InvalidArgument when an entry
    /// is not +-1 or more than one entry is +1.
    static LabelVector from_values(std::vector<int> values);

    int size() const { return static_cast<int>(values_.size()); }
    int operator[](int j) const { return values_[static_cast<std::size_t>(j)]; }
    const std::vector<int>& values() const { return values_; }

    /// Index of the +1 entry, or nullopt for the undefined category.
    std::optional<Category> positive_index() const;

    friend bool operator==(const LabelVector&, const LabelVector&) = default;

private:
    explicit LabelVector(std::vector<int> values) : values_(std::move(values)) {}
    std::vector<int> values_;
};

/// The m+1 admissible label vectors: all-negative first, then positive-at-j
/// for j = 0..m-1.
std::vector<LabelVector> enumerate_label_candidates(int m);

bool is_undefined(const LabelVector& y);

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

enum class SampleStatus { Unlabeled, Annotated, Rejected, Pseudo, MarginSkipped };

const char* to_string(SampleStatus status);

/**
 * One pool item as the learner sees it. Ground truth is deliberately absent:
 * only the annotation oracle holds it (see sim_oracle.hpp).
 */
struct SampleRecord {
    SampleId id = 0;
    std::vector<double> features;
    SampleStatus status = SampleStatus::Unlabeled;
    std::optional<LabelVector> current_label;
};

/// A sample with visible ground truth; used for validation and test splits.
struct LabeledSample {
    SampleId id = 0;
    std::vector<double> features;
    Category truth = kUndefined;
};

/// A user's answer for one queried sample: a category, or a rejection as
/// outside the defined categories (label == nullopt).
struct AnnotationDecision {
    SampleId id = 0;
    std::optional<Category> label;

    bool is_rejection() const { return !label.has_value(); }
    friend bool operator==(const AnnotationDecision&, const AnnotationDecision&) = default;
};

// ---------------------------------------------------------------------------
// Loss matrix
// ---------------------------------------------------------------------------

/// n x m non-negative per-class losses in nats, row-major.
class LossMatrix {
public:
    LossMatrix() = default;
    LossMatrix(int rows, int cols);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double operator()(int i, int j) const { return values_[index(i, j)]; }
    /// Throws NumericInputError on negative or non-finite values.
    void set(int i, int j, double value);

    std::vector<double> row(int i) const;
    void append_row(const std::vector<double>& row);

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
               static_cast<std::size_t>(j);
    }
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Hyperparameters
// ---------------------------------------------------------------------------

struct Hyperparameters {
    int m = 20;
    double lambda0 = -std::log(0.9);
    double gamma_factor = 0.5;
    double alpha = 0.08;
    int tau = 5;
    int beta = 10000;
    int al_batch_size = 50;
    std::uint64_t seed = 0;

    double gamma() const { return gamma_factor * m; }
    /// Throws InvalidArgument naming the first offending field.
    void validate() const;
};

}  // namespace mining
