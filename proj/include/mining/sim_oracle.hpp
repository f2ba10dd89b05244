#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mining/core_model.hpp"

namespace mining {

/// One dataset row: a sample and its label if known. nullopt means the truth is
/// withheld; kUndefined means the sample is outside the m categories.
struct DatasetRow {
    SampleId id = 0;
    std::vector<double> features;
    std::optional<Category> label;

    friend bool operator==(const DatasetRow&, const DatasetRow&) = default;
};

/// Hidden ground truth of the training pool. Only the annotation oracle and
/// offline evaluation read it; the mining engine never receives one.
class TruthTable {
public:
    TruthTable() = default;
    explicit TruthTable(std::map<SampleId, Category> truth) : truth_(std::move(truth)) {}

    /// nullopt when the id is unknown or its truth is withheld.
    std::optional<Category> lookup(SampleId id) const;
    void set(SampleId id, Category category) { truth_[id] = category; }
    const std::map<SampleId, Category>& entries() const { return truth_; }

    friend bool operator==(const TruthTable&, const TruthTable&) = default;

private:
    std::map<SampleId, Category> truth_;
};

/// Training pool (truth hidden) plus labeled validation and test splits.
struct Dataset {
    int m = 0;
    int d = 0;
    std::vector<SampleRecord> pool;
    TruthTable pool_truth;
    std::vector<LabeledSample> validation;
    std::vector<LabeledSample> test;
};

struct SyntheticPoolSpec {
    int n = 2000;
    int m = 4;
    int d = 2;
    double undefined_fraction = 0.0;
    double separation = 6.0;
    std::uint64_t seed = 0;
};

/**
 * Gaussian mixture with unit isotropic spread. Class centers sit on a regular
 * polygon in the first two coordinates with adjacent (hence minimum pairwise)
 * distance `separation`; undefined samples come from an extra center at the
 * centroid of the class centers. Labels are balanced across classes.
 *
 * Throws InvalidArgument for n < 10m, d < 2, a fraction outside [0, 1), or a
 * separation that is non-positive or would push centers beyond kMaxCenterRadius.
 */
std::vector<DatasetRow> make_synthetic_rows(const SyntheticPoolSpec& spec);

inline constexpr double kMaxCenterRadius = 1000.0;

/// Seeded 70/10/20 split into pool / validation / test. Rows with withheld
/// truth always land in the pool.
Dataset split_dataset(std::vector<DatasetRow> rows, int m, std::uint64_t seed);

/// make_synthetic_rows followed by split_dataset.
Dataset make_synthetic_pool(const SyntheticPoolSpec& spec);

/// Replaces the truth of round(fraction * count) samples per defined category
/// with a uniformly drawn different category. UNDEFINED truths are untouched.
TruthTable inject_label_noise(const TruthTable& truth, int m, double fraction, std::uint64_t seed);

enum class OracleOutcome { Label, Reject, BudgetExhausted, Unavailable };

struct OracleAnswer {
    OracleOutcome outcome = OracleOutcome::Unavailable;
    Category category = kUndefined;
};

/// Simulated annotator answering from the hidden truth with a finite budget.
class SimOracle {
public:
    SimOracle(TruthTable truth, int m, long budget);

    /// LABEL(truth) for a defined category, REJECT for UNDEFINED truth,
    /// BudgetExhausted once the budget is spent (no decrement), Unavailable for
    /// withheld or unknown ids (no decrement).
    OracleAnswer annotate(SampleId id);

    /// Seed annotation; does not consume budget.
    std::optional<AnnotationDecision> seed_decision(SampleId id) const;

    long budget_remaining() const { return budget_; }

private:
    TruthTable truth_;
    int m_;
    long budget_;
};

}  // namespace mining
