#include "mining/sim_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mining {

std::optional<Category> TruthTable::lookup(SampleId id) const {
    auto it = truth_.find(id);
    if (it == truth_.end()) return std::nullopt;
    return it->second;
}

std::vector<DatasetRow> make_synthetic_rows(const SyntheticPoolSpec& spec) {
    if (spec.m < 1) throw InvalidArgument("m must be >= 1");
    if (spec.d < 2) throw InvalidArgument("d must be >= 2");
    if (spec.n < 10 * spec.m) throw InvalidArgument("n must be >= 10 m");
    if (!(spec.undefined_fraction >= 0.0 && spec.undefined_fraction < 1.0))
        throw InvalidArgument("undefined_fraction must lie in [0, 1)");
    if (!(spec.separation > 0.0) || !std::isfinite(spec.separation))
        throw InvalidArgument("separation must be > 0");

    const double radius =
        spec.m == 1 ? 0.0 : spec.separation / (2.0 * std::sin(std::numbers::pi / spec.m));
    if (radius > kMaxCenterRadius)
        throw InvalidArgument("separation too large: class centers would exceed radius " +
                              std::to_string(kMaxCenterRadius));

    std::vector<std::vector<double>> centers;
    for (int c = 0; c < spec.m; ++c) {
        std::vector<double> center(static_cast<std::size_t>(spec.d), 0.0);
        const double angle = 2.0 * std::numbers::pi * c / spec.m + std::numbers::pi / 4.0;
        center[0] = radius * std::cos(angle);
        center[1] = radius * std::sin(angle);
        centers.push_back(std::move(center));
    }
    std::vector<double> undefined_center(static_cast<std::size_t>(spec.d), 0.0);
    for (const auto& c : centers)
        for (std::size_t k = 0; k < c.size(); ++k) undefined_center[k] += c[k] / spec.m;

    const auto undefined_count =
        static_cast<int>(std::lround(spec.undefined_fraction * spec.n));
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<DatasetRow> rows;
    rows.reserve(static_cast<std::size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) {
        const Category truth = i < undefined_count ? kUndefined : (i - undefined_count) % spec.m;
        const auto& center =
            truth == kUndefined ? undefined_center : centers[static_cast<std::size_t>(truth)];
        DatasetRow row;
        row.id = i;
        row.label = truth;
        row.features.resize(center.size());
        for (std::size_t k = 0; k < center.size(); ++k) row.features[k] = center[k] + noise(rng);
        rows.push_back(std::move(row));
    }
    return rows;
}

Dataset split_dataset(std::vector<DatasetRow> rows, int m, std::uint64_t seed) {
    if (rows.empty()) throw InvalidArgument("dataset has no rows");
    const auto d = rows.front().features.size();
    for (const auto& r : rows) {
        if (r.features.size() != d) throw InvalidArgument("rows differ in feature dimension");
        if (r.label && (*r.label < kUndefined || *r.label >= m))
            throw InvalidArgument("row " + std::to_string(r.id) + " has label out of range");
    }

    std::mt19937_64 rng(seed ^ 0x5eed5117ULL);
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n = rows.size();
    const auto validation_size = static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(n)));
    const auto test_size = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));

    Dataset out;
    out.m = m;
    out.d = static_cast<int>(d);
    std::map<SampleId, Category> truth;
    for (auto& r : rows) {
        if (r.label && out.validation.size() < validation_size) {
            out.validation.push_back({r.id, std::move(r.features), *r.label});
        } else if (r.label && out.test.size() < test_size) {
            out.test.push_back({r.id, std::move(r.features), *r.label});
        } else {
            if (r.label) truth.emplace(r.id, *r.label);
            out.pool.push_back({r.id, std::move(r.features), SampleStatus::Unlabeled, std::nullopt});
        }
    }
    out.pool_truth = TruthTable(std::move(truth));
    return out;
}

Dataset make_synthetic_pool(const SyntheticPoolSpec& spec) {
    return split_dataset(make_synthetic_rows(spec), spec.m, spec.seed);
}

TruthTable inject_label_noise(const TruthTable& truth, int m, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw InvalidArgument("noise fraction must lie in [0, 1]");
    if (m < 2 || fraction == 0.0) return truth;

    std::vector<std::vector<SampleId>> by_class(static_cast<std::size_t>(m));
    for (const auto& [id, c] : truth.entries())
        if (c != kUndefined) by_class[static_cast<std::size_t>(c)].push_back(id);

    std::mt19937_64 rng(seed);
    TruthTable noisy = truth;
    for (int c = 0; c < m; ++c) {
        auto ids = by_class[static_cast<std::size_t>(c)];
        std::shuffle(ids.begin(), ids.end(), rng);
        const auto flips = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(ids.size())));
        std::uniform_int_distribution<int> other(0, m - 2);
        for (std::size_t k = 0; k < flips; ++k) {
            int replacement = other(rng);
            if (replacement >= c) ++replacement;
            noisy.set(ids[k], replacement);
        }
    }
    return noisy;
}

SimOracle::SimOracle(TruthTable truth, int m, long budget)
    : truth_(std::move(truth)), m_(m), budget_(budget) {
    if (budget < 0) throw InvalidArgument("annotation budget must be >= 0");
}

OracleAnswer SimOracle::annotate(SampleId id) {
    if (budget_ <= 0) return {OracleOutcome::BudgetExhausted, kUndefined};
    const auto truth = truth_.lookup(id);
    if (!truth) return {OracleOutcome::Unavailable, kUndefined};
    --budget_;
    if (*truth == kUndefined || *truth >= m_) return {OracleOutcome::Reject, kUndefined};
    return {OracleOutcome::Label, *truth};
}

std::optional<AnnotationDecision> SimOracle::seed_decision(SampleId id) const {
    const auto truth = truth_.lookup(id);
    if (!truth) return std::nullopt;
    if (*truth == kUndefined) return AnnotationDecision{id, std::nullopt};
    return AnnotationDecision{id, *truth};
}

}  // namespace mining
