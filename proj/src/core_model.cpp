#include "mining/core_model.hpp"

#include <algorithm>

namespace mining {

LabelVector LabelVector::undefined(int m) {
    if (m < 1) throw InvalidArgument("label vector needs m >= 1");
    return LabelVector(std::vector<int>(static_cast<std::size_t>(m), -1));
}

LabelVector LabelVector::positive(int m, Category category) {
    if (category < 0 || category >= m)
        throw InvalidArgument("category " + std::to_string(category) + " outside [0, " +
                              std::to_string(m) + ")");
    auto y = undefined(m);
    y.values_[static_cast<std::size_t>(category)] = 1;
    return y;
}

LabelVector LabelVector::from_values(std::vector<int> values) {
    if (values.empty()) throw InvalidArgument("label vector needs m >= 1");
    int positives = 0;
    for (int v : values) {
        if (v != 1 && v != -1) throw InvalidArgument("label entries must be -1 or +1");
        positives += (v == 1);
    }
    if (positives > 1) throw InvalidArgument("label vector has more than one positive entry");
    return LabelVector(std::move(values));
}

std::optional<Category> LabelVector::positive_index() const {
    auto it = std::find(values_.begin(), values_.end(), 1);
    if (it == values_.end()) return std::nullopt;
    return static_cast<Category>(it - values_.begin());
}

std::vector<LabelVector> enumerate_label_candidates(int m) {
    if (m < 1) throw InvalidArgument("enumerate_label_candidates: m must be >= 1");
    std::vector<LabelVector> out;
    out.reserve(static_cast<std::size_t>(m) + 1);
    out.push_back(LabelVector::undefined(m));
    for (Category j = 0; j < m; ++j) out.push_back(LabelVector::positive(m, j));
    return out;
}

bool is_undefined(const LabelVector& y) {
    int total = 0;
    for (int v : y.values()) total += std::abs(v + 1);
    return total == 0;
}

const char* to_string(SampleStatus status) {
    switch (status) {
        case SampleStatus::Unlabeled: return "UNLABELED";
        case SampleStatus::Annotated: return "ANNOTATED";
        case SampleStatus::Rejected: return "REJECTED";
        case SampleStatus::Pseudo: return "PSEUDO";
        case SampleStatus::MarginSkipped: return "MARGIN_SKIPPED";
    }
    return "?";
}

LossMatrix::LossMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) throw InvalidArgument("negative loss matrix shape");
    values_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
}

void LossMatrix::set(int i, int j, double value) {
    if (!std::isfinite(value) || value < 0.0)
        throw NumericInputError("loss entries must be finite and non-negative");
    values_[index(i, j)] = value;
}

std::vector<double> LossMatrix::row(int i) const {
    auto first = values_.begin() + static_cast<std::ptrdiff_t>(index(i, 0));
    return {first, first + cols_};
}

void LossMatrix::append_row(const std::vector<double>& row) {
    if (rows_ == 0 && cols_ == 0) cols_ = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != cols_)
        throw InvalidArgument("loss row width does not match matrix");
    for (double v : row)
        if (!std::isfinite(v) || v < 0.0)
            throw NumericInputError("loss entries must be finite and non-negative");
    values_.insert(values_.end(), row.begin(), row.end());
    ++rows_;
}

void Hyperparameters::validate() const {
    if (m < 1) throw InvalidArgument("m must be >= 1");
    if (!(lambda0 > 0.0)) throw InvalidArgument("lambda0 must be > 0");
    if (!(gamma_factor > 0.0)) throw InvalidArgument("gamma_factor must be > 0");
    if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be >= 0");
    if (tau < 0) throw InvalidArgument("tau must be >= 0");
    if (beta < 1) throw InvalidArgument("beta must be >= 1");
    if (al_batch_size < 0) throw InvalidArgument("al_batch_size must be >= 0");
}

}  // namespace mining
