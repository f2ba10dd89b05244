#include "mining/minmax_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mining {

namespace {

void check_inputs(std::span<const double> losses, double gamma, std::span<const double> lambda) {
    if (losses.size() != lambda.size())
        throw InvalidArgument("loss and lambda vectors differ in length");
    if (!(gamma > 0.0)) throw InvalidArgument("gamma must be > 0");
    for (double l : lambda)
        if (!(l > 0.0) || !std::isfinite(l)) throw InvalidArgument("lambda entries must be > 0");
    for (double l : losses)
        if (!std::isfinite(l) || l < 0.0)
            throw NumericInputError("losses must be finite and non-negative");
}

// f(v) = v*l + lambda/2 (v^2 - 2v), the u = 0 per-class term.
double sl_term(double v, double loss, double lambda) {
    return v * loss + 0.5 * lambda * (v * v - 2.0 * v);
}

std::vector<double> grid_points(double epsilon, double step) {
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor(epsilon / step + 1e-12));
    grid.reserve(static_cast<std::size_t>(count) + 2);
    for (long k = 0; k <= count; ++k) grid.push_back(std::min(epsilon, static_cast<double>(k) * step));
    if (grid.back() < epsilon) grid.push_back(epsilon);
    return grid;
}

double grid_min_u1_term(double lambda, const std::vector<double>& grid, double* arg) {
    // With u = 1 the loss term is constant in v; only lambda/2 (v^2 - 2v) varies.
    double best = 0.0;
    bool first = true;
    for (double v : grid) {
        const double value = 0.5 * lambda * (v * v - 2.0 * v);
        if (first || value < best) {
            best = value;
            *arg = v;
            first = false;
        }
    }
    return best;
}

double grid_min_u0_term(double loss, double lambda, const std::vector<double>& grid,
                        double* arg) {
    double best = 0.0;
    bool first = true;
    for (double v : grid) {
        const double value = sl_term(v, loss, lambda);
        if (first || value < best) {
            best = value;
            *arg = v;
            first = false;
        }
    }
    return best;
}

// Grid argmin over v for a fixed u.
std::vector<double> grid_best_v(int u, std::span<const double> losses,
                                std::span<const double> lambda, const std::vector<double>& grid) {
    std::vector<double> v(losses.size());
    for (std::size_t j = 0; j < losses.size(); ++j) {
        if (u == 1)
            grid_min_u1_term(lambda[j], grid, &v[j]);
        else
            grid_min_u0_term(losses[j], lambda[j], grid, &v[j]);
    }
    return v;
}

int best_u_given_v(std::span<const double> v, std::span<const double> losses, double gamma,
                   std::span<const double> lambda, int current) {
    const double e0 = sample_energy(0, v, losses, gamma, lambda);
    const double e1 = sample_energy(1, v, losses, gamma, lambda);
    if (e1 > e0) return 1;
    if (e0 > e1) return 0;
    return current;
}

// Alternating updates; returns u after each of `rounds` iterations.
std::vector<int> iterate_from(int u0, std::span<const double> losses, double gamma,
                              std::span<const double> lambda, const std::vector<double>& grid,
                              int rounds) {
    std::vector<int> trace;
    int u = u0;
    for (int t = 0; t < rounds; ++t) {
        const auto v = grid_best_v(u, losses, lambda, grid);
        u = best_u_given_v(v, losses, gamma, lambda, u);
        trace.push_back(u);
    }
    return trace;
}

}  // namespace

double LatentAssignment::selector(int j) const {
    return std::max(static_cast<double>(u), v.at(static_cast<std::size_t>(j)));
}

EpsilonValue::EpsilonValue(double raw) {
    if (std::isnan(raw)) throw NumericInputError("epsilon is NaN");
    value_ = std::clamp(raw, kMin, kMax);
}

EpsilonValue compute_epsilon(const LossMatrix& losses, std::span<const double> lambda) {
    if (losses.empty()) throw InvalidArgument("compute_epsilon: empty loss matrix");
    if (static_cast<int>(lambda.size()) != losses.cols())
        throw InvalidArgument("compute_epsilon: lambda length does not match loss columns");
    for (double l : lambda)
        if (!(l > 0.0)) throw InvalidArgument("compute_epsilon: lambda entries must be > 0");
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < losses.rows(); ++i)
        for (int j = 0; j < losses.cols(); ++j)
            best = std::max(best, 1.0 - losses(i, j) / lambda[static_cast<std::size_t>(j)]);
    return EpsilonValue(best);
}

double v_weight_for_class(double loss, double lambda, double epsilon) {
    if (loss > lambda) return 0.0;
    if (loss < lambda * (1.0 - epsilon)) return epsilon;
    return 1.0 - loss / lambda;
}

LatentAssignment solve_sample(std::span<const double> losses, double gamma,
                              std::span<const double> lambda, EpsilonValue epsilon,
                              Membership membership) {
    check_inputs(losses, gamma, lambda);
    const std::size_t m = losses.size();
    LatentAssignment out;
    out.v.assign(m, 0.0);
    switch (membership) {
        case Membership::InA: out.u = 1; return out;
        case Membership::InB: out.u = 0; return out;
        case Membership::Free: break;
    }

    const double eps = epsilon.value();
    const double total = std::accumulate(losses.begin(), losses.end(), 0.0);
    if (total > gamma / (1.0 - eps)) {
        out.u = 1;
        std::fill(out.v.begin(), out.v.end(), eps);
    } else if (total < gamma) {
        out.u = 0;
        for (std::size_t j = 0; j < m; ++j) out.v[j] = v_weight_for_class(losses[j], lambda[j], eps);
    } else {
        out.discarded = true;
    }
    return out;
}

double sample_energy(int u, std::span<const double> v, std::span<const double> losses,
                     double gamma, std::span<const double> lambda) {
    double energy = -gamma * u;
    for (std::size_t j = 0; j < losses.size(); ++j) {
        energy += std::max(static_cast<double>(u), v[j]) * losses[j];
        energy += 0.5 * lambda[j] * (v[j] * v[j] - 2.0 * v[j]);
    }
    return energy;
}

double grid_minimize_v(double loss, double lambda, double epsilon, double grid_step) {
    if (!(grid_step > 0.0) || grid_step > epsilon / 10.0 + 1e-15)
        throw InvalidArgument("grid_step must lie in (0, eps/10]");
    double arg = 0.0;
    grid_min_u0_term(loss, lambda, grid_points(epsilon, grid_step), &arg);
    return arg;
}

OracleResult brute_force_oracle(std::span<const double> losses, double gamma,
                                std::span<const double> lambda, EpsilonValue epsilon,
                                double grid_step) {
    check_inputs(losses, gamma, lambda);
    const double eps = epsilon.value();
    if (!(grid_step > 0.0) || grid_step > eps / 10.0 + 1e-15)
        throw InvalidArgument("grid_step must lie in (0, eps/10]");
    if (losses.size() > 5) throw InvalidArgument("brute_force_oracle supports m <= 5");

    const auto grid = grid_points(eps, grid_step);
    const double total = std::accumulate(losses.begin(), losses.end(), 0.0);

    // min over the product grid, separable per coordinate.
    double min_u0 = 0.0, min_u1 = total - gamma;
    std::vector<double> v0(losses.size()), v1(losses.size());
    for (std::size_t j = 0; j < losses.size(); ++j) {
        min_u0 += grid_min_u0_term(losses[j], lambda[j], grid, &v0[j]);
        min_u1 += grid_min_u1_term(lambda[j], grid, &v1[j]);
    }

    OracleResult result;
    if (min_u1 > min_u0) {
        result.assignment.u = 1;
        result.assignment.v = v1;
    } else {
        result.assignment.u = 0;
        result.assignment.v = v0;
    }

    constexpr int kRounds = 4;
    const auto from_zero = iterate_from(0, losses, gamma, lambda, grid, kRounds);
    const auto from_one = iterate_from(1, losses, gamma, lambda, grid, kRounds);
    result.u_from_zero = from_zero[1];
    result.u_from_one = from_one[1];
    const auto settled = [](const std::vector<int>& trace) {
        return std::all_of(trace.begin() + 1, trace.end(), [&](int u) { return u == trace[1]; });
    };
    result.fixed_point_agrees =
        settled(from_zero) && settled(from_one) && result.u_from_zero == result.u_from_one;
    result.assignment.discarded = !result.fixed_point_agrees;
    return result;
}

}  // namespace mining
