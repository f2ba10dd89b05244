// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mining/experiment.hpp"
#include "mining/pseudo_labeler.hpp"
#include "oracles.hpp"

using namespace mining;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

constexpr std::uint64_t kSeeds[] = {0, 1, 2, 3, 4};

/// The reference pool (n=2000, m=4, d=2, 10% seeds, 20% budget) with the
/// desk-scale learner and loop settings used by every end-to-end criterion.
ExperimentConfig reference_config() {
    ExperimentConfig c = default_experiment_config();
    c.pool.n = 2000;
    c.pool.m = 4;
    c.pool.d = 2;
    c.pool.separation = 6.0;
    c.seed_fraction = 0.1;
    c.budget_fraction = 0.2;
    c.engine.hyper.m = 4;
    c.engine.hyper.beta = 100;
    c.engine.sgd.learning_rate = 0.01;
    c.engine.pretrain_epochs = 5;
    c.engine.batches_per_round = 50;
    c.engine.min_rounds = 10;
    c.engine.max_rounds = 10;
    return c;
}

double final_accuracy(ExperimentConfig c, StrategyMode mode, std::uint64_t seed, double noise = 0.0) {
    c.strategy.mode = mode;
    c.noise_fraction = noise;
    return run_oracle_experiment(with_seed(c, seed)).metrics.final_test_accuracy;
}

// ---------------------------------------------------------------------------

Verdict closed_form_matches_oracle() {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> pick_m(1, 5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double eps_values[] = {0.3, 0.5, 0.7};
    long checked = 0, failures = 0, u1 = 0;
    double worst_v = 0.0;
    while (checked < 10000) {
        const int m = pick_m(rng);
        const double gamma = 0.1 + 2.0 * unit(rng);
        const double eps = eps_values[checked % 3];
        const double scale = unit(rng) * unit(rng);
        std::vector<double> l(static_cast<std::size_t>(m)), lambda(l.size());
        double s = 0.0;
        for (std::size_t j = 0; j < l.size(); ++j) {
            l[j] = 3.0 * gamma * unit(rng) * scale;
            lambda[j] = 0.05 + 2.0 * unit(rng);
            s += l[j];
        }
        if (s >= gamma && s <= gamma / (1.0 - eps)) continue;
        const EpsilonValue e(eps);
        const auto got = solve_sample(l, gamma, lambda, e, Membership::Free);
        const auto ref = brute_force_oracle(l, gamma, lambda, e, 1e-3);
        bool ok = got.u == ref.assignment.u && !got.discarded;
        for (std::size_t j = 0; j < l.size(); ++j) {
            const double dv = std::abs(got.v[j] - ref.assignment.v[j]);
            worst_v = std::max(worst_v, dv);
            ok = ok && dv <= 1e-3;
        }
        failures += !ok;
        u1 += got.u;
        ++checked;
    }
    return {failures == 0 && u1 > 1000 && u1 < 9000,
            std::to_string(checked) + " instances, " + std::to_string(u1) + " with u=1, " +
                std::to_string(failures) + " mismatches, worst |dv| " + fmt(worst_v)};
}

Verdict v_branches_match_grid() {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    long failures = 0;
    double worst = 0.0;
    constexpr int kPerBranch = 1000;
    for (int branch = 0; branch < 3; ++branch) {
        for (int k = 0; k < kPerBranch; ++k) {
            const double lambda = 0.05 + 2.0 * unit(rng);
            const double eps = 0.05 + 0.9 * unit(rng);
            double l = 0.0;
            if (branch == 0) l = lambda * (1.0 - eps) * unit(rng);                          // v = eps
            else if (branch == 1) l = lambda * (1.0 - eps + eps * (0.001 + 0.998 * unit(rng)));  // v = 1 - l/lambda
            else l = lambda * (1.0 + 2.0 * unit(rng));                                    // v = 0
            const double got = v_weight_for_class(l, lambda, eps);
            const double ref = oracle::grid_argmin_v(l, lambda, eps, 1e-3);
            const double d = std::abs(got - ref);
            worst = std::max(worst, d);
            failures += d > 1e-3;
        }
    }
    return {failures == 0, "3 x " + std::to_string(kPerBranch) + " instances, " + std::to_string(failures) +
                               " mismatches, worst |dv| " + fmt(worst)};
}

Verdict alternation_reaches_fixed_point() {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> pick_m(1, 5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    long checked = 0, failures = 0;
    while (checked < 1000) {
        const int m = pick_m(rng);
        const double gamma = 0.1 + 2.0 * unit(rng);
        const double eps = 0.05 + 0.9 * unit(rng);
        const double scale = unit(rng);
        std::vector<double> l(static_cast<std::size_t>(m)), lambda(l.size());
        double s = 0.0;
        for (std::size_t j = 0; j < l.size(); ++j) {
            l[j] = 3.0 * gamma * unit(rng) * scale;
            lambda[j] = 0.05 + 2.0 * unit(rng);
            s += l[j];
        }
        if (s >= gamma && s <= gamma / (1.0 - eps)) continue;
        const int expected = solve_sample(l, gamma, lambda, EpsilonValue(eps), Membership::Free).u;
        for (int u0 : {0, 1}) {
            const auto trace = oracle::alternate(u0, l, gamma, lambda, eps, 1e-3, 3);
            failures += !(trace[1] == expected && trace[2] == expected);
        }
        ++checked;
    }
    return {failures == 0, std::to_string(checked) + " instances from both starts, " + std::to_string(failures) +
                               " failures"};
}

Verdict pseudo_labeler_matches_exhaustive() {
    std::mt19937_64 rng(14);
    std::uniform_int_distribution<int> pick_m(1, 10);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    long failures = 0, positives = 0, negatives = 0, skipped = 0;
    for (int k = 0; k < 10000; ++k) {
        const int m = pick_m(rng);
        std::vector<double> phi(static_cast<std::size_t>(m)), w(phi.size());
        for (std::size_t j = 0; j < phi.size(); ++j) {
            phi[j] = unit(rng) < 0.1 ? (unit(rng) < 0.5 ? 0.0 : 1.0) : unit(rng);
            w[j] = unit(rng) < 0.2 ? 0.0 : unit(rng);
        }
        // Exact ties between heads.
        if (m > 1 && unit(rng) < 0.2) {
            phi[1] = phi[0];
            w[1] = w[0];
        }
        const int u = unit(rng) < 0.1 ? 1 : 0;
        const auto got = assign_labels(phi, w, u);
        const auto ref = oracle::exhaustive_pseudo_label(phi, w, u);
        std::optional<int> got_index;
        if (got) got_index = got->positive_index() ? *got->positive_index() : -1;
        failures += got_index != ref;
        if (!ref) ++skipped;
        else if (*ref < 0) ++negatives;
        else ++positives;
    }
    return {failures == 0, "10000 cases (" + std::to_string(positives) + " positive, " + std::to_string(negatives) +
                               " all-negative, " + std::to_string(skipped) + " skipped), " +
                               std::to_string(failures) + " mismatches"};
}

Verdict gradients_match_finite_differences() {
    std::mt19937_64 rng(15);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    long failures = 0;
    for (auto rep : {Representation::Linear, Representation::Mlp}) {
        for (int point = 0; point < 10; ++point) {
            constexpr int d = 3, m = 4, hidden = 6;
            ModelParameters p = rep == Representation::Linear ? ModelParameters::linear(d, m)
                                                              : ModelParameters::mlp(d, hidden, m);
            Eigen::VectorXd flat = p.flatten();
            for (Eigen::Index k = 0; k < flat.size(); ++k) flat(k) = normal(rng);
            p.unflatten(flat);
            std::vector<TrainingExample> examples;
            for (int i = 0; i < 8; ++i) {
                std::vector<double> x(d), w(m);
                for (auto& v : x) v = normal(rng);
                for (auto& v : w) v = unit(rng);
                const int c = static_cast<int>(unit(rng) * (m + 1));
                examples.push_back({x, c == m ? LabelVector::undefined(m) : LabelVector::positive(m, c), w});
            }
            const auto analytic = objective_gradient(p, examples).gradient.flatten();
            const auto numeric = oracle::finite_difference(p, examples, 1e-5);
            const double rel = (analytic - numeric).norm() / std::max({analytic.norm(), numeric.norm(), 1e-12});
            worst = std::max(worst, rel);
            failures += !(rel < 1e-5);
        }
    }
    return {failures == 0, "20 points, worst relative error " + sci(worst)};
}

Verdict curriculum_invariants_hold() {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr int m = 4, tau = 5, kPool = 30;
    long violations = 0, conflicts = 0;
    for (int seq = 0; seq < 10000; ++seq) {
        Hyperparameters h;
        h.m = m;
        h.tau = tau;
        CurriculumState s = init_curriculum(h, std::vector<AnnotationDecision>{{0, 1}});
        std::vector<int> increases(m, 0);
        const int steps = 5 + static_cast<int>(unit(rng) * 20);
        for (int step = 0; step < steps; ++step) {
            const double r = unit(rng);
            const SampleId id = static_cast<SampleId>(unit(rng) * kPool);
            try {
                // Copies: a refused commit must leave the state untouched.
                if (r < 0.4) s = commit_annotation(s, id, static_cast<Category>(unit(rng) * m));
                else if (r < 0.7) s = commit_rejection(s, id);
            } catch (const ConflictingAnnotation&) {
                ++conflicts;
            }
            if (r >= 0.7) {
                std::vector<double> acc(m);
                for (auto& a : acc) a = unit(rng) < 0.1 ? 1.0 : unit(rng);
                const auto before = s.lambda;
                s = update_lambda(std::move(s), acc, h.alpha, tau);
                for (int j = 0; j < m; ++j) {
                    if (s.lambda[j] < before[j]) ++violations;
                    if (s.lambda[j] > before[j]) ++increases[j];
                }
            }
            for (const auto& [a, c] : s.annotated) violations += s.rejected.count(a) != 0;
        }
        for (int j = 0; j < m; ++j) violations += increases[j] > tau;
        // Frozen latents for every member, whatever the losses.
        std::vector<double> l(m);
        for (auto& x : l) x = 5.0 * unit(rng);
        const EpsilonValue eps(0.05 + 0.9 * unit(rng));
        for (const auto& [id, c] : s.annotated) {
            const auto a = solve_sample(l, s.gamma, s.lambda, eps, membership(s, id));
            violations += !(a.u == 1 && std::all_of(a.v.begin(), a.v.end(), [](double v) { return v == 0.0; }));
        }
        for (SampleId id : s.rejected) {
            const auto a = solve_sample(l, s.gamma, s.lambda, eps, membership(s, id));
            violations += !(a.u == 0 && std::all_of(a.v.begin(), a.v.end(), [](double v) { return v == 0.0; }));
        }
    }
    return {violations == 0, "10000 sequences, " + std::to_string(conflicts) + " conflicts refused, " +
                                 std::to_string(violations) + " violations"};
}

Verdict strategy_comparison() {
    const auto base = reference_config();
    std::vector<double> asm_acc, rand_acc, al_acc, sl_acc;
    for (auto seed : kSeeds) {
        asm_acc.push_back(final_accuracy(base, StrategyMode::Asm, seed));
        rand_acc.push_back(final_accuracy(base, StrategyMode::Rand, seed));
        al_acc.push_back(final_accuracy(base, StrategyMode::AlOnly, seed));
        sl_acc.push_back(final_accuracy(base, StrategyMode::SlOnly, seed));
    }
    const double a = median(asm_acc), r = median(rand_acc), al = median(al_acc), sl = median(sl_acc);
    return {a >= r + 0.01 && a >= al && a >= sl,
            "median accuracy ASM " + fmt(a) + ", RAND " + fmt(r) + ", AL_ONLY " + fmt(al) + ", SL_ONLY " + fmt(sl)};
}

Verdict noise_robustness() {
    const auto base = reference_config();
    bool pass = true;
    std::ostringstream detail;
    std::vector<double> clean_asm, clean_sl;
    for (auto seed : kSeeds) {
        clean_asm.push_back(final_accuracy(base, StrategyMode::Asm, seed));
        clean_sl.push_back(final_accuracy(base, StrategyMode::SlOnly, seed));
    }
    for (double noise : {0.1, 0.2, 0.3}) {
        std::vector<double> drop_asm, drop_sl;
        for (std::size_t k = 0; k < std::size(kSeeds); ++k) {
            drop_asm.push_back(clean_asm[k] - final_accuracy(base, StrategyMode::Asm, kSeeds[k], noise));
            drop_sl.push_back(clean_sl[k] - final_accuracy(base, StrategyMode::SlOnly, kSeeds[k], noise));
        }
        const double da = median(drop_asm), ds = median(drop_sl);
        pass = pass && da <= ds;
        detail << "noise " << noise << ": drop ASM " << fmt(da) << " vs SL_ONLY " << fmt(ds) << "; ";
    }
    return {pass, detail.str()};
}

Verdict unseen_categories() {
    auto base = reference_config();
    base.pool.undefined_fraction = 0.2;
    long undefined = 0, positive = 0, rejects = 0, rejects_outside_b = 0;
    for (auto seed : kSeeds) {
        const auto c = with_seed(base, seed);
        const auto prep = prepare_run(c);
        auto engine = make_engine(c, prep);
        SimOracle sim(prep.dataset.pool_truth, c.engine.hyper.m, prep.budget);
        OracleAnnotator oracle_annotator(sim);
        std::vector<AnnotationDecision> seen_rejects;
        for (const auto& d : prep.seeds)
            if (d.is_rejection()) seen_rejects.push_back(d);

        struct Recorder : Annotator {
            Annotator& inner;
            std::vector<AnnotationDecision>& rejects;
            Recorder(Annotator& a, std::vector<AnnotationDecision>& r) : inner(a), rejects(r) {}
            std::vector<AnnotationDecision> annotate(std::span<const QueueItem> q) override {
                auto out = inner.annotate(q);
                for (const auto& d : out)
                    if (d.is_rejection()) rejects.push_back(d);
                return out;
            }
        } recorder(oracle_annotator, seen_rejects);
        engine.run(recorder);

        for (const auto& d : seen_rejects) {
            ++rejects;
            rejects_outside_b += engine.curriculum().rejected.count(d.id) == 0;
        }
        for (const auto& [id, truth] : prep.dataset.pool_truth.entries())
            undefined += truth == kUndefined;
        for (const auto& o : engine.pool_pass()) {
            const auto truth = prep.dataset.pool_truth.lookup(o.id);
            if (truth && *truth == kUndefined && o.pseudo_label && o.pseudo_label->positive_index()) ++positive;
        }
    }
    const double frac = undefined ? static_cast<double>(positive) / static_cast<double>(undefined) : 0.0;
    return {frac <= 0.05 && rejects > 0 && rejects_outside_b == 0,
            std::to_string(positive) + " of " + std::to_string(undefined) + " undefined samples pseudo-labeled positive (" +
                fmt(frac) + "), " + std::to_string(rejects) + " rejections, " + std::to_string(rejects_outside_b) +
                " outside B"};
}

Verdict hyperparameter_sensitivity() {
    const auto base = reference_config();
    const std::vector<std::uint64_t> seeds{0, 1, 2};
    const std::vector<double> lambdas{-std::log(0.9), -std::log(0.7), -std::log(0.5)};
    const std::vector<double> gammas{0.1, 0.3, 0.5};
    auto medians = [&](SweepParameter p, const std::vector<double>& values, bool pseudo) {
        const auto rows = run_sweep(base, p, values, seeds);
        std::vector<double> out;
        for (std::size_t v = 0; v < values.size(); ++v) {
            std::vector<double> cell;
            for (std::size_t s = 0; s < seeds.size(); ++s) {
                const auto& r = rows[v * seeds.size() + s];
                if (r.status == "FAILED") return std::vector<double>{};
                cell.push_back(pseudo ? r.pseudo_fraction : static_cast<double>(r.annotations_used));
            }
            out.push_back(median(cell));
        }
        return out;
    };
    const auto pseudo = medians(SweepParameter::Lambda0, lambdas, true);
    const auto used = medians(SweepParameter::GammaFactor, gammas, false);
    bool pass = pseudo.size() == 3 && used.size() == 3;
    std::ostringstream detail;
    if (pass) {
        pass = pseudo[0] <= pseudo[1] && pseudo[1] <= pseudo[2] && used[0] >= used[1] && used[1] >= used[2];
        detail << "pseudo fraction by lambda0 " << fmt(pseudo[0]) << " " << fmt(pseudo[1]) << " " << fmt(pseudo[2])
               << "; annotations by gamma factor " << used[0] << " " << used[1] << " " << used[2];
    } else {
        detail << "a sweep cell failed";
    }
    return {pass, detail.str()};
}

Verdict determinism() {
    auto c = reference_config();
    const auto a = run_oracle_experiment(c);
    const auto b = run_oracle_experiment(c);
    return {a.metrics_csv == b.metrics_csv && !a.metrics_csv.empty(),
            std::to_string(a.metrics_csv.size()) + " bytes, " + (a.metrics_csv == b.metrics_csv ? "identical" : "differ")};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Verdict()> run;
        double time_limit_s;
    };
    const std::vector<Criterion> criteria{
        {"closed-form latent solve matches brute-force oracle", closed_form_matches_oracle, 60.0},
        {"pseudo-label weight branches match 1-D grid minimization", v_branches_match_grid, 0.0},
        {"alternating updates reach the closed-form u within 2 iterations", alternation_reaches_fixed_point, 0.0},
        {"pseudo-labeler matches exhaustive constrained argmin", pseudo_labeler_matches_exhaustive, 0.0},
        {"objective gradient matches central finite differences", gradients_match_finite_differences, 0.0},
        {"curriculum invariants under random commit sequences", curriculum_invariants_hold, 0.0},
        {"ASM beats RAND by 1 point and matches AL_ONLY and SL_ONLY", strategy_comparison, 600.0},
        {"ASM accuracy drop under label noise no worse than SL_ONLY", noise_robustness, 0.0},
        {"undefined samples rarely pseudo-labeled positive; rejections land in B", unseen_categories, 0.0},
        {"pseudo fraction rises with lambda0; annotations fall with gamma factor", hyperparameter_sensitivity, 0.0},
        {"identical config and seed give byte-identical metrics CSV", determinism, 0.0},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
            v.pass = false;
            v.detail += " (exceeded " + fmt(c.time_limit_s) + " s)";
        }
        std::printf("%s %s: %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !v.pass;
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
