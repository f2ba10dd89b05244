#include "mining/curriculum.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mining/learner.hpp"

namespace mining {

Membership membership(const CurriculumState& state, SampleId id) {
    if (state.annotated.contains(id)) return Membership::InA;
    if (state.rejected.contains(id)) return Membership::InB;
    return Membership::Free;
}

CurriculumState commit_annotation(CurriculumState state, SampleId id, Category category) {
    if (category < 0 || category >= state.m)
        throw InvalidArgument("category " + std::to_string(category) + " out of range");
    if (state.rejected.contains(id))
        throw ConflictingAnnotation("sample " + std::to_string(id) + " was already rejected");
    if (auto it = state.annotated.find(id); it != state.annotated.end()) {
        if (it->second != category)
            throw ConflictingAnnotation("sample " + std::to_string(id) +
                                        " already annotated with a different category");
        return state;
    }
    state.annotated.emplace(id, category);
    return state;
}

CurriculumState commit_rejection(CurriculumState state, SampleId id) {
    if (state.annotated.contains(id))
        throw ConflictingAnnotation("sample " + std::to_string(id) + " was already annotated");
    state.rejected.insert(id);
    return state;
}

CurriculumState commit_decision(CurriculumState state, const AnnotationDecision& decision) {
    if (decision.is_rejection()) return commit_rejection(std::move(state), decision.id);
    return commit_annotation(std::move(state), decision.id, *decision.label);
}

CurriculumState update_lambda(CurriculumState state, std::span<const double> per_class_accuracy,
                              double alpha, int tau) {
    if (static_cast<int>(per_class_accuracy.size()) != state.m)
        throw InvalidArgument("accuracy vector length does not match m");
    if (state.q + 1 > tau) return state;
    for (std::size_t j = 0; j < state.lambda.size(); ++j) {
        const double acc = std::clamp(per_class_accuracy[j], kAccuracyFloor, 1.0);
        state.lambda[j] += alpha * -std::log(acc);
    }
    ++state.q;
    return state;
}

CurriculumState init_curriculum(const Hyperparameters& hyper,
                                std::span<const AnnotationDecision> seeds) {
    hyper.validate();
    if (seeds.empty()) throw InvalidArgument("init_curriculum: seed list is empty");
    CurriculumState state;
    state.m = hyper.m;
    state.lambda.assign(static_cast<std::size_t>(hyper.m), hyper.lambda0);
    state.gamma = hyper.gamma();
    for (const auto& d : seeds) state = commit_decision(std::move(state), d);
    return state;
}

std::string to_json(const CurriculumState& state) {
    nlohmann::json j;
    j["m"] = state.m;
    auto& a = j["annotated"] = nlohmann::json::array();
    for (const auto& [id, c] : state.annotated) a.push_back({{"id", id}, {"category", c}});
    j["rejected"] = state.rejected;
    j["lambda"] = state.lambda;
    j["gamma"] = state.gamma;
    j["q"] = state.q;
    j["iteration"] = state.iteration;
    return j.dump(2);
}

CurriculumState curriculum_from_json(const std::string& text) {
    CurriculumState state;
    try {
        const auto j = nlohmann::json::parse(text);
        state.m = j.at("m").get<int>();
        for (const auto& e : j.at("annotated"))
            state.annotated.emplace(e.at("id").get<SampleId>(), e.at("category").get<Category>());
        state.rejected = j.at("rejected").get<std::set<SampleId>>();
        state.lambda = j.at("lambda").get<std::vector<double>>();
        state.gamma = j.at("gamma").get<double>();
        state.q = j.at("q").get<int>();
        state.iteration = j.at("iteration").get<long>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed curriculum snapshot: ") + e.what());
    }
    for (const auto& [id, c] : state.annotated)
        if (state.rejected.contains(id)) throw InvalidArgument("snapshot has A and B overlapping");
    return state;
}

}  // namespace mining
