#include "mining/learner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mining/pseudo_labeler.hpp"

namespace mining {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
    return {x.data(), static_cast<Eigen::Index>(x.size())};
}

void check_dim(const ModelParameters& params, std::span<const double> features) {
    if (static_cast<int>(features.size()) != params.input_dim)
        throw InvalidArgument("feature dimension " + std::to_string(features.size()) +
                              " does not match model input " + std::to_string(params.input_dim));
}

template <typename Derived>
void append(Eigen::VectorXd& flat, Eigen::Index& at, const Eigen::DenseBase<Derived>& block) {
    for (Eigen::Index c = 0; c < block.cols(); ++c)
        for (Eigen::Index r = 0; r < block.rows(); ++r) flat[at++] = block(r, c);
}

template <typename Derived>
void extract(const Eigen::VectorXd& flat, Eigen::Index& at, Eigen::DenseBase<Derived>& block) {
    for (Eigen::Index c = 0; c < block.cols(); ++c)
        for (Eigen::Index r = 0; r < block.rows(); ++r) block(r, c) = flat[at++];
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char bytes[4];
    for (int k = 0; k < 4; ++k) bytes[k] = static_cast<unsigned char>((v >> (8 * k)) & 0xFFu);
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw InvalidArgument("truncated checkpoint");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes[k]) << (8 * k);
    return v;
}

void write_f64(std::ostream& out, double value) {
    const auto bits = std::bit_cast<std::uint64_t>(value);
    unsigned char bytes[8];
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xFFu);
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw InvalidArgument("truncated checkpoint");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
    return std::bit_cast<double>(bits);
}

constexpr char kMagic[4] = {'A', 'S', 'M', 'W'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

// ---------------------------------------------------------------------------
// ModelParameters
// ---------------------------------------------------------------------------

ModelParameters ModelParameters::linear(int input_dim, int num_classes) {
    if (input_dim < 1 || num_classes < 1) throw InvalidArgument("model dimensions must be >= 1");
    ModelParameters p;
    p.representation = Representation::Linear;
    p.input_dim = input_dim;
    p.num_classes = num_classes;
    p.w1 = Eigen::MatrixXd::Zero(input_dim, num_classes);
    p.b1 = Eigen::VectorXd::Zero(num_classes);
    return p;
}

ModelParameters ModelParameters::mlp(int input_dim, int hidden, int num_classes) {
    if (input_dim < 1 || num_classes < 1 || hidden < 1)
        throw InvalidArgument("model dimensions must be >= 1");
    ModelParameters p;
    p.representation = Representation::Mlp;
    p.input_dim = input_dim;
    p.num_classes = num_classes;
    p.hidden = hidden;
    p.w1 = Eigen::MatrixXd::Zero(input_dim, hidden);
    p.b1 = Eigen::VectorXd::Zero(hidden);
    p.w2 = Eigen::MatrixXd::Zero(hidden, num_classes);
    p.b2 = Eigen::VectorXd::Zero(num_classes);
    return p;
}

void ModelParameters::randomize(std::mt19937_64& rng, double weight_std) {
    std::normal_distribution<double> normal(0.0, weight_std);
    for (Eigen::Index c = 0; c < w1.cols(); ++c)
        for (Eigen::Index r = 0; r < w1.rows(); ++r) w1(r, c) = normal(rng);
    for (Eigen::Index c = 0; c < w2.cols(); ++c)
        for (Eigen::Index r = 0; r < w2.rows(); ++r) w2(r, c) = normal(rng);
    b1.setZero();
    b2.setZero();
}

ModelParameters ModelParameters::zeros_like() const {
    ModelParameters z = *this;
    z.w1.setZero();
    z.b1.setZero();
    z.w2.setZero();
    z.b2.setZero();
    return z;
}

Eigen::Index ModelParameters::parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
}

Eigen::VectorXd ModelParameters::flatten() const {
    Eigen::VectorXd flat(parameter_count());
    Eigen::Index at = 0;
    append(flat, at, w1);
    append(flat, at, b1);
    append(flat, at, w2);
    append(flat, at, b2);
    return flat;
}

void ModelParameters::unflatten(const Eigen::VectorXd& flat) {
    if (flat.size() != parameter_count()) throw InvalidArgument("flat parameter size mismatch");
    Eigen::Index at = 0;
    extract(flat, at, w1);
    extract(flat, at, b1);
    extract(flat, at, w2);
    extract(flat, at, b2);
}

bool ModelParameters::all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

void SgdConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
}

// ---------------------------------------------------------------------------
// Forward pass and losses
// ---------------------------------------------------------------------------

Eigen::VectorXd forward_logits(const ModelParameters& params, std::span<const double> features) {
    check_dim(params, features);
    const auto x = as_vector(features);
    if (params.representation == Representation::Linear)
        return params.w1.transpose() * x + params.b1;
    const Eigen::VectorXd hidden = (params.w1.transpose() * x + params.b1).cwiseMax(0.0);
    return params.w2.transpose() * hidden + params.b2;
}

std::vector<double> predict(const ModelParameters& params, std::span<const double> features) {
    const Eigen::VectorXd z = forward_logits(params, features);
    std::vector<double> phi(static_cast<std::size_t>(z.size()));
    for (Eigen::Index j = 0; j < z.size(); ++j) phi[static_cast<std::size_t>(j)] = sigmoid(z[j]);
    return phi;
}

std::vector<double> label_losses(const ModelParameters& params, std::span<const double> features,
                                 const LabelVector& label) {
    const auto phi = predict(params, features);
    if (static_cast<int>(phi.size()) != label.size())
        throw InvalidArgument("label width does not match model heads");
    std::vector<double> out(phi.size());
    for (std::size_t j = 0; j < phi.size(); ++j) out[j] = class_loss(label[static_cast<int>(j)], phi[j]);
    return out;
}

std::vector<TrainingExample> weighted_examples(std::span<const SampleRecord> batch,
                                               std::span<const LatentAssignment> assignments) {
    if (batch.size() != assignments.size())
        throw InvalidArgument("weighted_examples: " + std::to_string(batch.size()) + " samples but " +
                              std::to_string(assignments.size()) + " assignments");
    std::vector<TrainingExample> out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& record = batch[i];
        const auto& a = assignments[i];
        if (!record.current_label || a.discarded) continue;
        if (static_cast<int>(a.v.size()) != record.current_label->size())
            throw InvalidArgument("assignment width does not match label width");
        std::vector<double> w(a.v.size());
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = a.selector(static_cast<int>(j));
        out.push_back({record.features, *record.current_label, std::move(w)});
    }
    return out;
}

double weighted_batch_objective(const ModelParameters& params,
                                std::span<const TrainingExample> examples) {
    double total = 0.0;
    for (const auto& ex : examples) {
        const Eigen::VectorXd z = forward_logits(params, ex.features);
        for (Eigen::Index j = 0; j < z.size(); ++j) {
            const double w = ex.weights[static_cast<std::size_t>(j)];
            if (w == 0.0) continue;
            total += w * softplus(ex.label[static_cast<int>(j)] > 0 ? -z[j] : z[j]);
        }
    }
    return total;
}

double weighted_batch_objective(const ModelParameters& params, std::span<const SampleRecord> batch,
                                std::span<const LatentAssignment> assignments) {
    const auto examples = weighted_examples(batch, assignments);
    return weighted_batch_objective(params, examples);
}

ObjectiveGradient objective_gradient(const ModelParameters& params,
                                     std::span<const TrainingExample> examples) {
    ObjectiveGradient out{0.0, params.zeros_like()};
    auto& g = out.gradient;
    const int m = params.num_classes;
    Eigen::VectorXd dz(m);
    for (const auto& ex : examples) {
        check_dim(params, ex.features);
        if (static_cast<int>(ex.weights.size()) != m || ex.label.size() != m)
            throw InvalidArgument("training example width does not match model heads");
        const auto x = as_vector(ex.features);
        Eigen::VectorXd pre, hidden;
        Eigen::VectorXd z;
        if (params.representation == Representation::Linear) {
            z = params.w1.transpose() * x + params.b1;
        } else {
            pre = params.w1.transpose() * x + params.b1;
            hidden = pre.cwiseMax(0.0);
            z = params.w2.transpose() * hidden + params.b2;
        }
        for (int j = 0; j < m; ++j) {
            const double w = ex.weights[static_cast<std::size_t>(j)];
            const bool positive = ex.label[j] > 0;
            if (w == 0.0) {
                dz[j] = 0.0;
                continue;
            }
            out.value += w * softplus(positive ? -z[j] : z[j]);
            dz[j] = w * (sigmoid(z[j]) - (positive ? 1.0 : 0.0));
        }
        if (params.representation == Representation::Linear) {
            g.w1.noalias() += x * dz.transpose();
            g.b1 += dz;
        } else {
            g.w2.noalias() += hidden * dz.transpose();
            g.b2 += dz;
            Eigen::VectorXd dh = params.w2 * dz;
            for (Eigen::Index k = 0; k < dh.size(); ++k)
                if (pre[k] <= 0.0) dh[k] = 0.0;
            g.w1.noalias() += x * dh.transpose();
            g.b1 += dh;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// SGD
// ---------------------------------------------------------------------------

ModelParameters SgdOptimizer::step(const ModelParameters& params,
                                   std::span<const TrainingExample> examples) {
    auto grad = objective_gradient(params, examples).gradient;
    const double scale = 1.0 / static_cast<double>(config_.batch_size);
    grad.w1 = grad.w1 * scale + config_.weight_decay * params.w1;
    grad.b1 *= scale;
    grad.w2 = grad.w2 * scale + config_.weight_decay * params.w2;
    grad.b2 *= scale;
    if (!grad.all_finite()) throw TrainingDiverged("non-finite gradient");

    if (!velocity_) velocity_ = params.zeros_like();
    auto& vel = *velocity_;
    const double mu = config_.momentum;
    const double lr = config_.learning_rate;
    vel.w1 = mu * vel.w1 - lr * grad.w1;
    vel.b1 = mu * vel.b1 - lr * grad.b1;
    vel.w2 = mu * vel.w2 - lr * grad.w2;
    vel.b2 = mu * vel.b2 - lr * grad.b2;

    ModelParameters next = params;
    next.w1 += vel.w1;
    next.b1 += vel.b1;
    next.w2 += vel.w2;
    next.b2 += vel.b2;
    if (!next.all_finite()) throw TrainingDiverged("parameters became non-finite");
    return next;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

std::vector<double> validation_accuracy(const ModelParameters& params,
                                        std::span<const LabeledSample> validation) {
    if (validation.empty()) throw InvalidArgument("validation set is empty");
    const int m = params.num_classes;
    std::vector<long> correct(static_cast<std::size_t>(m), 0);
    for (const auto& s : validation) {
        const auto phi = predict(params, s.features);
        for (int j = 0; j < m; ++j) {
            const bool predicted = phi[static_cast<std::size_t>(j)] > 0.5;
            correct[static_cast<std::size_t>(j)] += predicted == (s.truth == j);
        }
    }
    std::vector<double> acc(static_cast<std::size_t>(m));
    for (std::size_t j = 0; j < acc.size(); ++j)
        acc[j] = static_cast<double>(correct[j]) / static_cast<double>(validation.size());
    return acc;
}

double classification_accuracy(const ModelParameters& params, std::span<const LabeledSample> test) {
    if (test.empty()) throw InvalidArgument("test set is empty");
    long correct = 0;
    for (const auto& s : test) {
        const auto phi = predict(params, s.features);
        const auto top = std::max_element(phi.begin(), phi.end());
        if (s.truth == kUndefined)
            correct += *top <= 0.5;
        else
            correct += (top - phi.begin()) == s.truth;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const ModelParameters& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    out.write(kMagic, 4);
    write_u32(out, kCheckpointVersion);
    write_u32(out, static_cast<std::uint32_t>(params.representation));
    write_u32(out, static_cast<std::uint32_t>(params.input_dim));
    write_u32(out, static_cast<std::uint32_t>(params.num_classes));
    write_u32(out, static_cast<std::uint32_t>(params.hidden));
    const auto flat = params.flatten();
    for (Eigen::Index k = 0; k < flat.size(); ++k) write_f64(out, flat[k]);
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

ModelParameters load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open checkpoint: " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw InvalidArgument("not an ASMW checkpoint: " + path.string());
    if (read_u32(in) != kCheckpointVersion) throw InvalidArgument("unsupported checkpoint version");
    const auto tag = read_u32(in);
    const auto d = static_cast<int>(read_u32(in));
    const auto m = static_cast<int>(read_u32(in));
    const auto h = static_cast<int>(read_u32(in));
    ModelParameters params;
    if (tag == static_cast<std::uint32_t>(Representation::Linear))
        params = ModelParameters::linear(d, m);
    else if (tag == static_cast<std::uint32_t>(Representation::Mlp))
        params = ModelParameters::mlp(d, h, m);
    else
        throw InvalidArgument("unknown representation tag in checkpoint");
    Eigen::VectorXd flat(params.parameter_count());
    for (Eigen::Index k = 0; k < flat.size(); ++k) flat[k] = read_f64(in);
    params.unflatten(flat);
    if (in.peek() != std::char_traits<char>::eof()) throw InvalidArgument("trailing bytes in checkpoint");
    return params;
}

}  // namespace mining
