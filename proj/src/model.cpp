#include "groupbal/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "groupbal/rng.hpp"

namespace groupbal {

LinearModel init_model(std::size_t p, std::uint64_t seed) {
    if (p == 0) throw DataError("init_model: dimension must be positive");
    LinearModel model;
    model.init_seed = seed;
    model.weights.resize(p);
    Rng rng(seed);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(p));
    for (double& w : model.weights) w = rng.normal(0.0, stddev);
    model.bias = 0.0;
    return model;
}

void TrainConfig::validate() const {
    if (learning_rate <= 0) throw DataError("TrainConfig: learning_rate must be positive");
    if (weight_decay < 0) throw DataError("TrainConfig: weight_decay must be non-negative");
    if (epochs == 0) throw DataError("TrainConfig: epochs must be positive");
    if (eval_every == 0) throw DataError("TrainConfig: eval_every must be positive");
}

double margin(const LinearModel& model, std::span<const double> x) {
    if (x.size() != model.weights.size())
        throw DataError("margin: feature dimension does not match model");
    double z = model.bias;
    const double* w = model.weights.data();
    const double* xv = x.data();
    for (std::size_t j = 0; j < x.size(); ++j) z += w[j] * xv[j];
    return z;
}

static double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double predict_proba(const LinearModel& model, std::span<const double> x) {
    return sigmoid(margin(model, x));
}

double logistic_loss_from_margin(double m) {
    // log(1 + exp(-m)) without overflow for large |m|.
    if (m >= 0) return std::log1p(std::exp(-m));
    return -m + std::log1p(std::exp(m));
}

double example_loss(const LinearModel& model, std::span<const double> x, int y_sign) {
    if (y_sign != 1 && y_sign != -1) throw DataError("example_loss: y must be -1 or +1");
    return logistic_loss_from_margin(static_cast<double>(y_sign) * margin(model, x));
}

BatchGradient batch_gradient(const LinearModel& model, std::span<const std::size_t> batch,
                             const GroupedDataset& ds, std::span<const double> per_example_weights) {
    if (batch.empty()) throw DataError("batch_gradient: empty batch");
    if (ds.dim() != model.weights.size())
        throw DataError("batch_gradient: dataset dimension does not match model");
    if (!per_example_weights.empty() && per_example_weights.size() != batch.size())
        throw DataError("batch_gradient: weight vector does not match batch");

    const std::size_t p = model.weights.size();
    BatchGradient out;
    out.grad_w.assign(p, 0.0);
    out.per_example_losses.resize(batch.size());

    double total_weight = 0.0;
    if (per_example_weights.empty()) {
        total_weight = static_cast<double>(batch.size());
    } else {
        for (double w : per_example_weights) total_weight += w;
        if (!(total_weight > 0))
            throw DataError("batch_gradient: weights must have positive sum");
    }

    for (std::size_t k = 0; k < batch.size(); ++k) {
        const std::size_t i = batch[k];
        const auto x = ds.row(i);
        const double y = ds.class_of(i) == 1 ? 1.0 : -1.0;
        const double m = margin(model, x);
        out.per_example_losses[k] = logistic_loss_from_margin(y * m);
        const double w_k = per_example_weights.empty() ? 1.0 : per_example_weights[k];
        // d/dz log(1+exp(-y z)) = -y * sigmoid(-y z)
        const double coeff = (w_k / total_weight) * (-y * sigmoid(-y * m));
        const double* xv = x.data();
        double* gw = out.grad_w.data();
        for (std::size_t j = 0; j < p; ++j) gw[j] += coeff * xv[j];
        out.grad_b += coeff;
    }
    return out;
}

void sgd_step(LinearModel& model, const BatchGradient& grad, const TrainConfig& cfg) {
    if (grad.grad_w.size() != model.weights.size())
        throw DataError("sgd_step: gradient dimension does not match model");
    const double lr = cfg.learning_rate;
    const double wd = cfg.weight_decay;
    for (std::size_t j = 0; j < model.weights.size(); ++j) {
        const double update = grad.grad_w[j] + wd * model.weights[j];
        if (!std::isfinite(update)) throw DataError("sgd_step: non-finite update");
        model.weights[j] -= lr * update;
    }
    if (!std::isfinite(grad.grad_b)) throw DataError("sgd_step: non-finite update");
    model.bias -= lr * grad.grad_b;
}

namespace {
constexpr char kMagic[4] = {'G', 'B', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "model snapshots are written little-endian; add byte swapping for this platform");

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void save_model(const std::string& path, const LinearModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_model: cannot open " + path);
    out.write(kMagic, 4);
    write_raw(out, kVersion);
    write_raw(out, static_cast<std::uint64_t>(model.weights.size()));
    write_raw(out, model.init_seed);
    out.write(reinterpret_cast<const char*>(model.weights.data()),
              static_cast<std::streamsize>(model.weights.size() * sizeof(double)));
    write_raw(out, model.bias);
    if (!out) throw DataError("save_model: write failed for " + path);
}

LinearModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_model: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("load_model: bad magic in " + path);
    std::uint32_t version = 0;
    read_raw(in, version);
    if (version != kVersion)
        throw DataError("load_model: unsupported snapshot version in " + path);
    std::uint64_t p = 0;
    LinearModel model;
    read_raw(in, p);
    read_raw(in, model.init_seed);
    model.weights.resize(p);
    in.read(reinterpret_cast<char*>(model.weights.data()),
            static_cast<std::streamsize>(p * sizeof(double)));
    read_raw(in, model.bias);
    if (!in) throw DataError("load_model: truncated snapshot " + path);
    return model;
}

}  // namespace groupbal
