#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "groupbal/dataset.hpp"

namespace groupbal {

// Binary logistic regression parameters. Class ids {0,1} map to margins via
// y in {-1,+1}; predictions refer to the probability of class id 1.
struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::uint64_t init_seed = 0;

    std::size_t dim() const { return weights.size(); }
};

// Weights ~ Normal(0, 1/p), bias 0, deterministic given the seed.
LinearModel init_model(std::size_t p, std::uint64_t seed);

constexpr std::size_t kFullBatch = 0;

struct TrainConfig {
    double learning_rate = 0.1;
    double weight_decay = 0.0;           // L2 coefficient, applied to weights only
    std::size_t batch_size = kFullBatch; // kFullBatch = one deterministic pass per step
    std::size_t epochs = 1;
    std::size_t eval_every = 1;          // record metrics/snapshot every this many steps

    void validate() const;
};

double margin(const LinearModel& model, std::span<const double> x);

// sigmoid(w.x + b), overflow-safe.
double predict_proba(const LinearModel& model, std::span<const double> x);

// log(1 + exp(-y * (w.x + b))) with y_sign in {-1,+1}, overflow-safe.
double example_loss(const LinearModel& model, std::span<const double> x, int y_sign);

double logistic_loss_from_margin(double m);

struct BatchGradient {
    std::vector<double> grad_w;
    double grad_b = 0.0;
    std::vector<double> per_example_losses;  // aligned with the batch indices
};

// Gradient of the mean logistic loss over the batch, or of the weighted mean
// (weights normalized by their sum) when per_example_weights is given.
// Weight decay is applied by sgd_step, not here.
BatchGradient batch_gradient(const LinearModel& model, std::span<const std::size_t> batch,
                             const GroupedDataset& ds,
                             std::span<const double> per_example_weights = {});

// w <- w - lr * (grad_w + wd * w); b <- b - lr * grad_b (no decay on bias).
void sgd_step(LinearModel& model, const BatchGradient& grad, const TrainConfig& cfg);

// Snapshot file: "GBLM" magic, u32 version, u64 p, u64 init_seed, then p+1
// little-endian doubles (weights, then bias).
void save_model(const std::string& path, const LinearModel& model);
LinearModel load_model(const std::string& path);

}  // namespace groupbal
