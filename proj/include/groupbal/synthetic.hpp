#pragma once

#include <cstdint>
#include <string>

#include "groupbal/dataset.hpp"

namespace groupbal {

// Parameters of the two-feature-plus-noise generator. An example of class
// y in {-1,+1} (stored as id {0,1}) draws sign variables s_core, s_spu with
// P(s = +1) = (1 + rho)/2 and emits
//   [gamma_spu * N(y*s_spu, sigma^2),
//    gamma_core * N(y*s_core, sigma^2),
//    gamma_noise * N(0, sigma^2)^d].
// The attribute label is the spurious-match indicator: 0 when s_spu = +1
// (majority), 1 otherwise (minority).
struct SyntheticConfig {
    double rho_core = 1.0;
    double rho_spu = 0.8;
    double gamma_spu = 4.0;
    double gamma_core = 1.0;
    double gamma_noise = 20.0;
    double sigma = 0.15;
    std::size_t d = 1200;
    std::size_t n_train = 1000;
    std::size_t n_val = 1000;
    std::size_t n_test = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

// Reads a flat key=value file mirroring the SyntheticConfig field names.
// Lines starting with '#' and blank lines are ignored. Unknown keys error.
SyntheticConfig load_synthetic_config(const std::string& path);

// Draws n examples from the training distribution. Deterministic given
// (cfg.seed, split_seed_offset); distinct offsets give independent splits.
GroupedDataset synth_generate(const SyntheticConfig& cfg, std::uint64_t split_seed_offset,
                              std::size_t n);

// Group-balanced draw: n/4 examples for each (class sign, spurious match)
// cell, with s_core still sampled from rho_core. Used for test splits where
// worst-group accuracy should be estimated with equal precision per group.
GroupedDataset synth_generate_balanced(const SyntheticConfig& cfg, std::uint64_t split_seed_offset,
                                       std::size_t n);

// P(misclassification) of the core-only predictor sign(x_core):
// 1 - Phi(1/sigma), evaluated through erfc.
double core_only_error(double sigma);

}  // namespace groupbal
