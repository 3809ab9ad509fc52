#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groupbal/dataset.hpp"
#include "groupbal/rng.hpp"

namespace groupbal {

enum class SamplerKind { Uniform, SUBY, SUBG, RWY, RWG };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);
bool is_reweighting(SamplerKind kind);
bool uses_attributes(SamplerKind kind);

// One fixed sampling plan over a dataset: subsampling kinds carry the sorted
// retained indices, reweighting kinds carry per-example probabilities that
// sum to 1. Immutable once built.
struct SamplerSpec {
    SamplerKind kind = SamplerKind::Uniform;
    std::size_t dataset_size = 0;
    std::vector<std::size_t> retained_indices;  // SUBY / SUBG
    std::vector<double> weights;                // RWY / RWG
    std::uint64_t seed = 0;

    // Examples one pass visits: retained count for subsampling kinds,
    // the full dataset size otherwise.
    std::size_t epoch_size() const {
        return retained_indices.empty() ? dataset_size : retained_indices.size();
    }
};

SamplerSpec uniform_sampler(const GroupedDataset& ds);

// Retains a seeded uniform subset of size min_y n_y from every class.
SamplerSpec subsample_classes(const GroupedDataset& ds, std::uint64_t seed);

// Retains a seeded uniform subset of size min_g n_g from every group.
SamplerSpec subsample_groups(const GroupedDataset& ds, std::uint64_t seed);

// Weight of example i proportional to 1/n_{y_i}; class masses equal 1/|Y|.
SamplerSpec reweight_classes(const GroupedDataset& ds);

// Weight of example i proportional to 1/n_{g_i}; group masses equal 1/|G|.
SamplerSpec reweight_groups(const GroupedDataset& ds);

// Builds the spec selected by `kind` with the matching constructor above.
SamplerSpec make_sampler(SamplerKind kind, const GroupedDataset& ds, std::uint64_t seed);

// Stateful batch source. Reweighting kinds draw independently with
// replacement (probabilities = weights); the other kinds walk a seeded
// permutation of their index set, reshuffled each epoch, so batches within
// an epoch are without replacement. Owns its rng; one instance per training
// run keeps concurrent runs independent.
class BatchStream {
public:
    BatchStream(const SamplerSpec& spec, std::uint64_t stream_seed);

    std::vector<std::size_t> next_batch(std::size_t batch_size);
    std::size_t epoch_size() const { return spec_.epoch_size(); }
    const SamplerSpec& spec() const { return spec_; }

private:
    SamplerSpec spec_;
    Rng rng_;
    std::vector<std::size_t> permutation_;  // permutation kinds only
    std::size_t cursor_ = 0;
    std::vector<double> cumulative_;  // reweighting kinds only
};

// Draws one batch from the stream; present as a free function to mirror the
// sampler-facing API, all state lives in the stream.
inline std::vector<std::size_t> draw_batch(BatchStream& stream, std::size_t batch_size) {
    return stream.next_batch(batch_size);
}

// Expected number of distinct majority examples after k draws with
// replacement from n_maj equally likely ones: n_maj * (1 - (1 - 1/n_maj)^k).
double expected_unique(std::size_t n_maj, std::size_t k);

}  // namespace groupbal
