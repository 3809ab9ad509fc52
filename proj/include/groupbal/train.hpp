#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "groupbal/dataset.hpp"
#include "groupbal/metrics.hpp"
#include "groupbal/model.hpp"
#include "groupbal/sampler.hpp"

namespace groupbal {

// State of the multiplicative-weights ascent on the inner sup over the
// group simplex.
struct GdroState {
    std::vector<double> q;  // probability over groups
    double eta = 0.1;
};

GdroState make_gdro_state(std::size_t num_groups, double eta);

// q_g <- q_g * exp(eta * loss_g), renormalized. Groups absent from a batch
// should be passed loss 0 (multiplier 1). Shifting all losses by a constant
// leaves the result unchanged.
GdroState gdro_update(const GdroState& state, const std::vector<double>& group_losses);

// Metrics and snapshot captured at one evaluation point.
struct EpochRecord {
    std::size_t epoch = 0;  // completed epochs at this point
    std::size_t step = 0;   // gradient steps taken
    LinearModel snapshot;
    GroupMetrics train;
    GroupMetrics val;
    double seconds = 0.0;  // wall clock since run start
};

struct TrainedRun {
    std::string method;
    std::map<std::string, double> hyper;
    std::uint64_t seed = 0;
    std::vector<EpochRecord> records;
    double total_seconds = 0.0;

    const EpochRecord& final_record() const { return records.back(); }
};

// Seed roles: every train_* call derives its model-init and batch-stream
// seeds from the run seed with these helpers, so equivalences between
// methods can be tested with matched streams.
std::uint64_t derive_init_seed(std::uint64_t run_seed);
std::uint64_t derive_stream_seed(std::uint64_t run_seed);
std::uint64_t jtt_phase_seed(std::uint64_t run_seed, int phase);

// Batched gradient training over the sampler's stream. With
// batch_size == kFullBatch each step is one deterministic pass: permutation
// kinds visit their whole index set, reweighting kinds take a weighted-mean
// gradient with the spec's weights. Finite batch sizes draw from
// BatchStream. Train metrics are evaluated on the full ds_train.
TrainedRun train_erm(const GroupedDataset& ds_train, const GroupedDataset& ds_val,
                     const SamplerSpec& sampler, const TrainConfig& cfg, std::uint64_t seed,
                     const std::string& method_name = "erm");

// New dataset in which every index in error_indices appears lambda_up times
// and every other row once. Original row order is preserved; the extra
// copies are appended grouped by ascending error index. Feature bits are
// copied exactly.
GroupedDataset build_jtt_dataset(const GroupedDataset& ds, const std::vector<std::size_t>& error_indices,
                                 std::size_t lambda_up);

struct JttConfig {
    std::size_t t_first_stage = 1;  // phase-1 epochs
    std::size_t lambda_up = 1;
    TrainConfig inner;

    void validate() const;
};

struct JttRun {
    TrainedRun run;                           // phase-2 run (the reported one)
    std::vector<std::size_t> error_indices;   // phase-1 mistakes on the training set
    std::size_t phase1_epochs = 0;
};

// Phase 1: ERM with a uniform sampler for t_first_stage epochs. The
// training examples misclassified by the final phase-1 snapshot are
// upweighted lambda_up times; phase 2 retrains from a fresh
// initialization (seed jtt_phase_seed(seed, 2)) on the rebuilt dataset.
// An empty error set degenerates phase 2 to plain ERM.
JttRun train_jtt(const GroupedDataset& ds_train, const GroupedDataset& ds_val, const JttConfig& jtt,
                 std::uint64_t seed);

// Group DRO: batches come from the RWG sampler; each step updates q with
// the per-group mean losses present in the batch (absent groups keep their
// mass), then descends on the q-weighted group means.
TrainedRun train_gdro(const GroupedDataset& ds_train, const GroupedDataset& ds_val,
                      const TrainConfig& cfg, double eta, std::uint64_t seed);

// TrainedRun directory: meta.json, metrics.csv
// (epoch,split,group,accuracy,loss,count), snapshots/epoch_NNNNN.bin.
void save_run(const std::string& dir, const TrainedRun& run, bool write_snapshots = true);

}  // namespace groupbal
