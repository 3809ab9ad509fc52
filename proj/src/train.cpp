#include "groupbal/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace groupbal {

namespace {
constexpr std::uint64_t kInitTag = 0x696e6974ULL;
constexpr std::uint64_t kStreamTag = 0x62617463ULL;
constexpr std::uint64_t kJttTag = 0x6a7474ULL;
}  // namespace

std::uint64_t derive_init_seed(std::uint64_t run_seed) { return mix_seed(run_seed, kInitTag); }
std::uint64_t derive_stream_seed(std::uint64_t run_seed) { return mix_seed(run_seed, kStreamTag); }
std::uint64_t jtt_phase_seed(std::uint64_t run_seed, int phase) {
    return mix_seed(run_seed, kJttTag, static_cast<std::uint64_t>(phase));
}

GdroState make_gdro_state(std::size_t num_groups, double eta) {
    if (num_groups == 0) throw DataError("make_gdro_state: need at least one group");
    if (eta <= 0) throw DataError("make_gdro_state: eta must be positive");
    GdroState st;
    st.eta = eta;
    st.q.assign(num_groups, 1.0 / static_cast<double>(num_groups));
    return st;
}

GdroState gdro_update(const GdroState& state, const std::vector<double>& group_losses) {
    if (group_losses.size() != state.q.size())
        throw DataError("gdro_update: loss vector does not match group count");
    GdroState next = state;
    // Losses are shifted by their max before exponentiation; the shift
    // cancels in the normalization and keeps exp() in range.
    double max_loss = -HUGE_VAL;
    for (double l : group_losses) {
        if (!std::isfinite(l)) throw DataError("gdro_update: non-finite group loss");
        max_loss = std::max(max_loss, l);
    }
    double total = 0.0;
    for (std::size_t g = 0; g < next.q.size(); ++g) {
        next.q[g] = state.q[g] * std::exp(state.eta * (group_losses[g] - max_loss));
        total += next.q[g];
    }
    for (double& qg : next.q) qg /= total;
    return next;
}

namespace {

// Shared training loop behind train_erm and train_gdro. When `gdro` is set,
// each step computes per-group mean losses, updates q, and weights the
// gradient by q_g * |batch| / |batch ∩ g| so the descent direction is the
// gradient of sum_g q_g * mean-loss_g (renormalized over groups present).
TrainedRun train_core(const GroupedDataset& ds_train, const GroupedDataset& ds_val,
                      const SamplerSpec& sampler, const TrainConfig& cfg, std::uint64_t seed,
                      const std::string& method_name, std::optional<GdroState> gdro) {
    cfg.validate();
    if (sampler.dataset_size != ds_train.size())
        throw DataError("train: sampler was built on a different dataset");

    const auto t0 = std::chrono::steady_clock::now();
    LinearModel model = init_model(ds_train.dim(), derive_init_seed(seed));
    BatchStream stream(sampler, derive_stream_seed(seed));

    const bool full_batch = cfg.batch_size == kFullBatch;
    const std::size_t steps_per_epoch =
        full_batch ? 1 : (stream.epoch_size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = cfg.epochs * steps_per_epoch;

    // Full-batch index set: the whole retained set (or everything).
    std::vector<std::size_t> full_indices;
    if (full_batch) {
        if (sampler.retained_indices.empty()) {
            full_indices.resize(ds_train.size());
            std::iota(full_indices.begin(), full_indices.end(), std::size_t{0});
        } else {
            full_indices = sampler.retained_indices;
        }
    }

    const std::size_t num_groups = static_cast<std::size_t>(ds_train.num_groups());
    std::vector<double> gdro_weights;
    std::vector<double> group_loss(num_groups), group_count(num_groups);

    TrainedRun run;
    run.method = method_name;
    run.seed = seed;
    run.hyper = {{"learning_rate", cfg.learning_rate},
                 {"weight_decay", cfg.weight_decay},
                 {"batch_size", static_cast<double>(cfg.batch_size)},
                 {"epochs", static_cast<double>(cfg.epochs)}};

    for (std::size_t step = 1; step <= total_steps; ++step) {
        const std::vector<std::size_t>& batch =
            full_batch ? full_indices : stream.next_batch(cfg.batch_size);

        std::span<const double> weights;
        if (gdro) {
            // Mean loss per group present in this batch, at current params.
            std::fill(group_loss.begin(), group_loss.end(), 0.0);
            std::fill(group_count.begin(), group_count.end(), 0.0);
            for (std::size_t i : batch) {
                const auto g = static_cast<std::size_t>(ds_train.group_of(i));
                const double y = ds_train.class_of(i) == 1 ? 1.0 : -1.0;
                group_loss[g] += logistic_loss_from_margin(y * margin(model, ds_train.row(i)));
                group_count[g] += 1.0;
            }
            for (std::size_t g = 0; g < num_groups; ++g)
                group_loss[g] = group_count[g] > 0 ? group_loss[g] / group_count[g] : 0.0;
            *gdro = gdro_update(*gdro, group_loss);

            gdro_weights.resize(batch.size());
            const double b = static_cast<double>(batch.size());
            for (std::size_t k = 0; k < batch.size(); ++k) {
                const auto g = static_cast<std::size_t>(ds_train.group_of(batch[k]));
                gdro_weights[k] = gdro->q[g] * (b / group_count[g]);
            }
            weights = gdro_weights;
        } else if (full_batch && is_reweighting(sampler.kind)) {
            weights = sampler.weights;  // deterministic weighted-mean gradient
        }

        const BatchGradient grad = batch_gradient(model, batch, ds_train, weights);
        sgd_step(model, grad, cfg);

        if (step % cfg.eval_every == 0 || step == total_steps) {
            EpochRecord rec;
            rec.step = step;
            rec.epoch = step / steps_per_epoch;
            rec.snapshot = model;
            rec.train = evaluate(model, ds_train);
            rec.val = evaluate(model, ds_val);
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            run.records.push_back(std::move(rec));
        }
    }
    run.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

}  // namespace

TrainedRun train_erm(const GroupedDataset& ds_train, const GroupedDataset& ds_val,
                     const SamplerSpec& sampler, const TrainConfig& cfg, std::uint64_t seed,
                     const std::string& method_name) {
    return train_core(ds_train, ds_val, sampler, cfg, seed, method_name, std::nullopt);
}

GroupedDataset build_jtt_dataset(const GroupedDataset& ds, const std::vector<std::size_t>& error_indices,
                                 std::size_t lambda_up) {
    if (lambda_up == 0) throw DataError("build_jtt_dataset: lambda_up must be >= 1");
    std::vector<std::size_t> errors = error_indices;
    std::sort(errors.begin(), errors.end());
    errors.erase(std::unique(errors.begin(), errors.end()), errors.end());
    for (std::size_t i : errors)
        if (i >= ds.size()) throw DataError("build_jtt_dataset: error index out of range");

    const std::size_t extra = errors.size() * (lambda_up - 1);
    const std::size_t dim = ds.dim();
    std::vector<double> features;
    features.reserve((ds.size() + extra) * dim);
    features.assign(ds.features().begin(), ds.features().end());
    std::vector<int> classes = ds.classes();
    std::vector<int> attributes = ds.attributes();
    classes.reserve(ds.size() + extra);
    attributes.reserve(ds.size() + extra);
    for (std::size_t i : errors) {
        const auto row = ds.row(i);
        for (std::size_t c = 1; c < lambda_up; ++c) {
            features.insert(features.end(), row.begin(), row.end());
            classes.push_back(ds.class_of(i));
            attributes.push_back(ds.attribute_of(i));
        }
    }
    return build_grouped_dataset(std::move(features), dim, std::move(classes), std::move(attributes),
                                 ds.num_classes(), ds.num_attributes());
}

void JttConfig::validate() const {
    if (t_first_stage == 0) throw DataError("JttConfig: t_first_stage must be >= 1");
    if (lambda_up == 0) throw DataError("JttConfig: lambda_up must be >= 1");
    inner.validate();
}

JttRun train_jtt(const GroupedDataset& ds_train, const GroupedDataset& ds_val, const JttConfig& jtt,
                 std::uint64_t seed) {
    jtt.validate();
    TrainConfig phase1_cfg = jtt.inner;
    phase1_cfg.epochs = jtt.t_first_stage;
    const TrainedRun phase1 = train_core(ds_train, ds_val, uniform_sampler(ds_train), phase1_cfg,
                                         jtt_phase_seed(seed, 1), "jtt-phase1", std::nullopt);

    const LinearModel& probe = phase1.final_record().snapshot;
    std::vector<std::size_t> errors;
    for (std::size_t i = 0; i < ds_train.size(); ++i) {
        const int predicted = margin(probe, ds_train.row(i)) >= 0.0 ? 1 : 0;
        if (predicted != ds_train.class_of(i)) errors.push_back(i);
    }

    const GroupedDataset upweighted = build_jtt_dataset(ds_train, errors, jtt.lambda_up);
    JttRun out;
    out.error_indices = std::move(errors);
    out.phase1_epochs = jtt.t_first_stage;
    out.run = train_core(upweighted, ds_val, uniform_sampler(upweighted), jtt.inner,
                         jtt_phase_seed(seed, 2), "jtt", std::nullopt);
    out.run.seed = seed;
    out.run.hyper["lambda_up"] = static_cast<double>(jtt.lambda_up);
    out.run.hyper["t_first_stage"] = static_cast<double>(jtt.t_first_stage);
    return out;
}

TrainedRun train_gdro(const GroupedDataset& ds_train, const GroupedDataset& ds_val,
                      const TrainConfig& cfg, double eta, std::uint64_t seed) {
    TrainedRun run =
        train_core(ds_train, ds_val, reweight_groups(ds_train), cfg, seed, "gdro",
                   make_gdro_state(static_cast<std::size_t>(ds_train.num_groups()), eta));
    run.hyper["eta"] = eta;
    return run;
}

void save_run(const std::string& dir, const TrainedRun& run, bool write_snapshots) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    nlohmann::json meta;
    meta["method"] = run.method;
    meta["seed"] = run.seed;
    meta["hyper"] = run.hyper;
    meta["total_seconds"] = run.total_seconds;
    meta["num_records"] = run.records.size();
    {
        std::ofstream out(dir + "/meta.json");
        if (!out) throw DataError("save_run: cannot write meta.json under " + dir);
        out << meta.dump(2) << '\n';
    }

    std::ofstream csv(dir + "/metrics.csv");
    if (!csv) throw DataError("save_run: cannot write metrics.csv under " + dir);
    csv << "epoch,split,group,accuracy,loss,count\n";
    char buf[64];
    auto emit = [&](const EpochRecord& rec, const char* split, const GroupMetrics& m) {
        for (std::size_t g = 0; g < m.per_group_accuracy.size(); ++g) {
            csv << rec.epoch << ',' << split << ",g" << g << ',';
            std::snprintf(buf, sizeof(buf), "%.10g", m.per_group_accuracy[g]);
            csv << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.10g", m.per_group_loss[g]);
            csv << buf << ',' << m.per_group_counts[g] << '\n';
        }
    };
    for (const EpochRecord& rec : run.records) {
        emit(rec, "train", rec.train);
        emit(rec, "val", rec.val);
    }

    if (write_snapshots) {
        fs::create_directories(dir + "/snapshots");
        for (const EpochRecord& rec : run.records) {
            std::snprintf(buf, sizeof(buf), "%s/snapshots/epoch_%05zu.bin", dir.c_str(), rec.epoch);
            save_model(buf, rec.snapshot);
        }
    }
}

}  // namespace groupbal
