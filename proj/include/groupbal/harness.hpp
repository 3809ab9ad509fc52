#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "groupbal/dataset.hpp"
#include "groupbal/metrics.hpp"
#include "groupbal/model.hpp"
#include "groupbal/sampler.hpp"
#include "groupbal/synthetic.hpp"
#include "groupbal/train.hpp"

namespace groupbal {

enum class Method { ERM, JTT, GDRO, SUBY, SUBG, RWY, RWG };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
bool method_uses_attributes(Method m);

// ---------------------------------------------------------------------------
// Heatmap

struct GridSpec {
    double x_min = -8.0, x_max = 8.0;  // spurious-feature axis (scaled units)
    double y_min = -2.0, y_max = 2.0;  // core-feature axis
    std::size_t nx = 200, ny = 50;
};

struct HeatmapGrid {
    GridSpec spec;
    std::vector<double> xs, ys;
    std::vector<double> prob;  // ys-major: prob[iy * nx + ix]
};

// For each grid point (u, v): take the training row whose scaled
// (spurious, core) pair is nearest in Euclidean distance (ties -> lowest row
// index), substitute (u, v) for those two coordinates while keeping the
// row's noise block, and record sigmoid(w.x + b).
HeatmapGrid heatmap(const LinearModel& model, const GroupedDataset& train_ds, const GridSpec& grid);

void save_heatmap_csv(const std::string& path, const HeatmapGrid& grid);

// ---------------------------------------------------------------------------
// Run records / persistence

// Metrics of one chosen iterate of a run.
struct SelectedMetrics {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double val_worst = 0.0;
    double val_avg = 0.0;
    double test_worst = 0.0;
    double test_avg = 0.0;
    std::vector<double> test_group_accuracies;
};

// One training run's result row. Selection-dependent quantities are stored
// for both validation criteria plus the final iterate, so tables can be
// re-derived from the store without retraining.
struct RunRecord {
    std::string method;
    std::string dataset;
    std::map<std::string, double> hyper;
    std::uint64_t seed = 0;
    SelectedMetrics by_worst;   // best epoch by validation worst-group accuracy
    SelectedMetrics by_avg;     // best epoch by validation average accuracy
    SelectedMetrics final_it;   // last recorded iterate
    double wall_seconds = 0.0;

    std::string dedup_key() const;
};

std::string record_to_json(const RunRecord& rec);
RunRecord record_from_json(const std::string& line);

// Append-only JSONL store; every append is flushed. A torn final line
// (interrupted writer) is detected and dropped on load.
class RecordStore {
public:
    explicit RecordStore(std::string path);
    void append(const RunRecord& rec);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::mutex mutex_;
};

// Loads records, dropping a partial final line and keeping the last record
// for each dedup key. Missing file -> empty list.
std::vector<RunRecord> load_records(const std::string& path);

// Index of the run's best record under the criterion (earliest wins ties).
std::size_t select_best_record(const TrainedRun& run, SelectionCriterion criterion);

// Builds the three SelectedMetrics blocks of a record from a finished run.
RunRecord summarize_run(const TrainedRun& run, const GroupedDataset& ds_test,
                        const std::string& method, const std::string& dataset_id);

// ---------------------------------------------------------------------------
// Random hyper-parameter search

struct SearchSpace {
    std::vector<double> learning_rates{1e-5, 1e-4, 1e-3};
    std::vector<double> weight_decays{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    std::vector<std::size_t> batch_sizes{2, 4, 8, 16, 32, 64, 128};
    std::vector<std::size_t> epochs{20};
    std::vector<std::size_t> lambda_ups{4, 5, 6, 20, 50, 100};
    std::vector<std::size_t> t_first_stages{1, 5, 10};
    double eta = 0.1;  // gDRO step size, fixed rather than searched
    std::size_t n_trials = 50;
    std::size_t n_seeds = 5;
};

struct SearchDataset {
    const GroupedDataset* train = nullptr;
    const GroupedDataset* val = nullptr;
    const GroupedDataset* test = nullptr;
    std::string id;
};

// Draws n_trials assignments uniformly from the grids (seeded by
// master_seed), trains each n_seeds times, and appends one RunRecord per
// (assignment, seed) to the store in deterministic order. Jobs already in
// the store (same dedup key) are skipped, which makes interrupted searches
// resumable. Runs jobs on `jobs` worker threads; records are still
// committed in job order.
std::vector<RunRecord> random_search(const SearchSpace& space, const SearchDataset& data,
                                     Method method, std::uint64_t master_seed, RecordStore* store,
                                     std::size_t jobs = 1);

// Trains one method with explicit hyper-parameters; the building block the
// search and the toy pipeline share.
TrainedRun train_method(Method method, const GroupedDataset& ds_train, const GroupedDataset& ds_val,
                        const TrainConfig& cfg, std::uint64_t seed,
                        std::optional<JttConfig> jtt = std::nullopt, double gdro_eta = 0.1);

// ---------------------------------------------------------------------------
// Results table

struct TableCell {
    MeanStd test_worst;       // fractions in [0,1]
    std::size_t n_seeds = 0;
    std::string formatted;    // "79.7±3.7" (percent, one decimal)
};

struct ResultsTable {
    SelectionCriterion criterion = SelectionCriterion::WorstGroupValidation;
    bool no_regularization = false;
    std::vector<std::string> datasets;  // column order: first appearance
    std::vector<std::string> methods;   // attribute-free methods first
    std::map<std::string, std::map<std::string, TableCell>> cells;  // method -> dataset -> cell
    std::map<std::string, double> avg_worst_across_datasets;        // method -> mean of cell means

    std::string to_csv() const;
    std::string to_text() const;
};

// Per (method, dataset): picks the hyper-parameter assignment whose
// validation criterion (averaged over seeds) is best and reports mean±std
// of the test worst-group accuracy across that assignment's seeds. With
// no_regularization, candidates are restricted to weight_decay == 1e-4 and
// final-iterate metrics are used (no early stopping).
ResultsTable emit_table(const std::vector<RunRecord>& records, SelectionCriterion criterion,
                        bool no_regularization = false);

// ---------------------------------------------------------------------------
// Figure-1 style toy pipeline

struct ToyConfig {
    SyntheticConfig synth;
    std::vector<Method> methods{Method::ERM, Method::SUBG, Method::RWG};
    std::size_t n_seeds = 8;
    TrainConfig train{0.1, 0.0, kFullBatch, 5000, 10};  // full-batch GD, eval every 10 steps
    JttConfig jtt{50, 20, {0.1, 0.0, kFullBatch, 5000, 10}};
    double gdro_eta = 0.1;
    GridSpec grid;
    bool emit_heatmaps = true;
};

struct ToyCurvePoint {
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
    double train_worst = 0.0, train_avg = 0.0;
    double val_worst = 0.0, val_avg = 0.0;
};

struct ToyMethodResult {
    Method method = Method::ERM;
    std::vector<SelectedMetrics> best_per_seed;   // at best validation-worst iterate
    std::vector<SelectedMetrics> final_per_seed;  // at the last iterate
    MeanStd best_test_worst;
    MeanStd final_test_worst;
    std::vector<ToyCurvePoint> curves;            // exact copies of run metrics
    std::optional<HeatmapGrid> heatmap_mean;      // averaged over seeds
};

struct ToyResult {
    ToyConfig config;
    std::vector<ToyMethodResult> methods;
};

// Trains every requested method over n_seeds seeded replicates of the
// synthetic experiment (train/val from the training distribution, test
// group-balanced), early-selects by validation worst-group accuracy, and
// aggregates curves, final/best metrics, and seed-averaged heatmaps.
ToyResult run_toy(const ToyConfig& cfg);

// Writes summary.csv, curves.csv, and heatmap_<method>.csv under out_dir.
void save_toy_artifacts(const std::string& out_dir, const ToyResult& result);

}  // namespace groupbal
