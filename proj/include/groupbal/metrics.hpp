#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "groupbal/dataset.hpp"
#include "groupbal/model.hpp"

namespace groupbal {

// Per-group accuracy/loss plus worst-group and example-weighted averages.
// Vectors are indexed by group id (y * |A| + a).
struct GroupMetrics {
    std::vector<double> per_group_accuracy;
    std::vector<double> per_group_loss;
    std::vector<std::size_t> per_group_counts;
    double worst_group_accuracy = 0.0;
    double average_accuracy = 0.0;
    double average_loss = 0.0;
};

// Classifies with threshold 0.5 (class 1 iff margin >= 0) and aggregates per
// group. Every group in ds must be non-empty.
GroupMetrics evaluate(const LinearModel& model, const GroupedDataset& ds);

enum class SelectionCriterion { WorstGroupValidation, AverageValidation };

std::string to_string(SelectionCriterion c);
SelectionCriterion selection_criterion_from_string(const std::string& name);

double criterion_value(const GroupMetrics& m, SelectionCriterion c);

struct TrainedRun;  // train.hpp

struct Selection {
    std::size_t run_index = 0;
    std::size_t record_index = 0;  // position within the run's records
    std::size_t epoch = 0;
    double value = 0.0;            // the criterion value attained
};

// Argmax of the criterion on validation metrics over all (run, record)
// pairs. Ties break toward the earliest epoch, then the lowest run index.
Selection select_best(const std::vector<TrainedRun>& runs, SelectionCriterion criterion);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation (n-1), 0 when n == 1
};

MeanStd summarize_seeds(const std::vector<double>& values);

// One selected run outcome, the unit the top-k summary ranks.
struct RunOutcome {
    std::map<std::string, double> hyper;  // lr / wd already raw; log10 taken here
    double val_worst = 0.0;
    double test_worst = 0.0;
};

struct TopKSummary {
    std::size_t k = 0;
    std::map<std::string, MeanStd> hyper_summary;  // lr, wd reported as log10_*
    double range_low = 0.0;   // min test worst among the top k
    double range_high = 0.0;  // max test worst among the top k
    double delta = 0.0;       // test worst of rank 1 minus rank k (by validation)
};

// Ranks outcomes by validation worst-group accuracy and summarizes the top
// k (default 5): per-hyper-parameter mean/std (log10 for learning_rate and
// weight_decay) and the spread of the associated test worst accuracies.
TopKSummary top_k_summary(const std::vector<RunOutcome>& outcomes, std::size_t k = 5);

}  // namespace groupbal
