#include "groupbal/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "groupbal/train.hpp"

namespace groupbal {

GroupMetrics evaluate(const LinearModel& model, const GroupedDataset& ds) {
    const int num_groups = ds.num_groups();
    GroupMetrics m;
    m.per_group_accuracy.assign(static_cast<std::size_t>(num_groups), 0.0);
    m.per_group_loss.assign(static_cast<std::size_t>(num_groups), 0.0);
    m.per_group_counts.assign(static_cast<std::size_t>(num_groups), 0);

    std::vector<std::size_t> correct(static_cast<std::size_t>(num_groups), 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto g = static_cast<std::size_t>(ds.group_of(i));
        const double z = margin(model, ds.row(i));
        const int predicted = z >= 0.0 ? 1 : 0;
        const double y = ds.class_of(i) == 1 ? 1.0 : -1.0;
        m.per_group_counts[g] += 1;
        if (predicted == ds.class_of(i)) correct[g] += 1;
        m.per_group_loss[g] += logistic_loss_from_margin(y * z);
    }

    double acc_sum = 0.0, loss_sum = 0.0;
    m.worst_group_accuracy = 1.0;
    for (int g = 0; g < num_groups; ++g) {
        const auto gi = static_cast<std::size_t>(g);
        if (m.per_group_counts[gi] == 0)
            throw DataError("evaluate: group " + std::to_string(g) + " is empty");
        const double n_g = static_cast<double>(m.per_group_counts[gi]);
        loss_sum += m.per_group_loss[gi];
        m.per_group_loss[gi] /= n_g;
        m.per_group_accuracy[gi] = static_cast<double>(correct[gi]) / n_g;
        acc_sum += static_cast<double>(correct[gi]);
        m.worst_group_accuracy = std::min(m.worst_group_accuracy, m.per_group_accuracy[gi]);
    }
    m.average_accuracy = acc_sum / static_cast<double>(ds.size());
    m.average_loss = loss_sum / static_cast<double>(ds.size());
    return m;
}

std::string to_string(SelectionCriterion c) {
    return c == SelectionCriterion::WorstGroupValidation ? "worst" : "avg";
}

SelectionCriterion selection_criterion_from_string(const std::string& name) {
    if (name == "worst") return SelectionCriterion::WorstGroupValidation;
    if (name == "avg") return SelectionCriterion::AverageValidation;
    throw DataError("unknown selection criterion '" + name + "'");
}

double criterion_value(const GroupMetrics& m, SelectionCriterion c) {
    return c == SelectionCriterion::WorstGroupValidation ? m.worst_group_accuracy
                                                         : m.average_accuracy;
}

Selection select_best(const std::vector<TrainedRun>& runs, SelectionCriterion criterion) {
    if (runs.empty()) throw DataError("select_best: no runs");
    Selection best;
    bool found = false;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& records = runs[r].records;
        if (records.empty()) throw DataError("select_best: run without validation records");
        for (std::size_t k = 0; k < records.size(); ++k) {
            const double v = criterion_value(records[k].val, criterion);
            const bool better =
                !found || v > best.value ||
                (v == best.value && (records[k].epoch < best.epoch ||
                                     (records[k].epoch == best.epoch && r < best.run_index)));
            if (better) {
                best = {r, k, records[k].epoch, v};
                found = true;
            }
        }
    }
    return best;
}

MeanStd summarize_seeds(const std::vector<double>& values) {
    if (values.empty()) throw DataError("summarize_seeds: empty input");
    MeanStd out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

TopKSummary top_k_summary(const std::vector<RunOutcome>& outcomes, std::size_t k) {
    if (k == 0) throw DataError("top_k_summary: k must be positive");
    if (outcomes.size() < k)
        throw DataError("top_k_summary: need at least k runs, have " +
                        std::to_string(outcomes.size()));

    std::vector<std::size_t> order(outcomes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return outcomes[a].val_worst > outcomes[b].val_worst;
    });
    order.resize(k);

    TopKSummary out;
    out.k = k;
    std::map<std::string, std::vector<double>> columns;
    std::vector<double> test_worsts;
    for (std::size_t idx : order) {
        const RunOutcome& o = outcomes[idx];
        test_worsts.push_back(o.test_worst);
        for (const auto& [name, value] : o.hyper) {
            if (name == "learning_rate" || name == "weight_decay")
                columns["log10_" + name].push_back(std::log10(value));
            else
                columns[name].push_back(value);
        }
    }
    for (const auto& [name, vals] : columns) out.hyper_summary[name] = summarize_seeds(vals);
    out.range_low = *std::min_element(test_worsts.begin(), test_worsts.end());
    out.range_high = *std::max_element(test_worsts.begin(), test_worsts.end());
    out.delta = test_worsts.front() - test_worsts.back();
    return out;
}

}  // namespace groupbal
