#include "groupbal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace groupbal {

namespace {
constexpr std::uint64_t kSamplerTag = 0x73616d70ULL;
constexpr std::uint64_t kAssignTag = 0x68706173ULL;
constexpr std::uint64_t kToyDataTag = 0x746f7964ULL;
constexpr std::uint64_t kToyRunTag = 0x746f7972ULL;
}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::ERM: return "erm";
        case Method::JTT: return "jtt";
        case Method::GDRO: return "gdro";
        case Method::SUBY: return "suby";
        case Method::SUBG: return "subg";
        case Method::RWY: return "rwy";
        case Method::RWG: return "rwg";
    }
    return "?";
}

Method method_from_string(const std::string& name) {
    if (name == "erm") return Method::ERM;
    if (name == "jtt") return Method::JTT;
    if (name == "gdro") return Method::GDRO;
    if (name == "suby") return Method::SUBY;
    if (name == "subg") return Method::SUBG;
    if (name == "rwy") return Method::RWY;
    if (name == "rwg") return Method::RWG;
    throw DataError("unknown method '" + name + "'");
}

bool method_uses_attributes(Method m) {
    return m == Method::GDRO || m == Method::SUBG || m == Method::RWG;
}

// ---------------------------------------------------------------------------
// Heatmap

HeatmapGrid heatmap(const LinearModel& model, const GroupedDataset& train_ds, const GridSpec& grid) {
    if (train_ds.size() == 0) throw DataError("heatmap: empty training set");
    if (train_ds.dim() != model.weights.size() || train_ds.dim() < 2)
        throw DataError("heatmap: model/dataset dimension mismatch");
    if (grid.nx == 0 || grid.ny == 0) throw DataError("heatmap: empty grid");

    HeatmapGrid out;
    out.spec = grid;
    out.xs.resize(grid.nx);
    out.ys.resize(grid.ny);
    for (std::size_t i = 0; i < grid.nx; ++i)
        out.xs[i] = grid.nx == 1 ? grid.x_min
                                 : grid.x_min + (grid.x_max - grid.x_min) *
                                                    static_cast<double>(i) /
                                                    static_cast<double>(grid.nx - 1);
    for (std::size_t j = 0; j < grid.ny; ++j)
        out.ys[j] = grid.ny == 1 ? grid.y_min
                                 : grid.y_min + (grid.y_max - grid.y_min) *
                                                    static_cast<double>(j) /
                                                    static_cast<double>(grid.ny - 1);

    // Per-row: the scaled (spurious, core) pair and the margin contribution
    // of everything except those two coordinates.
    const std::size_t n = train_ds.size();
    std::vector<double> sx(n), sy(n), rest(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = train_ds.row(i);
        sx[i] = row[0];
        sy[i] = row[1];
        double acc = model.bias;
        for (std::size_t j = 2; j < row.size(); ++j) acc += model.weights[j] * row[j];
        rest[i] = acc;
    }

    out.prob.resize(grid.nx * grid.ny);
    const double w0 = model.weights[0], w1 = model.weights[1];
    for (std::size_t jy = 0; jy < grid.ny; ++jy) {
        for (std::size_t ix = 0; ix < grid.nx; ++ix) {
            const double u = out.xs[ix], v = out.ys[jy];
            std::size_t nearest = 0;
            double best = HUGE_VAL;
            for (std::size_t i = 0; i < n; ++i) {
                const double dx = sx[i] - u, dy = sy[i] - v;
                const double d2 = dx * dx + dy * dy;
                if (d2 < best) {
                    best = d2;
                    nearest = i;
                }
            }
            const double z = w0 * u + w1 * v + rest[nearest];
            const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            out.prob[jy * grid.nx + ix] = p;
        }
    }
    return out;
}

void save_heatmap_csv(const std::string& path, const HeatmapGrid& grid) {
    std::ofstream out(path);
    if (!out) throw DataError("save_heatmap_csv: cannot open " + path);
    out << "x_spu,x_core,prob_class_pos\n";
    char buf[64];
    for (std::size_t jy = 0; jy < grid.spec.ny; ++jy) {
        for (std::size_t ix = 0; ix < grid.spec.nx; ++ix) {
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g", grid.xs[ix], grid.ys[jy],
                          grid.prob[jy * grid.spec.nx + ix]);
            out << buf << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Records

namespace {

nlohmann::json selected_to_json(const SelectedMetrics& s) {
    return {{"epoch", s.epoch},
            {"step", s.step},
            {"val_worst", s.val_worst},
            {"val_avg", s.val_avg},
            {"test_worst", s.test_worst},
            {"test_avg", s.test_avg},
            {"test_group_acc", s.test_group_accuracies}};
}

SelectedMetrics selected_from_json(const nlohmann::json& j) {
    SelectedMetrics s;
    s.epoch = j.at("epoch").get<std::size_t>();
    s.step = j.at("step").get<std::size_t>();
    s.val_worst = j.at("val_worst").get<double>();
    s.val_avg = j.at("val_avg").get<double>();
    s.test_worst = j.at("test_worst").get<double>();
    s.test_avg = j.at("test_avg").get<double>();
    s.test_group_accuracies = j.at("test_group_acc").get<std::vector<double>>();
    return s;
}

}  // namespace

std::string RunRecord::dedup_key() const {
    nlohmann::json h(hyper);
    return method + "|" + dataset + "|" + h.dump() + "|" + std::to_string(seed);
}

std::string record_to_json(const RunRecord& rec) {
    nlohmann::json j;
    j["method"] = rec.method;
    j["dataset"] = rec.dataset;
    j["hyper"] = rec.hyper;
    j["seed"] = rec.seed;
    j["by_worst"] = selected_to_json(rec.by_worst);
    j["by_avg"] = selected_to_json(rec.by_avg);
    j["final"] = selected_to_json(rec.final_it);
    j["wall_seconds"] = rec.wall_seconds;
    return j.dump();
}

RunRecord record_from_json(const std::string& line) {
    const nlohmann::json j = nlohmann::json::parse(line);
    RunRecord rec;
    rec.method = j.at("method").get<std::string>();
    rec.dataset = j.at("dataset").get<std::string>();
    rec.hyper = j.at("hyper").get<std::map<std::string, double>>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.by_worst = selected_from_json(j.at("by_worst"));
    rec.by_avg = selected_from_json(j.at("by_avg"));
    rec.final_it = selected_from_json(j.at("final"));
    rec.wall_seconds = j.at("wall_seconds").get<double>();
    return rec;
}

RecordStore::RecordStore(std::string path) : path_(std::move(path)) {}

void RecordStore::append(const RunRecord& rec) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw DataError("RecordStore: cannot open " + path_ + " for append");
    out << record_to_json(rec) << '\n';
    out.flush();
    if (!out) throw DataError("RecordStore: write failed for " + path_);
}

std::vector<RunRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    std::vector<RunRecord> out;
    if (!in) return out;

    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::map<std::string, std::size_t> by_key;
    std::size_t start = 0;
    while (start < content.size()) {
        const std::size_t nl = content.find('\n', start);
        if (nl == std::string::npos) break;  // torn final line: no newline yet
        const std::string line = content.substr(start, nl - start);
        start = nl + 1;
        if (line.empty()) continue;
        RunRecord rec;
        try {
            rec = record_from_json(line);
        } catch (const nlohmann::json::exception&) {
            continue;  // corrupt line (e.g. torn write followed by later appends)
        }
        const std::string key = rec.dedup_key();
        const auto it = by_key.find(key);
        if (it == by_key.end()) {
            by_key.emplace(key, out.size());
            out.push_back(std::move(rec));
        } else {
            out[it->second] = std::move(rec);  // re-run wins
        }
    }
    return out;
}

std::size_t select_best_record(const TrainedRun& run, SelectionCriterion criterion) {
    if (run.records.empty()) throw DataError("select_best_record: run has no records");
    std::size_t best = 0;
    double best_value = criterion_value(run.records[0].val, criterion);
    for (std::size_t k = 1; k < run.records.size(); ++k) {
        const double v = criterion_value(run.records[k].val, criterion);
        if (v > best_value) {
            best = k;
            best_value = v;
        }
    }
    return best;
}

namespace {

SelectedMetrics selected_metrics_at(const TrainedRun& run, std::size_t record_index,
                                    const GroupedDataset& ds_test) {
    const EpochRecord& rec = run.records[record_index];
    const GroupMetrics test = evaluate(rec.snapshot, ds_test);
    SelectedMetrics s;
    s.epoch = rec.epoch;
    s.step = rec.step;
    s.val_worst = rec.val.worst_group_accuracy;
    s.val_avg = rec.val.average_accuracy;
    s.test_worst = test.worst_group_accuracy;
    s.test_avg = test.average_accuracy;
    s.test_group_accuracies = test.per_group_accuracy;
    return s;
}

}  // namespace

RunRecord summarize_run(const TrainedRun& run, const GroupedDataset& ds_test,
                        const std::string& method, const std::string& dataset_id) {
    RunRecord rec;
    rec.method = method;
    rec.dataset = dataset_id;
    rec.hyper = run.hyper;
    rec.seed = run.seed;
    rec.by_worst = selected_metrics_at(run, select_best_record(run, SelectionCriterion::WorstGroupValidation), ds_test);
    rec.by_avg = selected_metrics_at(run, select_best_record(run, SelectionCriterion::AverageValidation), ds_test);
    rec.final_it = selected_metrics_at(run, run.records.size() - 1, ds_test);
    rec.wall_seconds = run.total_seconds;
    return rec;
}

// ---------------------------------------------------------------------------
// Training dispatch

TrainedRun train_method(Method method, const GroupedDataset& ds_train, const GroupedDataset& ds_val,
                        const TrainConfig& cfg, std::uint64_t seed, std::optional<JttConfig> jtt,
                        double gdro_eta) {
    switch (method) {
        case Method::JTT: {
            JttConfig jc = jtt.value_or(JttConfig{1, 1, cfg});
            jc.inner = cfg;
            if (jtt) {
                jc.t_first_stage = jtt->t_first_stage;
                jc.lambda_up = jtt->lambda_up;
            }
            return train_jtt(ds_train, ds_val, jc, seed).run;
        }
        case Method::GDRO:
            return train_gdro(ds_train, ds_val, cfg, gdro_eta, seed);
        default: {
            SamplerKind kind = SamplerKind::Uniform;
            if (method == Method::SUBY) kind = SamplerKind::SUBY;
            else if (method == Method::SUBG) kind = SamplerKind::SUBG;
            else if (method == Method::RWY) kind = SamplerKind::RWY;
            else if (method == Method::RWG) kind = SamplerKind::RWG;
            const SamplerSpec spec = make_sampler(kind, ds_train, mix_seed(seed, kSamplerTag));
            return train_erm(ds_train, ds_val, spec, cfg, seed, to_string(method));
        }
    }
}

// ---------------------------------------------------------------------------
// Random search

namespace {

struct Assignment {
    TrainConfig cfg;
    std::optional<JttConfig> jtt;
};

template <typename T>
T pick(Rng& rng, const std::vector<T>& grid, const char* what) {
    if (grid.empty()) throw DataError(std::string("random_search: empty grid for ") + what);
    return grid[rng.uniform_below(grid.size())];
}

Assignment draw_assignment(Rng& rng, const SearchSpace& space, Method method) {
    Assignment a;
    a.cfg.learning_rate = pick(rng, space.learning_rates, "learning_rate");
    a.cfg.weight_decay = pick(rng, space.weight_decays, "weight_decay");
    a.cfg.batch_size = pick(rng, space.batch_sizes, "batch_size");
    a.cfg.epochs = pick(rng, space.epochs, "epochs");
    a.cfg.eval_every = 1;  // replaced by the per-epoch step count below
    if (method == Method::JTT) {
        JttConfig jc;
        jc.lambda_up = pick(rng, space.lambda_ups, "lambda_up");
        jc.t_first_stage = pick(rng, space.t_first_stages, "t_first_stage");
        jc.inner = a.cfg;
        a.jtt = jc;
    }
    return a;
}

std::size_t steps_per_epoch_for(Method method, const GroupedDataset& ds_train,
                                const TrainConfig& cfg, std::uint64_t run_seed) {
    if (cfg.batch_size == kFullBatch) return 1;
    std::size_t epoch_size = ds_train.size();
    if (method == Method::SUBY || method == Method::SUBG) {
        const SamplerKind kind = method == Method::SUBY ? SamplerKind::SUBY : SamplerKind::SUBG;
        epoch_size = make_sampler(kind, ds_train, mix_seed(run_seed, kSamplerTag)).epoch_size();
    }
    return (epoch_size + cfg.batch_size - 1) / cfg.batch_size;
}

}  // namespace

std::vector<RunRecord> random_search(const SearchSpace& space, const SearchDataset& data,
                                     Method method, std::uint64_t master_seed, RecordStore* store,
                                     std::size_t jobs) {
    if (!data.train || !data.val || !data.test)
        throw DataError("random_search: dataset splits missing");
    if (space.n_trials == 0 || space.n_seeds == 0)
        throw DataError("random_search: n_trials and n_seeds must be positive");
    if (jobs == 0) jobs = 1;

    Rng assign_rng(mix_seed(master_seed, kAssignTag));
    std::vector<Assignment> assignments;
    assignments.reserve(space.n_trials);
    for (std::size_t t = 0; t < space.n_trials; ++t)
        assignments.push_back(draw_assignment(assign_rng, space, method));

    struct Job {
        std::size_t trial = 0;
        std::size_t seed_index = 0;
        std::uint64_t run_seed = 0;
    };
    std::vector<Job> job_list;
    for (std::size_t t = 0; t < space.n_trials; ++t)
        for (std::size_t s = 0; s < space.n_seeds; ++s)
            job_list.push_back({t, s, mix_seed(master_seed, t, s)});

    // Records already present (same dedup key) are reused, not re-run.
    std::map<std::string, RunRecord> known;
    if (store)
        for (RunRecord& rec : load_records(store->path())) known.emplace(rec.dedup_key(), std::move(rec));

    auto run_job = [&](const Job& job) -> RunRecord {
        const Assignment& a = assignments[job.trial];
        TrainConfig cfg = a.cfg;
        cfg.eval_every = steps_per_epoch_for(method, *data.train, cfg, job.run_seed);
        std::optional<JttConfig> jtt = a.jtt;
        if (jtt) jtt->inner.eval_every = cfg.eval_every;
        const TrainedRun run =
            train_method(method, *data.train, *data.val, cfg, job.run_seed, jtt, space.eta);
        return summarize_run(run, *data.test, to_string(method), data.id);
    };

    // Keys are derivable without training, so pre-compute which jobs to skip.
    // A dry assignment->hyper mapping mirrors what train_method records.
    auto job_key = [&](const Job& job) {
        const Assignment& a = assignments[job.trial];
        std::map<std::string, double> hyper = {
            {"learning_rate", a.cfg.learning_rate},
            {"weight_decay", a.cfg.weight_decay},
            {"batch_size", static_cast<double>(a.cfg.batch_size)},
            {"epochs", static_cast<double>(a.cfg.epochs)}};
        if (method == Method::JTT) {
            hyper["lambda_up"] = static_cast<double>(a.jtt->lambda_up);
            hyper["t_first_stage"] = static_cast<double>(a.jtt->t_first_stage);
        }
        if (method == Method::GDRO) hyper["eta"] = space.eta;
        RunRecord probe;
        probe.method = to_string(method);
        probe.dataset = data.id;
        probe.hyper = std::move(hyper);
        probe.seed = job.run_seed;
        return probe.dedup_key();
    };

    std::vector<std::optional<RunRecord>> results(job_list.size());
    std::vector<bool> reused(job_list.size(), false);
    for (std::size_t i = 0; i < job_list.size(); ++i) {
        const auto it = known.find(job_key(job_list[i]));
        if (it != known.end()) {
            results[i] = it->second;
            reused[i] = true;
        }
    }

    std::atomic<std::size_t> next_task{0};
    std::mutex commit_mutex;
    std::size_t next_commit = 0;
    std::exception_ptr first_error;

    auto commit_ready = [&]() {
        while (next_commit < results.size() && results[next_commit].has_value()) {
            if (store && !reused[next_commit]) store->append(*results[next_commit]);
            ++next_commit;
        }
    };

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next_task.fetch_add(1);
            if (i >= job_list.size()) return;
            if (reused[i]) {
                std::lock_guard<std::mutex> lock(commit_mutex);
                commit_ready();
                continue;
            }
            try {
                RunRecord rec = run_job(job_list[i]);
                std::lock_guard<std::mutex> lock(commit_mutex);
                results[i] = std::move(rec);
                commit_ready();
            } catch (...) {
                std::lock_guard<std::mutex> lock(commit_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < std::min(jobs, job_list.size()); ++j)
            pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    {
        std::lock_guard<std::mutex> lock(commit_mutex);
        commit_ready();
    }

    std::vector<RunRecord> out;
    out.reserve(results.size());
    for (auto& r : results) {
        if (!r) throw DataError("random_search: job did not complete");
        out.push_back(std::move(*r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Results table

namespace {

std::string format_cell(const MeanStd& ms) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f±%.1f", ms.mean * 100.0, ms.stddev * 100.0);
    return buf;
}

std::size_t utf8_columns(const std::string& s) {
    std::size_t cols = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++cols;
    return cols;
}

std::string pad_to(const std::string& s, std::size_t width) {
    std::string out = s;
    const std::size_t cols = utf8_columns(s);
    if (cols < width) out.append(width - cols, ' ');
    return out;
}

const std::vector<std::string> kMethodOrder = {"erm", "jtt", "rwy", "suby", "rwg", "subg", "gdro"};

bool method_order_less(const std::string& a, const std::string& b) {
    const auto ia = std::find(kMethodOrder.begin(), kMethodOrder.end(), a);
    const auto ib = std::find(kMethodOrder.begin(), kMethodOrder.end(), b);
    if (ia != ib) return ia < ib;
    return a < b;
}

}  // namespace

ResultsTable emit_table(const std::vector<RunRecord>& records, SelectionCriterion criterion,
                        bool no_regularization) {
    if (records.empty()) throw DataError("emit_table: no records");

    ResultsTable table;
    table.criterion = criterion;
    table.no_regularization = no_regularization;

    // method -> dataset -> hyper key -> records
    std::map<std::string, std::map<std::string, std::map<std::string, std::vector<const RunRecord*>>>>
        cells;
    for (const RunRecord& rec : records) {
        if (std::find(table.datasets.begin(), table.datasets.end(), rec.dataset) ==
            table.datasets.end())
            table.datasets.push_back(rec.dataset);
        cells[rec.method][rec.dataset][nlohmann::json(rec.hyper).dump()].push_back(&rec);
    }
    for (const auto& [method, _] : cells) table.methods.push_back(method);
    std::sort(table.methods.begin(), table.methods.end(), method_order_less);

    for (const auto& [method, per_dataset] : cells) {
        for (const auto& [dataset, assignments] : per_dataset) {
            std::string best_key;
            double best_score = -HUGE_VAL;
            for (const auto& [key, recs] : assignments) {
                if (no_regularization) {
                    const double wd = recs.front()->hyper.at("weight_decay");
                    if (std::abs(wd - 1e-4) > 1e-12) continue;
                }
                double score = 0.0;
                for (const RunRecord* r : recs) {
                    const SelectedMetrics& sel = no_regularization ? r->final_it
                                                 : criterion == SelectionCriterion::WorstGroupValidation
                                                     ? r->by_worst
                                                     : r->by_avg;
                    score += criterion == SelectionCriterion::WorstGroupValidation ? sel.val_worst
                                                                                   : sel.val_avg;
                }
                score /= static_cast<double>(recs.size());
                if (score > best_score || (score == best_score && key < best_key)) {
                    best_score = score;
                    best_key = key;
                }
            }
            if (best_key.empty())
                throw DataError("emit_table: no eligible assignment for " + method + "/" + dataset);

            std::vector<double> test_worsts;
            for (const RunRecord* r : assignments.at(best_key)) {
                const SelectedMetrics& sel = no_regularization ? r->final_it
                                             : criterion == SelectionCriterion::WorstGroupValidation
                                                 ? r->by_worst
                                                 : r->by_avg;
                test_worsts.push_back(sel.test_worst);
            }
            TableCell cell;
            cell.test_worst = summarize_seeds(test_worsts);
            cell.n_seeds = test_worsts.size();
            cell.formatted = format_cell(cell.test_worst);
            table.cells[method][dataset] = std::move(cell);
        }
    }

    for (const std::string& method : table.methods) {
        double acc = 0.0;
        std::size_t count = 0;
        for (const std::string& ds : table.datasets) {
            const auto it = table.cells[method].find(ds);
            if (it != table.cells[method].end()) {
                acc += it->second.test_worst.mean;
                ++count;
            }
        }
        if (count > 0) table.avg_worst_across_datasets[method] = acc / static_cast<double>(count);
    }
    return table;
}

std::string ResultsTable::to_csv() const {
    std::ostringstream out;
    out << "method,groups";
    for (const std::string& ds : datasets) out << ',' << ds;
    // across-dataset mean of worst accuracies (not average accuracy)
    out << ",avg_worst_across_datasets\n";
    char buf[32];
    for (const std::string& m : methods) {
        out << m << ',' << (method_uses_attributes(method_from_string(m)) ? "yes" : "no");
        for (const std::string& ds : datasets) {
            out << ',';
            const auto it = cells.at(m).find(ds);
            if (it != cells.at(m).end()) out << it->second.formatted;
        }
        std::snprintf(buf, sizeof(buf), "%.1f", avg_worst_across_datasets.at(m) * 100.0);
        out << ',' << buf << '\n';
    }
    return out.str();
}

std::string ResultsTable::to_text() const {
    std::vector<std::string> header = {"method", "groups"};
    header.insert(header.end(), datasets.begin(), datasets.end());
    header.push_back("avg-worst");

    std::vector<std::vector<std::string>> rows;
    char buf[32];
    for (const std::string& m : methods) {
        std::vector<std::string> row = {m, method_uses_attributes(method_from_string(m)) ? "yes" : "no"};
        for (const std::string& ds : datasets) {
            const auto it = cells.at(m).find(ds);
            row.push_back(it != cells.at(m).end() ? it->second.formatted : "-");
        }
        std::snprintf(buf, sizeof(buf), "%.1f", avg_worst_across_datasets.at(m) * 100.0);
        row.push_back(buf);
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> widths(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        widths[c] = utf8_columns(header[c]);
        for (const auto& row : rows) widths[c] = std::max(widths[c], utf8_columns(row[c]));
    }
    std::ostringstream out;
    auto emit_row = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << pad_to(row[c], widths[c]);
            out << (c + 1 == row.size() ? '\n' : ' ');
        }
    };
    emit_row(header);
    for (const auto& row : rows) emit_row(row);
    return out.str();
}

// ---------------------------------------------------------------------------
// Toy pipeline

ToyResult run_toy(const ToyConfig& cfg) {
    cfg.synth.validate();
    cfg.train.validate();
    if (cfg.n_seeds == 0) throw DataError("run_toy: n_seeds must be positive");

    ToyResult result;
    result.config = cfg;
    result.methods.resize(cfg.methods.size());
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) result.methods[m].method = cfg.methods[m];

    std::vector<std::vector<double>> heat_acc(cfg.methods.size());
    HeatmapGrid grid_template;

    for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
        SyntheticConfig synth = cfg.synth;
        synth.seed = mix_seed(cfg.synth.seed, kToyDataTag, s);
        const GroupedDataset ds_train = synth_generate(synth, 0, synth.n_train);
        const GroupedDataset ds_val = synth_generate(synth, 1, synth.n_val);
        const GroupedDataset ds_test = synth_generate_balanced(synth, 2, synth.n_test);
        const std::uint64_t run_seed = mix_seed(cfg.synth.seed, kToyRunTag, s);

        for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
            ToyMethodResult& tm = result.methods[m];
            const TrainedRun run = train_method(cfg.methods[m], ds_train, ds_val, cfg.train,
                                                run_seed, cfg.jtt, cfg.gdro_eta);

            const std::size_t best_idx =
                select_best_record(run, SelectionCriterion::WorstGroupValidation);
            tm.best_per_seed.push_back(selected_metrics_at(run, best_idx, ds_test));
            tm.final_per_seed.push_back(selected_metrics_at(run, run.records.size() - 1, ds_test));

            for (const EpochRecord& rec : run.records)
                tm.curves.push_back({run_seed, rec.epoch, rec.train.worst_group_accuracy,
                                     rec.train.average_accuracy, rec.val.worst_group_accuracy,
                                     rec.val.average_accuracy});

            if (cfg.emit_heatmaps) {
                const HeatmapGrid hg = heatmap(run.records[best_idx].snapshot, ds_train, cfg.grid);
                if (heat_acc[m].empty()) {
                    heat_acc[m].assign(hg.prob.size(), 0.0);
                    grid_template = hg;
                }
                for (std::size_t i = 0; i < hg.prob.size(); ++i) heat_acc[m][i] += hg.prob[i];
            }
        }
    }

    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        ToyMethodResult& tm = result.methods[m];
        std::vector<double> best, fin;
        for (const auto& sel : tm.best_per_seed) best.push_back(sel.test_worst);
        for (const auto& sel : tm.final_per_seed) fin.push_back(sel.test_worst);
        tm.best_test_worst = summarize_seeds(best);
        tm.final_test_worst = summarize_seeds(fin);
        if (cfg.emit_heatmaps) {
            HeatmapGrid mean = grid_template;
            for (std::size_t i = 0; i < mean.prob.size(); ++i)
                mean.prob[i] = heat_acc[m][i] / static_cast<double>(cfg.n_seeds);
            tm.heatmap_mean = std::move(mean);
        }
    }
    return result;
}

void save_toy_artifacts(const std::string& out_dir, const ToyResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    char buf[128];

    {
        std::ofstream out(out_dir + "/summary.csv");
        if (!out) throw DataError("save_toy_artifacts: cannot write summary.csv");
        out << "method,n_seeds,best_test_worst_mean,best_test_worst_std,final_test_worst_mean,"
               "final_test_worst_std\n";
        for (const ToyMethodResult& tm : result.methods) {
            std::snprintf(buf, sizeof(buf), "%s,%zu,%.10g,%.10g,%.10g,%.10g",
                          to_string(tm.method).c_str(), result.config.n_seeds,
                          tm.best_test_worst.mean, tm.best_test_worst.stddev,
                          tm.final_test_worst.mean, tm.final_test_worst.stddev);
            out << buf << '\n';
        }
    }
    {
        std::ofstream out(out_dir + "/curves.csv");
        if (!out) throw DataError("save_toy_artifacts: cannot write curves.csv");
        out << "method,seed,epoch,split,worst_group_accuracy,average_accuracy\n";
        for (const ToyMethodResult& tm : result.methods) {
            for (const ToyCurvePoint& p : tm.curves) {
                std::snprintf(buf, sizeof(buf), "%s,%llu,%zu,train,%.10g,%.10g",
                              to_string(tm.method).c_str(),
                              static_cast<unsigned long long>(p.seed), p.epoch, p.train_worst,
                              p.train_avg);
                out << buf << '\n';
                std::snprintf(buf, sizeof(buf), "%s,%llu,%zu,val,%.10g,%.10g",
                              to_string(tm.method).c_str(),
                              static_cast<unsigned long long>(p.seed), p.epoch, p.val_worst,
                              p.val_avg);
                out << buf << '\n';
            }
        }
    }
    for (const ToyMethodResult& tm : result.methods) {
        if (tm.heatmap_mean)
            save_heatmap_csv(out_dir + "/heatmap_" + to_string(tm.method) + ".csv", *tm.heatmap_mean);
    }
}

}  // namespace groupbal
