#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "groupbal/csv.hpp"
#include "groupbal/harness.hpp"
#include "groupbal/stats.hpp"
#include "groupbal/synthetic.hpp"

namespace {

using namespace groupbal;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

SyntheticConfig synth_from_options(const std::string& config_path, std::uint64_t seed_override,
                                   bool has_seed) {
    SyntheticConfig cfg;
    if (!config_path.empty()) cfg = load_synthetic_config(config_path);
    if (has_seed) cfg.seed = seed_override;
    cfg.validate();
    return cfg;
}

int cmd_generate(const std::string& config_path, std::uint64_t seed, bool has_seed,
                 const std::string& out_dir) {
    const SyntheticConfig cfg = synth_from_options(config_path, seed, has_seed);
    std::filesystem::create_directories(out_dir);
    save_csv(out_dir + "/train.csv", synth_generate(cfg, 0, cfg.n_train));
    save_csv(out_dir + "/val.csv", synth_generate(cfg, 1, cfg.n_val));
    save_csv(out_dir + "/test.csv", synth_generate_balanced(cfg, 2, cfg.n_test));
    std::cout << "wrote train/val/test CSVs to " << out_dir << "\n";
    return kExitOk;
}

int cmd_toy(const std::string& config_path, std::uint64_t seed, bool has_seed,
            const std::vector<std::string>& method_names, std::size_t n_seeds, double lr, double wd,
            std::size_t iters, std::size_t eval_every, const std::string& out_dir,
            bool no_heatmaps, const GridSpec& grid) {
    ToyConfig cfg;
    cfg.synth = synth_from_options(config_path, seed, has_seed);
    cfg.methods.clear();
    for (const auto& name : method_names) cfg.methods.push_back(method_from_string(name));
    cfg.n_seeds = n_seeds;
    cfg.train.learning_rate = lr;
    cfg.train.weight_decay = wd;
    cfg.train.epochs = iters;
    cfg.train.eval_every = eval_every;
    cfg.jtt.inner = cfg.train;
    cfg.grid = grid;
    cfg.emit_heatmaps = !no_heatmaps;

    const ToyResult result = run_toy(cfg);
    save_toy_artifacts(out_dir, result);
    std::printf("%-8s %12s %12s\n", "method", "best-worst", "final-worst");
    for (const auto& tm : result.methods)
        std::printf("%-8s %6.1f±%-5.1f %6.1f±%-5.1f\n", to_string(tm.method).c_str(),
                    100 * tm.best_test_worst.mean, 100 * tm.best_test_worst.stddev,
                    100 * tm.final_test_worst.mean, 100 * tm.final_test_worst.stddev);
    std::cout << "artifacts written to " << out_dir << "\n";
    return kExitOk;
}

struct SplitPaths {
    std::string train, val, test;
};

struct LoadedSplits {
    GroupedDataset train, val, test;
};

LoadedSplits load_splits(const SplitPaths& paths) {
    LoadedSplits out;
    out.train = load_csv(paths.train).dataset;
    out.val = load_csv(paths.val).dataset;
    out.test = load_csv(paths.test).dataset;
    return out;
}

int cmd_train(const SplitPaths& paths, const std::string& method_name, double lr, double wd,
              std::size_t batch, std::size_t epochs, std::size_t eval_every, std::uint64_t seed,
              std::size_t lambda_up, std::size_t t_first, double eta, const std::string& out_dir,
              bool no_snapshots) {
    const LoadedSplits data = load_splits(paths);
    const Method method = method_from_string(method_name);
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.weight_decay = wd;
    cfg.batch_size = batch;
    cfg.epochs = epochs;
    cfg.eval_every = eval_every;
    JttConfig jtt;
    jtt.t_first_stage = t_first;
    jtt.lambda_up = lambda_up;
    jtt.inner = cfg;

    const TrainedRun run = train_method(method, data.train, data.val, cfg, seed, jtt, eta);
    const RunRecord rec = summarize_run(run, data.test, method_name, paths.train);
    save_run(out_dir, run, !no_snapshots);
    {
        std::ofstream out(out_dir + "/record.json");
        out << record_to_json(rec) << '\n';
    }
    std::printf("best epoch %zu: val worst %.4f, test worst %.4f (avg %.4f)\n", rec.by_worst.epoch,
                rec.by_worst.val_worst, rec.by_worst.test_worst, rec.by_worst.test_avg);
    std::cout << "run saved to " << out_dir << "\n";
    return kExitOk;
}

int cmd_search(const SplitPaths& paths, const std::string& config_path, std::uint64_t synth_seed,
               bool has_synth_seed, const std::string& method_name, std::size_t trials,
               std::size_t seeds, std::uint64_t master_seed, const std::string& records_path,
               std::size_t jobs, std::size_t epochs, const std::string& dataset_id,
               const std::vector<double>& lr_grid, const std::vector<double>& wd_grid,
               const std::vector<std::size_t>& batch_grid) {
    GroupedDataset train, val, test;
    std::string id = dataset_id;
    if (!paths.train.empty()) {
        LoadedSplits data = load_splits(paths);
        train = std::move(data.train);
        val = std::move(data.val);
        test = std::move(data.test);
        if (id.empty()) id = std::filesystem::path(paths.train).stem().string();
    } else {
        const SyntheticConfig cfg = synth_from_options(config_path, synth_seed, has_synth_seed);
        train = synth_generate(cfg, 0, cfg.n_train);
        val = synth_generate(cfg, 1, cfg.n_val);
        test = synth_generate_balanced(cfg, 2, cfg.n_test);
        if (id.empty()) id = "synthetic";
    }

    SearchSpace space;
    space.n_trials = trials;
    space.n_seeds = seeds;
    space.epochs = {epochs};
    if (!lr_grid.empty()) space.learning_rates = lr_grid;
    if (!wd_grid.empty()) space.weight_decays = wd_grid;
    if (!batch_grid.empty()) space.batch_sizes = batch_grid;

    RecordStore store(records_path);
    SearchDataset data{&train, &val, &test, id};
    const auto records =
        random_search(space, data, method_from_string(method_name), master_seed, &store, jobs);
    std::cout << records.size() << " records for " << method_name << " in " << records_path
              << "\n";
    return kExitOk;
}

int cmd_table(const std::string& records_path, const std::string& select,
              bool no_regularization, const std::string& out_prefix) {
    const auto records = load_records(records_path);
    if (records.empty()) throw DataError("table: no records in " + records_path);
    const ResultsTable table =
        emit_table(records, selection_criterion_from_string(select), no_regularization);
    std::cout << table.to_text();
    if (!out_prefix.empty()) {
        std::ofstream csv(out_prefix + ".csv");
        if (!csv) throw DataError("table: cannot write " + out_prefix + ".csv");
        csv << table.to_csv();
        std::ofstream txt(out_prefix + ".txt");
        if (!txt) throw DataError("table: cannot write " + out_prefix + ".txt");
        txt << table.to_text();
        std::cout << "wrote " << out_prefix << ".csv and " << out_prefix << ".txt\n";
    }
    return kExitOk;
}

int cmd_stats_ag(const std::string& input_path, double alpha) {
    std::ifstream in(input_path);
    if (!in) throw DataError("stats ag: cannot open " + input_path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("stats ag: empty file");
    std::map<std::string, std::vector<double>> groups;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError("stats ag: expected group,value at line " + std::to_string(line_no));
        try {
            groups[line.substr(0, comma)].push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw DataError("stats ag: bad value at line " + std::to_string(line_no));
        }
    }
    const SignificanceDecision decision = significance_flags(groups, alpha);
    std::printf("A,p,df\n%.10g,%.10g,%d\n", decision.result.statistic, decision.result.p_value,
                decision.result.df);
    std::printf("%s at alpha=%g\n", decision.reject ? "reject equal means" : "no rejection", alpha);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"group-robust classification toolkit"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "write synthetic train/val/test CSVs");
    std::string gen_config, gen_out = "data";
    std::uint64_t gen_seed = 0;
    gen->add_option("--config", gen_config, "key=value synthetic config file");
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    // toy
    auto* toy = app.add_subcommand("toy", "synthetic spurious-correlation pipeline with heatmaps");
    std::string toy_config, toy_out = "toy-out";
    std::uint64_t toy_seed = 0;
    std::vector<std::string> toy_methods = {"erm", "subg", "rwg"};
    std::size_t toy_seeds = 8, toy_iters = 5000, toy_eval = 10;
    double toy_lr = 0.1, toy_wd = 0.0;
    bool toy_no_heatmaps = false;
    GridSpec toy_grid;
    toy->add_option("--config", toy_config, "key=value synthetic config file");
    auto* toy_seed_opt = toy->add_option("--seed", toy_seed, "master seed");
    toy->add_option("--methods", toy_methods, "methods to train")->delimiter(',');
    toy->add_option("--seeds", toy_seeds, "number of seeds (default 8)");
    toy->add_option("--lr", toy_lr, "learning rate (default 0.1)");
    toy->add_option("--wd", toy_wd, "weight decay (default 0)");
    toy->add_option("--iters", toy_iters, "full-batch iterations (default 5000)");
    toy->add_option("--eval-every", toy_eval, "evaluation period in steps (default 10)");
    toy->add_option("--out", toy_out, "output directory")->required();
    toy->add_flag("--no-heatmaps", toy_no_heatmaps, "skip heatmap emission");
    toy->add_option("--grid-x-min", toy_grid.x_min);
    toy->add_option("--grid-x-max", toy_grid.x_max);
    toy->add_option("--grid-y-min", toy_grid.y_min);
    toy->add_option("--grid-y-max", toy_grid.y_max);
    toy->add_option("--grid-nx", toy_grid.nx);
    toy->add_option("--grid-ny", toy_grid.ny);

    // train
    auto* tr = app.add_subcommand("train", "single training run");
    SplitPaths tr_paths;
    std::string tr_method = "erm", tr_out = "run-out";
    double tr_lr = 0.1, tr_wd = 0.0, tr_eta = 0.1;
    std::size_t tr_batch = 0, tr_epochs = 100, tr_eval = 1, tr_lambda = 20, tr_tfirst = 1;
    std::uint64_t tr_seed = 0;
    bool tr_no_snapshots = false;
    tr->add_option("--data", tr_paths.train, "training CSV")->required();
    tr->add_option("--val", tr_paths.val, "validation CSV")->required();
    tr->add_option("--test", tr_paths.test, "test CSV")->required();
    tr->add_option("--method", tr_method, "erm|jtt|gdro|suby|subg|rwy|rwg");
    tr->add_option("--lr", tr_lr, "learning rate");
    tr->add_option("--wd", tr_wd, "weight decay");
    tr->add_option("--batch", tr_batch, "batch size (0 = full batch)");
    tr->add_option("--epochs", tr_epochs, "epochs");
    tr->add_option("--eval-every", tr_eval, "evaluation period in steps");
    tr->add_option("--seed", tr_seed, "run seed");
    tr->add_option("--lambda-up", tr_lambda, "JTT upweight factor");
    tr->add_option("--t-first", tr_tfirst, "JTT phase-1 epochs");
    tr->add_option("--eta", tr_eta, "gDRO step size");
    tr->add_option("--out", tr_out, "output directory")->required();
    tr->add_flag("--no-snapshots", tr_no_snapshots, "skip per-epoch snapshot files");

    // search
    auto* se = app.add_subcommand("search", "random hyper-parameter search");
    SplitPaths se_paths;
    std::string se_config, se_method = "erm", se_records = "records.jsonl", se_dataset_id;
    std::uint64_t se_synth_seed = 0, se_master = 0;
    std::size_t se_trials = 50, se_seeds = 5, se_jobs = 1, se_epochs = 20;
    std::vector<double> se_lr_grid, se_wd_grid;
    std::vector<std::size_t> se_batch_grid;
    se->add_option("--data", se_paths.train, "training CSV (omit to use --config synthetic)");
    se->add_option("--val", se_paths.val, "validation CSV");
    se->add_option("--test", se_paths.test, "test CSV");
    se->add_option("--config", se_config, "synthetic config file");
    auto* se_seed_opt = se->add_option("--synth-seed", se_synth_seed, "synthetic data seed");
    se->add_option("--method", se_method, "method to search")->required();
    se->add_option("--trials", se_trials, "random assignments (default 50)");
    se->add_option("--seeds", se_seeds, "seeds per assignment (default 5)");
    se->add_option("--master-seed", se_master, "search master seed");
    se->add_option("--records", se_records, "JSONL record store")->required();
    se->add_option("--jobs", se_jobs, "worker threads");
    se->add_option("--epochs", se_epochs, "epochs per run");
    se->add_option("--dataset-id", se_dataset_id, "dataset tag in records");
    se->add_option("--lr-grid", se_lr_grid, "learning-rate grid override")->delimiter(',');
    se->add_option("--wd-grid", se_wd_grid, "weight-decay grid override")->delimiter(',');
    se->add_option("--batch-grid", se_batch_grid, "batch-size grid override")->delimiter(',');

    // table
    auto* tb = app.add_subcommand("table", "emit results table from a record store");
    std::string tb_records, tb_select = "worst", tb_out;
    bool tb_noreg = false;
    tb->add_option("--records", tb_records, "JSONL record store")->required();
    tb->add_option("--select", tb_select, "worst|avg validation selection");
    tb->add_flag("--no-reg", tb_noreg, "restrict to weight decay 1e-4 at the final iterate");
    tb->add_option("--out", tb_out, "output prefix for .csv/.txt");

    // stats
    auto* st = app.add_subcommand("stats", "statistical tests");
    auto* ag = st->add_subcommand("ag", "Alexander-Govern equality-of-means test");
    std::string ag_input;
    double ag_alpha = 0.05;
    ag->add_option("--input", ag_input, "CSV with group,value rows")->required();
    ag->add_option("--alpha", ag_alpha, "significance level (default 0.05)");
    st->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_config, gen_seed, gen_seed_opt->count() > 0, gen_out);
        if (toy->parsed())
            return cmd_toy(toy_config, toy_seed, toy_seed_opt->count() > 0, toy_methods, toy_seeds,
                           toy_lr, toy_wd, toy_iters, toy_eval, toy_out, toy_no_heatmaps, toy_grid);
        if (tr->parsed())
            return cmd_train(tr_paths, tr_method, tr_lr, tr_wd, tr_batch, tr_epochs, tr_eval,
                             tr_seed, tr_lambda, tr_tfirst, tr_eta, tr_out, tr_no_snapshots);
        if (se->parsed())
            return cmd_search(se_paths, se_config, se_synth_seed, se_seed_opt->count() > 0,
                              se_method, se_trials, se_seeds, se_master, se_records, se_jobs,
                              se_epochs, se_dataset_id, se_lr_grid, se_wd_grid, se_batch_grid);
        if (tb->parsed()) return cmd_table(tb_records, tb_select, tb_noreg, tb_out);
        if (st->parsed() && ag->parsed()) return cmd_stats_ag(ag_input, ag_alpha);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    std::cerr << "no subcommand\n";
    return kExitUsage;
}
