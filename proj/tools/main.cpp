// Command-line front end: synthetic data generation, dataset splitting,
// simulation, surrogate training, table optimization and extraction,
// evaluation, sensitivity sweeps and the black-box tuner baseline.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical divergence.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "simtune/config.hpp"
#include "simtune/errors.hpp"
#include "simtune/metrics.hpp"
#include "simtune/pipeline.hpp"
#include "simtune/simdata.hpp"
#include "simtune/synth.hpp"
#include "simtune/training.hpp"
#include "simtune/tuner.hpp"

namespace fs = std::filesystem;
using namespace simtune;

namespace {

// ---------------------------------------------------------------------------
// Config plumbing

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value from the command line
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key=value configuration file");
    cmd->add_option("--set", args.overrides, "override a config key (key=value, repeatable)");
}

KeyValueConfig resolve_config(const CommonArgs& args) {
    KeyValueConfig config;
    if (!args.config_path.empty()) config = KeyValueConfig::load(args.config_path);
    for (const auto& entry : args.overrides) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + entry + "'");
        const std::string key = entry.substr(0, eq);
        if (key == "freeze")
            config.freeze.push_back(entry.substr(eq + 1));
        else
            config.set(key, entry.substr(eq + 1));
    }
    return config;
}

SamplingRange parse_range(const std::string& text, const std::string& key) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ParseError("config key '" + key + "': expected lo:hi, got '" + text + "'");
    try {
        return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': expected lo:hi, got '" + text + "'");
    }
}

SamplingSpec sampling_from_config(const KeyValueConfig& config) {
    SamplingSpec spec;
    spec.ports = static_cast<int>(config.get_int("ports", kDefaultPorts));
    auto range = [&](const char* key, SamplingRange fallback) {
        return config.has(key) ? parse_range(config.get_string(key, ""), key) : fallback;
    };
    spec.write_latency = range("sample_write_latency", spec.write_latency);
    spec.read_advance = range("sample_read_advance", spec.read_advance);
    spec.num_micro_ops = range("sample_num_micro_ops", spec.num_micro_ops);
    spec.dispatch_width = range("sample_dispatch_width", spec.dispatch_width);
    spec.reorder_buffer_size = range("sample_reorder_buffer_size", spec.reorder_buffer_size);
    spec.port_count = range("sample_port_count", spec.port_count);
    spec.port_cycles = range("sample_port_cycles", spec.port_cycles);
    return spec;
}

SynthConfig synth_from_config(const KeyValueConfig& config) {
    SynthConfig synth;
    synth.opcode_count = static_cast<int>(config.get_int("opcode_count", synth.opcode_count));
    synth.block_count = static_cast<int>(config.get_int("block_count", synth.block_count));
    synth.min_length = static_cast<int>(config.get_int("min_length", synth.min_length));
    synth.max_length = static_cast<int>(config.get_int("max_length", synth.max_length));
    synth.register_count = static_cast<int>(config.get_int("register_count", synth.register_count));
    synth.memory_ids = static_cast<int>(config.get_int("memory_ids", synth.memory_ids));
    synth.iterations = static_cast<int>(config.get_int("iterations", synth.iterations));
    return synth;
}

PipelineConfig pipeline_from_config(const KeyValueConfig& config) {
    PipelineConfig p;
    p.seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
    p.register_count = static_cast<int>(config.get_int("register_count", p.register_count));
    p.iterations = static_cast<int>(config.get_int("iterations", p.iterations));
    p.threads = static_cast<int>(config.get_int("threads", 0));
    p.sampling = sampling_from_config(config);
    p.multiplier = static_cast<int>(config.get_int("multiplier", p.multiplier));
    p.validation_multiplier =
        static_cast<int>(config.get_int("validation_multiplier", p.validation_multiplier));
    p.embed_dim = static_cast<int>(config.get_int("embed_dim", p.embed_dim));
    p.hidden_dim = static_cast<int>(config.get_int("hidden_dim", p.hidden_dim));
    p.depth = static_cast<int>(config.get_int("depth", p.depth));
    p.surrogate_passes = static_cast<int>(config.get_int("surrogate_epochs", p.surrogate_passes));
    p.batch_size = static_cast<int>(config.get_int("batch", p.batch_size));
    p.surrogate_lr = config.get_real("surrogate_lr", p.surrogate_lr);
    p.table_epochs = static_cast<int>(config.get_int("table_epochs", p.table_epochs));
    p.table_lr = config.get_real("table_lr", p.table_lr);
    p.trust_region = config.get_int("trust_region", 1) != 0;
    if (!config.freeze.empty()) {
        p.mask = FreezeMask::parse(config.freeze);
        const std::string defaults = config.get_string("defaults_table", "");
        if (defaults.empty()) throw DataError("freeze entries require defaults_table=<path>");
        p.freeze_defaults = load_table(defaults);
    }
    return p;
}

std::string require_key(const KeyValueConfig& config, const std::string& key) {
    const std::string value = config.get_string(key, "");
    if (value.empty()) throw DataError("config key '" + key + "' is required");
    return value;
}

Dataset load_from_config(const KeyValueConfig& config, const std::string& measurements_key) {
    return load_dataset(require_key(config, "blocks"), require_key(config, measurements_key),
                        static_cast<int>(config.get_int("register_count", kDefaultRegisterCount)));
}

// ---------------------------------------------------------------------------
// Output helpers

void ensure_dir(const std::string& path) {
    if (!path.empty()) fs::create_directories(path);
}

void append_report_row(const std::string& path, const EvalReport& report) {
    const bool fresh = !fs::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw DataError("cannot write report '" + path + "'");
    if (fresh) out << "predictor,dataset,n,mape,kendall_tau,seed\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%.6f,%.6f,%llu\n", report.predictor.c_str(),
                  report.dataset.c_str(), report.count, report.mape, report.kendall_tau,
                  static_cast<unsigned long long>(report.seed));
    out << buf;
}

void write_curve(const std::string& path, const std::vector<TrainCurvePoint>& curve) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write curve '" + path + "'");
    out << "epoch,train_loss,validation_mape\n";
    for (const auto& p : curve)
        out << p.epoch << ',' << p.train_loss << ',' << p.validation_mape << '\n';
}

void print_report(const EvalReport& report, bool verbose) {
    std::printf("%s on %s: n=%d mape=%.2f%% kendall_tau=%.4f", report.predictor.c_str(),
                report.dataset.c_str(), report.count, 100.0 * report.mape, report.kendall_tau);
    if (verbose) std::printf(" kendall_tau_b=%.4f", report.kendall_tau_b);
    std::printf("\n");
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_gen_data(const CommonArgs& common) {
    const KeyValueConfig config = resolve_config(common);
    const SynthConfig synth = synth_from_config(config);
    const SamplingSpec sampling = sampling_from_config(config);
    const auto seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
    const std::string out_dir = config.get_string("out_dir", ".");
    ensure_dir(out_dir);

    OutOfOrderSimulator sim;
    RecoveryData recovery = generate_recovery_dataset(
        synth, sampling, sim, seed, static_cast<int>(config.get_int("threads", 0)));

    save_blocks_file(recovery.data, out_dir + "/blocks.txt");
    save_measurements_file(recovery.data, out_dir + "/measurements.txt");
    save_table(recovery.hidden_table, out_dir + "/hidden_table.txt");

    std::printf("wrote %zu blocks over %zu opcodes to %s (hidden table: %s/hidden_table.txt)\n",
                recovery.data.blocks.size(), opcode_vocabulary(recovery.data).size(),
                out_dir.c_str(), out_dir.c_str());
    return 0;
}

int cmd_split(const CommonArgs& common) {
    const KeyValueConfig config = resolve_config(common);
    const Dataset data = load_from_config(config, "measurements");
    const auto seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
    const std::string out_dir = config.get_string("out_dir", ".");
    ensure_dir(out_dir);

    const DatasetSplit split = split_dataset(data, seed);
    save_measurements_file(split.train, out_dir + "/train_measurements.txt");
    save_measurements_file(split.validation, out_dir + "/validation_measurements.txt");
    save_measurements_file(split.test, out_dir + "/test_measurements.txt");
    std::printf("split %zu measurements into %zu/%zu/%zu under %s\n", data.size(),
                split.train.size(), split.validation.size(), split.test.size(), out_dir.c_str());
    return 0;
}

int cmd_simulate(const CommonArgs& common, const std::string& block_id, bool trace) {
    const KeyValueConfig config = resolve_config(common);
    const ParameterTable table = load_table(require_key(config, "table"));
    const int iterations = static_cast<int>(config.get_int("iterations", kDefaultIterations));
    const int register_count =
        static_cast<int>(config.get_int("register_count", kDefaultRegisterCount));

    std::ifstream in(require_key(config, "blocks"));
    if (!in) throw DataError("cannot open blocks file");
    std::string line;
    std::printf("block_id,cycles_per_iteration\n");
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const BasicBlock block = parse_block_line(line, register_count);
        if (!block_id.empty() && block.id != block_id) continue;
        SimTrace sim_trace;
        const SimResult result = simulate(table, block, iterations, trace ? &sim_trace : nullptr);
        std::printf("%s,%.10g\n", block.id.c_str(), result.cycles_per_iteration);
        if (trace) {
            static const char* names[] = {"dispatch", "issue", "retire"};
            for (const auto& e : sim_trace.events)
                std::printf("# cycle=%lld %s instr=%d\n", static_cast<long long>(e.cycle),
                            names[static_cast<int>(e.kind)], e.instr);
        }
    }
    return 0;
}

int cmd_gen_simdata(const CommonArgs& common) {
    const KeyValueConfig config = resolve_config(common);
    const Dataset train = load_from_config(config, "measurements");
    const SamplingSpec sampling = sampling_from_config(config);
    const int multiplier = static_cast<int>(config.get_int("multiplier", 10));
    const int iterations = static_cast<int>(config.get_int("iterations", kDefaultIterations));
    Rng rng(derive_seed(static_cast<std::uint64_t>(config.get_int("seed", 0)), "simdata"));

    FreezeMask mask = FreezeMask::parse(config.freeze);
    std::optional<ParameterTable> defaults;
    if (!mask.empty()) defaults = load_table(require_key(config, "defaults_table"));

    OutOfOrderSimulator sim;
    const SimulatedDataset data = generate_simulated_dataset(
        sim, train, sampling, multiplier, rng, mask, defaults ? &*defaults : nullptr, iterations,
        static_cast<int>(config.get_int("threads", 0)));

    const std::string out = config.get_string("simdata", "simdata.bin");
    save_simdata(data, out);
    std::printf("wrote %zu triples (%lld unschedulable draws skipped) to %s\n", data.size(),
                static_cast<long long>(data.skipped_unschedulable), out.c_str());
    return 0;
}

int cmd_train_surrogate(const CommonArgs& common) {
    const KeyValueConfig config = resolve_config(common);
    const Dataset train = load_from_config(config, "measurements");
    const SimulatedDataset simdata = load_simdata(require_key(config, "simdata"));

    Dataset val_blocks;
    SimulatedDataset valdata;
    if (config.has("validation_simdata")) {
        valdata = load_simdata(require_key(config, "validation_simdata"));
        val_blocks = load_from_config(config, "validation_measurements");
    }

    SurrogateConfig sc;
    sc.embed_dim = static_cast<int>(config.get_int("embed_dim", 32));
    sc.hidden_dim = static_cast<int>(config.get_int("hidden_dim", 64));
    sc.depth = static_cast<int>(config.get_int("depth", 2));
    sc.ports = static_cast<int>(config.get_int("ports", kDefaultPorts));
    sc.register_count = static_cast<int>(config.get_int("register_count", kDefaultRegisterCount));
    sc.vocabulary = build_token_vocabulary(opcode_vocabulary(train), sc.register_count);
    const auto seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
    SurrogateModel model = SurrogateModel::init(std::move(sc), derive_seed(seed, "surrogate-init"));

    Rng rng(derive_seed(seed, "surrogate-train"));
    const SurrogateTrainResult result = train_surrogate(
        model, train, simdata, val_blocks, valdata,
        static_cast<int>(config.get_int("surrogate_epochs", 6)),
        static_cast<int>(config.get_int("batch", 256)), config.get_real("surrogate_lr", 0.001),
        rng, static_cast<int>(config.get_int("threads", 0)));

    const std::string prefix = config.get_string("weights", "surrogate");
    save_surrogate(model, prefix + ".weights", prefix + ".meta");
    write_curve(prefix + "_curve.csv", result.curve);
    if (!result.curve.empty())
        std::printf("trained %d passes; final train loss %.4f validation mape %.2f%%\n",
                    static_cast<int>(result.curve.size()), result.curve.back().train_loss,
                    100.0 * result.curve.back().validation_mape);
    std::printf("saved %s.weights / %s.meta\n", prefix.c_str(), prefix.c_str());
    return 0;
}

int cmd_optimize_table(const CommonArgs& common) {
    const KeyValueConfig config = resolve_config(common);
    const Dataset train = load_from_config(config, "measurements");
    const std::string prefix = config.get_string("weights", "surrogate");
    const SurrogateModel model = load_surrogate(prefix + ".weights", prefix + ".meta");
    const auto seed = static_cast<std::uint64_t>(config.get_int("seed", 0));

    FreezeMask mask = FreezeMask::parse(config.freeze);
    std::optional<ParameterTable> defaults;
    if (!mask.empty()) defaults = load_table(require_key(config, "defaults_table"));

    ParameterTable init;
    if (config.has("init_table")) {
        init = load_table(config.get_string("init_table", ""));
        validate_integer_form(init);
    } else {
        // The starting point is a draw from the sampling distributions.
        std::set<std::string> ops;
        for (const auto& [id, block] : train.blocks)
            for (const auto& instr : block.instructions) ops.insert(instr.opcode);
        Rng init_rng(derive_seed(seed, "table-init"));
        init = sample_parameter_table(sampling_from_config(config),
                                      {ops.begin(), ops.end()}, init_rng, mask,
                                      defaults ? &*defaults : nullptr);
    }

    Rng rng(derive_seed(seed, "table-optimize"));
    const SamplingSpec trust = sampling_from_config(config);
    const bool use_trust = config.get_int("trust_region", 1) != 0;
    const TableOptResult result = optimize_parameter_table(
        model, train, relax_table(init), mask,
        static_cast<int>(config.get_int("table_epochs", 1)), config.get_real("table_lr", 0.05),
        rng, static_cast<int>(config.get_int("threads", 0)), use_trust ? &trust : nullptr);

    const std::string out_dir = config.get_string("out_dir", ".");
    ensure_dir(out_dir);
    save_table(init, out_dir + "/initial_table.txt");
    save_table(result.table, out_dir + "/optimized_table.txt");
    write_curve(out_dir + "/table_curve.csv", result.curve);
    std::printf("surrogate-predicted mape: initial %.2f%% -> optimized %.2f%%\n",
                100.0 * result.initial_predicted_mape, 100.0 * result.final_predicted_mape);
    std::printf("wrote %s/initial_table.txt and %s/optimized_table.txt\n", out_dir.c_str(),
                out_dir.c_str());
    return 0;
}

int cmd_extract(const std::string& in_path, const std::string& out_path) {
    const ParameterTable extracted = extract_parameters(load_table(in_path));
    save_table(extracted, out_path);
    std::printf("extracted integer table written to %s\n", out_path.c_str());
    return 0;
}

int cmd_evaluate(const CommonArgs& common, bool verbose) {
    const KeyValueConfig config = resolve_config(common);
    const Dataset data = load_from_config(config, "measurements");
    const ParameterTable table = load_table(require_key(config, "table"));

    OutOfOrderSimulator sim;
    EvalReport report = evaluate(sim, table, data, config.get_string("predictor", "simulator"),
                                 config.get_string("dataset", "dataset"),
                                 static_cast<int>(config.get_int("iterations", kDefaultIterations)),
                                 static_cast<int>(config.get_int("threads", 0)));
    report.seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
    print_report(report, verbose);
    const std::string csv = config.get_string("report", "");
    if (!csv.empty()) append_report_row(csv, report);
    return 0;
}

int cmd_sweep(const CommonArgs& common, const std::string& parameter, int lo, int hi, int step) {
    const KeyValueConfig config = resolve_config(common);
    const Dataset data = load_from_config(config, "measurements");
    const ParameterTable table = load_table(require_key(config, "table"));
    if (lo > hi || step < 1) throw DataError("sweep needs lo <= hi and step >= 1");

    std::vector<int> values;
    for (int v = lo; v <= hi; v += step) values.push_back(v);
    OutOfOrderSimulator sim;
    const SweepResult result = sensitivity_sweep(
        sim, table, data, family_from_name(parameter), values,
        static_cast<int>(config.get_int("iterations", kDefaultIterations)),
        static_cast<int>(config.get_int("threads", 0)));

    const std::string out = config.get_string("sweep_out", "");
    std::ofstream csv;
    if (!out.empty()) {
        csv.open(out);
        if (!csv) throw DataError("cannot write sweep csv '" + out + "'");
        csv << "parameter,value,mape\n";
    }
    std::printf("parameter,value,mape\n");
    for (const auto& [value, err] : result.points) {
        std::printf("%s,%d,%.6f\n", result.parameter.c_str(), value, err);
        if (csv.is_open()) csv << result.parameter << ',' << value << ',' << err << '\n';
    }
    return 0;
}

int cmd_baseline_tune(const CommonArgs& common) {
    const KeyValueConfig config = resolve_config(common);
    const Dataset train = load_from_config(config, "measurements");
    Budget budget{config.get_int("budget", 0), 0};
    if (budget.total <= 0) throw DataError("config key 'budget' (block evaluations) is required");

    SearchSpace space;
    space.ports = static_cast<int>(config.get_int("ports", kDefaultPorts));
    OutOfOrderSimulator sim;
    const TuneResult result =
        tune(sim, train, space, budget, static_cast<std::uint64_t>(config.get_int("seed", 0)),
             static_cast<int>(config.get_int("subset", 512)),
             static_cast<int>(config.get_int("iterations", kDefaultIterations)),
             static_cast<int>(config.get_int("threads", 0)));

    const std::string out_dir = config.get_string("out_dir", ".");
    ensure_dir(out_dir);
    save_table(result.best, out_dir + "/tuned_table.txt");
    {
        std::ofstream csv(out_dir + "/tuner_iterations.csv");
        if (!csv) throw DataError("cannot write tuner csv");
        csv << "iteration,technique,candidate_mape,best_mape\n";
        for (const auto& row : result.log)
            csv << row.iteration << ',' << row.technique << ',' << row.candidate_mape << ','
                << row.best_mape << '\n';
    }
    std::printf("consumed %lld/%lld evaluations over %zu iterations%s\n",
                static_cast<long long>(budget.consumed), static_cast<long long>(budget.total),
                result.log.size(), result.truncated ? " (truncated)" : "");
    if (result.full_train_mape >= 0)
        std::printf("best training mape (full set): %.2f%%\n", 100.0 * result.full_train_mape);
    else
        std::printf("best subset mape: %.2f%%\n", 100.0 * result.best_mape);
    std::printf("wrote %s/tuned_table.txt\n", out_dir.c_str());
    return 0;
}

int cmd_recover(const CommonArgs& common) {
    const KeyValueConfig config = resolve_config(common);
    const std::string out_dir = config.get_string("out_dir", "recover-out");
    ensure_dir(out_dir);
    const auto data_seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
    const int seeds = static_cast<int>(config.get_int("seeds", 3));

    // One synthetic dataset; several independent learning runs over it.
    OutOfOrderSimulator sim;
    const SynthConfig synth = synth_from_config(config);
    const SamplingSpec sampling = sampling_from_config(config);
    RecoveryData recovery = generate_recovery_dataset(
        synth, sampling, sim, data_seed, static_cast<int>(config.get_int("threads", 0)));
    save_blocks_file(recovery.data, out_dir + "/blocks.txt");
    save_measurements_file(recovery.data, out_dir + "/measurements.txt");
    save_table(recovery.hidden_table, out_dir + "/hidden_table.txt");
    const DatasetSplit split = split_dataset(recovery.data, data_seed);

    PipelineConfig base = pipeline_from_config(config);
    std::vector<PipelineResult> runs;
    for (int run = 0; run < seeds; ++run) {
        PipelineConfig pc = base;
        pc.seed = data_seed + 1 + static_cast<std::uint64_t>(run);
        std::printf("[run %d/%d] seed %llu\n", run + 1, seeds,
                    static_cast<unsigned long long>(pc.seed));
        PipelineResult result = run_learning_pipeline(pc, split, sim);

        const std::string run_dir = out_dir + "/run" + std::to_string(run);
        ensure_dir(run_dir);
        save_table(result.learned, run_dir + "/learned_table.txt");
        save_table(result.initial, run_dir + "/initial_table.txt");
        save_surrogate(result.model, run_dir + "/surrogate.weights", run_dir + "/surrogate.meta");
        write_curve(run_dir + "/surrogate_curve.csv", result.surrogate_curve.curve);
        write_curve(run_dir + "/table_curve.csv", result.table_result.curve);
        append_report_row(out_dir + "/report.csv", result.test_report);
        append_report_row(out_dir + "/report.csv", result.random_report);

        std::printf(
            "  surrogate validation mape %.2f%%; test mape %.2f%% tau %.4f; random table %.2f%%\n",
            100.0 * result.surrogate_validation_mape, 100.0 * result.test_report.mape,
            result.test_report.kendall_tau, 100.0 * result.random_report.mape);
        runs.push_back(std::move(result));
    }

    auto mean_std = [&](auto&& get) {
        double mean = 0.0;
        for (const auto& r : runs) mean += get(r);
        mean /= static_cast<double>(runs.size());
        double var = 0.0;
        for (const auto& r : runs) var += (get(r) - mean) * (get(r) - mean);
        var = runs.size() > 1 ? var / static_cast<double>(runs.size() - 1) : 0.0;
        return std::pair<double, double>(mean, std::sqrt(var));
    };
    const auto [mape_mean, mape_std] =
        mean_std([](const PipelineResult& r) { return r.test_report.mape; });
    const auto [tau_mean, tau_std] =
        mean_std([](const PipelineResult& r) { return r.test_report.kendall_tau; });
    const auto [random_mean, random_std] =
        mean_std([](const PipelineResult& r) { return r.random_report.mape; });

    std::ofstream summary(out_dir + "/summary.txt");
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "runs %d\n"
                  "test mape %.2f%% +/- %.2f%%\n"
                  "test kendall tau %.4f +/- %.4f\n"
                  "random-table mape %.2f%% +/- %.2f%%\n"
                  "simulator calls per run %lld\n",
                  seeds, 100.0 * mape_mean, 100.0 * mape_std, tau_mean, tau_std,
                  100.0 * random_mean, 100.0 * random_std,
                  static_cast<long long>(runs.front().simulator_calls));
    summary << buf;
    std::printf("%s", buf);
    std::printf("artifacts under %s\n", out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parameterized basic-block simulator with surrogate-based parameter learning"};
    app.require_subcommand(1);

    CommonArgs gen_data_args;
    add_common(app.add_subcommand("gen-data", "generate a synthetic dataset from a hidden table"),
               gen_data_args);
    CommonArgs split_args;
    add_common(app.add_subcommand("split", "split measurements 80/10/10"), split_args);

    CommonArgs simulate_args;
    std::string simulate_block_id;
    bool simulate_trace = false;
    {
        auto* cmd = app.add_subcommand("simulate", "predict timings for blocks");
        add_common(cmd, simulate_args);
        cmd->add_option("--block-id", simulate_block_id, "only this block");
        cmd->add_flag("--trace", simulate_trace, "emit per-cycle dispatch/issue/retire events");
    }

    CommonArgs gen_simdata_args;
    add_common(app.add_subcommand("gen-simdata", "label random tables with the simulator"),
               gen_simdata_args);
    CommonArgs train_args;
    add_common(app.add_subcommand("train-surrogate", "fit the sequence model to simulated data"),
               train_args);
    CommonArgs optimize_args;
    add_common(app.add_subcommand("optimize-table", "learn a table through the frozen surrogate"),
               optimize_args);

    std::string extract_in, extract_out;
    {
        auto* cmd = app.add_subcommand("extract", "round a continuous table to integers");
        cmd->add_option("--in", extract_in, "continuous table")->required();
        cmd->add_option("--out", extract_out, "output table")->required();
    }

    CommonArgs evaluate_args;
    bool evaluate_verbose = false;
    {
        auto* cmd = app.add_subcommand("evaluate", "score a table against measurements");
        add_common(cmd, evaluate_args);
        cmd->add_flag("--verbose", evaluate_verbose, "also report tie-adjusted tau");
    }

    CommonArgs sweep_args;
    std::string sweep_parameter = "dispatch_width";
    int sweep_lo = 1, sweep_hi = 10, sweep_step = 1;
    {
        auto* cmd = app.add_subcommand("sweep", "error as a function of one global parameter");
        add_common(cmd, sweep_args);
        cmd->add_option("--param", sweep_parameter, "dispatch_width or reorder_buffer_size");
        cmd->add_option("--lo", sweep_lo, "first value");
        cmd->add_option("--hi", sweep_hi, "last value");
        cmd->add_option("--step", sweep_step, "stride");
    }

    CommonArgs tune_args;
    add_common(app.add_subcommand("baseline-tune", "black-box search under an evaluation budget"),
               tune_args);
    CommonArgs recover_args;
    add_common(app.add_subcommand("recover", "end-to-end parameter recovery experiment"),
               recover_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand("gen-data")) return cmd_gen_data(gen_data_args);
        if (app.got_subcommand("split")) return cmd_split(split_args);
        if (app.got_subcommand("simulate"))
            return cmd_simulate(simulate_args, simulate_block_id, simulate_trace);
        if (app.got_subcommand("gen-simdata")) return cmd_gen_simdata(gen_simdata_args);
        if (app.got_subcommand("train-surrogate")) return cmd_train_surrogate(train_args);
        if (app.got_subcommand("optimize-table")) return cmd_optimize_table(optimize_args);
        if (app.got_subcommand("extract")) return cmd_extract(extract_in, extract_out);
        if (app.got_subcommand("evaluate")) return cmd_evaluate(evaluate_args, evaluate_verbose);
        if (app.got_subcommand("sweep"))
            return cmd_sweep(sweep_args, sweep_parameter, sweep_lo, sweep_hi, sweep_step);
        if (app.got_subcommand("baseline-tune")) return cmd_baseline_tune(tune_args);
        if (app.got_subcommand("recover")) return cmd_recover(recover_args);
    } catch (const NumericsError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
