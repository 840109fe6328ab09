#include "simtune/pipeline.hpp"

#include <set>

#include "simtune/errors.hpp"

namespace simtune {

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        throw ParseError(std::string("stage ") + name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string("stage ") + name + ": " + e.what());
    } catch (const SimError& e) {
        throw SimError(std::string("stage ") + name + ": " + e.what());
    } catch (const NumericsError& e) {
        throw NumericsError(std::string("stage ") + name + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
    }
}

std::vector<std::string> full_vocabulary(const DatasetSplit& split) {
    std::set<std::string> opcodes;
    for (const Dataset* d : {&split.train, &split.validation, &split.test})
        for (const auto& op : opcode_vocabulary(*d)) opcodes.insert(op);
    return {opcodes.begin(), opcodes.end()};
}

}  // namespace

PipelineResult run_learning_pipeline(const PipelineConfig& config, const DatasetSplit& split,
                                     const BlockSimulator& sim) {
    if (!config.mask.empty() && !config.freeze_defaults)
        throw DataError("freeze mask given without a defaults table");

    PipelineResult result;
    Rng rng(derive_seed(config.seed, "pipeline"));
    const std::vector<std::string> vocabulary = full_vocabulary(split);
    const ParameterTable* defaults =
        config.freeze_defaults ? &*config.freeze_defaults : nullptr;
    CountingSimulator counted(sim);

    // Simulated datasets: training triples from the training blocks, held-out
    // triples from the validation blocks.
    Rng simdata_rng = rng.fork("simdata");
    SimulatedDataset simdata = stage("generate-simulated-dataset", [&] {
        return generate_simulated_dataset(counted, split.train, config.sampling, config.multiplier,
                                          simdata_rng, config.mask, defaults, config.iterations,
                                          config.threads);
    });
    Rng valdata_rng = rng.fork("validation-simdata");
    SimulatedDataset valdata = stage("generate-validation-triples", [&] {
        return generate_simulated_dataset(counted, split.validation, config.sampling,
                                          config.validation_multiplier, valdata_rng, config.mask,
                                          defaults, config.iterations, config.threads);
    });
    result.skipped_unschedulable = simdata.skipped_unschedulable + valdata.skipped_unschedulable;

    // Surrogate.
    result.model = stage("init-surrogate", [&] {
        SurrogateConfig sc;
        sc.embed_dim = config.embed_dim;
        sc.hidden_dim = config.hidden_dim;
        sc.depth = config.depth;
        sc.ports = config.sampling.ports;
        sc.register_count = config.register_count;
        sc.vocabulary = build_token_vocabulary(vocabulary, config.register_count);
        return SurrogateModel::init(std::move(sc), derive_seed(config.seed, "surrogate-init"));
    });
    Rng train_rng = rng.fork("surrogate-train");
    result.surrogate_curve = stage("train-surrogate", [&] {
        return train_surrogate(result.model, split.train, simdata, split.validation, valdata,
                               config.surrogate_passes, config.batch_size, config.surrogate_lr,
                               train_rng, config.threads);
    });
    result.surrogate_validation_mape = stage("validate-surrogate", [&] {
        return surrogate_mape_on_triples(result.model, split.validation, valdata, config.threads);
    });

    // Table optimization through the frozen surrogate; the simulator is not
    // touched from here until evaluation.
    Rng init_rng = rng.fork("table-init");
    result.initial = stage("sample-initial-table", [&] {
        return sample_parameter_table(config.sampling, vocabulary, init_rng, config.mask, defaults);
    });
    Rng opt_rng = rng.fork("table-optimize");
    result.table_result = stage("optimize-table", [&] {
        return optimize_parameter_table(result.model, split.train, relax_table(result.initial),
                                        config.mask, config.table_epochs, config.table_lr, opt_rng,
                                        config.threads,
                                        config.trust_region ? &config.sampling : nullptr);
    });
    result.learned = stage("extract-parameters",
                           [&] { return extract_parameters(result.table_result.table); });

    // Evaluation on the held-out measurements, plus the random-table baseline.
    result.test_report = stage("evaluate-test", [&] {
        EvalReport report = evaluate(sim, result.learned, split.test, "learned", "test",
                                     config.iterations, config.threads);
        report.seed = config.seed;
        return report;
    });
    Rng baseline_rng = rng.fork("random-baseline");
    result.random_report = stage("evaluate-random-baseline", [&] {
        const ParameterTable random_table = sample_parameter_table(
            config.sampling, vocabulary, baseline_rng, config.mask, defaults);
        EvalReport report = evaluate(sim, random_table, split.test, "random", "test",
                                     config.iterations, config.threads);
        report.seed = config.seed;
        return report;
    });

    result.simulator_calls = counted.calls();
    return result;
}

}  // namespace simtune
