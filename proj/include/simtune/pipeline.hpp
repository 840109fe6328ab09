#pragma once

#include <cstdint>
#include <optional>

#include "simtune/dataset.hpp"
#include "simtune/metrics.hpp"
#include "simtune/sampling.hpp"
#include "simtune/simdata.hpp"
#include "simtune/simulator.hpp"
#include "simtune/surrogate.hpp"
#include "simtune/training.hpp"

namespace simtune {

/// Everything one learning run needs. The seed drives table sampling, model
/// initialization and batch shuffling; the dataset split is provided by the
/// caller so several runs can share it.
struct PipelineConfig {
    std::uint64_t seed = 0;
    int register_count = kDefaultRegisterCount;
    int iterations = kDefaultIterations;
    int threads = 0;

    SamplingSpec sampling;
    int multiplier = 10;
    int validation_multiplier = 1;

    int embed_dim = 32;
    int hidden_dim = 64;
    int depth = 2;
    int surrogate_passes = 6;
    int batch_size = 256;
    double surrogate_lr = 0.001;

    int table_epochs = 1;
    double table_lr = 0.05;
    // Keep the table inside the ranges the surrogate was trained on.
    bool trust_region = true;

    FreezeMask mask;
    std::optional<ParameterTable> freeze_defaults;  // required when mask is non-empty
};

struct PipelineResult {
    ParameterTable initial;  // the random integer starting table
    ParameterTable learned;  // after optimization and extraction
    SurrogateModel model;

    SurrogateTrainResult surrogate_curve;
    double surrogate_validation_mape = 0.0;  // on held-out simulated triples
    TableOptResult table_result;

    EvalReport test_report;    // learned table against held-out measurements
    EvalReport random_report;  // fresh random table, same evaluation

    std::int64_t simulator_calls = 0;  // spent labeling the simulated dataset
    std::int64_t skipped_unschedulable = 0;
};

/// The full loop: sample tables and label a simulated dataset with the
/// simulator, fit the surrogate to it, optimize a relaxed random table
/// through the frozen surrogate against the training measurements, extract
/// integers and evaluate on the test split. Any stage failure is rethrown
/// with a stage tag.
PipelineResult run_learning_pipeline(const PipelineConfig& config, const DatasetSplit& split,
                                     const BlockSimulator& sim);

}  // namespace simtune
