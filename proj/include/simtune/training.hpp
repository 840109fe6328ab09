#pragma once

#include <vector>

#include "simtune/dataset.hpp"
#include "simtune/params.hpp"
#include "simtune/rng.hpp"
#include "simtune/sampling.hpp"
#include "simtune/simdata.hpp"
#include "simtune/surrogate.hpp"

namespace simtune {

struct TrainCurvePoint {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_mape = 0.0;
};

struct SurrogateTrainResult {
    std::vector<TrainCurvePoint> curve;
};

/// Minimizes the mean percentage error of the model against the simulated
/// labels with Adam (batched, shuffled each pass). `passes` full loops over
/// `train`; validation error is computed after each pass. Throws
/// NumericsError if the loss stops being finite. Deterministic given the rng
/// state and thread count.
SurrogateTrainResult train_surrogate(SurrogateModel& model, const Dataset& blocks,
                                     const SimulatedDataset& train,
                                     const Dataset& validation_blocks,
                                     const SimulatedDataset& validation, int passes,
                                     int batch_size, double lr, Rng& rng, int threads = 0);

/// Mean |f_hat - label| / label of the model over simulator-labeled triples.
double surrogate_mape_on_triples(const SurrogateModel& model, const Dataset& blocks,
                                 const SimulatedDataset& triples, int threads = 0);

/// Mean |f_hat - y| / y of the model with a continuous table against measured
/// timings.
double predicted_mape(const SurrogateModel& model, const Dataset& data,
                      const ParameterTable& continuous_table, int threads = 0);

/// Integer table -> continuous starting point: value minus the family's lower
/// bound (the inverse of extraction for in-range values).
ParameterTable relax_table(const ParameterTable& integer_table);

/// Continuous table -> integers: round(|value|) + lower bound, rounding
/// half away from zero. The result satisfies the integer-form invariants.
ParameterTable extract_parameters(const ParameterTable& continuous_table);

struct TableOptResult {
    ParameterTable table;  // optimized, still continuous
    std::vector<TrainCurvePoint> curve;
    double initial_predicted_mape = 0.0;
    double final_predicted_mape = 0.0;
};

/// Optimizes the continuous table through the frozen surrogate against
/// measured timings (the model weights are never updated). Entries covered by
/// `mask` keep their initial bits. The simulator is never invoked here.
///
/// With `trust_region` set, each step projects |value| back into the given
/// sampling ranges (shifted by the lower bound): the surrogate has only seen
/// tables drawn from those ranges and extrapolates poorly outside them, so an
/// unconstrained search can reach settings the surrogate scores well but the
/// simulator does not.
TableOptResult optimize_parameter_table(const SurrogateModel& model, const Dataset& train,
                                        const ParameterTable& init_continuous,
                                        const FreezeMask& mask, int epochs, double lr, Rng& rng,
                                        int threads = 0,
                                        const SamplingSpec* trust_region = nullptr,
                                        int batch_size = 256);

}  // namespace simtune
