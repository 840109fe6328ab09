#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simtune/dataset.hpp"
#include "simtune/params.hpp"
#include "simtune/simulator.hpp"

namespace simtune {

/// Mean absolute percentage error: (1/n) * sum |p - a| / a. May exceed 1.
/// Requires equal lengths and positive actuals.
double mape(const std::vector<double>& predictions, const std::vector<double>& actuals);

/// Kendall's tau-a over all pairs: (concordant - discordant) / (n(n-1)/2),
/// ties counting as neither. O(n log n) via merge-sort inversion counting.
double kendall_tau(const std::vector<double>& predictions, const std::vector<double>& actuals);

/// Tie-adjusted tau-b, reported alongside tau-a in verbose output.
double kendall_tau_b(const std::vector<double>& predictions, const std::vector<double>& actuals);

struct EvalReport {
    std::string predictor;
    std::string dataset;
    int count = 0;
    double mape = 0.0;
    double kendall_tau = 0.0;
    double kendall_tau_b = 0.0;
    std::uint64_t seed = 0;
};

/// Simulates every measured block and scores both metrics. Simulator errors
/// are surfaced with the offending block id.
EvalReport evaluate(const BlockSimulator& sim, const ParameterTable& table, const Dataset& data,
                    std::string predictor = "simulator", std::string dataset_name = "dataset",
                    int iterations = kDefaultIterations, int threads = 0);

struct SweepResult {
    std::string parameter;
    std::vector<std::pair<int, double>> points;  // (value, mape), values strictly increasing
};

/// MAPE as a function of one global parameter (dispatch_width or
/// reorder_buffer_size) with everything else held fixed. Values must be
/// strictly increasing and at or above the parameter's lower bound.
SweepResult sensitivity_sweep(const BlockSimulator& sim, const ParameterTable& table,
                              const Dataset& data, ParamFamily parameter,
                              const std::vector<int>& values,
                              int iterations = kDefaultIterations, int threads = 0);

}  // namespace simtune
