#include "simtune/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "simtune/errors.hpp"

namespace simtune {

double mape(const std::vector<double>& predictions, const std::vector<double>& actuals) {
    if (predictions.size() != actuals.size()) throw DataError("mape: length mismatch");
    if (predictions.empty()) throw DataError("mape: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (!(actuals[i] > 0.0)) throw DataError("mape: non-positive actual value");
        total += std::fabs(predictions[i] - actuals[i]) / actuals[i];
    }
    return total / static_cast<double>(predictions.size());
}

namespace {

// Pairs with i < j in the sorted-by-(p, a) order and a[i] > a[j]; after the
// sort these are exactly the discordant pairs.
std::int64_t count_inversions(std::vector<double>& values, std::vector<double>& scratch,
                              std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t count = count_inversions(values, scratch, lo, mid) +
                         count_inversions(values, scratch, mid, hi);
    std::size_t a = lo, b = mid, out = lo;
    while (a < mid && b < hi) {
        if (values[b] < values[a]) {
            count += static_cast<std::int64_t>(mid - a);
            scratch[out++] = values[b++];
        } else {
            scratch[out++] = values[a++];
        }
    }
    while (a < mid) scratch[out++] = values[a++];
    while (b < hi) scratch[out++] = values[b++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
              scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              values.begin() + static_cast<std::ptrdiff_t>(lo));
    return count;
}

std::int64_t tie_pairs(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::int64_t pairs = 0;
    std::size_t i = 0;
    while (i < values.size()) {
        std::size_t j = i;
        while (j < values.size() && values[j] == values[i]) ++j;
        const auto run = static_cast<std::int64_t>(j - i);
        pairs += run * (run - 1) / 2;
        i = j;
    }
    return pairs;
}

struct TauCounts {
    std::int64_t total = 0;       // n(n-1)/2
    std::int64_t ties_p = 0;      // tied in predictions
    std::int64_t ties_a = 0;      // tied in actuals
    std::int64_t discordant = 0;
    std::int64_t concordant = 0;
};

TauCounts tau_counts(const std::vector<double>& predictions, const std::vector<double>& actuals) {
    if (predictions.size() != actuals.size()) throw DataError("kendall_tau: length mismatch");
    if (predictions.size() < 2) throw DataError("kendall_tau: need at least two points");
    const std::size_t n = predictions.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (predictions[x] != predictions[y]) return predictions[x] < predictions[y];
        return actuals[x] < actuals[y];
    });

    TauCounts counts;
    counts.total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
    counts.ties_p = tie_pairs(predictions);
    counts.ties_a = tie_pairs(actuals);

    std::int64_t ties_both = 0;
    {
        std::vector<std::pair<double, double>> sorted(n);
        for (std::size_t i = 0; i < n; ++i) sorted[i] = {predictions[order[i]], actuals[order[i]]};
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j < n && sorted[j] == sorted[i]) ++j;
            const auto run = static_cast<std::int64_t>(j - i);
            ties_both += run * (run - 1) / 2;
            i = j;
        }
    }

    std::vector<double> seq(n), scratch(n);
    for (std::size_t i = 0; i < n; ++i) seq[i] = actuals[order[i]];
    counts.discordant = count_inversions(seq, scratch, 0, n);
    counts.concordant =
        counts.total - counts.ties_p - counts.ties_a + ties_both - counts.discordant;
    return counts;
}

}  // namespace

double kendall_tau(const std::vector<double>& predictions, const std::vector<double>& actuals) {
    const TauCounts c = tau_counts(predictions, actuals);
    return static_cast<double>(c.concordant - c.discordant) / static_cast<double>(c.total);
}

double kendall_tau_b(const std::vector<double>& predictions, const std::vector<double>& actuals) {
    const TauCounts c = tau_counts(predictions, actuals);
    const double denom = std::sqrt(static_cast<double>(c.total - c.ties_p)) *
                         std::sqrt(static_cast<double>(c.total - c.ties_a));
    if (denom == 0.0) return 0.0;  // a constant sequence carries no ranking information
    return static_cast<double>(c.concordant - c.discordant) / denom;
}

EvalReport evaluate(const BlockSimulator& sim, const ParameterTable& table, const Dataset& data,
                    std::string predictor, std::string dataset_name, int iterations, int threads) {
    if (data.measurements.empty()) throw DataError("evaluate: dataset has no measurements");
    const std::size_t n = data.size();
    std::vector<double> predictions(n, 0.0), actuals(n, 0.0);

    std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) \
    num_threads(threads > 0 ? threads : omp_get_max_threads())
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        try {
            const Measurement& m = data.measurements[static_cast<std::size_t>(i)];
            try {
                predictions[static_cast<std::size_t>(i)] =
                    sim.run(table, data.block(m.block_id), iterations, nullptr)
                        .cycles_per_iteration;
            } catch (const SimError& e) {
                throw SimError("block '" + m.block_id + "': " + e.what());
            }
            actuals[static_cast<std::size_t>(i)] = m.timing;
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    EvalReport report;
    report.predictor = std::move(predictor);
    report.dataset = std::move(dataset_name);
    report.count = static_cast<int>(n);
    report.mape = mape(predictions, actuals);
    if (n >= 2) {
        report.kendall_tau = kendall_tau(predictions, actuals);
        report.kendall_tau_b = kendall_tau_b(predictions, actuals);
    } else {
        report.kendall_tau = 1.0;
        report.kendall_tau_b = 1.0;
    }
    return report;
}

SweepResult sensitivity_sweep(const BlockSimulator& sim, const ParameterTable& table,
                              const Dataset& data, ParamFamily parameter,
                              const std::vector<int>& values, int iterations, int threads) {
    if (parameter != ParamFamily::DispatchWidth && parameter != ParamFamily::ReorderBufferSize)
        throw DataError("sensitivity_sweep supports only the global parameters");
    if (values.empty()) throw DataError("sensitivity_sweep: empty value range");
    const int lower = param_spec(parameter, table.ports).lower_bound;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < lower)
            throw DataError("sweep value " + std::to_string(values[i]) + " is below the bound " +
                            std::to_string(lower));
        if (i > 0 && values[i] <= values[i - 1])
            throw DataError("sweep values must be strictly increasing");
    }

    SweepResult result;
    result.parameter = family_name(parameter);
    for (int value : values) {
        ParameterTable probe = table;
        (parameter == ParamFamily::DispatchWidth ? probe.dispatch_width
                                                 : probe.reorder_buffer_size) = value;
        result.points.emplace_back(
            value, evaluate(sim, probe, data, "sweep", "sweep", iterations, threads).mape);
    }
    return result;
}

}  // namespace simtune
