#include "simtune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "simtune/errors.hpp"

namespace simtune {

double evaluate_candidate(const BlockSimulator& sim, const ParameterTable& table,
                          const Dataset& subset, Budget& budget, int iterations, int threads) {
    const auto cost = static_cast<std::int64_t>(subset.size());
    if (cost == 0) throw DataError("evaluate_candidate: empty subset");
    if (budget.remaining() < cost)
        throw DataError("insufficient budget: need " + std::to_string(cost) + ", have " +
                        std::to_string(budget.remaining()));
    budget.consumed += cost;

    std::vector<double> errors(subset.size(), 0.0);
    std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) \
    num_threads(threads > 0 ? threads : omp_get_max_threads())
#endif
    for (std::int64_t i = 0; i < cost; ++i) {
        try {
            const Measurement& m = subset.measurements[static_cast<std::size_t>(i)];
            const double predicted =
                sim.run(table, subset.block(m.block_id), iterations, nullptr).cycles_per_iteration;
            errors[static_cast<std::size_t>(i)] = std::fabs(predicted - m.timing) / m.timing;
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    double total = 0.0;
    for (double e : errors) total += e;
    return total / static_cast<double>(cost);
}

namespace {

// Flat view of every tunable entry with its range.
struct EntryRef {
    double* value;
    SamplingRange range;
};

std::vector<EntryRef> entries(ParameterTable& table, const SearchSpace& space) {
    std::vector<EntryRef> out;
    out.push_back({&table.dispatch_width, space.dispatch_width});
    out.push_back({&table.reorder_buffer_size, space.reorder_buffer_size});
    for (auto& [op, row] : table.rows) {
        out.push_back({&row.num_micro_ops, space.num_micro_ops});
        out.push_back({&row.write_latency, space.write_latency});
        for (auto& ra : row.read_advance) out.push_back({&ra, space.read_advance});
        for (auto& p : row.port_map) out.push_back({&p, space.port_map});
    }
    return out;
}

void clamp_into_space(ParameterTable& table, const SearchSpace& space) {
    for (auto& e : entries(table, space))
        *e.value = std::clamp(*e.value, static_cast<double>(e.range.lo),
                              static_cast<double>(e.range.hi));
}

void mutate_entries(ParameterTable& table, const SearchSpace& space, int count, Rng& rng) {
    auto refs = entries(table, space);
    for (int i = 0; i < count; ++i) {
        auto& e = refs[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(refs.size()) - 1))];
        *e.value = static_cast<double>(rng.uniform_int(e.range.lo, e.range.hi));
    }
}

ParameterTable uniform_candidate(const ParameterTable& shape, const SearchSpace& space, Rng& rng) {
    ParameterTable out = shape;
    for (auto& e : entries(out, space))
        *e.value = static_cast<double>(rng.uniform_int(e.range.lo, e.range.hi));
    return out;
}

Dataset pick_subset(const Dataset& train, std::size_t size, Rng& rng) {
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    Dataset subset;
    for (std::size_t i = 0; i < std::min(size, order.size()); ++i) {
        const Measurement& m = train.measurements[order[i]];
        subset.measurements.push_back(m);
        subset.blocks.emplace(m.block_id, train.block(m.block_id));
    }
    return subset;
}

}  // namespace

TuneResult tune(const BlockSimulator& sim, const Dataset& train, const SearchSpace& space,
                Budget& budget, std::uint64_t seed, int subset_size, int iterations, int threads) {
    if (train.measurements.empty()) throw DataError("tune: empty training set");
    if (budget.remaining() < static_cast<std::int64_t>(train.size()))
        throw DataError("tune: budget below one full-dataset evaluation");

    Rng rng(derive_seed(seed, "baseline-tuner"));
    const Dataset subset =
        pick_subset(train, static_cast<std::size_t>(std::max(1, subset_size)), rng);
    const auto subset_cost = static_cast<std::int64_t>(subset.size());
    const auto full_cost = static_cast<std::int64_t>(train.size());

    // Start from a sampling-distribution draw, clamped into the search box.
    SamplingSpec sampling;
    sampling.ports = space.ports;
    ParameterTable initial = sample_parameter_table(sampling, opcode_vocabulary(train), rng);
    clamp_into_space(initial, space);

    TuneResult result;
    result.best = initial;
    result.best_mape = evaluate_candidate(sim, initial, subset, budget, iterations, threads);

    // Simulated-annealing state and schedule.
    ParameterTable anneal_state = initial;
    double anneal_mape = result.best_mape;
    const double initial_temperature = std::max(result.best_mape, 1e-3);

    const char* technique_names[3] = {"uniform", "hillclimb", "anneal"};
    double reward_sum[3] = {0, 0, 0};
    std::int64_t pulls[3] = {0, 0, 0};
    std::int64_t total_pulls = 0;

    auto pick_arm = [&]() {
        for (int arm = 0; arm < 3; ++arm)
            if (pulls[arm] == 0) return arm;
        int best_arm = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int arm = 0; arm < 3; ++arm) {
            const double mean = reward_sum[arm] / static_cast<double>(pulls[arm]);
            const double bonus = std::sqrt(2.0 * std::log(static_cast<double>(total_pulls)) /
                                           static_cast<double>(pulls[arm]));
            if (mean + bonus > best_score) {
                best_score = mean + bonus;
                best_arm = arm;
            }
        }
        return best_arm;
    };

    int iteration = 0;
    while (budget.remaining() >= subset_cost + full_cost) {
        const int arm = pick_arm();
        const double progress =
            static_cast<double>(budget.consumed) / static_cast<double>(std::max<std::int64_t>(1, budget.total));
        ParameterTable candidate;
        if (arm == 0) {
            candidate = uniform_candidate(result.best, space, rng);
        } else if (arm == 1) {
            candidate = result.best;
            mutate_entries(candidate, space, 1, rng);
        } else {
            candidate = anneal_state;
            const int distance = std::max(1, static_cast<int>(std::lround((1.0 - progress) * 4.0)));
            mutate_entries(candidate, space, distance, rng);
        }

        const double candidate_mape =
            evaluate_candidate(sim, candidate, subset, budget, iterations, threads);

        if (arm == 2) {
            const double temperature = std::max(1e-9, initial_temperature * (1.0 - progress));
            const bool accept = candidate_mape < anneal_mape ||
                                rng.uniform_real() <
                                    std::exp((anneal_mape - candidate_mape) / temperature);
            if (accept) {
                anneal_state = candidate;
                anneal_mape = candidate_mape;
            }
        }

        const bool improved = candidate_mape < result.best_mape;
        if (improved) {
            result.best = candidate;
            result.best_mape = candidate_mape;
        }
        reward_sum[arm] += improved ? 1.0 : 0.0;
        ++pulls[arm];
        ++total_pulls;
        result.log.push_back({++iteration, technique_names[arm], candidate_mape, result.best_mape});
    }

    if (budget.remaining() >= full_cost) {
        Dataset full = train;
        result.full_train_mape = evaluate_candidate(sim, result.best, full, budget, iterations, threads);
    } else {
        result.truncated = true;
    }
    return result;
}

}  // namespace simtune
