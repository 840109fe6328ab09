#include "simtune/training.hpp"

#include <cmath>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "simtune/adam.hpp"
#include "simtune/errors.hpp"
#include "simtune/graph.hpp"

namespace simtune {

namespace {

int worker_count(int threads) {
#ifdef _OPENMP
    return threads > 0 ? threads : omp_get_max_threads();
#else
    (void)threads;
    return 1;
#endif
}

/// Runs fn(example_index, local_grads) over [0, count) split into contiguous
/// per-thread ranges, sums the per-thread gradient stores in thread order and
/// returns the summed loss. Deterministic for a fixed thread count.
template <typename Fn>
double sharded_batch(std::size_t count, int threads, const NamedTensors& grad_shape,
                     NamedTensors& grad_out, Fn&& fn) {
    const int workers = std::min<int>(worker_count(threads), static_cast<int>(count));
    std::vector<NamedTensors> local(static_cast<std::size_t>(workers));
    std::vector<double> losses(static_cast<std::size_t>(workers), 0.0);
    std::exception_ptr failure;

#ifdef _OPENMP
#pragma omp parallel num_threads(workers)
#endif
    {
#ifdef _OPENMP
        const int w = omp_get_thread_num();
#else
        const int w = 0;
#endif
        try {
            NamedTensors& grads = local[static_cast<std::size_t>(w)];
            grads = zeros_like(grad_shape);
            const std::size_t begin = count * static_cast<std::size_t>(w) / static_cast<std::size_t>(workers);
            const std::size_t end = count * (static_cast<std::size_t>(w) + 1) / static_cast<std::size_t>(workers);
            double loss = 0.0;
            for (std::size_t i = begin; i < end; ++i) loss += fn(i, grads);
            losses[static_cast<std::size_t>(w)] = loss;
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    double total = 0.0;
    for (int w = 0; w < workers; ++w) {
        total += losses[static_cast<std::size_t>(w)];
        accumulate(grad_out, local[static_cast<std::size_t>(w)]);
    }
    return total;
}

template <typename Fn>
double parallel_mean(std::size_t count, int threads, Fn&& fn) {
    if (count == 0) throw DataError("cannot average over an empty set");
    std::vector<double> values(count, 0.0);
    std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count(threads))
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
        try {
            values[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(count);
}

std::vector<std::vector<double>> triple_features(const SimTriple& t, const BasicBlock& block,
                                                 const SurrogateConfig& config) {
    std::vector<std::vector<double>> features;
    features.reserve(block.instructions.size());
    for (const auto& instr : block.instructions)
        features.push_back(training_features(t.table, instr.opcode, config));
    return features;
}

void scale_tensors(NamedTensors& tensors, double factor) {
    for (auto& [name, tensor] : tensors)
        for (auto& v : tensor.data) v *= factor;
}

}  // namespace

SurrogateTrainResult train_surrogate(SurrogateModel& model, const Dataset& blocks,
                                     const SimulatedDataset& train,
                                     const Dataset& validation_blocks,
                                     const SimulatedDataset& validation, int passes,
                                     int batch_size, double lr, Rng& rng, int threads) {
    if (train.triples.empty()) throw DataError("surrogate training needs a non-empty dataset");
    if (batch_size < 1) throw DataError("batch size must be >= 1");
    if (passes < 0) throw DataError("passes must be >= 0");

    SurrogateTrainResult result;
    AdamState adam;
    adam.config.lr = lr;

    std::vector<std::size_t> order(train.triples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int pass = 0; pass < passes; ++pass) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
            NamedTensors grads = zeros_like(model.weights);
            const double batch_loss = sharded_batch(
                stop - start, threads, model.weights, grads,
                [&](std::size_t offset, NamedTensors& local) {
                    const SimTriple& t = train.triples[order[start + offset]];
                    const BasicBlock& block = blocks.block(t.block_id);
                    Graph g;
                    BoundModel bound = bind_model(g, model, &local);
                    const int pred = predict_with_features(g, model, bound, block,
                                                           triple_features(t, block, model.config));
                    const int loss = percentage_loss(g, pred, t.timing);
                    g.backward(loss);
                    return g.value(loss)[0];
                });
            const double n = static_cast<double>(stop - start);
            if (!std::isfinite(batch_loss))
                throw NumericsError("surrogate training diverged (non-finite loss)");
            scale_tensors(grads, 1.0 / n);
            adam_step(adam, model.weights, grads);
            epoch_loss += batch_loss;
            seen += stop - start;
        }
        TrainCurvePoint point;
        point.epoch = pass + 1;
        point.train_loss = epoch_loss / static_cast<double>(seen);
        point.validation_mape =
            validation.triples.empty()
                ? 0.0
                : surrogate_mape_on_triples(model, validation_blocks, validation, threads);
        if (!std::isfinite(point.validation_mape))
            throw NumericsError("surrogate training diverged (non-finite validation error)");
        result.curve.push_back(point);
    }
    return result;
}

double surrogate_mape_on_triples(const SurrogateModel& model, const Dataset& blocks,
                                 const SimulatedDataset& triples, int threads) {
    return parallel_mean(triples.size(), threads, [&](std::size_t i) {
        const SimTriple& t = triples.triples[i];
        return percentage_loss(surrogate_predict(model, t.table, blocks.block(t.block_id)),
                               t.timing);
    });
}

double predicted_mape(const SurrogateModel& model, const Dataset& data,
                      const ParameterTable& continuous_table, int threads) {
    return parallel_mean(data.size(), threads, [&](std::size_t i) {
        const Measurement& m = data.measurements[i];
        return percentage_loss(
            surrogate_predict_continuous(model, continuous_table, data.block(m.block_id)),
            m.timing);
    });
}

ParameterTable relax_table(const ParameterTable& integer_table) {
    validate_integer_form(integer_table);
    const int ports = integer_table.ports;
    ParameterTable out = integer_table;
    out.form = TableForm::Continuous;
    out.dispatch_width -= param_spec(ParamFamily::DispatchWidth, ports).lower_bound;
    out.reorder_buffer_size -= param_spec(ParamFamily::ReorderBufferSize, ports).lower_bound;
    for (auto& [op, row] : out.rows) {
        row.num_micro_ops -= param_spec(ParamFamily::NumMicroOps, ports).lower_bound;
        row.write_latency -= param_spec(ParamFamily::WriteLatency, ports).lower_bound;
        for (auto& ra : row.read_advance)
            ra -= param_spec(ParamFamily::ReadAdvance, ports).lower_bound;
        for (auto& p : row.port_map) p -= param_spec(ParamFamily::PortMap, ports).lower_bound;
    }
    return out;
}

namespace {

double extract_value(double v, int lower_bound) {
    return std::round(std::fabs(v)) + lower_bound;  // std::round is half-away-from-zero
}

}  // namespace

ParameterTable extract_parameters(const ParameterTable& continuous_table) {
    const int ports = continuous_table.ports;
    ParameterTable out = continuous_table;
    out.form = TableForm::Integer;
    out.dispatch_width =
        extract_value(out.dispatch_width, param_spec(ParamFamily::DispatchWidth, ports).lower_bound);
    out.reorder_buffer_size = extract_value(
        out.reorder_buffer_size, param_spec(ParamFamily::ReorderBufferSize, ports).lower_bound);
    for (auto& [op, row] : out.rows) {
        row.num_micro_ops =
            extract_value(row.num_micro_ops, param_spec(ParamFamily::NumMicroOps, ports).lower_bound);
        row.write_latency =
            extract_value(row.write_latency, param_spec(ParamFamily::WriteLatency, ports).lower_bound);
        for (auto& ra : row.read_advance)
            ra = extract_value(ra, param_spec(ParamFamily::ReadAdvance, ports).lower_bound);
        for (auto& p : row.port_map)
            p = extract_value(p, param_spec(ParamFamily::PortMap, ports).lower_bound);
    }
    validate_integer_form(out);
    return out;
}

namespace {

/// Projects |value| into [range.lo - lb, range.hi - lb], keeping the sign.
double project(double v, const SamplingRange& range, int lower_bound) {
    const double lo = range.lo - lower_bound;
    const double hi = range.hi - lower_bound;
    const double magnitude = std::min(std::max(std::fabs(v), lo), hi);
    return v < 0 ? -magnitude : magnitude;
}

void project_table(NamedTensors& table, const SamplingSpec& spec, const FreezeMask& mask,
                   int ports) {
    const int dw_lb = param_spec(ParamFamily::DispatchWidth, ports).lower_bound;
    const int rob_lb = param_spec(ParamFamily::ReorderBufferSize, ports).lower_bound;
    const int uops_lb = param_spec(ParamFamily::NumMicroOps, ports).lower_bound;
    const int wl_lb = param_spec(ParamFamily::WriteLatency, ports).lower_bound;
    const int ra_lb = param_spec(ParamFamily::ReadAdvance, ports).lower_bound;
    const int pm_lb = param_spec(ParamFamily::PortMap, ports).lower_bound;
    for (auto& [name, tensor] : table) {
        if (name == "global") {
            if (!mask.frozen(ParamFamily::DispatchWidth))
                tensor[0] = project(tensor[0], spec.dispatch_width, dw_lb);
            if (!mask.frozen(ParamFamily::ReorderBufferSize))
                tensor[1] = project(tensor[1], spec.reorder_buffer_size, rob_lb);
            continue;
        }
        const std::string opcode = name.substr(3);
        if (!mask.frozen(ParamFamily::NumMicroOps, opcode))
            tensor[0] = project(tensor[0], spec.num_micro_ops, uops_lb);
        if (!mask.frozen(ParamFamily::WriteLatency, opcode))
            tensor[1] = project(tensor[1], spec.write_latency, wl_lb);
        if (!mask.frozen(ParamFamily::ReadAdvance, opcode))
            for (int i = 0; i < kReadAdvanceSlots; ++i)
                tensor[2 + i] = project(tensor[2 + i], spec.read_advance, ra_lb);
        if (!mask.frozen(ParamFamily::PortMap, opcode))
            for (int p = 0; p < ports; ++p)
                tensor[5 + p] = project(tensor[5 + p], spec.port_cycles, pm_lb);
    }
}

/// Zeroes gradient slices covered by the freeze mask. Row layout follows the
/// feature order: uops, lat, ra x3, ports.
void zero_frozen(NamedTensors& grads, const FreezeMask& mask, int ports) {
    if (mask.empty()) return;
    for (auto& [name, tensor] : grads) {
        if (name == "global") {
            if (mask.frozen(ParamFamily::DispatchWidth)) tensor[0] = 0.0;
            if (mask.frozen(ParamFamily::ReorderBufferSize)) tensor[1] = 0.0;
            continue;
        }
        const std::string opcode = name.substr(3);
        if (mask.frozen(ParamFamily::NumMicroOps, opcode)) tensor[0] = 0.0;
        if (mask.frozen(ParamFamily::WriteLatency, opcode)) tensor[1] = 0.0;
        if (mask.frozen(ParamFamily::ReadAdvance, opcode))
            for (int i = 0; i < kReadAdvanceSlots; ++i) tensor[2 + i] = 0.0;
        if (mask.frozen(ParamFamily::PortMap, opcode))
            for (int p = 0; p < ports; ++p) tensor[5 + p] = 0.0;
    }
}

}  // namespace

TableOptResult optimize_parameter_table(const SurrogateModel& model, const Dataset& train,
                                        const ParameterTable& init_continuous,
                                        const FreezeMask& mask, int epochs, double lr, Rng& rng,
                                        int threads, const SamplingSpec* trust_region) {
    if (init_continuous.form != TableForm::Continuous)
        throw DataError("table optimization expects a continuous table");
    if (train.measurements.empty()) throw DataError("table optimization needs measurements");
    if (epochs < 0) throw DataError("epochs must be >= 0");

    NamedTensors table = table_to_tensors(init_continuous);
    AdamState adam;
    adam.config.lr = lr;

    std::vector<std::size_t> order(train.measurements.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TableOptResult result;
    result.initial_predicted_mape = predicted_mape(model, train, init_continuous, threads);

    const int batch_size = 256;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t stop = std::min(order.size(), start + batch_size);
            NamedTensors grads = zeros_like(table);
            const double batch_loss = sharded_batch(
                stop - start, threads, table, grads, [&](std::size_t offset, NamedTensors& local) {
                    const Measurement& m = train.measurements[order[start + offset]];
                    const BasicBlock& block = train.block(m.block_id);
                    Graph g;
                    BoundModel bound = bind_model(g, model, nullptr);  // weights frozen
                    std::set<std::string> opcodes;
                    for (const auto& instr : block.instructions) opcodes.insert(instr.opcode);
                    BoundTable bt = bind_table(g, model, table, &local, opcodes);
                    const int loss =
                        percentage_loss(g, predict_with_table(g, model, bound, bt, block), m.timing);
                    g.backward(loss);
                    return g.value(loss)[0];
                });
            if (!std::isfinite(batch_loss))
                throw NumericsError("table optimization diverged (non-finite loss)");
            scale_tensors(grads, 1.0 / static_cast<double>(stop - start));
            zero_frozen(grads, mask, model.config.ports);
            adam_step(adam, table, grads);
            if (trust_region) project_table(table, *trust_region, mask, model.config.ports);
            epoch_loss += batch_loss;
        }
        TrainCurvePoint point;
        point.epoch = epoch + 1;
        point.train_loss = epoch_loss / static_cast<double>(order.size());
        result.curve.push_back(point);
    }

    // Frozen entries see a zero gradient on every step, so Adam's moments stay
    // zero and the update is exactly zero: their bits are untouched.
    result.table = tensors_to_table(table, model.config.ports);
    result.final_predicted_mape = predicted_mape(model, train, result.table, threads);
    return result;
}

}  // namespace simtune
