#include "simtune/surrogate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "simtune/errors.hpp"
#include "simtune/rng.hpp"
#include "simtune/weights_io.hpp"

namespace simtune {

namespace {

constexpr int kPad = 0;
constexpr int kUnk = 1;

const char* kMarkers[] = {"<PAD>", "<UNK>", "<W>", "<R>", "<LD>", "<ST>"};

}  // namespace

std::vector<std::string> build_token_vocabulary(const std::vector<std::string>& opcodes,
                                                int register_count) {
    std::vector<std::string> vocab;
    for (const char* m : kMarkers) vocab.emplace_back(m);
    for (int r = 0; r < register_count; ++r) vocab.push_back("r" + std::to_string(r));
    for (const auto& op : opcodes) vocab.push_back(op);
    return vocab;
}

std::vector<double> default_feature_scale(int ports) {
    std::vector<double> scale;
    scale.push_back(param_spec(ParamFamily::NumMicroOps, ports).sample_hi);
    scale.push_back(param_spec(ParamFamily::WriteLatency, ports).sample_hi);
    for (int i = 0; i < kReadAdvanceSlots; ++i)
        scale.push_back(param_spec(ParamFamily::ReadAdvance, ports).sample_hi);
    for (int p = 0; p < ports; ++p)
        scale.push_back(param_spec(ParamFamily::PortMap, ports).sample_hi);
    scale.push_back(param_spec(ParamFamily::DispatchWidth, ports).sample_hi);
    scale.push_back(param_spec(ParamFamily::ReorderBufferSize, ports).sample_hi);
    return scale;
}

namespace {

Tensor uniform_tensor(std::vector<int> shape, double radius, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data) v = rng.uniform_real(-radius, radius);
    return t;
}

// One stacked-LSTM level: weights[l] is [4H, in_l + H] with gate order
// (input, forget, cell, output); forget biases start at 1.
void init_stack(NamedTensors& weights, const std::string& prefix, int depth, int input_dim,
                int hidden, Rng& rng) {
    for (int l = 0; l < depth; ++l) {
        const int in = l == 0 ? input_dim : hidden;
        const double radius = 1.0 / std::sqrt(static_cast<double>(in + hidden));
        const std::string base = prefix + "/l" + std::to_string(l) + "/";
        weights[base + "W"] = uniform_tensor({4 * hidden, in + hidden}, radius, rng);
        Tensor bias = Tensor::zeros({4 * hidden});
        for (int i = hidden; i < 2 * hidden; ++i) bias[i] = 1.0;
        weights[base + "b"] = bias;
    }
}

}  // namespace

SurrogateModel SurrogateModel::init(SurrogateConfig config, std::uint64_t seed) {
    if (config.embed_dim < 1 || config.hidden_dim < 1 || config.depth < 1)
        throw DataError("surrogate dimensions and depth must be >= 1");
    if (config.vocabulary.empty())
        throw DataError("surrogate config needs a token vocabulary");
    if (config.feature_scale.empty()) config.feature_scale = default_feature_scale(config.ports);
    if (static_cast<int>(config.feature_scale.size()) != config.feature_dim())
        throw DataError("feature_scale length does not match the feature layout");

    SurrogateModel model;
    model.config = std::move(config);
    Rng rng(derive_seed(seed, "surrogate-init"));

    const auto& c = model.config;
    const int vocab = static_cast<int>(c.vocabulary.size());
    model.weights["embed"] =
        uniform_tensor({vocab, c.embed_dim}, 1.0 / std::sqrt(static_cast<double>(c.embed_dim)), rng);
    init_stack(model.weights, "tok", c.depth, c.embed_dim, c.hidden_dim, rng);
    init_stack(model.weights, "ins", c.depth, c.hidden_dim + c.feature_dim(), c.hidden_dim, rng);
    model.weights["head/W"] = uniform_tensor({1, c.hidden_dim},
                                             1.0 / std::sqrt(static_cast<double>(c.hidden_dim)), rng);
    model.weights["head/b"] = Tensor::zeros({1});
    model.reindex();
    return model;
}

void SurrogateModel::reindex() {
    token_index_.clear();
    for (std::size_t i = 0; i < config.vocabulary.size(); ++i)
        token_index_.emplace(config.vocabulary[i], static_cast<int>(i));
}

int SurrogateModel::token_id(const std::string& token) const {
    auto it = token_index_.find(token);
    return it == token_index_.end() ? kUnk : it->second;
}

std::vector<int> instruction_tokens(const SurrogateModel& model, const Instruction& instr) {
    std::vector<int> ids;
    ids.push_back(model.token_id(instr.opcode));
    ids.push_back(model.token_id("<W>"));
    for (int r : instr.writes) ids.push_back(model.token_id("r" + std::to_string(r)));
    ids.push_back(model.token_id("<R>"));
    for (int r : instr.reads) ids.push_back(model.token_id("r" + std::to_string(r)));
    if (instr.load_mem) ids.push_back(model.token_id("<LD>"));
    if (instr.store_mem) ids.push_back(model.token_id("<ST>"));
    return ids;
}

int BoundModel::node(const std::string& name) const {
    auto it = leaves.find(name);
    if (it == leaves.end()) throw std::logic_error("model weight '" + name + "' not bound");
    return it->second;
}

BoundModel bind_model(Graph& g, const SurrogateModel& model, NamedTensors* grad_sinks) {
    BoundModel bound;
    for (const auto& [name, tensor] : model.weights) {
        Tensor* sink = nullptr;
        if (grad_sinks) {
            auto it = grad_sinks->find(name);
            if (it == grad_sinks->end())
                throw std::logic_error("gradient sink missing for '" + name + "'");
            sink = &it->second;
        }
        bound.leaves.emplace(name, g.leaf(&tensor, sink));
    }
    return bound;
}

namespace {

struct StackState {
    std::vector<int> h;
    std::vector<int> c;
};

StackState zero_state(Graph& g, int depth, int hidden) {
    const int zeros = g.constant(Tensor::zeros({hidden}));
    return {std::vector<int>(static_cast<std::size_t>(depth), zeros),
            std::vector<int>(static_cast<std::size_t>(depth), zeros)};
}

// Advances the whole stack one step; input feeds layer 0, each layer's new
// hidden state feeds the next. Returns the top hidden node.
int stack_step(Graph& g, const SurrogateModel& model, const BoundModel& bound,
               const std::string& prefix, StackState& state, int input) {
    const int hidden = model.config.hidden_dim;
    int x = input;
    for (int l = 0; l < model.config.depth; ++l) {
        const std::string base = prefix + "/l" + std::to_string(l) + "/";
        const int z = g.add(g.matmul(bound.node(base + "W"), g.concat(x, state.h[static_cast<std::size_t>(l)])),
                            bound.node(base + "b"));
        const int gate_in = g.sigmoid(g.slice(z, 0, hidden));
        const int gate_forget = g.sigmoid(g.slice(z, hidden, hidden));
        const int gate_cell = g.tanh(g.slice(z, 2 * hidden, hidden));
        const int gate_out = g.sigmoid(g.slice(z, 3 * hidden, hidden));
        const int c_new = g.add(g.mul(gate_forget, state.c[static_cast<std::size_t>(l)]),
                                g.mul(gate_in, gate_cell));
        const int h_new = g.mul(gate_out, g.tanh(c_new));
        state.c[static_cast<std::size_t>(l)] = c_new;
        state.h[static_cast<std::size_t>(l)] = h_new;
        x = h_new;
    }
    return x;
}

int instruction_vector(Graph& g, const SurrogateModel& model, const BoundModel& bound,
                       const Instruction& instr) {
    StackState state = zero_state(g, model.config.depth, model.config.hidden_dim);
    int top = -1;
    const int embed = bound.node("embed");
    for (int id : instruction_tokens(model, instr))
        top = stack_step(g, model, bound, "tok", state, g.embedding(embed, id));
    return top;  // at least one token (the opcode) always exists
}

int block_prediction(Graph& g, const SurrogateModel& model, const BoundModel& bound,
                     const BasicBlock& block, const std::vector<int>& feature_nodes) {
    StackState state = zero_state(g, model.config.depth, model.config.hidden_dim);
    int top = -1;
    for (std::size_t i = 0; i < block.instructions.size(); ++i) {
        const int vec = instruction_vector(g, model, bound, block.instructions[i]);
        top = stack_step(g, model, bound, "ins", state, g.concat(vec, feature_nodes[i]));
    }
    return g.add(g.matmul(bound.node("head/W"), top), bound.node("head/b"));
}

}  // namespace

int predict_with_features(Graph& g, const SurrogateModel& model, const BoundModel& bound,
                          const BasicBlock& block,
                          const std::vector<std::vector<double>>& features) {
    if (block.instructions.empty()) throw DataError("empty block");
    if (features.size() != block.instructions.size())
        throw DataError("one feature vector per instruction required");
    std::vector<int> nodes;
    nodes.reserve(features.size());
    for (const auto& f : features) {
        if (static_cast<int>(f.size()) != model.config.feature_dim())
            throw DataError("feature vector has wrong length");
        nodes.push_back(g.constant(Tensor::row_vector(f)));
    }
    return block_prediction(g, model, bound, block, nodes);
}

NamedTensors table_to_tensors(const ParameterTable& table) {
    NamedTensors out;
    out["global"] = Tensor::row_vector({table.dispatch_width, table.reorder_buffer_size});
    for (const auto& [opcode, row] : table.rows) {
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(5 + table.ports));
        values.push_back(row.num_micro_ops);
        values.push_back(row.write_latency);
        for (double ra : row.read_advance) values.push_back(ra);
        for (double p : row.port_map) values.push_back(p);
        out["op/" + opcode] = Tensor::row_vector(std::move(values));
    }
    return out;
}

ParameterTable tensors_to_table(const NamedTensors& tensors, int ports) {
    ParameterTable table;
    table.form = TableForm::Continuous;
    table.ports = ports;
    auto git = tensors.find("global");
    if (git == tensors.end() || git->second.numel() != 2)
        throw DataError("table tensors are missing the 'global' pair");
    table.dispatch_width = git->second[0];
    table.reorder_buffer_size = git->second[1];
    for (const auto& [name, tensor] : tensors) {
        if (name.rfind("op/", 0) != 0) continue;
        if (tensor.numel() != 5 + ports) throw DataError("bad opcode row length for '" + name + "'");
        OpcodeParams row;
        row.num_micro_ops = tensor[0];
        row.write_latency = tensor[1];
        for (int i = 0; i < kReadAdvanceSlots; ++i) row.read_advance[static_cast<std::size_t>(i)] = tensor[2 + i];
        row.port_map.assign(static_cast<std::size_t>(ports), 0.0);
        for (int p = 0; p < ports; ++p) row.port_map[static_cast<std::size_t>(p)] = tensor[5 + p];
        table.rows.emplace(name.substr(3), std::move(row));
    }
    return table;
}

BoundTable bind_table(Graph& g, const SurrogateModel& model, const NamedTensors& table,
                      NamedTensors* grad_sinks, const std::set<std::string>& opcodes) {
    const auto& scale = model.config.feature_scale;
    const int per_op = 5 + model.config.ports;

    auto scaled_abs = [&](const std::string& name, int offset, int len) {
        auto vit = table.find(name);
        if (vit == table.end()) throw DataError("table tensors missing '" + name + "'");
        Tensor* sink = nullptr;
        if (grad_sinks) {
            auto sit = grad_sinks->find(name);
            if (sit == grad_sinks->end())
                throw std::logic_error("table gradient sink missing for '" + name + "'");
            sink = &sit->second;
        }
        std::vector<double> inv(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) inv[static_cast<std::size_t>(i)] = 1.0 / scale[static_cast<std::size_t>(offset + i)];
        return g.mul(g.abs(g.leaf(&vit->second, sink)), g.constant(Tensor::row_vector(std::move(inv))));
    };

    BoundTable bound;
    bound.global_features = scaled_abs("global", per_op, 2);
    for (const auto& op : opcodes) bound.op_features.emplace(op, scaled_abs("op/" + op, 0, per_op));
    return bound;
}

int predict_with_table(Graph& g, const SurrogateModel& model, const BoundModel& bound,
                       const BoundTable& table, const BasicBlock& block) {
    if (block.instructions.empty()) throw DataError("empty block");
    std::vector<int> nodes;
    nodes.reserve(block.instructions.size());
    for (const auto& instr : block.instructions) {
        auto it = table.op_features.find(instr.opcode);
        if (it == table.op_features.end())
            throw DataError("table does not cover opcode '" + instr.opcode + "'");
        nodes.push_back(g.concat(it->second, table.global_features));
    }
    return block_prediction(g, model, bound, block, nodes);
}

int percentage_loss(Graph& g, int prediction, double target) {
    if (!(target > 0.0)) throw DataError("loss target must be positive");
    return g.scale(g.abs(g.add_scalar(prediction, -target)), 1.0 / target);
}

double percentage_loss(double prediction, double target) {
    if (!(target > 0.0)) throw DataError("loss target must be positive");
    return std::fabs(prediction - target) / target;
}

std::vector<double> training_features(const ParameterTable& table, const std::string& opcode,
                                      const SurrogateConfig& config) {
    const OpcodeParams& row = table.row(opcode);
    const auto& scale = config.feature_scale;
    std::vector<double> f;
    f.reserve(static_cast<std::size_t>(config.feature_dim()));
    const int ports = config.ports;
    f.push_back(row.num_micro_ops - param_spec(ParamFamily::NumMicroOps, ports).lower_bound);
    f.push_back(row.write_latency - param_spec(ParamFamily::WriteLatency, ports).lower_bound);
    for (double ra : row.read_advance)
        f.push_back(ra - param_spec(ParamFamily::ReadAdvance, ports).lower_bound);
    for (double p : row.port_map) f.push_back(p - param_spec(ParamFamily::PortMap, ports).lower_bound);
    f.push_back(table.dispatch_width - param_spec(ParamFamily::DispatchWidth, ports).lower_bound);
    f.push_back(table.reorder_buffer_size -
                param_spec(ParamFamily::ReorderBufferSize, ports).lower_bound);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] /= scale[i];
    return f;
}

std::vector<Tensor> embed_block(const SurrogateModel& model, const BasicBlock& block) {
    Graph g;
    BoundModel bound = bind_model(g, model, nullptr);
    std::vector<Tensor> out;
    out.reserve(block.instructions.size());
    for (const auto& instr : block.instructions)
        out.push_back(g.value(instruction_vector(g, model, bound, instr)));
    return out;
}

double surrogate_predict(const SurrogateModel& model, const ParameterTable& integer_table,
                         const BasicBlock& block) {
    Graph g;
    BoundModel bound = bind_model(g, model, nullptr);
    std::vector<std::vector<double>> features;
    features.reserve(block.instructions.size());
    for (const auto& instr : block.instructions)
        features.push_back(training_features(integer_table, instr.opcode, model.config));
    return g.value(predict_with_features(g, model, bound, block, features))[0];
}

double surrogate_predict_continuous(const SurrogateModel& model,
                                    const ParameterTable& continuous_table,
                                    const BasicBlock& block) {
    Graph g;
    BoundModel bound = bind_model(g, model, nullptr);
    std::set<std::string> opcodes;
    for (const auto& instr : block.instructions) opcodes.insert(instr.opcode);
    NamedTensors tensors = table_to_tensors(continuous_table);
    BoundTable table = bind_table(g, model, tensors, nullptr, opcodes);
    return g.value(predict_with_table(g, model, bound, table, block))[0];
}

void save_surrogate(const SurrogateModel& model, const std::string& weights_path,
                    const std::string& meta_path) {
    save_weights(weights_path, model.weights);
    std::ofstream out(meta_path);
    if (!out) throw DataError("cannot write surrogate metadata '" + meta_path + "'");
    const auto& c = model.config;
    out << "embed_dim " << c.embed_dim << "\nhidden_dim " << c.hidden_dim << "\ndepth " << c.depth
        << "\nports " << c.ports << "\nregister_count " << c.register_count << "\nfeature_scale";
    for (double s : c.feature_scale) out << ' ' << s;
    out << '\n';
    for (const auto& token : c.vocabulary) out << "token " << token << '\n';
}

SurrogateModel load_surrogate(const std::string& weights_path, const std::string& meta_path) {
    std::ifstream in(meta_path);
    if (!in) throw DataError("cannot open surrogate metadata '" + meta_path + "'");
    SurrogateConfig config;
    config.feature_scale.clear();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "embed_dim") ls >> config.embed_dim;
        else if (key == "hidden_dim") ls >> config.hidden_dim;
        else if (key == "depth") ls >> config.depth;
        else if (key == "ports") ls >> config.ports;
        else if (key == "register_count") ls >> config.register_count;
        else if (key == "feature_scale") {
            double v;
            while (ls >> v) config.feature_scale.push_back(v);
        } else if (key == "token") {
            std::string token;
            ls >> token;
            config.vocabulary.push_back(token);
        } else {
            throw ParseError(meta_path + ": unknown key '" + key + "'");
        }
        if (ls.fail() && key != "feature_scale")
            throw ParseError(meta_path + ": bad value for '" + key + "'");
    }
    if (config.vocabulary.empty()) throw DataError(meta_path + ": no vocabulary");
    if (static_cast<int>(config.feature_scale.size()) != config.feature_dim())
        throw DataError(meta_path + ": feature_scale length mismatch");

    SurrogateModel model;
    model.config = std::move(config);
    model.weights = load_weights(weights_path);
    model.reindex();
    return model;
}

}  // namespace simtune
