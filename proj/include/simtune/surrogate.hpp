#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "simtune/block.hpp"
#include "simtune/graph.hpp"
#include "simtune/params.hpp"
#include "simtune/tensor.hpp"

namespace simtune {

/// Architecture and tokenization settings for the sequence model. The token
/// vocabulary is order-sensitive: index 0 is padding, index 1 the unknown
/// token, followed by structural markers, register tokens and opcodes.
struct SurrogateConfig {
    int embed_dim = 32;
    int hidden_dim = 64;
    int depth = 2;  // stacked recurrent layers per level (4 mirrors the reference setting)
    int ports = kDefaultPorts;
    int register_count = kDefaultRegisterCount;
    std::vector<std::string> vocabulary;
    std::vector<double> feature_scale;  // per-feature divisor, see feature_names()

    /// Parameter features per instruction: num_micro_ops, write_latency,
    /// read_advance x3, port_map x ports, then dispatch_width and
    /// reorder_buffer_size.
    int feature_dim() const { return 5 + ports + 2; }
};

std::vector<std::string> build_token_vocabulary(const std::vector<std::string>& opcodes,
                                                int register_count);

/// Divisors that map each sampled parameter range to roughly [0, 1].
std::vector<double> default_feature_scale(int ports = kDefaultPorts);

/// The sequence model: a token-level stacked LSTM turning each instruction's
/// tokens into a vector, an instruction-level stacked LSTM over instruction
/// vectors concatenated with parameter features, and a linear head that
/// predicts the timing directly.
struct SurrogateModel {
    SurrogateConfig config;
    NamedTensors weights;

    static SurrogateModel init(SurrogateConfig config, std::uint64_t seed);

    int token_id(const std::string& token) const;  // unknown tokens map to <UNK>

    /// Rebuilds the token lookup after mutating config.vocabulary.
    void reindex();

  private:
    std::unordered_map<std::string, int> token_index_;
};

std::vector<int> instruction_tokens(const SurrogateModel& model, const Instruction& instr);

/// Weight leaves registered in a graph. With `grad_sinks` non-null (a
/// zeros_like of the weights) gradients accumulate there; with nullptr the
/// weights are frozen inputs.
struct BoundModel {
    std::map<std::string, int> leaves;

    int node(const std::string& name) const;
};

BoundModel bind_model(Graph& g, const SurrogateModel& model, NamedTensors* grad_sinks);

/// Prediction with per-instruction parameter features supplied as constants
/// (the surrogate-training path, features already shifted by the lower bound
/// and scaled). Returns the scalar prediction node.
int predict_with_features(Graph& g, const SurrogateModel& model, const BoundModel& bound,
                          const BasicBlock& block,
                          const std::vector<std::vector<double>>& features);

/// Continuous-table tensors: "global" [2] = {dispatch_width,
/// reorder_buffer_size} and "op/<OPCODE>" rows laid out in feature order.
NamedTensors table_to_tensors(const ParameterTable& table);
ParameterTable tensors_to_table(const NamedTensors& tensors, int ports = kDefaultPorts);

/// Table leaves registered in a graph for the optimization path: features are
/// |value| / scale, so gradients flow back to exactly the rows of opcodes
/// present in the block plus the globals.
struct BoundTable {
    int global_features = -1;
    std::map<std::string, int> op_features;
};

BoundTable bind_table(Graph& g, const SurrogateModel& model, const NamedTensors& table,
                      NamedTensors* grad_sinks, const std::set<std::string>& opcodes);

int predict_with_table(Graph& g, const SurrogateModel& model, const BoundModel& bound,
                       const BoundTable& table, const BasicBlock& block);

/// |prediction - target| / target, the per-example training loss and the
/// per-example term of the evaluation error.
int percentage_loss(Graph& g, int prediction, double target);
double percentage_loss(double prediction, double target);

/// Training-path features for one opcode under an integer table:
/// (value - lower_bound) / scale.
std::vector<double> training_features(const ParameterTable& table, const std::string& opcode,
                                      const SurrogateConfig& config);

/// Instruction vectors produced by the token-level stack (shape contract and
/// purity are tested against this).
std::vector<Tensor> embed_block(const SurrogateModel& model, const BasicBlock& block);

/// Plain forward passes without touching a caller-owned graph.
double surrogate_predict(const SurrogateModel& model, const ParameterTable& integer_table,
                         const BasicBlock& block);
double surrogate_predict_continuous(const SurrogateModel& model,
                                    const ParameterTable& continuous_table,
                                    const BasicBlock& block);

/// Weights plus a text sidecar carrying the config and the vocabulary.
void save_surrogate(const SurrogateModel& model, const std::string& weights_path,
                    const std::string& meta_path);
SurrogateModel load_surrogate(const std::string& weights_path, const std::string& meta_path);

}  // namespace simtune
