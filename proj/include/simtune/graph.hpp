#pragma once

#include <cstdint>
#include <vector>

#include "simtune/tensor.hpp"

namespace simtune {

/// Reverse-mode tape. Nodes are appended in evaluation order (so node ids are
/// already topologically sorted) and each op computes its value eagerly.
/// backward() zero-initializes all gradients, seeds the scalar loss with 1 and
/// accumulates in reverse id order; leaves registered with a gradient sink
/// additionally receive their gradient by accumulation into the sink tensor.
///
/// A graph is confined to one worker; run independent graphs for parallelism.
class Graph {
  public:
    /// External differentiable leaf: value is read through the pointer, the
    /// gradient is accumulated into *grad_sink (pass nullptr for a frozen
    /// input that needs no gradient).
    int leaf(const Tensor* value, Tensor* grad_sink);

    /// Owned non-differentiable input.
    int constant(Tensor value);

    /// Owned differentiable leaf; gradient retrievable via grad().
    int variable(Tensor value);

    // Forward ops. Shapes are checked; mismatches throw std::invalid_argument.
    int matmul(int a, int b);  // [m,k]x[k,n] -> [m,n]; [m,k]x[k] -> [m]
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);  // elementwise
    int concat(int a, int b);               // rank-1, last axis
    int slice(int a, int offset, int len);  // rank-1
    int reshape(int a, std::vector<int> shape);
    int sigmoid(int a);
    int tanh(int a);
    int abs(int a);
    int mean(int a);  // -> scalar
    int scale(int a, double c);
    int add_scalar(int a, double c);
    int embedding(int table, int row);  // table [v,e] -> [e]

    const Tensor& value(int id) const;

    /// Gradient of the last backward() loss with respect to node `id`
    /// (zeros if no gradient flowed).
    const Tensor& grad(int id);

    /// Reverse accumulation from a scalar loss node.
    void backward(int loss);

    std::size_t size() const { return nodes_.size(); }

  private:
    enum class Op : std::uint8_t {
        Leaf,
        Constant,
        Matmul,
        Add,
        Sub,
        Mul,
        Concat,
        Slice,
        Reshape,
        Sigmoid,
        Tanh,
        Abs,
        Mean,
        Scale,
        AddScalar,
        Embedding,
    };

    struct Node {
        Op op = Op::Constant;
        int a = -1;
        int b = -1;
        int aux = 0;
        double c = 0.0;
        Tensor val;
        const Tensor* ext_val = nullptr;
        Tensor* grad_sink = nullptr;
        Tensor grad;  // allocated on first accumulation
        bool needs_grad = false;
    };

    const Tensor& val(int id) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        return n.ext_val ? *n.ext_val : n.val;
    }

    Tensor& grad_buffer(int id);
    int push(Node node);
    int binary_elementwise(Op op, int a, int b);

    std::vector<Node> nodes_;
};

}  // namespace simtune
