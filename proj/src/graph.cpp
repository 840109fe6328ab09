#include "simtune/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace simtune {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("graph: ") + what);
}

}  // namespace

int Graph::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

int Graph::leaf(const Tensor* value, Tensor* grad_sink) {
    require(value != nullptr, "leaf value is null");
    if (grad_sink) require(grad_sink->same_shape(*value), "leaf gradient sink shape mismatch");
    Node n;
    n.op = Op::Leaf;
    n.ext_val = value;
    n.grad_sink = grad_sink;
    n.needs_grad = grad_sink != nullptr;
    return push(std::move(n));
}

int Graph::constant(Tensor value) {
    Node n;
    n.op = Op::Constant;
    n.val = std::move(value);
    return push(std::move(n));
}

int Graph::variable(Tensor value) {
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(value);
    n.needs_grad = true;
    return push(std::move(n));
}

int Graph::matmul(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require(A.rank() == 2, "matmul: left operand must be rank 2");
    Node n;
    n.op = Op::Matmul;
    n.a = a;
    n.b = b;
    const int m = A.dim(0), k = A.dim(1);
    if (B.rank() == 1) {
        require(B.dim(0) == k, "matmul: inner dimensions differ");
        n.val = Tensor::zeros({m});
        const double* w = A.data.data();
        const double* x = B.data.data();
        for (int i = 0; i < m; ++i) {
            const double* row = w + static_cast<std::size_t>(i) * static_cast<std::size_t>(k);
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += row[j] * x[j];
            n.val[i] = acc;
        }
    } else {
        require(B.rank() == 2 && B.dim(0) == k, "matmul: inner dimensions differ");
        const int cols = B.dim(1);
        n.val = Tensor::zeros({m, cols});
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < k; ++j) {
                const double aij = A.data[static_cast<std::size_t>(i * k + j)];
                for (int c = 0; c < cols; ++c)
                    n.val[i * cols + c] += aij * B.data[static_cast<std::size_t>(j * cols + c)];
            }
    }
    n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad ||
                   nodes_[static_cast<std::size_t>(b)].needs_grad;
    return push(std::move(n));
}

int Graph::binary_elementwise(Op op, int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require(A.same_shape(B), "elementwise op: shape mismatch");
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.val = A;
    for (int i = 0; i < n.val.numel(); ++i) {
        switch (op) {
            case Op::Add: n.val[i] = A[i] + B[i]; break;
            case Op::Sub: n.val[i] = A[i] - B[i]; break;
            case Op::Mul: n.val[i] = A[i] * B[i]; break;
            default: throw std::logic_error("not an elementwise op");
        }
    }
    n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad ||
                   nodes_[static_cast<std::size_t>(b)].needs_grad;
    return push(std::move(n));
}

int Graph::add(int a, int b) { return binary_elementwise(Op::Add, a, b); }
int Graph::sub(int a, int b) { return binary_elementwise(Op::Sub, a, b); }
int Graph::mul(int a, int b) { return binary_elementwise(Op::Mul, a, b); }

int Graph::concat(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require(A.rank() == 1 && B.rank() == 1, "concat: rank-1 operands required");
    Node n;
    n.op = Op::Concat;
    n.a = a;
    n.b = b;
    n.val = Tensor::zeros({A.numel() + B.numel()});
    for (int i = 0; i < A.numel(); ++i) n.val[i] = A[i];
    for (int i = 0; i < B.numel(); ++i) n.val[A.numel() + i] = B[i];
    n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad ||
                   nodes_[static_cast<std::size_t>(b)].needs_grad;
    return push(std::move(n));
}

int Graph::slice(int a, int offset, int len) {
    const Tensor& A = val(a);
    require(A.rank() == 1, "slice: rank-1 operand required");
    require(offset >= 0 && len > 0 && offset + len <= A.numel(), "slice: out of range");
    Node n;
    n.op = Op::Slice;
    n.a = a;
    n.aux = offset;
    n.val = Tensor::zeros({len});
    for (int i = 0; i < len; ++i) n.val[i] = A[offset + i];
    n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad;
    return push(std::move(n));
}

int Graph::reshape(int a, std::vector<int> shape) {
    const Tensor& A = val(a);
    std::size_t numel = 1;
    for (int d : shape) numel *= static_cast<std::size_t>(d > 0 ? d : 0);
    require(numel == A.data.size(), "reshape: element count mismatch");
    Node n;
    n.op = Op::Reshape;
    n.a = a;
    n.val = Tensor(std::move(shape), A.data);
    n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad;
    return push(std::move(n));
}

namespace {

double sigmoid_fn(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

int Graph::sigmoid(int a) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = a;
    n.val = val(a);
    for (auto& v : n.val.data) v = sigmoid_fn(v);
    n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad;
    return push(std::move(n));
}

int Graph::tanh(int a) {
    Node n;
    n.op = Op::Tanh;
    n.a = a;
    n.val = val(a);
    for (auto& v : n.val.data) v = std::tanh(v);
    n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad;
    return push(std::move(n));
}

int Graph::abs(int a) {
    Node n;
    n.op = Op::Abs;
    n.a = a;
    n.val = val(a);
    for (auto& v : n.val.data) v = std::fabs(v);
    n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad;
    return push(std::move(n));
}

int Graph::mean(int a) {
    const Tensor& A = val(a);
    double acc = 0.0;
    for (double v : A.data) acc += v;
    Node n;
    n.op = Op::Mean;
    n.a = a;
    n.val = Tensor::scalar(acc / static_cast<double>(A.numel()));
    n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad;
    return push(std::move(n));
}

int Graph::scale(int a, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = a;
    n.c = c;
    n.val = val(a);
    for (auto& v : n.val.data) v *= c;
    n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad;
    return push(std::move(n));
}

int Graph::add_scalar(int a, double c) {
    Node n;
    n.op = Op::AddScalar;
    n.a = a;
    n.c = c;
    n.val = val(a);
    for (auto& v : n.val.data) v += c;
    n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad;
    return push(std::move(n));
}

int Graph::embedding(int table, int row) {
    const Tensor& T = val(table);
    require(T.rank() == 2, "embedding: table must be rank 2");
    require(row >= 0 && row < T.dim(0), "embedding: row out of range");
    const int e = T.dim(1);
    Node n;
    n.op = Op::Embedding;
    n.a = table;
    n.aux = row;
    n.val = Tensor::zeros({e});
    for (int i = 0; i < e; ++i) n.val[i] = T.data[static_cast<std::size_t>(row * e + i)];
    n.needs_grad = nodes_[static_cast<std::size_t>(table)].needs_grad;
    return push(std::move(n));
}

const Tensor& Graph::value(int id) const {
    return val(id);
}

Tensor& Graph::grad_buffer(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.data.empty()) n.grad = Tensor::zeros(val(id).shape);
    return n.grad;
}

const Tensor& Graph::grad(int id) {
    return grad_buffer(id);
}

void Graph::backward(int loss) {
    require(loss >= 0 && loss < static_cast<int>(nodes_.size()), "backward: bad node id");
    require(val(loss).numel() == 1, "backward: loss must be scalar");

    for (auto& n : nodes_) n.grad.data.clear();
    grad_buffer(loss)[0] = 1.0;

    for (int id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.needs_grad || n.grad.data.empty()) continue;
        const Tensor& dy = n.grad;
        const bool a_needs =
            n.a >= 0 && nodes_[static_cast<std::size_t>(n.a)].needs_grad;
        const bool b_needs =
            n.b >= 0 && nodes_[static_cast<std::size_t>(n.b)].needs_grad;

        switch (n.op) {
            case Op::Leaf:
                if (n.grad_sink)
                    for (int i = 0; i < dy.numel(); ++i) (*n.grad_sink)[i] += dy[i];
                break;
            case Op::Constant:
                break;
            case Op::Matmul: {
                const Tensor& A = val(n.a);
                const Tensor& B = val(n.b);
                const int m = A.dim(0), k = A.dim(1);
                if (B.rank() == 1) {
                    if (a_needs) {
                        Tensor& da = grad_buffer(n.a);
                        for (int i = 0; i < m; ++i) {
                            const double g = dy[i];
                            if (g == 0.0) continue;
                            double* row = da.data.data() + static_cast<std::size_t>(i) *
                                                               static_cast<std::size_t>(k);
                            const double* x = B.data.data();
                            for (int j = 0; j < k; ++j) row[j] += g * x[j];
                        }
                    }
                    if (b_needs) {
                        Tensor& db = grad_buffer(n.b);
                        for (int i = 0; i < m; ++i) {
                            const double g = dy[i];
                            if (g == 0.0) continue;
                            const double* row = A.data.data() + static_cast<std::size_t>(i) *
                                                                    static_cast<std::size_t>(k);
                            double* dst = db.data.data();
                            for (int j = 0; j < k; ++j) dst[j] += g * row[j];
                        }
                    }
                } else {
                    const int cols = B.dim(1);
                    if (a_needs) {
                        Tensor& da = grad_buffer(n.a);
                        for (int i = 0; i < m; ++i)
                            for (int j = 0; j < k; ++j) {
                                double acc = 0.0;
                                for (int c = 0; c < cols; ++c)
                                    acc += dy[i * cols + c] *
                                           B.data[static_cast<std::size_t>(j * cols + c)];
                                da[i * k + j] += acc;
                            }
                    }
                    if (b_needs) {
                        Tensor& db = grad_buffer(n.b);
                        for (int i = 0; i < m; ++i)
                            for (int j = 0; j < k; ++j) {
                                const double aij = A.data[static_cast<std::size_t>(i * k + j)];
                                if (aij == 0.0) continue;
                                for (int c = 0; c < cols; ++c)
                                    db[j * cols + c] += aij * dy[i * cols + c];
                            }
                    }
                }
                break;
            }
            case Op::Add: {
                if (a_needs) {
                    Tensor& da = grad_buffer(n.a);
                    for (int i = 0; i < dy.numel(); ++i) da[i] += dy[i];
                }
                if (b_needs) {
                    Tensor& db = grad_buffer(n.b);
                    for (int i = 0; i < dy.numel(); ++i) db[i] += dy[i];
                }
                break;
            }
            case Op::Sub: {
                if (a_needs) {
                    Tensor& da = grad_buffer(n.a);
                    for (int i = 0; i < dy.numel(); ++i) da[i] += dy[i];
                }
                if (b_needs) {
                    Tensor& db = grad_buffer(n.b);
                    for (int i = 0; i < dy.numel(); ++i) db[i] -= dy[i];
                }
                break;
            }
            case Op::Mul: {
                const Tensor& A = val(n.a);
                const Tensor& B = val(n.b);
                if (a_needs) {
                    Tensor& da = grad_buffer(n.a);
                    for (int i = 0; i < dy.numel(); ++i) da[i] += dy[i] * B[i];
                }
                if (b_needs) {
                    Tensor& db = grad_buffer(n.b);
                    for (int i = 0; i < dy.numel(); ++i) db[i] += dy[i] * A[i];
                }
                break;
            }
            case Op::Concat: {
                const int na = val(n.a).numel();
                if (a_needs) {
                    Tensor& da = grad_buffer(n.a);
                    for (int i = 0; i < na; ++i) da[i] += dy[i];
                }
                if (b_needs) {
                    Tensor& db = grad_buffer(n.b);
                    for (int i = 0; i < db.numel(); ++i) db[i] += dy[na + i];
                }
                break;
            }
            case Op::Slice: {
                if (a_needs) {
                    Tensor& da = grad_buffer(n.a);
                    for (int i = 0; i < dy.numel(); ++i) da[n.aux + i] += dy[i];
                }
                break;
            }
            case Op::Reshape: {
                if (a_needs) {
                    Tensor& da = grad_buffer(n.a);
                    for (int i = 0; i < dy.numel(); ++i) da[i] += dy[i];
                }
                break;
            }
            case Op::Sigmoid: {
                if (a_needs) {
                    Tensor& da = grad_buffer(n.a);
                    for (int i = 0; i < dy.numel(); ++i) {
                        const double s = n.val[i];
                        da[i] += dy[i] * s * (1.0 - s);
                    }
                }
                break;
            }
            case Op::Tanh: {
                if (a_needs) {
                    Tensor& da = grad_buffer(n.a);
                    for (int i = 0; i < dy.numel(); ++i) {
                        const double t = n.val[i];
                        da[i] += dy[i] * (1.0 - t * t);
                    }
                }
                break;
            }
            case Op::Abs: {
                // Subgradient 0 at the kink.
                if (a_needs) {
                    const Tensor& A = val(n.a);
                    Tensor& da = grad_buffer(n.a);
                    for (int i = 0; i < dy.numel(); ++i) {
                        const double s = A[i] > 0.0 ? 1.0 : (A[i] < 0.0 ? -1.0 : 0.0);
                        da[i] += dy[i] * s;
                    }
                }
                break;
            }
            case Op::Mean: {
                if (a_needs) {
                    Tensor& da = grad_buffer(n.a);
                    const double g = dy[0] / static_cast<double>(da.numel());
                    for (auto& v : da.data) v += g;
                }
                break;
            }
            case Op::Scale: {
                if (a_needs) {
                    Tensor& da = grad_buffer(n.a);
                    for (int i = 0; i < dy.numel(); ++i) da[i] += dy[i] * n.c;
                }
                break;
            }
            case Op::AddScalar: {
                if (a_needs) {
                    Tensor& da = grad_buffer(n.a);
                    for (int i = 0; i < dy.numel(); ++i) da[i] += dy[i];
                }
                break;
            }
            case Op::Embedding: {
                if (a_needs) {
                    Tensor& dt = grad_buffer(n.a);
                    const int e = dy.numel();
                    for (int i = 0; i < e; ++i) dt[n.aux * e + i] += dy[i];
                }
                break;
            }
        }
    }
}

}  // namespace simtune
