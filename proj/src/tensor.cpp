#include "simtune/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace simtune {

namespace {

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_numel(shape) != data.size())
        throw std::invalid_argument("tensor value count does not match shape");
}

Tensor Tensor::zeros(std::vector<int> shape) {
    std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::row_vector(std::vector<double> values) {
    int n = static_cast<int>(values.size());
    return Tensor({n}, std::move(values));
}

void Tensor::fill(double v) {
    std::fill(data.begin(), data.end(), v);
}

void accumulate(NamedTensors& dst, const NamedTensors& src) {
    for (const auto& [name, tensor] : src) {
        auto it = dst.find(name);
        if (it == dst.end()) {
            dst.emplace(name, tensor);
            continue;
        }
        if (!it->second.same_shape(tensor))
            throw std::invalid_argument("accumulate: shape mismatch for '" + name + "'");
        for (int i = 0; i < tensor.numel(); ++i) it->second[i] += tensor[i];
    }
}

NamedTensors zeros_like(const NamedTensors& params) {
    NamedTensors out;
    for (const auto& [name, tensor] : params) out.emplace(name, Tensor::zeros(tensor.shape));
    return out;
}

}  // namespace simtune
