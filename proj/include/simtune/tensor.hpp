#pragma once

#include <map>
#include <string>
#include <vector>

namespace simtune {

/// Dense row-major array of doubles. Double precision throughout: the
/// gradient checks run at 1e-4 relative tolerance and the models are small.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> shape_, std::vector<double> data_);

    static Tensor zeros(std::vector<int> shape);
    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor row_vector(std::vector<double> values);

    int numel() const { return static_cast<int>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    double& operator[](int i) { return data[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return data[static_cast<std::size_t>(i)]; }

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    bool operator==(const Tensor&) const = default;
};

/// Named parameter collection (model weights, table entries, Adam moments).
/// Ordered so that every iteration over it is deterministic.
using NamedTensors = std::map<std::string, Tensor>;

/// dst += src, elementwise over all entries; shapes must match.
void accumulate(NamedTensors& dst, const NamedTensors& src);

/// Zero-filled copy with the same names and shapes.
NamedTensors zeros_like(const NamedTensors& params);

}  // namespace simtune
