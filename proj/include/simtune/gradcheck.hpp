#pragma once

#include <functional>
#include <vector>

namespace simtune {

/// A scalar function of a flat coordinate vector, with its analytic gradient.
struct DiffFunction {
    std::function<double(const std::vector<double>&)> value;
    std::function<std::vector<double>(const std::vector<double>&)> gradient;
};

/// Compares the analytic gradient against central finite differences at
/// `point`. Returns the max over coordinates of
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double gradient_check(const DiffFunction& f, const std::vector<double>& point, double h = 1e-4);

}  // namespace simtune
