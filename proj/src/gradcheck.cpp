#include "simtune/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace simtune {

double gradient_check(const DiffFunction& f, const std::vector<double>& point, double h) {
    if (h <= 0.0) throw std::invalid_argument("gradient_check: h must be positive");
    const std::vector<double> analytic = f.gradient(point);
    if (analytic.size() != point.size())
        throw std::invalid_argument("gradient_check: gradient size mismatch");

    double worst = 0.0;
    std::vector<double> probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        probe[i] = point[i] + h;
        const double up = f.value(probe);
        probe[i] = point[i] - h;
        const double down = f.value(probe);
        probe[i] = point[i];
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max(1e-8, std::fabs(analytic[i]) + std::fabs(numeric));
        worst = std::max(worst, std::fabs(analytic[i] - numeric) / denom);
    }
    return worst;
}

}  // namespace simtune
