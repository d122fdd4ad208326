#include "qhsri/normal.hpp"

#include <cmath>
#include <numbers>

namespace qhsri {

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

}  // namespace qhsri
