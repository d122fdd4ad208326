#pragma once

namespace qhsri {

// Standard normal density and distribution function.
double normal_pdf(double z);
double normal_cdf(double z);

}  // namespace qhsri
