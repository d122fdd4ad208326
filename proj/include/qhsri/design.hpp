#pragma once

#include <Eigen/Core>

#include "qhsri/random.hpp"

namespace qhsri {

/// Random Latin hypercube: each column holds one point per stratum [k/n, (k+1)/n).
Eigen::MatrixXd latin_hypercube(Eigen::Index n, Eigen::Index d, Rng& rng);

/// Smallest pairwise Euclidean distance between rows.
double min_distance(const Eigen::MatrixXd& points);

/// Latin hypercube improved by within-column swaps that lower the
/// Morris-Mitchell phi_p criterion; the stratum structure is preserved.
Eigen::MatrixXd maximin_latin_hypercube(Eigen::Index n, Eigen::Index d, Rng& rng);

}  // namespace qhsri
