#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace qhsri {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds from counters.
std::uint64_t mix64(std::uint64_t x);

/// Hashes a run seed together with any number of counters into a stream seed.
/// Streams keyed this way do not depend on evaluation order, so parallel
/// consumers reproduce the serial results.
std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> counters);

Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> counters);

/// Hash of the exact bit pattern of a design vector.
std::uint64_t hash_point(const Eigen::Ref<const Eigen::VectorXd>& x);

double uniform01(Rng& rng);
double standard_normal(Rng& rng);

/// n x d matrix of independent U(0,1) rows.
Eigen::MatrixXd uniform_points(Eigen::Index n, Eigen::Index d, Rng& rng);

}  // namespace qhsri
