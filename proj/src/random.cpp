#include "qhsri/random.hpp"

#include <cstring>

namespace qhsri {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    std::uint64_t h = mix64(seed);
    for (auto c : counters) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
    return h;
}

Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    return Rng(stream_seed(seed, counters));
}

std::uint64_t hash_point(const Eigen::Ref<const Eigen::VectorXd>& x) {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double v = x[i] == 0.0 ? 0.0 : x[i];  // fold -0.0
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = mix64(h ^ bits);
    }
    return h;
}

double uniform01(Rng& rng) {
    // 53 random bits -> [0, 1)
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

Eigen::MatrixXd uniform_points(Eigen::Index n, Eigen::Index d, Rng& rng) {
    Eigen::MatrixXd out(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out(i, j) = uniform01(rng);
    return out;
}

}  // namespace qhsri
