#include "sdflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sdflow/fastmath.hpp"
#include "sdflow/rng.hpp"

namespace sdflow {

FrequencySet make_frequency_set(int k, int dim, std::uint64_t seed) {
    if (k < 1 || dim < 1)
        throw std::invalid_argument("make_frequency_set: need k >= 1 and dim >= 1");
    Rng rng(derive_seed(seed, SeedStream::Frequencies));
    return FrequencySet{rng.normal_matrix(k, dim)};
}

EmpiricalCf empirical_cf(const ParticleSet& ps, const FrequencySet& freqs) {
    if (ps.empty()) throw std::invalid_argument("empirical_cf: empty sample");
    if (ps.dim() != freqs.dim()) throw std::invalid_argument("empirical_cf: dimension mismatch");
    const Eigen::MatrixXd proj = ps.points() * freqs.omegas.transpose();  // N x K
    EmpiricalCf cf;
    cf.re.resize(freqs.count());
    cf.im.resize(freqs.count());
    const Eigen::Index n = ps.count();
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::VectorXd sines(n), cosines(n);
    for (Eigen::Index k = 0; k < freqs.count(); ++k) {
        sincos_array(proj.col(k).data(), sines.data(), cosines.data(),
                     static_cast<std::size_t>(n));
        cf.re(k) = cosines.sum() * inv_n;
        cf.im(k) = sines.sum() * inv_n;
    }
    return cf;
}

double cfd_between(const EmpiricalCf& a, const EmpiricalCf& b) {
    if (a.re.size() != b.re.size()) throw std::invalid_argument("cfd_between: size mismatch");
    return ((a.re - b.re).array().square() + (a.im - b.im).array().square()).sqrt().mean();
}

double cfd(const ParticleSet& x, const ParticleSet& y, const FrequencySet& freqs) {
    return cfd_between(empirical_cf(x, freqs), empirical_cf(y, freqs));
}

double calibrate_threshold(const Sampler& sampler, int n, int trials, const FrequencySet& freqs,
                           std::uint64_t seed) {
    if (n < 1 || trials < 1)
        throw std::invalid_argument("calibrate_threshold: need n >= 1 and trials >= 1");
    double max_cfd = 0.0;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = derive_seed(seed, SeedStream::Calibration, t);
        const ParticleSet a = sampler(n, derive_seed(trial_seed, 0));
        const ParticleSet b = sampler(n, derive_seed(trial_seed, 1));
        max_cfd = std::max(max_cfd, cfd(a, b, freqs));
    }
    return max_cfd;
}

std::vector<double> nn_distances(const ParticleSet& a, const ParticleSet& b, bool exclude_self) {
    if (a.dim() != b.dim()) throw std::invalid_argument("nn_distances: dimension mismatch");
    if (exclude_self && (a.count() != b.count() || a.count() < 2))
        throw std::invalid_argument("nn_distances: exclude_self needs the same set with N >= 2");
    const Eigen::Index na = a.count(), nb = b.count();
    std::vector<double> out(static_cast<std::size_t>(na));
    for (Eigen::Index i = 0; i < na; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < nb; ++j) {
            if (exclude_self && i == j) continue;
            best = std::min(best, (a.points().row(i) - b.points().row(j)).squaredNorm());
        }
        out[static_cast<std::size_t>(i)] = std::sqrt(best);
    }
    return out;
}

}  // namespace sdflow
