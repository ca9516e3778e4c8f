#include "sdflow/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sdflow {

double gaussian_kernel(const Eigen::VectorXd& z, const Eigen::VectorXd& x, double sigma2) {
    if (z.size() != x.size())
        throw std::invalid_argument("gaussian_kernel: dimension mismatch");
    if (!(sigma2 > 0.0))
        throw std::invalid_argument("gaussian_kernel: sigma2 must be positive");
    return std::exp(-(z - x).squaredNorm() / (2.0 * sigma2));
}

Eigen::MatrixXd pairwise_sq_dists(const ParticleSet& a, const ParticleSet& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("pairwise_sq_dists: dimension mismatch");
    const Eigen::Index na = a.count(), nb = b.count(), d = a.dim();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(na, nb);
    // Column-at-a-time accumulation keeps the arithmetic exact for identical
    // rows (the difference is computed before squaring).
    for (Eigen::Index j = 0; j < nb; ++j)
        for (Eigen::Index k = 0; k < d; ++k)
            out.col(j).array() += (a.points().col(k).array() - b.points()(j, k)).square();
    return out;
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median_of: empty input");
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    double hi = values[mid];
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

double median_bandwidth(const ParticleSet& y) {
    const Eigen::Index n = y.count();
    if (n < 2) throw std::domain_error("median_bandwidth: need at least two points");
    std::vector<double> sq;
    sq.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            sq.push_back((y.points().row(i) - y.points().row(j)).squaredNorm());
    const double med = median_of(std::move(sq));
    if (!(med > 0.0))
        throw std::domain_error("median_bandwidth: degenerate input, all pairwise distances zero");
    return 2.0 * med / std::log(static_cast<double>(n) + 1.0);
}

}  // namespace sdflow
