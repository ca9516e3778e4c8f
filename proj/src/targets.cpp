#include "sdflow/targets.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "sdflow/rng.hpp"

namespace sdflow {

void GaussianMixtureSpec::validate() const {
    if (weights.size() < 1 || means.rows() != weights.size() ||
        variances.size() != weights.size())
        throw std::invalid_argument("GaussianMixtureSpec: inconsistent component count");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("GaussianMixtureSpec: weights must sum to 1");
    if ((weights.array() < 0.0).any())
        throw std::invalid_argument("GaussianMixtureSpec: weights must be non-negative");
    if ((variances.array() <= 0.0).any())
        throw std::invalid_argument("GaussianMixtureSpec: variances must be positive");
}

Eigen::VectorXd mixture_mean(const GaussianMixtureSpec& spec) {
    return spec.means.transpose() * spec.weights;
}

static Eigen::VectorXd component_log_densities(const GaussianMixtureSpec& spec,
                                               const Eigen::VectorXd& z) {
    const double d = static_cast<double>(spec.dim());
    Eigen::VectorXd out(spec.components());
    for (Eigen::Index k = 0; k < spec.components(); ++k) {
        const double s2 = spec.variances(k);
        const double sq = (z - spec.means.row(k).transpose()).squaredNorm();
        out(k) = std::log(spec.weights(k)) - 0.5 * d * std::log(2.0 * std::numbers::pi * s2) -
                 sq / (2.0 * s2);
    }
    return out;
}

double mixture_log_density(const GaussianMixtureSpec& spec, const Eigen::VectorXd& z) {
    const Eigen::VectorXd lp = component_log_densities(spec, z);
    const double m = lp.maxCoeff();
    return m + std::log((lp.array() - m).exp().sum());
}

Eigen::VectorXd mixture_score(const GaussianMixtureSpec& spec, const Eigen::VectorXd& z) {
    const Eigen::VectorXd lp = component_log_densities(spec, z);
    const double m = lp.maxCoeff();
    const Eigen::VectorXd r = (lp.array() - m).exp();
    const double total = r.sum();
    Eigen::VectorXd score = Eigen::VectorXd::Zero(z.size());
    for (Eigen::Index k = 0; k < spec.components(); ++k)
        score += (r(k) / total) * (spec.means.row(k).transpose() - z) / spec.variances(k);
    return score;
}

ParticleSet sample_mixture(const GaussianMixtureSpec& spec, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_mixture: n must be >= 1");
    Rng rng(seed);
    Eigen::VectorXd cumulative(spec.components());
    double acc = 0.0;
    for (Eigen::Index k = 0; k < spec.components(); ++k) {
        acc += spec.weights(k);
        cumulative(k) = acc;
    }
    Eigen::MatrixXd pts(n, spec.dim());
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        Eigen::Index k = 0;
        while (k + 1 < spec.components() && u >= cumulative(k)) ++k;
        pts.row(i) = spec.means.row(k) +
                     std::sqrt(spec.variances(k)) * rng.normal_vector(spec.dim()).transpose();
    }
    return ParticleSet(std::move(pts));
}

static TargetModel from_mixture(std::string name, GaussianMixtureSpec spec) {
    spec.validate();
    TargetModel t;
    t.name = std::move(name);
    t.dim = static_cast<int>(spec.dim());
    t.mean = mixture_mean(spec);
    t.first_axis_extent = (spec.means.col(0).array() - t.mean(0)).abs().maxCoeff();
    t.mixture = spec;
    t.sampler = [spec](int n, std::uint64_t seed) { return sample_mixture(spec, n, seed); };
    t.score = [spec](const Eigen::VectorXd& z) { return mixture_score(spec, z); };
    return t;
}

TargetModel gaussian_grid_25() {
    GaussianMixtureSpec spec;
    spec.weights = Eigen::VectorXd::Constant(25, 1.0 / 25.0);
    spec.means.resize(25, 2);
    int k = 0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) spec.means.row(k++) << -4.0 + 2.0 * i, -4.0 + 2.0 * j;
    spec.variances = Eigen::VectorXd::Constant(25, 0.25);  // component sigma = 0.5
    return from_mixture("grid25", std::move(spec));
}

// Frozen center table, version 1. Hook arc (21), stem (5), dot (4); the
// second coordinate is a gentle depth twist so the curve is genuinely 3-D.
static constexpr double kMysteryCenters[30][3] = {
    {-2.0000, -0.3500, 4.0000}, {-1.9447, -0.3284, 4.4669}, {-1.7820, -0.2661, 4.9080},
    {-1.5208, -0.1710, 5.2989}, {-1.1756, -0.0548, 5.6180}, {-0.7654, 0.0683, 5.8478},
    {-0.3129, 0.1829, 5.9754},  {0.1569, 0.2749, 5.9938},   {0.6180, 0.3329, 5.9021},
    {1.0450, 0.3497, 5.7053},   {1.4142, 0.3234, 5.4142},   {1.7053, 0.2570, 5.0450},
    {1.9021, 0.1589, 4.6180},   {1.9938, 0.0411, 4.1569},   {1.9754, -0.0817, 3.6871},
    {1.8478, -0.1944, 3.2346},  {1.6180, -0.2832, 2.8244},  {1.2989, -0.3369, 2.4792},
    {0.9080, -0.3489, 2.2180},  {0.4669, -0.3179, 2.0553},  {0.0000, -0.2475, 2.0000},
    {0.0000, -0.2475, 1.7000},  {0.0000, -0.2475, 1.4000},  {0.0000, -0.2475, 1.1000},
    {0.0000, -0.2475, 0.8000},  {0.0000, -0.2475, 0.5000},  {-0.1200, -0.3500, -0.8000},
    {0.1200, -0.3500, -0.8000}, {0.0000, -0.3500, -0.9200}, {0.0000, -0.3500, -0.6800},
};

TargetModel mystery_mixture_30() {
    GaussianMixtureSpec spec;
    spec.weights = Eigen::VectorXd::Constant(30, 1.0 / 30.0);
    spec.means.resize(30, 3);
    for (int k = 0; k < 30; ++k)
        spec.means.row(k) << kMysteryCenters[k][0], kMysteryCenters[k][1], kMysteryCenters[k][2];
    spec.variances = Eigen::VectorXd::Constant(30, 0.09);  // component sigma = 0.3
    return from_mixture("mystery30", std::move(spec));
}

TargetModel swiss_roll_target() {
    constexpr double kScale = 0.5;
    constexpr double kTLo = 1.5 * std::numbers::pi;
    constexpr double kTHi = 4.5 * std::numbers::pi;
    constexpr double kHeight = 10.0;
    TargetModel t;
    t.name = "swissroll";
    t.dim = 3;
    // E[t cos t] and E[t sin t] over U[kTLo, kTHi] in closed form.
    const double span = kTHi - kTLo;
    const double ex = (std::cos(kTHi) + kTHi * std::sin(kTHi) - std::cos(kTLo) -
                       kTLo * std::sin(kTLo)) / span;
    const double ez = (std::sin(kTHi) - kTHi * std::cos(kTHi) - std::sin(kTLo) +
                       kTLo * std::cos(kTLo)) / span;
    t.mean = Eigen::Vector3d(kScale * ex, kScale * kHeight / 2.0, kScale * ez);
    t.first_axis_extent = kScale * kTHi + std::abs(t.mean(0));
    t.sampler = [](int n, std::uint64_t seed) {
        if (n < 1) throw std::invalid_argument("swiss_roll: n must be >= 1");
        Rng rng(seed);
        Eigen::MatrixXd pts(n, 3);
        for (int i = 0; i < n; ++i) {
            const double tt = kTLo + (kTHi - kTLo) * rng.uniform();
            const double h = kHeight * rng.uniform();
            pts.row(i) << kScale * tt * std::cos(tt), kScale * h, kScale * tt * std::sin(tt);
        }
        return ParticleSet(std::move(pts));
    };
    return t;
}

TargetModel linear_gaussian_model(std::uint64_t seed) {
    constexpr int kDOut = 50, kDIn = 25;
    Rng rng(derive_seed(seed, SeedStream::ModelInit));
    LinearModelSpec lin;
    lin.b = 0.5 * rng.normal_matrix(kDOut, kDIn);              // entries ~ N(0, 0.25)
    lin.mu = Eigen::VectorXd::Constant(kDOut, 10.0) + rng.normal_vector(kDOut);
    TargetModel t;
    t.name = "linear50";
    t.dim = kDOut;
    t.mean = lin.mu;
    t.first_axis_extent = 3.0 * lin.b.row(0).norm();
    t.linear = lin;
    t.sampler = [lin](int n, std::uint64_t s) {
        if (n < 1) throw std::invalid_argument("linear_gaussian_model: n must be >= 1");
        Rng r(s);
        const Eigen::MatrixXd xi = r.normal_matrix(n, kDIn);
        Eigen::MatrixXd pts = xi * lin.b.transpose();
        pts.rowwise() += lin.mu.transpose();
        return ParticleSet(std::move(pts));
    };
    return t;
}

TargetModel make_target(const std::string& name, std::uint64_t model_seed) {
    if (name == "grid25") return gaussian_grid_25();
    if (name == "mystery30") return mystery_mixture_30();
    if (name == "swissroll") return swiss_roll_target();
    if (name == "linear50") return linear_gaussian_model(model_seed);
    throw std::invalid_argument("unknown target: " + name);
}

ParticleSet offset_gaussian_base(const TargetModel& target, bool offset, int n,
                                 std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("offset_gaussian_base: n must be >= 1");
    Eigen::VectorXd center = target.mean;
    if (offset) center(0) += 1.5 * target.first_axis_extent;
    Rng rng(seed);
    Eigen::MatrixXd pts = rng.normal_matrix(n, target.dim);
    pts.rowwise() += center.transpose();
    return ParticleSet(std::move(pts));
}

void save_spec(const TargetModel& target, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_spec: cannot open " + path.string());
    out << "name = " << target.name << "\n";
    out << "dim = " << target.dim << "\n";
    out << "mean =";
    for (Eigen::Index i = 0; i < target.mean.size(); ++i)
        out << ' ' << format_double(target.mean(i));
    out << "\n";
    if (target.mixture) {
        const auto& mix = *target.mixture;
        out << "components = " << mix.components() << "\n";
        for (Eigen::Index k = 0; k < mix.components(); ++k) {
            out << "component." << k << ".weight = " << format_double(mix.weights(k)) << "\n";
            out << "component." << k << ".mean =";
            for (Eigen::Index j = 0; j < mix.dim(); ++j)
                out << ' ' << format_double(mix.means(k, j));
            out << "\n";
            out << "component." << k << ".variance = " << format_double(mix.variances(k)) << "\n";
        }
    }
    if (target.linear) {
        const auto& lin = *target.linear;
        out << "latent_dim = " << lin.b.cols() << "\n";
        out << "mu =";
        for (Eigen::Index i = 0; i < lin.mu.size(); ++i) out << ' ' << format_double(lin.mu(i));
        out << "\n";
        for (Eigen::Index i = 0; i < lin.b.rows(); ++i) {
            out << "b." << i << " =";
            for (Eigen::Index j = 0; j < lin.b.cols(); ++j)
                out << ' ' << format_double(lin.b(i, j));
            out << "\n";
        }
    }
}

}  // namespace sdflow
