#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>
#include <vector>

#include "sdflow/flows.hpp"
#include "sdflow/rng.hpp"

using namespace sdflow;

namespace {

ParticleSet row_set(std::initializer_list<std::initializer_list<double>> rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return ParticleSet(std::move(m));
}

// Dense grid search over the pointwise denoising objective
//   E(D; z, sigma) = (1/n) sum_i N(z; x_i, sigma^2) (D - x_i)^2
// for 1-D data. Independent of the implementation path under test.
double grid_search_denoiser_1d(double z, const std::vector<double>& xs, double sigma2,
                               double resolution) {
    double lo = xs.front(), hi = xs.front();
    for (double x : xs) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    lo -= 0.5;
    hi += 0.5;
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * sigma2);
    double best_d = lo, best_e = std::numeric_limits<double>::infinity();
    for (double d = lo; d <= hi; d += resolution) {
        double e = 0.0;
        for (double x : xs)
            e += norm * std::exp(-(z - x) * (z - x) / (2.0 * sigma2)) * (d - x) * (d - x);
        if (e < best_e) {
            best_e = e;
            best_d = d;
        }
    }
    return best_d;
}

}  // namespace

TEST_CASE("sd_update collapses to point difference for singleton sets") {
    const ParticleSet x = row_set({{3.0, -1.0}});
    const ParticleSet y = row_set({{1.0, 2.0}});
    const ParticleSet z = row_set({{-10.0, 4.0}, {0.5, 0.5}});
    const Eigen::MatrixXd d = sd_update(z, x, y, 0.7);
    for (int i = 0; i < 2; ++i) {
        CHECK(d(i, 0) == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(d(i, 1) == doctest::Approx(-3.0).epsilon(1e-14));
    }
}

TEST_CASE("sd_update vanishes when target and source are the same set") {
    Rng rng(21);
    const ParticleSet x(rng.normal_matrix(20, 3));
    const ParticleSet z(rng.normal_matrix(10, 3));
    const Eigen::MatrixXd d = sd_update(z, x, x, 1.3);
    CHECK(d.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sd_update hand-evaluated 1-D instance") {
    // X = {0, 2}, Y = {0.5}, z = 0.5, sigma2 = 1: weights exp(-0.125), exp(-1.125)
    const double e0 = std::exp(-0.125), e1 = std::exp(-1.125);
    const double mean_p = (e0 * 0.0 + e1 * 2.0) / (e0 + e1);
    const ParticleSet x = row_set({{0.0}, {2.0}});
    const ParticleSet y = row_set({{0.5}});
    const ParticleSet z = row_set({{0.5}});
    const Eigen::MatrixXd d = sd_update(z, x, y, 1.0);
    CHECK(mean_p == doctest::Approx(0.53788284273999021).epsilon(1e-12));
    CHECK(d(0, 0) == doctest::Approx(mean_p - 0.5).epsilon(1e-12));
}

TEST_CASE("sd_update usage errors") {
    const ParticleSet a = row_set({{0.0}});
    const ParticleSet b = row_set({{0.0, 1.0}});
    CHECK_THROWS_AS(sd_update(a, b, a, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(sd_update(a, a, a, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(sd_update(a, a, a, -2.0), std::invalid_argument);
}

TEST_CASE("normalized MMD equals half the SD update to full precision") {
    Rng rng(33);
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 1 + static_cast<int>(rng.below(4));
        const ParticleSet x(rng.normal_matrix(5 + static_cast<int>(rng.below(20)), d));
        const ParticleSet y(rng.normal_matrix(5 + static_cast<int>(rng.below(20)), d));
        const ParticleSet z(rng.normal_matrix(8, d));
        const double s2 = 0.05 + 3.0 * rng.uniform();
        const Eigen::MatrixXd lhs = mmd_update(z, x, y, s2, true);
        const Eigen::MatrixXd rhs = 0.5 * sd_update(z, x, y, s2);
        CHECK(lhs == rhs);  // bitwise
    }
}

TEST_CASE("raw MMD hand-evaluated instance and cancellation") {
    const ParticleSet x = row_set({{1.0}});
    const ParticleSet y = row_set({{-1.0}});
    const ParticleSet z = row_set({{0.0}});
    const Eigen::MatrixXd d = mmd_update(z, x, y, 1.0, false);
    CHECK(d(0, 0) == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-12));

    // identical sets and a symmetric evaluation point: terms cancel
    const ParticleSet xy = row_set({{-1.0}, {1.0}});
    const Eigen::MatrixXd d2 = mmd_update(z, xy, xy, 0.7, false);
    CHECK(std::abs(d2(0, 0)) < 1e-15);
}

TEST_CASE("svgd single-particle and repulsion values") {
    // single particle, standard normal target: phi(z) = -z
    const ScoreFunction std_normal = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return -v;
    };
    const ParticleSet z1 = row_set({{1.7, -0.3}});
    const Eigen::MatrixXd p1 = svgd_update(z1, std_normal, 2.0);
    CHECK(p1(0, 0) == doctest::Approx(-1.7).epsilon(1e-14));
    CHECK(p1(0, 1) == doctest::Approx(0.3).epsilon(1e-14));

    // single particle at the mean of any Gaussian: fixed point
    const ScoreFunction shifted = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return (Eigen::VectorXd(1) << (5.0 - v(0)) / 2.0).finished();
    };
    const ParticleSet at_mean = row_set({{5.0}});
    CHECK(svgd_update(at_mean, shifted, 1.0)(0, 0) == 0.0);

    // two particles, zero score: pure kernel repulsion
    const ScoreFunction zero = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return Eigen::VectorXd::Zero(v.size());
    };
    const ParticleSet z2 = row_set({{0.0}, {1.0}});
    const Eigen::MatrixXd p2 = svgd_update(z2, zero, 1.0);
    CHECK(p2(0, 0) == doctest::Approx(-std::exp(-0.5) / 2.0).epsilon(1e-12));
    CHECK(p2(1, 0) == doctest::Approx(std::exp(-0.5) / 2.0).epsilon(1e-12));
}

TEST_CASE("analytic SD update known values") {
    const ScoreFunction s1 = [](const Eigen::VectorXd& v) -> Eigen::VectorXd { return -v; };
    const ParticleSet z(Eigen::MatrixXd::Random(6, 2));
    CHECK(analytic_sd_update(z, s1, s1).cwiseAbs().maxCoeff() == 0.0);

    // p = N(1, 1), q = N(0, 1): difference is 1 at every point
    const ScoreFunction p = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return (Eigen::VectorXd(1) << 1.0 - v(0)).finished();
    };
    const ScoreFunction q = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return (Eigen::VectorXd(1) << -v(0)).finished();
    };
    Rng rng(8);
    const ParticleSet z1(rng.normal_matrix(9, 1));
    const Eigen::MatrixXd d = analytic_sd_update(z1, p, q);
    for (int i = 0; i < 9; ++i) CHECK(d(i, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("denoiser known values and convex-hull membership") {
    const ParticleSet x0 = row_set({{2.0, -1.0}});
    const ParticleSet z = row_set({{100.0, 100.0}, {0.0, 0.0}});
    const Eigen::MatrixXd d = denoiser(z, x0, 0.5);
    for (int i = 0; i < 2; ++i) {
        CHECK(d(i, 0) == 2.0);
        CHECK(d(i, 1) == -1.0);
    }

    // equidistant evaluation point maps to the midpoint
    const ParticleSet pair = row_set({{-1.0, 0.0}, {1.0, 0.0}});
    const ParticleSet mid = row_set({{0.0, 3.0}});
    const Eigen::MatrixXd m = denoiser(mid, pair, 1.0);
    CHECK(m(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(m(0, 1) == doctest::Approx(0.0).epsilon(1e-14));

    Rng rng(12);
    const ParticleSet data(rng.normal_matrix(30, 2));
    const ParticleSet zs(5.0 * rng.normal_matrix(40, 2));
    const Eigen::MatrixXd out = denoiser(zs, data, 0.2);
    for (int j = 0; j < 2; ++j) {
        CHECK(out.col(j).minCoeff() >= data.points().col(j).minCoeff() - 1e-12);
        CHECK(out.col(j).maxCoeff() <= data.points().col(j).maxCoeff() + 1e-12);
    }
}

TEST_CASE("denoiser matches the grid-search argmin of the denoising objective") {
    Rng rng(77);
    const double res = 1e-3;
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> xs = {rng.normal(), rng.normal(), rng.normal()};
        const double s2 = 0.2 + rng.uniform();
        Eigen::MatrixXd xm(3, 1);
        for (int i = 0; i < 3; ++i) xm(i, 0) = xs[static_cast<std::size_t>(i)];
        const ParticleSet data{Eigen::MatrixXd(xm)};
        for (int k = 0; k < 4; ++k) {
            const double zv = 2.0 * rng.normal();
            const ParticleSet z = row_set({{zv}});
            const double got = denoiser(z, data, s2)(0, 0);
            const double want = grid_search_denoiser_1d(zv, xs, s2, res);
            CHECK(std::abs(got - want) < res);
        }
    }
}

TEST_CASE("sd_update equals the difference of denoisers exactly") {
    Rng rng(55);
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 1 + static_cast<int>(rng.below(3));
        const ParticleSet x(rng.normal_matrix(12, d));
        const ParticleSet y(rng.normal_matrix(7, d));
        const ParticleSet z(rng.normal_matrix(9, d));
        const double s2 = 0.1 + rng.uniform();
        const Eigen::MatrixXd lhs = sd_update(z, x, y, s2);
        const Eigen::MatrixXd rhs = denoiser(z, x, s2) - denoiser(z, y, s2);
        CHECK(lhs == rhs);  // bitwise
    }
}

TEST_CASE("diffusion step endpoints and variance identity") {
    Rng rng(61);
    const ParticleSet data(rng.normal_matrix(15, 2));
    const Eigen::VectorXd y = rng.normal_vector(2);
    const Eigen::VectorXd eps = rng.normal_vector(2);

    // sigma2_s == sigma2_t: rho = 0, unchanged
    const Eigen::VectorXd same = diffusion_step(y, data, 2.0, 2.0, eps);
    CHECK((same - y).cwiseAbs().maxCoeff() == 0.0);

    // sigma2_s == 0: rho = 1, jumps to the denoiser output
    const Eigen::VectorXd jump = diffusion_step(y, data, 2.0, 0.0, eps);
    const ParticleSet z{Eigen::MatrixXd((y + std::sqrt(2.0) * eps).transpose())};
    const Eigen::MatrixXd den = denoiser(z, data, 2.0);
    CHECK((jump - den.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-14);

    CHECK_THROWS_AS(diffusion_step(y, data, 1.0, 2.0, eps), std::invalid_argument);

    for (int rep = 0; rep < 1000; ++rep) {
        const double s2t = 0.01 + 5.0 * rng.uniform();
        const double s2s = s2t * rng.uniform();
        const double rho = 1.0 - s2s / s2t;
        CHECK(std::abs(rho * s2s + (1.0 - rho) * (1.0 - rho) * s2t - s2s) < 1e-12);
    }
}

TEST_CASE("diffusion step equals y + rho (denoiser(z) - y)") {
    Rng rng(62);
    for (int rep = 0; rep < 20; ++rep) {
        const ParticleSet data(rng.normal_matrix(10, 3));
        const Eigen::VectorXd y = rng.normal_vector(3);
        const Eigen::VectorXd eps = rng.normal_vector(3);
        const double s2t = 0.5 + rng.uniform();
        const double s2s = s2t * rng.uniform();
        const double rho = 1.0 - s2s / s2t;
        const ParticleSet z{Eigen::MatrixXd((y + std::sqrt(s2t) * eps).transpose())};
        const Eigen::VectorXd expect =
            y + rho * (denoiser(z, data, s2t).row(0).transpose() - y);
        const Eigen::VectorXd got = diffusion_step(y, data, s2t, s2s, eps);
        CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("translation equivariance of flow updates") {
    Rng rng(71);
    const ParticleSet x(rng.normal_matrix(15, 2));
    const ParticleSet y(rng.normal_matrix(10, 2));
    const ParticleSet z(rng.normal_matrix(6, 2));
    const Eigen::RowVector2d c(42.0, -17.0);
    const ParticleSet xs{Eigen::MatrixXd(x.points().rowwise() + c)};
    const ParticleSet ys{Eigen::MatrixXd(y.points().rowwise() + c)};
    const ParticleSet zs{Eigen::MatrixXd(z.points().rowwise() + c)};
    const double s2 = 0.8;

    const Eigen::MatrixXd den_shift = denoiser(zs, xs, s2);
    const Eigen::MatrixXd den = denoiser(z, x, s2);
    CHECK((den_shift - (den.rowwise() + c)).cwiseAbs().maxCoeff() < 1e-9);

    CHECK((sd_update(zs, xs, ys, s2) - sd_update(z, x, y, s2)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((mmd_update(zs, xs, ys, s2, false) - mmd_update(z, x, y, s2, false))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    CHECK((mmd_update(zs, xs, ys, s2, true) - mmd_update(z, x, y, s2, true))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
}

TEST_CASE("sd_update norm is bounded by the joint diameter") {
    Rng rng(81);
    for (int rep = 0; rep < 10; ++rep) {
        const ParticleSet x(3.0 * rng.normal_matrix(12, 2));
        const ParticleSet y(3.0 * rng.normal_matrix(9, 2));
        const ParticleSet z(6.0 * rng.normal_matrix(5, 2));
        double diam = 0.0;
        Eigen::MatrixX2d all(21, 2);
        all << x.points(), y.points();
        for (int i = 0; i < 21; ++i)
            for (int j = 0; j < 21; ++j)
                diam = std::max(diam, (all.row(i) - all.row(j)).norm());
        const Eigen::MatrixXd d = sd_update(z, x, y, 0.5);
        CHECK(d.rowwise().norm().maxCoeff() <= diam + 1e-9);
    }
}

TEST_CASE("raw MMD pushes along the injected noise when distributions are far apart") {
    // Well-separated clusters, bandwidth far below the inter-particle spacing:
    // the raw-MMD direction aligns with sigma * eps while SD does not.
    Rng rng(91);
    const int m = 64;
    Eigen::MatrixXd xs = rng.normal_matrix(m, 2);
    xs.col(0).array() += 6.0;
    Eigen::MatrixXd ys = rng.normal_matrix(m, 2);
    ys.col(0).array() -= 6.0;
    const double s2 = 0.0005;
    const Eigen::MatrixXd eps = rng.normal_matrix(m, 2);
    const ParticleSet x{std::move(xs)};
    const ParticleSet y{std::move(ys)};
    const ParticleSet z{Eigen::MatrixXd(y.points() + std::sqrt(s2) * eps)};

    const Eigen::MatrixXd mmd_dir = mmd_update(z, x, y, s2, false);
    const Eigen::MatrixXd sd_dir = sd_update(z, x, y, s2);
    double mmd_cos = 0.0, sd_cos = 0.0;
    for (int i = 0; i < m; ++i) {
        const double en = eps.row(i).norm();
        mmd_cos += mmd_dir.row(i).dot(eps.row(i)) / (mmd_dir.row(i).norm() * en);
        sd_cos += sd_dir.row(i).dot(eps.row(i)) / (sd_dir.row(i).norm() * en);
    }
    mmd_cos /= m;
    sd_cos /= m;
    CHECK(mmd_cos > 0.9);
    CHECK(sd_cos < 0.5);
}

TEST_CASE("analytic SD flow between 1-D Gaussians descends the KL divergence") {
    // p = N(2, 1), q0 = N(0, 1); q's score is refit from particle moments each
    // step and the KL estimate comes from the same fitted moments.
    Rng rng(101);
    const int n = 4096, steps = 100;
    const double eta = 0.1;
    Eigen::MatrixXd pts = rng.normal_matrix(n, 1);
    const ScoreFunction score_p = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return (Eigen::VectorXd(1) << 2.0 - v(0)).finished();
    };
    auto fitted_kl = [&](const Eigen::MatrixXd& p) {
        const double m = p.col(0).mean();
        const double s2 = (p.col(0).array() - m).square().mean();
        return 0.5 * (s2 + (m - 2.0) * (m - 2.0) - 1.0 - std::log(s2));
    };
    double prev = fitted_kl(pts);
    for (int t = 0; t < steps; ++t) {
        const double m = pts.col(0).mean();
        const double s2 = std::max((pts.col(0).array() - m).square().mean(), 1e-12);
        const ScoreFunction score_q = [m, s2](const Eigen::VectorXd& v) -> Eigen::VectorXd {
            return (Eigen::VectorXd(1) << (m - v(0)) / s2).finished();
        };
        const Eigen::MatrixXd dir = analytic_sd_update(ParticleSet(pts), score_p, score_q);
        pts += eta * dir;
        const double kl = fitted_kl(pts);
        CHECK(kl <= prev + 1e-3);
        prev = kl;
    }
    CHECK(prev < 0.01);
}

TEST_CASE("flow kind string round trip") {
    for (FlowKind k : {FlowKind::KernelSD, FlowKind::MMD, FlowKind::MMDNormalized, FlowKind::SVGD,
                       FlowKind::AnalyticSD, FlowKind::DiffusionStep})
        CHECK(flow_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(flow_kind_from_string("nope"), std::invalid_argument);
}
