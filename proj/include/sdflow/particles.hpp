#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sdflow {

/// An ordered set of N points in R^d, stored one point per row.
class ParticleSet {
public:
    ParticleSet() = default;

    /// Validates shape (N >= 1, d >= 1) and finiteness of every coordinate.
    explicit ParticleSet(Eigen::MatrixXd pts);

    Eigen::Index count() const { return points_.rows(); }
    Eigen::Index dim() const { return points_.cols(); }
    bool empty() const { return points_.rows() == 0; }

    const Eigen::MatrixXd& points() const { return points_; }
    Eigen::MatrixXd& points() { return points_; }

    Eigen::VectorXd point(Eigen::Index i) const { return points_.row(i).transpose(); }

    /// Rows of this set selected by index, in the given order.
    ParticleSet select(const std::vector<int>& rows) const;

private:
    Eigen::MatrixXd points_;
};

/// CSV point format: one point per row, comma-separated coordinates.
/// An optional header row "x0,x1,..." is written on request and skipped on read.
void save_csv(const ParticleSet& ps, const std::filesystem::path& path, bool header = false);
ParticleSet load_csv(const std::filesystem::path& path);

/// Fixed-width-free decimal formatting used for all CSV output; round-trips
/// doubles exactly.
std::string format_double(double v);

/// A seeded sample source: (count, seed) -> ParticleSet.
using Sampler = std::function<ParticleSet(int, std::uint64_t)>;

}  // namespace sdflow
