#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace sdflow {

// Stream identifiers used when deriving per-purpose seeds from a user seed.
// Values are arbitrary but frozen: changing them changes every seeded run.
enum class SeedStream : std::uint64_t {
    TargetSample = 1,
    BaseSample = 2,
    Calibration = 3,
    Noise = 4,
    BatchTarget = 5,
    BatchSource = 6,
    Frequencies = 7,
    ModelInit = 8,
    Latent = 9,
    Trial = 10,
};

std::uint64_t mix64(std::uint64_t x);

/// Derives an independent child seed from (base, stream, index).
std::uint64_t derive_seed(std::uint64_t base, SeedStream stream, std::uint64_t index = 0);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

/// Deterministic random source. Uniform and normal draws are generated from
/// the raw mt19937_64 output so the stream does not depend on the standard
/// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(mix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // (0, 1], safe for log()
    double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double normal();

    Eigen::VectorXd normal_vector(Eigen::Index d);
    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

    /// Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n);

    /// k distinct indices drawn from [0, n), in draw order.
    std::vector<int> sample_without_replacement(int n, int k);

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sdflow
