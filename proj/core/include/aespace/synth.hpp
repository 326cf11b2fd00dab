#pragma once

#include <cstdint>
#include <iosfwd>

#include <Eigen/Core>

#include "aespace/data_model.hpp"

namespace aespace {

/// Synthetic collection with a known latent score per record.
struct SynthConfig {
    std::int64_t n = 1000;
    std::int64_t d_in = 16;
    double noise_sigma = 0.05;
    std::uint64_t seed = 1;
    std::int64_t view_lo = 1000;
    std::int64_t view_hi = 1000000;

    /// Throws ConfigError unless n >= 1, d_in >= 2, noise_sigma >= 0, 100 <= view_lo < view_hi.
    void validate() const;
};

inline constexpr int kBasisSize = 5;

/// Nonlinear basis [s, s^2, s^3, sin(2 pi s), cos(2 pi s)].
Eigen::Matrix<double, kBasisSize, 1> latent_basis(double s);

struct SynthOutput {
    Dataset dataset;
    Eigen::MatrixXd mixing; // d_in x 5, unit-norm rows
};

/// Draw order from one Rng(seed) stream: the mixing matrix row by row (5 normals per
/// row, then normalized), then per record: latent s ~ U[0,1), views log-uniform on
/// [view_lo, view_hi], d_in noise normals. faves = max(1, round(views^s)), so the
/// crowd score ln(faves)/ln(views) reproduces s up to rounding.
SynthOutput generate(const SynthConfig& config);

/// Sidecar JSON with the config and mixing matrix (row-major).
void write_synth_sidecar(const SynthConfig& config, const Eigen::MatrixXd& mixing,
                         std::ostream& out);

} // namespace aespace
