#include "aespace/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "aespace/errors.hpp"
#include "aespace/random.hpp"

namespace aespace {

void SynthConfig::validate() const {
    if (n < 1) throw ConfigError(fmt::format("synth: n must be >= 1, got {}", n));
    if (d_in < 2) throw ConfigError(fmt::format("synth: d_in must be >= 2, got {}", d_in));
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw ConfigError(fmt::format("synth: noise sigma must be >= 0, got {}", noise_sigma));
    }
    if (view_lo < 100) throw ConfigError(fmt::format("synth: view_lo must be >= 100, got {}", view_lo));
    if (view_lo >= view_hi) {
        throw ConfigError(fmt::format("synth: view range [{}, {}] is empty", view_lo, view_hi));
    }
}

Eigen::Matrix<double, kBasisSize, 1> latent_basis(double s) {
    const double angle = 2.0 * std::numbers::pi * s;
    Eigen::Matrix<double, kBasisSize, 1> b;
    b << s, s * s, s * s * s, std::sin(angle), std::cos(angle);
    return b;
}

SynthOutput generate(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);

    Eigen::MatrixXd mixing(config.d_in, kBasisSize);
    for (Eigen::Index r = 0; r < mixing.rows(); ++r) {
        for (Eigen::Index c = 0; c < kBasisSize; ++c) mixing(r, c) = rng.normal();
        mixing.row(r).normalize();
    }

    const double log_lo = std::log(static_cast<double>(config.view_lo));
    const double log_hi = std::log(static_cast<double>(config.view_hi) + 1.0);
    const int width = std::max(6, static_cast<int>(std::to_string(config.n - 1).size()));

    SynthOutput out;
    out.mixing = mixing;
    for (std::int64_t i = 0; i < config.n; ++i) {
        const double latent = rng.uniform01();
        auto views = static_cast<std::int64_t>(std::floor(std::exp(log_lo + rng.uniform01() * (log_hi - log_lo))));
        views = std::clamp(views, config.view_lo, config.view_hi);
        const auto faves = std::clamp<std::int64_t>(
            std::llround(std::pow(static_cast<double>(views), latent)), 1, views);

        Vector features = mixing * latent_basis(latent);
        for (Eigen::Index k = 0; k < features.size(); ++k) {
            features[k] += config.noise_sigma * rng.normal();
        }
        out.dataset.add({fmt::format("img_{:0{}}", i, width), views, faves, std::move(features), latent});
    }
    return out;
}

void write_synth_sidecar(const SynthConfig& config, const Eigen::MatrixXd& mixing,
                         std::ostream& out) {
    out << "{\n";
    out << fmt::format("  \"n\": {},\n  \"d_in\": {},\n  \"noise_sigma\": {:.17g},\n", config.n,
                       config.d_in, config.noise_sigma);
    out << fmt::format("  \"seed\": {},\n  \"view_range\": [{}, {}],\n", config.seed,
                       config.view_lo, config.view_hi);
    out << "  \"rng\": \"mt19937_64 + explicit uniform/normal transforms\",\n";
    out << "  \"basis\": [\"s\", \"s^2\", \"s^3\", \"sin(2*pi*s)\", \"cos(2*pi*s)\"],\n";
    out << "  \"mixing\": [";
    for (Eigen::Index r = 0; r < mixing.rows(); ++r) {
        out << (r == 0 ? "\n    [" : ",\n    [");
        for (Eigen::Index c = 0; c < mixing.cols(); ++c) {
            out << (c == 0 ? "" : ", ") << fmt::format("{:.17g}", mixing(r, c));
        }
        out << ']';
    }
    out << "\n  ]\n}\n";
}

} // namespace aespace
