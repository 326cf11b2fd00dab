#include "aespace/video.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "aespace/errors.hpp"
#include "aespace/ranker.hpp"

namespace aespace {

void KalmanConfig::validate() const {
    if (!(q >= 0.0) || !std::isfinite(q)) throw ConfigError(fmt::format("kalman q must be >= 0, got {}", q));
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError(fmt::format("kalman r must be > 0, got {}", r));
    if (!(p0 > 0.0) || !std::isfinite(p0)) throw ConfigError(fmt::format("kalman p0 must be > 0, got {}", p0));
}

KalmanFilter::KalmanFilter(double x0, const KalmanConfig& config)
    : x_(x0), p_(config.p0), q_(config.q), r_(config.r) {
    config.validate();
}

double KalmanFilter::update(double z) {
    p_ += q_;
    gain_ = p_ / (p_ + r_);
    x_ += gain_ * (z - x_);
    p_ *= 1.0 - gain_;
    return x_;
}

std::vector<double> kalman_smooth(std::span<const double> series, const KalmanConfig& config) {
    if (series.empty()) throw EmptyInputError("kalman smoothing of an empty series");
    KalmanFilter filter(config.x0.value_or(series.front()), config);
    std::vector<double> out;
    out.reserve(series.size());
    for (double z : series) out.push_back(filter.update(z));
    return out;
}

void PeakConfig::validate() const {
    if (min_separation < 1) throw ConfigError("peak min separation must be >= 1");
    if (!(min_prominence >= 0.0)) throw ConfigError("peak min prominence must be >= 0");
}

double peak_prominence(std::span<const double> series, std::size_t index) {
    const double height = series[index];
    double left_base = height;
    for (std::size_t k = index; k-- > 0;) {
        if (series[k] > height) break;
        left_base = std::min(left_base, series[k]);
    }
    double right_base = height;
    for (std::size_t k = index + 1; k < series.size(); ++k) {
        if (series[k] > height) break;
        right_base = std::min(right_base, series[k]);
    }
    return height - std::max(left_base, right_base);
}

std::vector<std::size_t> detect_peaks(std::span<const double> series, const PeakConfig& config) {
    config.validate();
    std::vector<std::size_t> candidates;
    const std::size_t n = series.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (series[i - 1] < series[i]) {
            std::size_t end = i; // last index of the plateau starting at i
            while (end + 1 < n && series[end + 1] == series[i]) ++end;
            if (end + 1 < n && series[end + 1] < series[i]) candidates.push_back(i);
            i = end + 1;
        } else {
            ++i;
        }
    }

    std::erase_if(candidates, [&](std::size_t k) {
        return peak_prominence(series, k) < config.min_prominence;
    });

    std::vector<std::size_t> by_height = candidates;
    std::stable_sort(by_height.begin(), by_height.end(),
                     [&](std::size_t x, std::size_t y) { return series[x] > series[y]; });
    // Kept peaks stay ordered by index, so only the nearest neighbour on each side matters.
    std::set<std::size_t> kept;
    for (std::size_t k : by_height) {
        const auto right = kept.lower_bound(k);
        if (right != kept.end() && *right - k < config.min_separation) continue;
        if (right != kept.begin() && k - *std::prev(right) < config.min_separation) continue;
        kept.insert(k);
    }
    return {kept.begin(), kept.end()};
}

std::vector<double> score_sequence(const EncoderParams& params, std::span<const Vector> frames) {
    if (frames.empty()) return {};
    Matrix x(static_cast<Eigen::Index>(params.input_dim()), static_cast<Eigen::Index>(frames.size()));
    for (std::size_t k = 0; k < frames.size(); ++k) {
        if (frames[k].size() != x.rows()) {
            throw ShapeError(fmt::format("frame {} has {} features, model expects {}", k,
                                         frames[k].size(), x.rows()));
        }
        x.col(static_cast<Eigen::Index>(k)) = frames[k];
    }
    const Matrix phi = forward_batch(params, x).output();
    std::vector<double> scores(frames.size());
    for (std::size_t k = 0; k < frames.size(); ++k) {
        scores[k] = projection_score(phi.col(static_cast<Eigen::Index>(k)));
    }
    return scores;
}

std::vector<double> score_sequence(const EncoderParams& params, std::span<const FrameRecord> frames) {
    std::vector<Vector> features;
    features.reserve(frames.size());
    for (const auto& f : frames) features.push_back(f.features);
    return score_sequence(params, std::span<const Vector>(features));
}

void write_video_csv(std::span<const double> raw, std::span<const double> smoothed,
                     std::span<const std::size_t> peaks, std::ostream& out) {
    if (raw.size() != smoothed.size()) throw ShapeError("raw and smoothed series differ in length");
    out << "frame,raw_score,smoothed_score,is_peak\n";
    std::size_t next_peak = 0;
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const bool peak = next_peak < peaks.size() && peaks[next_peak] == k;
        if (peak) ++next_peak;
        out << fmt::format("{},{:.17g},{:.17g},{}\n", k, raw[k], smoothed[k], peak ? 1 : 0);
    }
}

} // namespace aespace
