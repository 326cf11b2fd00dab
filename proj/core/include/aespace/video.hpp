#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "aespace/data_model.hpp"
#include "aespace/encoder.hpp"

namespace aespace {

struct KalmanConfig {
    double q = 1e-4;  // process-noise variance
    double r = 1e-2;  // measurement-noise variance
    double p0 = 1.0;  // initial variance
    std::optional<double> x0; // explicit initial state; nullopt starts at the first measurement

    /// Throws ConfigError unless q >= 0, r > 0, p0 > 0.
    void validate() const;
};

/// Scalar random-walk Kalman filter.
class KalmanFilter {
public:
    KalmanFilter(double x0, const KalmanConfig& config);

    /// Predict then update with measurement z; returns the new estimate.
    double update(double z);

    double estimate() const noexcept { return x_; }
    double variance() const noexcept { return p_; }
    double last_gain() const noexcept { return gain_; }

private:
    double x_;
    double p_;
    double q_;
    double r_;
    double gain_ = 0.0;
};

/// Causal filtered estimate after each measurement. Throws EmptyInputError on empty input.
std::vector<double> kalman_smooth(std::span<const double> series, const KalmanConfig& config);

struct PeakConfig {
    std::size_t min_separation = 1;
    double min_prominence = 0.0;

    void validate() const;
};

/// Height above the higher of the two bases, each base being the minimum between the
/// peak and the nearest strictly higher sample (or the series end) on that side.
double peak_prominence(std::span<const double> series, std::size_t index);

/// Strict interior local maxima (plateaus report their leftmost index) with enough
/// prominence, thinned greedily by descending height to min_separation. Ascending output.
std::vector<std::size_t> detect_peaks(std::span<const double> series, const PeakConfig& config);

/// Projection score per frame, in input order.
std::vector<double> score_sequence(const EncoderParams& params, std::span<const Vector> frames);
std::vector<double> score_sequence(const EncoderParams& params, std::span<const FrameRecord> frames);

/// CSV `frame,raw_score,smoothed_score,is_peak`.
void write_video_csv(std::span<const double> raw, std::span<const double> smoothed,
                     std::span<const std::size_t> peaks, std::ostream& out);

} // namespace aespace
