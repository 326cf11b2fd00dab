#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "aespace/errors.hpp"
#include "aespace/ranker.hpp"
#include "aespace/video.hpp"
#include "oracles.hpp"

using namespace aespace;

namespace {

double sample_variance(const std::vector<double>& x) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double acc = 0.0;
    for (double v : x) acc += (v - mean) * (v - mean);
    return acc / static_cast<double>(x.size() - 1);
}

} // namespace

TEST_SUITE("video") {

TEST_CASE("kalman two-step hand iteration") {
    KalmanConfig cfg{.q = 0.0, .r = 1.0, .p0 = 1.0, .x0 = 0.0};
    const std::vector<double> in{1.0, 1.0};
    const auto out = kalman_smooth(in, cfg);
    REQUIRE(out.size() == 2);
    CHECK(std::fabs(out[0] - 0.5) < 1e-12);
    CHECK(std::fabs(out[1] - 2.0 / 3.0) < 1e-12);

    KalmanFilter f(0.0, cfg);
    f.update(1.0);
    f.update(1.0);
    CHECK(std::fabs(f.variance() - 1.0 / 3.0) < 1e-12);
}

TEST_CASE("kalman trusts measurements as r goes to zero") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    std::vector<double> in(200);
    for (auto& x : in) x = normal(rng);
    const auto out = kalman_smooth(in, KalmanConfig{.q = 1e-4, .r = 1e-12});
    for (std::size_t k = 0; k < in.size(); ++k) CHECK(std::fabs(out[k] - in[k]) < 1e-6);
}

TEST_CASE("constant input stays constant") {
    const std::vector<double> in(50, 0.731);
    for (double q : {0.0, 1e-4, 1.0}) {
        const auto out = kalman_smooth(in, KalmanConfig{.q = q, .r = 0.5, .p0 = 3.0});
        for (double v : out) CHECK(v == 0.731);
    }
}

TEST_CASE("kalman reduces white-noise variance") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal;
    std::vector<double> in(1000);
    for (auto& x : in) x = 2.0 + normal(rng);
    for (double q : {0.0, 1e-4, 1e-3, 0.01}) {
        const auto out = kalman_smooth(in, KalmanConfig{.q = q, .r = 0.1});
        CHECK(out.size() == in.size());
        CHECK(sample_variance(out) < sample_variance(in));
    }
}

TEST_CASE("kalman gain stays strictly inside (0, 1)") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unit;
    for (int trial = 0; trial < 50; ++trial) {
        KalmanConfig cfg{.q = trial % 4 == 0 ? 0.0 : unit(rng), .r = 1e-3 + unit(rng), .p0 = 1e-3 + unit(rng)};
        KalmanFilter f(unit(rng), cfg);
        for (int k = 0; k < 100; ++k) {
            f.update(unit(rng));
            CHECK(f.last_gain() > 0.0);
            CHECK(f.last_gain() < 1.0);
        }
    }
}

TEST_CASE("kalman errors") {
    CHECK_THROWS_AS(kalman_smooth(std::vector<double>{}, KalmanConfig{}), EmptyInputError);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(kalman_smooth(one, KalmanConfig{.q = -1.0}), ConfigError);
    CHECK_THROWS_AS(kalman_smooth(one, KalmanConfig{.r = 0.0}), ConfigError);
    CHECK_THROWS_AS(kalman_smooth(one, KalmanConfig{.p0 = 0.0}), ConfigError);
}

TEST_CASE("detect_peaks examples") {
    const PeakConfig any{1, 0.0};
    CHECK(detect_peaks(std::vector<double>{0, 1, 0, 2, 0}, any) == std::vector<std::size_t>{1, 3});
    CHECK(detect_peaks(std::vector<double>{0, 1, 3, 7, 4, 2, 1}, any) == std::vector<std::size_t>{3});
    CHECK(detect_peaks(std::vector<double>{1, 2, 3, 4, 5}, any).empty());
    CHECK(detect_peaks(std::vector<double>{5, 4, 3}, any).empty());
    CHECK(detect_peaks(std::vector<double>{3}, any).empty());
}

TEST_CASE("plateaus report their leftmost index and edge plateaus are not peaks") {
    const PeakConfig any{1, 0.0};
    CHECK(detect_peaks(std::vector<double>{0, 2, 2, 2, 1}, any) == std::vector<std::size_t>{1});
    CHECK(detect_peaks(std::vector<double>{0, 2, 2, 3, 1}, any) == std::vector<std::size_t>{3});
    CHECK(detect_peaks(std::vector<double>{0, 2, 2}, any).empty());
    CHECK(detect_peaks(std::vector<double>{2, 2, 1}, any).empty());
}

TEST_CASE("separation keeps the taller peak and prominence filters shallow ones") {
    const std::vector<double> s{0, 3, 2.5, 2.8, 0, 1, 0.9, 0};
    CHECK(detect_peaks(s, {1, 0.0}) == std::vector<std::size_t>{1, 3, 5});
    CHECK(detect_peaks(s, {3, 0.0}) == std::vector<std::size_t>{1, 5});
    CHECK(detect_peaks(s, {1, 0.5}) == std::vector<std::size_t>{1, 5});
    CHECK(peak_prominence(s, 3) == doctest::Approx(0.3));
    CHECK(peak_prominence(s, 1) == doctest::Approx(3.0));
    CHECK(peak_prominence(s, 5) == doctest::Approx(1.0));
}

TEST_CASE("peak constraints hold on random series") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> s(5 + rng() % 200);
        for (auto& x : s) x = std::round(unit(rng) * 20.0) / 4.0; // coarse grid gives plateaus
        const PeakConfig cfg{1 + rng() % 10, unit(rng) * 2.0};
        const auto peaks = detect_peaks(s, cfg);
        for (std::size_t k = 0; k < peaks.size(); ++k) {
            const std::size_t i = peaks[k];
            if (k > 0) {
                CHECK(peaks[k] > peaks[k - 1]);
                CHECK(peaks[k] - peaks[k - 1] >= cfg.min_separation);
            }
            REQUIRE(i > 0);
            REQUIRE(i + 1 < s.size());
            CHECK(s[i - 1] < s[i]);
            std::size_t end = i;
            while (end + 1 < s.size() && s[end + 1] == s[i]) ++end;
            CHECK(end + 1 < s.size());
            CHECK(s[end + 1] < s[i]);
            CHECK(oracle::prominence(s, i) >= cfg.min_prominence);
        }
        // With no thinning, every qualifying local maximum is reported.
        const auto all = detect_peaks(s, {1, 0.0});
        std::size_t expected = 0;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            if (!(s[i - 1] < s[i])) continue;
            std::size_t end = i;
            while (end + 1 < s.size() && s[end + 1] == s[i]) ++end;
            if (end + 1 < s.size() && s[end + 1] < s[i]) ++expected;
        }
        CHECK(all.size() == expected);
    }
}

TEST_CASE("score_sequence") {
    const auto params = init_encoder({3, 5, 2}, 4);
    CHECK(score_sequence(params, std::vector<Vector>{}).empty());

    const std::vector<Vector> same(6, Vector::Constant(3, 0.7));
    const auto flat = score_sequence(params, same);
    REQUIRE(flat.size() == 6);
    for (double v : flat) CHECK(v == flat.front());

    // Frames fed in ranked order score non-increasingly.
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    Dataset d;
    for (int i = 0; i < 50; ++i) {
        Vector x(3);
        for (auto& e : x) e = normal(rng);
        d.add({"f" + std::to_string(i), 10, 2, x, std::nullopt});
    }
    const auto ranked = rank_collection(params, d);
    std::vector<FrameRecord> frames;
    for (const auto& item : ranked) {
        for (const auto& r : d.records()) {
            if (r.id == item.id) frames.push_back({r.id, r.features});
        }
    }
    const auto scores = score_sequence(params, frames);
    for (std::size_t k = 1; k < scores.size(); ++k) CHECK(scores[k] <= scores[k - 1]);

    CHECK_THROWS_AS(score_sequence(params, std::vector<Vector>{Vector::Zero(2)}), ShapeError);
}

TEST_CASE("load_frames accepts records without counts") {
    std::istringstream in(R"({"id":"f0","features":[1,2]})" "\n" R"({"id":"f1","features":[3,4],"views":9})" "\n");
    const auto frames = load_frames(in);
    REQUIRE(frames.size() == 2);
    CHECK(frames[1].features[1] == 4.0);
    std::istringstream ragged(R"({"id":"f0","features":[1,2]})" "\n" R"({"id":"f1","features":[3]})" "\n");
    CHECK_THROWS_AS(load_frames(ragged), FormatError);
}

TEST_CASE("video CSV") {
    const std::vector<double> raw{0.0, 1.0, 0.0}, smooth{0.0, 0.5, 0.25};
    const std::vector<std::size_t> peaks{1};
    std::ostringstream out;
    write_video_csv(raw, smooth, peaks, out);
    CHECK(out.str() == "frame,raw_score,smoothed_score,is_peak\n0,0,0,0\n1,1,0.5,1\n2,0,0.25,0\n");
}

}
