#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "aespace/encoder.hpp"
#include "aespace/errors.hpp"
#include "aespace/loss.hpp"
#include "oracles.hpp"

using namespace aespace;

namespace {

Vector random_vector(std::mt19937_64& rng, Eigen::Index dim) {
    std::normal_distribution<double> normal;
    Vector v(dim);
    for (auto& x : v) x = normal(rng);
    return v;
}

EncoderParams randomized(std::vector<std::size_t> dims, std::uint64_t seed) {
    auto p = init_encoder(dims, seed);
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> normal(0.0, 0.3);
    for (auto& b : p.biases) {
        for (auto& x : b) x = normal(rng);
    }
    return p;
}

// Applies f to every parameter scalar, in order, via a mutable reference.
template <class Fn>
void for_each_parameter(EncoderParams& p, Fn&& fn) {
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        for (Eigen::Index r = 0; r < p.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < p.weights[l].cols(); ++c) fn(p.weights[l](r, c), l, r, c, true);
        }
        for (Eigen::Index r = 0; r < p.biases[l].size(); ++r) fn(p.biases[l][r], l, r, 0, false);
    }
}

} // namespace

TEST_SUITE("encoder") {

TEST_CASE("init is deterministic with zero biases") {
    const auto a = init_encoder({4, 4}, 77);
    const auto b = init_encoder({4, 4}, 77);
    CHECK(a == b);
    CHECK_FALSE(a == init_encoder({4, 4}, 78));
    const auto deep = init_encoder({5, 7, 3, 2}, 1);
    REQUIRE(deep.layer_count() == 3);
    for (const auto& bias : deep.biases) CHECK(bias.isZero(0.0));
    CHECK(deep.weights[1].rows() == 3);
    CHECK(deep.weights[1].cols() == 7);
}

TEST_CASE("init weight spread is sqrt(2 / fan_in)") {
    const auto p = init_encoder({256, 256}, 5);
    const auto& w = p.weights[0];
    const double mean = w.mean();
    const double sd = std::sqrt((w.array() - mean).square().sum() / static_cast<double>(w.size() - 1));
    CHECK(std::fabs(sd - std::sqrt(2.0 / 256.0)) < 0.1 * std::sqrt(2.0 / 256.0));
    CHECK(std::fabs(mean) < 0.01);
}

TEST_CASE("init rejects bad dims") {
    CHECK_THROWS_AS(init_encoder({}, 1), ConfigError);
    CHECK_THROWS_AS(init_encoder({4}, 1), ConfigError);
    CHECK_THROWS_AS(init_encoder({4, 0, 2}, 1), ConfigError);
}

TEST_CASE("forward examples") {
    auto identity = init_encoder({3, 3}, 1);
    identity.weights[0] = Matrix::Identity(3, 3);
    Vector x(3);
    x << 0.5, -2.0, 7.25;
    CHECK(forward(identity, x) == x); // no rectifier on the output layer

    auto zero = init_encoder({3, 6, 2}, 1);
    for (auto& w : zero.weights) w.setZero();
    CHECK(forward(zero, x).isZero(0.0));

    const auto relu_zero_bias = init_encoder({4, 8, 3}, 2);
    CHECK(forward(relu_zero_bias, Vector::Zero(4)).isZero(0.0));

    CHECK_THROWS_AS(forward(identity, Vector::Zero(2)), ShapeError);
}

TEST_CASE("forward matches a plain-loop reimplementation") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto p = randomized({3, 5, 2}, seed);
        std::vector<std::vector<std::vector<double>>> w;
        std::vector<std::vector<double>> b;
        for (std::size_t l = 0; l < p.layer_count(); ++l) {
            w.emplace_back();
            for (Eigen::Index r = 0; r < p.weights[l].rows(); ++r) {
                w.back().emplace_back();
                for (Eigen::Index c = 0; c < p.weights[l].cols(); ++c) w.back().back().push_back(p.weights[l](r, c));
            }
            b.emplace_back(p.biases[l].data(), p.biases[l].data() + p.biases[l].size());
        }
        std::mt19937_64 rng(seed);
        const Vector x = random_vector(rng, 3);
        const auto expected = oracle::mlp_forward(w, b, {x[0], x[1], x[2]});
        const Vector got = forward(p, x);
        REQUIRE(got.size() == 2);
        for (int k = 0; k < 2; ++k) CHECK(oracle::rel_error(got[k], expected[static_cast<std::size_t>(k)]) < 1e-12);
    }
}

TEST_CASE("batched forward equals per-sample forward") {
    const auto p = randomized({4, 6, 3}, 3);
    std::mt19937_64 rng(3);
    Matrix x(4, 10);
    for (Eigen::Index j = 0; j < 10; ++j) x.col(j) = random_vector(rng, 4);
    const Matrix out = forward_batch(p, x).output();
    for (Eigen::Index j = 0; j < 10; ++j) CHECK((out.col(j) - forward(p, x.col(j))).norm() < 1e-13);
}

TEST_CASE("backward examples") {
    const auto p = randomized({3, 4, 2}, 9);
    std::mt19937_64 rng(9);
    const auto g = backward(p, random_vector(rng, 3), Vector::Zero(2));
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        CHECK(g.weights[l].isZero(0.0));
        CHECK(g.biases[l].isZero(0.0));
    }

    auto identity = init_encoder({3, 3}, 1);
    identity.weights[0] = Matrix::Identity(3, 3);
    Vector x(3), gphi(3);
    x << 1.0, -2.0, 0.5;
    gphi << 0.25, 3.0, -1.0;
    const auto gi = backward(identity, x, gphi);
    CHECK(gi.weights[0] == gphi * x.transpose());
    CHECK(gi.biases[0] == gphi);
    CHECK(Vector(gi.input.col(0)) == gphi);

    CHECK_THROWS_AS(backward(identity, x, Vector::Zero(2)), ShapeError);
}

TEST_CASE("backward matches central differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto p = randomized({4, 6, 5, 3}, seed);
        std::mt19937_64 rng(seed * 7);
        const Vector x = random_vector(rng, 4);
        const Vector gphi = random_vector(rng, 3);
        const auto grads = backward(p, x, gphi);

        const double h = 1e-6;
        for_each_parameter(p, [&](double& value, std::size_t l, Eigen::Index r, Eigen::Index c, bool is_weight) {
            const double keep = value;
            value = keep + h;
            const double up = gphi.dot(forward(p, x));
            value = keep - h;
            const double down = gphi.dot(forward(p, x));
            value = keep;
            const double fd = (up - down) / (2 * h);
            const double analytic = is_weight ? grads.weights[l](r, c) : grads.biases[l][r];
            CHECK(oracle::rel_error(analytic, fd) < 1e-5);
        });
        const Vector fd_input = oracle::central_difference(
            [&](const Vector& xi) { return gphi.dot(forward(p, xi)); }, x);
        for (Eigen::Index k = 0; k < x.size(); ++k) CHECK(oracle::rel_error(grads.input(k, 0), fd_input[k]) < 1e-5);
    }
}

TEST_CASE("batched backward sums per-sample gradients") {
    const auto p = randomized({3, 5, 2}, 4);
    std::mt19937_64 rng(4);
    Matrix x(3, 6), g(2, 6);
    for (Eigen::Index j = 0; j < 6; ++j) {
        x.col(j) = random_vector(rng, 3);
        g.col(j) = random_vector(rng, 2);
    }
    const auto batched = backward_batch(p, forward_batch(p, x), g);
    auto summed = EncoderGradients::zeros_like(p);
    for (Eigen::Index j = 0; j < 6; ++j) {
        const auto one = backward(p, x.col(j), g.col(j));
        for (std::size_t l = 0; l < p.layer_count(); ++l) {
            summed.weights[l] += one.weights[l];
            summed.biases[l] += one.biases[l];
        }
    }
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        CHECK((batched.weights[l] - summed.weights[l]).norm() < 1e-12);
        CHECK((batched.biases[l] - summed.biases[l]).norm() < 1e-12);
    }
}

TEST_CASE("loss through the encoder matches central differences") {
    std::mt19937_64 rng(314);
    std::uniform_real_distribution<double> unit;
    int checked = 0;
    while (checked < 10) {
        auto p = randomized({6, 8, 5}, 1000 + static_cast<std::uint64_t>(checked) + rng() % 1000);
        const Vector xa = random_vector(rng, 6), xp = random_vector(rng, 6), xn = random_vector(rng, 6);
        const Score sa(unit(rng)), sn(unit(rng));
        LossConfig cfg;
        cfg.margin = 1.0 + 2.0 * unit(rng);

        auto loss_of = [&](const EncoderParams& q) {
            const auto r = directional_triplet_loss(forward(q, xa), forward(q, xp), forward(q, xn), sa, sn, cfg);
            return r.total;
        };
        const Vector pa = forward(p, xa), pp = forward(p, xp), pn = forward(p, xn);
        const double le_arg = cfg.margin + (pa - pp).squaredNorm() - (pa - pn).squaredNorm();
        const double ld_arg = pa.norm() - pn.norm();
        if (std::fabs(le_arg) < 1e-3 || std::fabs(std::fabs(ld_arg) - cfg.dir_margin) < 1e-3 ||
            std::fabs(ld_arg + cfg.dir_margin) < 1e-3 || std::fabs(ld_arg - cfg.dir_margin) < 1e-3) {
            continue;
        }
        const auto r = directional_triplet_loss(pa, pp, pn, sa, sn, cfg);
        auto grads = backward(p, xa, r.grad_a);
        const auto gp = backward(p, xp, r.grad_p);
        const auto gn = backward(p, xn, r.grad_n);
        for (std::size_t l = 0; l < p.layer_count(); ++l) {
            grads.weights[l] += gp.weights[l] + gn.weights[l];
            grads.biases[l] += gp.biases[l] + gn.biases[l];
        }
        const double h = 1e-6;
        for_each_parameter(p, [&](double& value, std::size_t l, Eigen::Index row, Eigen::Index col, bool is_weight) {
            const double keep = value;
            value = keep + h;
            const double up = loss_of(p);
            value = keep - h;
            const double down = loss_of(p);
            value = keep;
            const double analytic = is_weight ? grads.weights[l](row, col) : grads.biases[l][row];
            CHECK(oracle::rel_error(analytic, (up - down) / (2 * h)) < 1e-4);
        });
        ++checked;
    }
}

TEST_CASE("model file round-trip is exact") {
    const auto p = randomized({5, 7, 3}, 21);
    std::stringstream buffer;
    save_encoder(p, buffer);
    const auto back = load_encoder(buffer);
    CHECK(back == p);
    CHECK(buffer.str().rfind("{\"version\":1,", 0) == 0);
}

TEST_CASE("model file errors") {
    const auto p = init_encoder({2, 2}, 1);
    std::stringstream good;
    save_encoder(p, good);
    const std::string text = good.str();

    std::istringstream corrupted("{\"versoin\":1," + text.substr(13));
    CHECK_THROWS_AS(load_encoder(corrupted), ModelFormatError);

    std::istringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_encoder(truncated), ModelFormatError);

    std::istringstream newer("{\"version\":2," + text.substr(13));
    try {
        load_encoder(newer);
        FAIL("expected a version error");
    } catch (const ModelVersionError& e) {
        CHECK(e.found() == 2);
    }

    std::istringstream wrong_count(
        R"({"version":1,"layer_dims":[2,2],"weights":[[1,2,3]],"biases":[[0,0]]})");
    CHECK_THROWS_AS(load_encoder(wrong_count), ModelFormatError);

    std::istringstream garbage("not json at all");
    CHECK_THROWS_AS(load_encoder(garbage), ModelFormatError);
}

}
