#include "aespace/loss.hpp"

#include <cmath>

#include <fmt/format.h>

#include "aespace/errors.hpp"

namespace aespace {

void LossConfig::validate() const {
    if (!std::isfinite(margin) || !(margin > 0.0)) {
        throw ConfigError(fmt::format("triplet margin must be > 0, got {}", margin));
    }
    if (!std::isfinite(dir_margin) || !(dir_margin >= 0.0)) {
        throw ConfigError(fmt::format("directional margin must be >= 0, got {}", dir_margin));
    }
}

namespace {

void require_same_size(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) {
        throw ShapeError(fmt::format("embedding size mismatch: {} vs {}", x.size(), y.size()));
    }
}

// NaN counts as active so that overflowed embeddings surface as a non-finite loss
// instead of silently zeroing the hinge.
bool active(double x) { return !(x <= 0.0); }

double hinge(double x) { return active(x) ? x : 0.0; }

int sign(double x) { return (x > 0.0) - (x < 0.0); }

Vector unit_or_zero(const Vector& x) {
    const double norm = x.norm();
    if (norm == 0.0) return Vector::Zero(x.size());
    return x / norm;
}

} // namespace

double distance(const Vector& phi_i, const Vector& phi_j) {
    require_same_size(phi_i, phi_j);
    return (phi_i - phi_j).norm();
}

double triplet_loss(const Vector& phi_a, const Vector& phi_p, const Vector& phi_n, double margin) {
    require_same_size(phi_a, phi_p);
    require_same_size(phi_a, phi_n);
    return hinge(margin + (phi_a - phi_p).squaredNorm() - (phi_a - phi_n).squaredNorm());
}

double directional_loss(const Vector& phi_a, const Vector& phi_n, Score score_a, Score score_n,
                        double dir_margin, bool literal_sign) {
    require_same_size(phi_a, phi_n);
    const int s = sign(score_n.value() - score_a.value());
    const double norm_a = phi_a.norm();
    const double norm_n = phi_n.norm();
    if (literal_sign) return s * hinge(norm_a - norm_n + dir_margin);
    if (s > 0) return hinge(norm_a - norm_n + dir_margin);
    if (s < 0) return hinge(norm_n - norm_a + dir_margin);
    return 0.0;
}

TripletLossResult directional_triplet_loss(const Vector& phi_a, const Vector& phi_p,
                                           const Vector& phi_n, Score score_a, Score score_n,
                                           const LossConfig& config) {
    require_same_size(phi_a, phi_p);
    require_same_size(phi_a, phi_n);
    const auto dim = phi_a.size();

    TripletLossResult r;
    r.grad_a = Vector::Zero(dim);
    r.grad_p = Vector::Zero(dim);
    r.grad_n = Vector::Zero(dim);

    const double triplet_arg =
        config.margin + (phi_a - phi_p).squaredNorm() - (phi_a - phi_n).squaredNorm();
    if (active(triplet_arg)) {
        r.l_e = triplet_arg;
        r.grad_a = 2.0 * (phi_n - phi_p);
        r.grad_p = 2.0 * (phi_p - phi_a);
        r.grad_n = 2.0 * (phi_a - phi_n);
    }

    if (config.directional) {
        const int s = sign(score_n.value() - score_a.value());
        const double norm_a = phi_a.norm();
        const double norm_n = phi_n.norm();
        // d|a|/da and d|n|/dn, zero at the origin.
        const Vector unit_a = unit_or_zero(phi_a);
        const Vector unit_n = unit_or_zero(phi_n);
        if (config.literal_sign) {
            const double arg = norm_a - norm_n + config.dir_margin;
            if (s != 0 && active(arg)) {
                r.l_d = s * arg;
                r.grad_a += s * unit_a;
                r.grad_n -= s * unit_n;
            }
        } else if (s > 0) {
            const double arg = norm_a - norm_n + config.dir_margin;
            if (active(arg)) {
                r.l_d = arg;
                r.grad_a += unit_a;
                r.grad_n -= unit_n;
            }
        } else if (s < 0) {
            const double arg = norm_n - norm_a + config.dir_margin;
            if (active(arg)) {
                r.l_d = arg;
                r.grad_n += unit_n;
                r.grad_a -= unit_a;
            }
        }
    }

    r.total = r.l_e + r.l_d;
    return r;
}

} // namespace aespace
