#pragma once

#include "aespace/data_model.hpp"

namespace aespace {

struct LossConfig {
    double margin = 0.2;         // triplet margin m
    double dir_margin = 0.1;     // directional margin
    bool directional = true;     // add the norm-ordering term
    bool literal_sign = false;   // sign(S(n) - S(a)) * [|a| - |n| + m~]_+ instead of the hinge pair

    /// Throws ConfigError unless margin > 0, dir_margin >= 0, both finite.
    void validate() const;
};

struct TripletLossResult {
    double l_e = 0.0;
    double l_d = 0.0;
    double total = 0.0;
    Vector grad_a;
    Vector grad_p;
    Vector grad_n;
};

/// Euclidean distance. Throws ShapeError on a dimension mismatch.
double distance(const Vector& phi_i, const Vector& phi_j);

/// [m + |a - p|^2 - |a - n|^2]_+
double triplet_loss(const Vector& phi_a, const Vector& phi_p, const Vector& phi_n, double margin);

/// Norm-ordering term between anchor and negative.
///
/// Hinge form (default): S(n) > S(a) gives [|a| - |n| + m~]_+, S(n) < S(a) gives
/// [|n| - |a| + m~]_+, a tie gives 0. Literal form: sign(S(n) - S(a)) * [|a| - |n| + m~]_+,
/// which is unbounded below in |a| when the sign is negative.
double directional_loss(const Vector& phi_a, const Vector& phi_n, Score score_a, Score score_n,
                        double dir_margin, bool literal_sign);

/// L_e + L_d (L_d = 0 when disabled) and its exact gradients. Hinges contribute
/// nothing at the kink and the gradient of |x| at x = 0 is taken as 0.
TripletLossResult directional_triplet_loss(const Vector& phi_a, const Vector& phi_p,
                                           const Vector& phi_n, Score score_a, Score score_n,
                                           const LossConfig& config);

} // namespace aespace
