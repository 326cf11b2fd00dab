#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "aespace/data_model.hpp"

namespace aespace {

using Matrix = Eigen::MatrixXd;

inline constexpr int kModelFormatVersion = 1;

/// Feed-forward encoder: affine + rectifier on every hidden layer, affine-only output.
struct EncoderParams {
    std::vector<std::size_t> layer_dims; // [d_in, h1, ..., d]
    std::vector<Matrix> weights;         // weights[l] is dims[l+1] x dims[l]
    std::vector<Vector> biases;          // biases[l] has dims[l+1] entries

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::size_t layer_count() const { return weights.size(); }

    /// Checks shape chaining and finiteness; throws ConfigError.
    void validate() const;

    friend bool operator==(const EncoderParams&, const EncoderParams&);
};

/// Gaussian weights with standard deviation sqrt(2 / fan_in), zero biases. Weights are
/// drawn layer by layer in row-major order from Rng(seed).
/// Throws ConfigError for fewer than two dims or a zero dim.
EncoderParams init_encoder(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

/// Parameter-shaped gradient (or update) buffer.
struct EncoderGradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    Matrix input; // d_in x batch

    static EncoderGradients zeros_like(const EncoderParams& params);
};

/// Activations kept from a forward pass; columns are samples.
struct ForwardTrace {
    std::vector<Matrix> inputs;         // input to each layer (inputs[0] is the batch)
    std::vector<Matrix> pre_activation; // affine output of each layer
    Matrix output() const { return pre_activation.back(); }
};

Vector forward(const EncoderParams& params, const Vector& x);

/// Batched forward pass over the columns of x. Throws ShapeError when x.rows() != d_in.
ForwardTrace forward_batch(const EncoderParams& params, const Matrix& x);

/// Gradients of sum_j <grad_phi.col(j), forward(x.col(j))> for the batch in trace.
/// The rectifier derivative at 0 is 0.
EncoderGradients backward_batch(const EncoderParams& params, const ForwardTrace& trace,
                                const Matrix& grad_phi);

/// Single-sample backward; recomputes the forward pass.
EncoderGradients backward(const EncoderParams& params, const Vector& x, const Vector& grad_phi);

/// Writes {"version": 1, "layer_dims": [...], "weights": [[row-major]...], "biases": [...]}
/// with 17 significant digits.
void save_encoder(const EncoderParams& params, std::ostream& out);
void save_encoder(const EncoderParams& params, const std::filesystem::path& path);

/// Throws ModelVersionError for a newer version and ModelFormatError for anything
/// malformed or truncated.
EncoderParams load_encoder(std::istream& in);
EncoderParams load_encoder(const std::filesystem::path& path);

} // namespace aespace
