#include "aespace/encoder.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "aespace/errors.hpp"
#include "aespace/random.hpp"

namespace aespace {

void EncoderParams::validate() const {
    if (layer_dims.size() < 2) throw ConfigError("encoder needs at least one layer");
    if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
        throw ConfigError("encoder layer count does not match layer_dims");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const auto fan_in = static_cast<Eigen::Index>(layer_dims[l]);
        const auto fan_out = static_cast<Eigen::Index>(layer_dims[l + 1]);
        if (fan_in == 0 || fan_out == 0) throw ConfigError("encoder dims must be positive");
        if (weights[l].rows() != fan_out || weights[l].cols() != fan_in ||
            biases[l].size() != fan_out) {
            throw ConfigError(fmt::format("encoder layer {} has inconsistent shape", l));
        }
        if (!weights[l].allFinite() || !biases[l].allFinite()) {
            throw ConfigError(fmt::format("encoder layer {} has non-finite entries", l));
        }
    }
}

bool operator==(const EncoderParams& x, const EncoderParams& y) {
    if (x.layer_dims != y.layer_dims || x.weights.size() != y.weights.size()) return false;
    for (std::size_t l = 0; l < x.weights.size(); ++l) {
        if (x.weights[l] != y.weights[l] || x.biases[l] != y.biases[l]) return false;
    }
    return true;
}

EncoderParams init_encoder(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2) throw ConfigError("encoder needs at least input and output dims");
    for (auto d : layer_dims) {
        if (d == 0) throw ConfigError("encoder dims must be positive");
    }
    Rng rng(seed);
    EncoderParams p;
    p.layer_dims = layer_dims;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const auto fan_in = static_cast<Eigen::Index>(layer_dims[l]);
        const auto fan_out = static_cast<Eigen::Index>(layer_dims[l + 1]);
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (Eigen::Index r = 0; r < fan_out; ++r) {
            for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = stddev * rng.normal();
        }
        p.weights.push_back(std::move(w));
        p.biases.push_back(Vector::Zero(fan_out));
    }
    return p;
}

EncoderGradients EncoderGradients::zeros_like(const EncoderParams& params) {
    EncoderGradients g;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        g.weights.push_back(Matrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
        g.biases.push_back(Vector::Zero(params.biases[l].size()));
    }
    return g;
}

ForwardTrace forward_batch(const EncoderParams& params, const Matrix& x) {
    if (x.rows() != static_cast<Eigen::Index>(params.input_dim())) {
        throw ShapeError(fmt::format("encoder expects {} input features, got {}",
                                     params.input_dim(), x.rows()));
    }
    ForwardTrace trace;
    trace.inputs.reserve(params.layer_count());
    trace.pre_activation.reserve(params.layer_count());
    Matrix h = x;
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        Matrix z = params.weights[l] * h;
        z.colwise() += params.biases[l];
        trace.inputs.push_back(std::move(h));
        if (l + 1 < params.layer_count()) h = z.cwiseMax(0.0);
        trace.pre_activation.push_back(std::move(z));
    }
    return trace;
}

Vector forward(const EncoderParams& params, const Vector& x) {
    return forward_batch(params, x).pre_activation.back().col(0);
}

EncoderGradients backward_batch(const EncoderParams& params, const ForwardTrace& trace,
                                const Matrix& grad_phi) {
    const auto& out = trace.pre_activation.back();
    if (grad_phi.rows() != out.rows() || grad_phi.cols() != out.cols()) {
        throw ShapeError(fmt::format("output gradient is {}x{}, forward output is {}x{}",
                                     grad_phi.rows(), grad_phi.cols(), out.rows(), out.cols()));
    }
    EncoderGradients g;
    g.weights.resize(params.layer_count());
    g.biases.resize(params.layer_count());

    Matrix delta = grad_phi; // gradient w.r.t. pre-activation of the current layer
    for (std::size_t l = params.layer_count(); l-- > 0;) {
        g.weights[l] = delta * trace.inputs[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        Matrix upstream = params.weights[l].transpose() * delta;
        if (l > 0) {
            // Rectifier derivative: 1 where the pre-activation is strictly positive.
            upstream.array() *= (trace.pre_activation[l - 1].array() > 0.0).cast<double>();
        }
        delta = std::move(upstream);
    }
    g.input = std::move(delta);
    return g;
}

EncoderGradients backward(const EncoderParams& params, const Vector& x, const Vector& grad_phi) {
    return backward_batch(params, forward_batch(params, x), grad_phi);
}

void save_encoder(const EncoderParams& params, std::ostream& out) {
    params.validate();
    auto list = [](auto begin, auto end) {
        std::string s = "[";
        for (auto it = begin; it != end; ++it) {
            if (it != begin) s += ',';
            s += fmt::format("{:.17g}", *it);
        }
        return s + "]";
    };
    std::string dims = "[";
    for (std::size_t i = 0; i < params.layer_dims.size(); ++i) {
        dims += (i ? "," : "") + std::to_string(params.layer_dims[i]);
    }
    dims += "]";

    out << "{\"version\":" << kModelFormatVersion << ",\n\"layer_dims\":" << dims << ",\n\"weights\":[";
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        // Row-major flattening.
        const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w =
            params.weights[l];
        out << (l ? ",\n" : "\n") << list(w.data(), w.data() + w.size());
    }
    out << "],\n\"biases\":[";
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        const auto& b = params.biases[l];
        out << (l ? ",\n" : "\n") << list(b.data(), b.data() + b.size());
    }
    out << "]}\n";
}

void save_encoder(const EncoderParams& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    save_encoder(params, out);
}

EncoderParams load_encoder(std::istream& in) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    } catch (const json::parse_error& e) {
        throw ModelFormatError(fmt::format("model file is not valid JSON: {}", e.what()));
    }
    try {
        if (!doc.is_object()) throw ModelFormatError("model file must be a JSON object");
        const auto& version = doc.at("version");
        if (!version.is_number_integer()) throw ModelFormatError("model version must be an integer");
        const int v = version.get<int>();
        if (v > kModelFormatVersion) throw ModelVersionError(v, kModelFormatVersion);
        if (v < 1) throw ModelFormatError(fmt::format("unknown model version {}", v));

        EncoderParams p;
        p.layer_dims = doc.at("layer_dims").get<std::vector<std::size_t>>();
        const auto weights = doc.at("weights").get<std::vector<std::vector<double>>>();
        const auto biases = doc.at("biases").get<std::vector<std::vector<double>>>();
        if (p.layer_dims.size() < 2 || weights.size() != p.layer_dims.size() - 1 ||
            biases.size() != weights.size()) {
            throw ModelFormatError("model layer counts are inconsistent");
        }
        for (std::size_t l = 0; l < weights.size(); ++l) {
            const auto fan_in = static_cast<Eigen::Index>(p.layer_dims[l]);
            const auto fan_out = static_cast<Eigen::Index>(p.layer_dims[l + 1]);
            if (static_cast<Eigen::Index>(weights[l].size()) != fan_in * fan_out ||
                static_cast<Eigen::Index>(biases[l].size()) != fan_out) {
                throw ModelFormatError(fmt::format("model layer {} has the wrong number of values", l));
            }
            p.weights.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                               Eigen::RowMajor>>(
                weights[l].data(), fan_out, fan_in));
            p.biases.push_back(Eigen::Map<const Vector>(biases[l].data(), fan_out));
        }
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw ModelFormatError(fmt::format("malformed model file: {}", e.what()));
    } catch (const ConfigError& e) {
        throw ModelFormatError(fmt::format("invalid model: {}", e.what()));
    }
}

EncoderParams load_encoder(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
    return load_encoder(in);
}

} // namespace aespace
