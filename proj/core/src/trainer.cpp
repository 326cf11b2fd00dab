#include "aespace/trainer.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "aespace/errors.hpp"

namespace aespace {

void TrainConfig::validate() const {
    if (!std::isfinite(lr_init) || lr_init < 0.0) {
        throw ConfigError(fmt::format("learning rate must be >= 0, got {}", lr_init));
    }
    if (!(lr_decay_factor > 1.0)) {
        throw ConfigError(fmt::format("lr decay factor must be > 1, got {}", lr_decay_factor));
    }
    if (!(lr_floor > 0.0)) throw ConfigError("lr floor must be > 0");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (plateau_window == 0 || plateau_patience == 0) {
        throw ConfigError("plateau window and patience must be positive");
    }
    if (!(plateau_min_rel_improvement >= 0.0)) {
        throw ConfigError("plateau improvement threshold must be >= 0");
    }
    if (embed_dim == 0) throw ConfigError("embedding dimension must be positive");
    for (auto h : hidden) {
        if (h == 0) throw ConfigError("hidden layer widths must be positive");
    }
    loss.validate();
    sampler.validate();
}

std::vector<std::size_t> TrainConfig::layer_dims(std::size_t d_in) const {
    std::vector<std::size_t> dims{d_in};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(embed_dim);
    return dims;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const TrainObserver& observer) {
    config.validate();
    if (!dataset.d_in()) throw EmptyInputError("training needs a non-empty dataset");
    return train(dataset, config, init_encoder(config.layer_dims(*dataset.d_in()), config.seed),
                 observer);
}

namespace {

struct WindowAccumulator {
    double loss = 0.0;
    double le = 0.0;
    double ld = 0.0;
    std::size_t triplets = 0;
    std::size_t steps = 0;
    SamplerStats start;
};

} // namespace

TrainResult train(const Dataset& dataset, const TrainConfig& config, EncoderParams initial,
                  const TrainObserver& observer) {
    config.validate();
    initial.validate();
    if (dataset.size() < 3) {
        throw EmptyInputError(fmt::format("training needs at least 3 images, got {}", dataset.size()));
    }
    if (initial.input_dim() != *dataset.d_in()) {
        throw ShapeError(fmt::format("encoder expects {} features, dataset has {}",
                                     initial.input_dim(), *dataset.d_in()));
    }

    const auto scores = dataset_scores(dataset);
    TripletSampler sampler(scores, config.sampler);

    TrainResult result;
    result.params = std::move(initial);
    EncoderParams& params = result.params;

    const auto batch = config.batch_size;
    const auto d_in = static_cast<Eigen::Index>(params.input_dim());
    const auto d_out = static_cast<Eigen::Index>(params.output_dim());
    const auto cols = static_cast<Eigen::Index>(3 * batch);
    const double inv_batch = 1.0 / static_cast<double>(batch);

    Matrix inputs(d_in, cols);
    Matrix grad_phi(d_out, cols);
    std::vector<Triplet> triplets(batch);

    double lr = config.lr_init;
    double best_window_loss = std::numeric_limits<double>::infinity();
    std::size_t stale_windows = 0;
    WindowAccumulator window{.start = sampler.stats()};

    auto flush_window = [&](std::size_t step) {
        const auto k = static_cast<double>(window.triplets);
        const SamplerStats now = sampler.stats();
        const SamplerStats delta{now.proposed - window.start.proposed,
                                 now.accepted - window.start.accepted};
        TrainLogEntry entry{step, window.loss / k, window.le / k, window.ld / k, lr,
                            delta.acceptance_rate()};
        result.log.push_back(entry);
        if (observer) observer(entry);
        const bool full = window.steps == config.plateau_window;
        window = WindowAccumulator{.start = now};
        return std::pair{entry, full};
    };

    for (std::size_t step = 1; step <= config.max_steps; ++step) {
        for (std::size_t b = 0; b < batch; ++b) {
            triplets[b] = sampler.sample();
            const auto j = static_cast<Eigen::Index>(b);
            inputs.col(j) = dataset[triplets[b].a].features;
            inputs.col(j + static_cast<Eigen::Index>(batch)) = dataset[triplets[b].p].features;
            inputs.col(j + 2 * static_cast<Eigen::Index>(batch)) = dataset[triplets[b].n].features;
        }

        const ForwardTrace trace = forward_batch(params, inputs);
        const Matrix& phi = trace.pre_activation.back();
        for (std::size_t b = 0; b < batch; ++b) {
            const auto ja = static_cast<Eigen::Index>(b);
            const auto jp = ja + static_cast<Eigen::Index>(batch);
            const auto jn = jp + static_cast<Eigen::Index>(batch);
            const auto r = directional_triplet_loss(phi.col(ja), phi.col(jp), phi.col(jn),
                                                    scores[triplets[b].a], scores[triplets[b].n],
                                                    config.loss);
            grad_phi.col(ja) = r.grad_a * inv_batch;
            grad_phi.col(jp) = r.grad_p * inv_batch;
            grad_phi.col(jn) = r.grad_n * inv_batch;
            window.loss += r.total;
            window.le += r.l_e;
            window.ld += r.l_d;
        }
        window.triplets += batch;
        window.steps += 1;

        const EncoderGradients grads = backward_batch(params, trace, grad_phi);
        bool finite = std::isfinite(window.loss);
        for (std::size_t l = 0; finite && l < params.layer_count(); ++l) {
            finite = grads.weights[l].allFinite() && grads.biases[l].allFinite();
        }
        if (!finite) throw DivergenceError(static_cast<long>(step), lr);

        for (std::size_t l = 0; l < params.layer_count(); ++l) {
            params.weights[l] -= lr * grads.weights[l];
            params.biases[l] -= lr * grads.biases[l];
            finite = finite && params.weights[l].allFinite() && params.biases[l].allFinite();
        }
        if (!finite) throw DivergenceError(static_cast<long>(step), lr);
        result.steps_run = step;

        if (window.steps == config.plateau_window || step == config.max_steps) {
            const auto [entry, full] = flush_window(step);
            if (!full) break;
            if (entry.mean_loss < best_window_loss * (1.0 - config.plateau_min_rel_improvement)) {
                best_window_loss = entry.mean_loss;
                stale_windows = 0;
            } else if (++stale_windows >= config.plateau_patience) {
                lr /= config.lr_decay_factor;
                stale_windows = 0;
                if (lr < config.lr_floor) break;
            }
        }
    }

    result.sampler_stats = sampler.stats();
    result.final_lr = lr;
    return result;
}

void write_train_log_csv(const std::vector<TrainLogEntry>& log, std::ostream& out) {
    out << "step,mean_loss,mean_le,mean_ld,lr,acceptance_rate\n";
    for (const auto& e : log) {
        out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", e.step, e.mean_loss,
                           e.mean_le, e.mean_ld, e.lr, e.acceptance_rate);
    }
}

} // namespace aespace
