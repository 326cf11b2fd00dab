#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "aespace/data_model.hpp"
#include "aespace/encoder.hpp"
#include "aespace/loss.hpp"
#include "aespace/sampler.hpp"

namespace aespace {

struct TrainConfig {
    std::vector<std::size_t> hidden = {64, 32};
    std::size_t embed_dim = 16;

    double lr_init = 1e-3;
    double lr_decay_factor = 10.0;
    double lr_floor = 1e-6;
    std::size_t batch_size = 64;
    std::size_t max_steps = 30000;
    std::size_t plateau_window = 500;
    std::size_t plateau_patience = 3;
    double plateau_min_rel_improvement = 1e-3;
    std::uint64_t seed = 1; // encoder initialization; the sampler draws from sampler.seed

    LossConfig loss;
    SamplerConfig sampler;

    void validate() const;
    /// [d_in, hidden..., embed_dim]
    std::vector<std::size_t> layer_dims(std::size_t d_in) const;
};

struct TrainLogEntry {
    std::size_t step = 0; // last step of the window (1-based)
    double mean_loss = 0.0;
    double mean_le = 0.0;
    double mean_ld = 0.0;
    double lr = 0.0; // rate used throughout the window
    double acceptance_rate = 0.0;
};

struct TrainResult {
    EncoderParams params;
    std::vector<TrainLogEntry> log;
    SamplerStats sampler_stats;
    std::size_t steps_run = 0;
    double final_lr = 0.0;
};

/// Optional progress hook, called after each log window.
using TrainObserver = std::function<void(const TrainLogEntry&)>;

/// Plain SGD on the directional triplet loss with triplets drawn on the fly.
///
/// Each step draws batch_size triplets, averages their loss gradients through the
/// encoder and applies params -= lr * grad. Every plateau_window steps the window's
/// mean loss is compared with the best so far; after plateau_patience windows without a
/// relative improvement of plateau_min_rel_improvement the rate is divided by
/// lr_decay_factor, and training ends once it drops below lr_floor.
///
/// Throws DivergenceError on a non-finite loss or gradient; SamplerStarvationError
/// propagates from the sampler.
TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const TrainObserver& observer = {});

/// Same, starting from the given parameters instead of a fresh initialization.
TrainResult train(const Dataset& dataset, const TrainConfig& config, EncoderParams initial,
                  const TrainObserver& observer = {});

/// CSV `step,mean_loss,mean_le,mean_ld,lr,acceptance_rate`.
void write_train_log_csv(const std::vector<TrainLogEntry>& log, std::ostream& out);

} // namespace aespace
