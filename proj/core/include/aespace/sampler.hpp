#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "aespace/data_model.hpp"
#include "aespace/random.hpp"

namespace aespace {

/// Which score the negative is compared against in the ratio denominator.
enum class PairRef { mean, anchor };

std::string_view to_string(PairRef ref);
/// Accepts "mean" or "anchor"; throws ConfigError otherwise.
PairRef parse_pair_ref(std::string_view text);

struct SamplerConfig {
    double alpha = 0.25;
    double beta = 0.75;
    std::uint64_t seed = 1;
    PairRef pair_ref = PairRef::anchor;
    std::uint64_t proposal_budget = 1'000'000;

    /// Throws ConfigError unless 0 <= alpha < beta and the budget is positive.
    void validate() const;
};

struct Triplet {
    std::size_t a = 0;
    std::size_t p = 0;
    std::size_t n = 0;
    bool pair_above = false; // reference score of the pair exceeds S(n)
    double ratio = 0.0;
};

struct SamplerStats {
    std::uint64_t proposed = 0;
    std::uint64_t accepted = 0;

    double acceptance_rate() const noexcept {
        return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
    }
};

/// |S(a) - S(p)| / |ref - S(n)|, where ref is the pair mean or S(a). Returns +inf for a
/// zero denominator, which never satisfies the window.
double triplet_ratio(double score_a, double score_p, double score_n, PairRef ref);

/// The acceptance window alpha < ratio < beta, strict on both sides.
bool in_window(double ratio, double alpha, double beta);

/// Rejection sampler over ordered distinct index triples of a scored collection.
/// Holds its own random stream; not safe to share between threads.
class TripletSampler {
public:
    /// Throws EmptyInputError for fewer than 3 scores; validates the config.
    TripletSampler(std::vector<double> scores, SamplerConfig config);
    TripletSampler(std::span<const Score> scores, SamplerConfig config);

    /// One uniform proposal. Returns the triplet when it lands in the window.
    std::optional<Triplet> propose();

    /// Proposes until acceptance. Throws SamplerStarvationError when the proposal
    /// budget is exhausted for this call.
    Triplet sample();

    const SamplerStats& stats() const noexcept { return stats_; }
    const SamplerConfig& config() const noexcept { return config_; }
    std::size_t size() const noexcept { return scores_.size(); }

private:
    std::vector<double> scores_;
    SamplerConfig config_;
    Rng rng_;
    SamplerStats stats_;
};

/// Fraction of triplets with pair_above set. Throws EmptyInputError on an empty list.
double balance_fraction(std::span<const Triplet> triplets);

/// acceptance rate x n(n-1)(n-2): estimated number of ordered triples in the window.
/// Throws EmptyInputError when nothing has been proposed.
double estimate_cardinality(std::size_t n_images, const SamplerStats& stats);

/// CSV with header `a,p,n,pair_above,ratio`.
void write_triplets_csv(std::span<const Triplet> triplets, std::ostream& out);

} // namespace aespace
