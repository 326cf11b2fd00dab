#include "aespace/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "aespace/errors.hpp"

namespace aespace {

std::string_view to_string(PairRef ref) {
    return ref == PairRef::mean ? "mean" : "anchor";
}

PairRef parse_pair_ref(std::string_view text) {
    if (text == "mean") return PairRef::mean;
    if (text == "anchor") return PairRef::anchor;
    throw ConfigError(fmt::format("unknown pair reference '{}' (expected mean|anchor)", text));
}

void SamplerConfig::validate() const {
    if (!(alpha >= 0.0) || !(alpha < beta)) {
        throw ConfigError(fmt::format("sampler window needs 0 <= alpha < beta, got alpha={} beta={}",
                                      alpha, beta));
    }
    if (proposal_budget == 0) throw ConfigError("sampler proposal budget must be positive");
}

double triplet_ratio(double score_a, double score_p, double score_n, PairRef ref) {
    const double reference = ref == PairRef::mean ? 0.5 * (score_a + score_p) : score_a;
    const double denominator = std::abs(reference - score_n);
    if (denominator == 0.0) return std::numeric_limits<double>::infinity();
    return std::abs(score_a - score_p) / denominator;
}

bool in_window(double ratio, double alpha, double beta) {
    return alpha < ratio && ratio < beta;
}

TripletSampler::TripletSampler(std::vector<double> scores, SamplerConfig config)
    : scores_(std::move(scores)), config_(config), rng_(config.seed) {
    config_.validate();
    if (scores_.size() < 3) {
        throw EmptyInputError(
            fmt::format("triplet sampling needs at least 3 images, got {}", scores_.size()));
    }
}

namespace {
std::vector<double> values_of(std::span<const Score> scores) {
    std::vector<double> out(scores.size());
    std::transform(scores.begin(), scores.end(), out.begin(), [](Score s) { return s.value(); });
    return out;
}
} // namespace

TripletSampler::TripletSampler(std::span<const Score> scores, SamplerConfig config)
    : TripletSampler(values_of(scores), config) {}

std::optional<Triplet> TripletSampler::propose() {
    const auto n = static_cast<std::uint64_t>(scores_.size());
    // Uniform over ordered distinct triples: pick a, then p from the remaining n-1, then
    // the negative from the remaining n-2, skipping taken indices.
    const auto a = rng_.index(n);
    auto p = rng_.index(n - 1);
    if (p >= a) ++p;
    auto neg = rng_.index(n - 2);
    const auto lo = std::min(a, p);
    const auto hi = std::max(a, p);
    if (neg >= lo) ++neg;
    if (neg >= hi) ++neg;

    ++stats_.proposed;
    const double sa = scores_[a];
    const double sp = scores_[p];
    const double sn = scores_[neg];
    const double ratio = triplet_ratio(sa, sp, sn, config_.pair_ref);
    if (!in_window(ratio, config_.alpha, config_.beta)) return std::nullopt;

    ++stats_.accepted;
    const double reference = config_.pair_ref == PairRef::mean ? 0.5 * (sa + sp) : sa;
    return Triplet{a, p, neg, reference > sn, ratio};
}

Triplet TripletSampler::sample() {
    for (std::uint64_t k = 0; k < config_.proposal_budget; ++k) {
        if (auto t = propose()) return *t;
    }
    throw SamplerStarvationError(
        fmt::format("sampler starved: no triplet accepted in {} proposals (acceptance rate {:.3g})",
                    config_.proposal_budget, stats_.acceptance_rate()),
        stats_.acceptance_rate());
}

double balance_fraction(std::span<const Triplet> triplets) {
    if (triplets.empty()) throw EmptyInputError("balance fraction of an empty triplet list");
    const auto above = std::count_if(triplets.begin(), triplets.end(),
                                     [](const Triplet& t) { return t.pair_above; });
    return static_cast<double>(above) / static_cast<double>(triplets.size());
}

double estimate_cardinality(std::size_t n_images, const SamplerStats& stats) {
    if (stats.proposed == 0) throw EmptyInputError("cardinality estimate needs proposals");
    const auto n = static_cast<double>(n_images);
    return stats.acceptance_rate() * n * (n - 1.0) * (n - 2.0);
}

void write_triplets_csv(std::span<const Triplet> triplets, std::ostream& out) {
    out << "a,p,n,pair_above,ratio\n";
    for (const auto& t : triplets) {
        out << fmt::format("{},{},{},{},{:.17g}\n", t.a, t.p, t.n, t.pair_above ? 1 : 0, t.ratio);
    }
}

} // namespace aespace
