#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aespace/data_model.hpp"
#include "aespace/encoder.hpp"

namespace aespace {

/// Norm of an embedding: its position on the relative aesthetic scale.
double projection_score(const Vector& phi);

struct RankedItem {
    std::string id;
    double score = 0.0;
};

/// Descending by score; equal scores ordered by ascending id.
using RankedList = std::vector<RankedItem>;

/// Sorts (id, score) pairs into a RankedList.
RankedList rank_by_score(std::vector<RankedItem> items);

/// Embeds every record and ranks by projection score.
/// Throws ConfigError when the dataset features do not match the encoder input.
RankedList rank_collection(const EncoderParams& params, const Dataset& dataset);

/// Projection score of every record, aligned with dataset order.
std::vector<double> projection_scores(const EncoderParams& params, const Dataset& dataset);

struct AgreementRow {
    double delta = 0.0;
    std::size_t pairs = 0;
    std::optional<double> agreement; // nullopt when no pair exceeds delta
};

using AgreementTable = std::vector<AgreementRow>;

/// For each threshold, the fraction of unordered pairs with |true_i - true_j| > delta whose
/// projection-score order matches the true order. Projection ties count as disagreement.
/// Throws ShapeError for misaligned inputs, EmptyInputError for fewer than two items and
/// ConfigError unless thresholds are strictly increasing within (0, 1).
AgreementTable pairwise_agreement(std::span<const double> projection,
                                  std::span<const double> truth,
                                  std::span<const double> thresholds);

/// (concordant - discordant) / C(n, 2) between two orderings of the same ids.
/// Throws ConfigError when the id sets differ or contain duplicates.
double kendall_tau(std::span<const std::string> order_a, std::span<const std::string> order_b);

/// Ids of a ranked list, in order.
std::vector<std::string> ids_of(const RankedList& ranked);

/// CSV `rank,id,score` with 1-based ranks.
void write_ranked_csv(const RankedList& ranked, std::ostream& out);
/// CSV `delta,pairs,agreement`; undefined agreement is written as NA.
void write_agreement_csv(const AgreementTable& table, std::ostream& out);

} // namespace aespace
