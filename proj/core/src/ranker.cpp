#include "aespace/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "aespace/errors.hpp"

namespace aespace {

double projection_score(const Vector& phi) { return phi.norm(); }

RankedList rank_by_score(std::vector<RankedItem> items) {
    std::sort(items.begin(), items.end(), [](const RankedItem& x, const RankedItem& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.id < y.id;
    });
    return items;
}

std::vector<double> projection_scores(const EncoderParams& params, const Dataset& dataset) {
    if (dataset.empty()) return {};
    if (*dataset.d_in() != params.input_dim()) {
        throw ConfigError(fmt::format("model expects {} features, dataset has {}",
                                      params.input_dim(), *dataset.d_in()));
    }
    Matrix x(static_cast<Eigen::Index>(params.input_dim()), static_cast<Eigen::Index>(dataset.size()));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        x.col(static_cast<Eigen::Index>(i)) = dataset[i].features;
    }
    const Matrix phi = forward_batch(params, x).output();
    std::vector<double> scores(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        scores[i] = projection_score(phi.col(static_cast<Eigen::Index>(i)));
    }
    return scores;
}

RankedList rank_collection(const EncoderParams& params, const Dataset& dataset) {
    const auto scores = projection_scores(params, dataset);
    std::vector<RankedItem> items;
    items.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) items.push_back({dataset[i].id, scores[i]});
    return rank_by_score(std::move(items));
}

AgreementTable pairwise_agreement(std::span<const double> projection,
                                  std::span<const double> truth,
                                  std::span<const double> thresholds) {
    if (projection.size() != truth.size()) {
        throw ShapeError(fmt::format("{} projection scores vs {} true scores", projection.size(),
                                     truth.size()));
    }
    if (projection.size() < 2) throw EmptyInputError("pairwise agreement needs at least 2 items");
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
        if (!(thresholds[k] > 0.0 && thresholds[k] < 1.0)) {
            throw ConfigError(fmt::format("threshold {} outside (0, 1)", thresholds[k]));
        }
        if (k > 0 && !(thresholds[k] > thresholds[k - 1])) {
            throw ConfigError("thresholds must be strictly increasing");
        }
    }

    std::vector<std::size_t> pairs(thresholds.size(), 0);
    std::vector<std::size_t> agree(thresholds.size(), 0);
    const std::size_t n = truth.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double gap = std::abs(truth[i] - truth[j]);
            // Pairs qualifying for threshold k qualify for every smaller one.
            const auto qualifying = static_cast<std::size_t>(
                std::lower_bound(thresholds.begin(), thresholds.end(), gap) - thresholds.begin());
            if (qualifying == 0) continue;
            const double true_diff = truth[i] - truth[j];
            const double proj_diff = projection[i] - projection[j];
            const bool match = (true_diff > 0 && proj_diff > 0) || (true_diff < 0 && proj_diff < 0);
            for (std::size_t k = 0; k < qualifying; ++k) {
                ++pairs[k];
                if (match) ++agree[k];
            }
        }
    }

    AgreementTable table;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
        AgreementRow row{thresholds[k], pairs[k], std::nullopt};
        if (pairs[k] > 0) {
            row.agreement = static_cast<double>(agree[k]) / static_cast<double>(pairs[k]);
        }
        table.push_back(row);
    }
    return table;
}

double kendall_tau(std::span<const std::string> order_a, std::span<const std::string> order_b) {
    if (order_a.size() != order_b.size()) {
        throw ConfigError(fmt::format("orderings have {} and {} ids", order_a.size(), order_b.size()));
    }
    const std::size_t n = order_a.size();
    if (n < 2) throw EmptyInputError("Kendall tau needs at least 2 ids");

    std::unordered_map<std::string_view, std::size_t> position_b;
    for (std::size_t k = 0; k < n; ++k) {
        if (!position_b.emplace(order_b[k], k).second) {
            throw ConfigError(fmt::format("duplicate id '{}'", order_b[k]));
        }
    }
    std::vector<std::size_t> rank_in_b(n);
    for (std::size_t k = 0; k < n; ++k) {
        auto it = position_b.find(order_a[k]);
        if (it == position_b.end()) {
            throw ConfigError(fmt::format("id '{}' missing from the second ordering", order_a[k]));
        }
        rank_in_b[k] = it->second;
    }

    long long concordant = 0;
    long long discordant = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (rank_in_b[i] < rank_in_b[j]) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double total = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    return static_cast<double>(concordant - discordant) / total;
}

std::vector<std::string> ids_of(const RankedList& ranked) {
    std::vector<std::string> ids;
    ids.reserve(ranked.size());
    for (const auto& item : ranked) ids.push_back(item.id);
    return ids;
}

void write_ranked_csv(const RankedList& ranked, std::ostream& out) {
    out << "rank,id,score\n";
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        out << fmt::format("{},{},{:.17g}\n", k + 1, ranked[k].id, ranked[k].score);
    }
}

void write_agreement_csv(const AgreementTable& table, std::ostream& out) {
    out << "delta,pairs,agreement\n";
    for (const auto& row : table) {
        out << fmt::format("{:.17g},{},", row.delta, row.pairs);
        out << (row.agreement ? fmt::format("{:.17g}", *row.agreement) : std::string("NA")) << '\n';
    }
}

} // namespace aespace
