#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

namespace aespace {

using Vector = Eigen::VectorXd;

/// Crowd-signal score in [0, 1]: ln(faves) / ln(views).
class Score {
public:
    constexpr Score() = default;
    /// Throws InvalidRecordError("score") when value is not a finite number in [0, 1].
    explicit Score(double value);

    constexpr double value() const noexcept { return value_; }
    friend constexpr auto operator<=>(Score, Score) = default;

private:
    double value_ = 0.0;
};

struct ImageRecord {
    std::string id;
    std::int64_t views = 0;
    std::int64_t faves = 0;
    Vector features;
    std::optional<double> latent_score;
};

/// A frame of a video sequence: the relaxed record variant with only id and features.
struct FrameRecord {
    std::string id;
    Vector features;
};

/// Ordered image collection with unique ids and a fixed feature length.
class Dataset {
public:
    Dataset() = default;

    /// Appends a record after checking every ImageRecord invariant.
    /// Throws InvalidRecordError for bad counts, latent score, features or a duplicate
    /// id, and FormatError when the feature length differs from d_in().
    void add(ImageRecord record);

    const std::vector<ImageRecord>& records() const noexcept { return records_; }
    const ImageRecord& operator[](std::size_t i) const { return records_[i]; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    /// Undefined (nullopt) until the first record is added.
    std::optional<std::size_t> d_in() const noexcept { return d_in_; }

private:
    std::vector<ImageRecord> records_;
    std::unordered_set<std::string> ids_;
    std::optional<std::size_t> d_in_;
};

/// ln(faves) / ln(views). Requires views >= 2 and 1 <= faves <= views; otherwise throws
/// InvalidRecordError naming "views" or "faves".
Score compute_score(std::int64_t views, std::int64_t faves);

/// Scores of every record, aligned with dataset.records().
std::vector<Score> dataset_scores(const Dataset& dataset);

struct Rejection {
    std::size_t line = 0;
    std::string field;
    std::string reason;
};

struct LoadResult {
    Dataset dataset;
    std::vector<Rejection> rejected;
};

/// Reads the one-object-per-line metadata format. Records violating the count or
/// score invariants are skipped and reported in LoadResult::rejected. Malformed lines
/// raise ParseError; a feature length differing from the first record raises FormatError.
LoadResult load_dataset(std::istream& in);
LoadResult load_dataset(const std::filesystem::path& path);

/// Reads frame records ("id" and "features" required; other keys ignored).
std::vector<FrameRecord> load_frames(std::istream& in);
std::vector<FrameRecord> load_frames(const std::filesystem::path& path);

/// One metadata line without the trailing newline. Reals use 17 significant digits.
std::string format_record(const ImageRecord& record);

void save_dataset(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Even partition of [0, 1]. Bins are [lo, hi) except the last, which is closed.
struct Histogram {
    std::vector<double> edges; // bins + 1 entries
    std::vector<std::size_t> counts;
};

Histogram score_histogram(std::span<const Score> scores, std::size_t bins);
Histogram score_histogram(const Dataset& dataset, std::size_t bins);

/// CSV with header `bin_lo,bin_hi,count`.
void write_histogram_csv(const Histogram& histogram, std::ostream& out);

} // namespace aespace
