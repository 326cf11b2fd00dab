#include "aespace/data_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "aespace/errors.hpp"

namespace aespace {

using nlohmann::json;

Score::Score(double value) : value_(value) {
    if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
        throw InvalidRecordError("score", fmt::format("score {} outside [0, 1]", value));
    }
}

Score compute_score(std::int64_t views, std::int64_t faves) {
    if (views < 2) {
        throw InvalidRecordError("views", fmt::format("views must be >= 2, got {}", views));
    }
    if (faves < 1) {
        throw InvalidRecordError("faves", fmt::format("faves must be >= 1, got {}", faves));
    }
    if (faves > views) {
        throw InvalidRecordError(
            "faves", fmt::format("faves ({}) exceeds views ({})", faves, views));
    }
    // Base-free: only the ratio of logarithms is used.
    return Score(std::log(static_cast<double>(faves)) / std::log(static_cast<double>(views)));
}

namespace {

void check_record(const ImageRecord& r) {
    compute_score(r.views, r.faves);
    if (r.latent_score && !(*r.latent_score >= 0.0 && *r.latent_score <= 1.0)) {
        throw InvalidRecordError("latent_score",
                                 fmt::format("latent_score {} outside [0, 1]", *r.latent_score));
    }
    if (!r.features.allFinite()) {
        throw InvalidRecordError("features", "non-finite feature value");
    }
}

} // namespace

void Dataset::add(ImageRecord record) {
    if (d_in_ && static_cast<std::size_t>(record.features.size()) != *d_in_) {
        throw FormatError(fmt::format("record '{}' has {} features, dataset has {}", record.id,
                                      record.features.size(), *d_in_));
    }
    check_record(record);
    if (ids_.contains(record.id)) {
        throw InvalidRecordError("id", fmt::format("duplicate id '{}'", record.id));
    }
    if (!d_in_) d_in_ = static_cast<std::size_t>(record.features.size());
    ids_.insert(record.id);
    records_.push_back(std::move(record));
}

std::vector<Score> dataset_scores(const Dataset& dataset) {
    std::vector<Score> scores;
    scores.reserve(dataset.size());
    for (const auto& r : dataset.records()) scores.push_back(compute_score(r.views, r.faves));
    return scores;
}

namespace {

struct ParsedLine {
    std::string id;
    std::optional<std::int64_t> views;
    std::optional<std::int64_t> faves;
    Vector features;
    std::optional<double> latent_score;
};

ParsedLine parse_line(const std::string& text, std::size_t line_no) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, fmt::format("invalid JSON: {}", e.what()));
    }
    if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");

    ParsedLine out;
    auto id = obj.find("id");
    if (id == obj.end() || !id->is_string()) {
        throw ParseError(line_no, "missing or non-string \"id\"");
    }
    out.id = id->get<std::string>();

    auto integer = [&](const char* key) -> std::optional<std::int64_t> {
        auto it = obj.find(key);
        if (it == obj.end()) return std::nullopt;
        if (!it->is_number_integer()) {
            throw ParseError(line_no, fmt::format("\"{}\" must be an integer", key));
        }
        return it->get<std::int64_t>();
    };
    out.views = integer("views");
    out.faves = integer("faves");

    auto features = obj.find("features");
    if (features == obj.end() || !features->is_array()) {
        throw ParseError(line_no, "missing or non-array \"features\"");
    }
    out.features.resize(static_cast<Eigen::Index>(features->size()));
    for (std::size_t k = 0; k < features->size(); ++k) {
        const auto& v = (*features)[k];
        if (!v.is_number()) {
            throw ParseError(line_no, fmt::format("features[{}] is not a number", k));
        }
        out.features[static_cast<Eigen::Index>(k)] = v.get<double>();
    }

    auto latent = obj.find("latent_score");
    if (latent != obj.end() && !latent->is_null()) {
        if (!latent->is_number()) throw ParseError(line_no, "\"latent_score\" must be a number");
        out.latent_score = latent->get<double>();
    }
    return out;
}

template <class Fn>
void for_each_line(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
            continue;
        }
        fn(line, line_no);
    }
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
    return in;
}

} // namespace

LoadResult load_dataset(std::istream& in) {
    LoadResult result;
    for_each_line(in, [&](const std::string& line, std::size_t line_no) {
        ParsedLine parsed = parse_line(line, line_no);
        if (!parsed.views) throw ParseError(line_no, "missing \"views\"");
        if (!parsed.faves) throw ParseError(line_no, "missing \"faves\"");
        ImageRecord record{std::move(parsed.id), *parsed.views, *parsed.faves,
                           std::move(parsed.features), parsed.latent_score};
        try {
            result.dataset.add(std::move(record));
        } catch (const InvalidRecordError& e) {
            result.rejected.push_back({line_no, e.field(), e.what()});
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("line {}: {}", line_no, e.what()));
        }
    });
    return result;
}

LoadResult load_dataset(const std::filesystem::path& path) {
    auto in = open_input(path);
    return load_dataset(in);
}

std::vector<FrameRecord> load_frames(std::istream& in) {
    std::vector<FrameRecord> frames;
    for_each_line(in, [&](const std::string& line, std::size_t line_no) {
        ParsedLine parsed = parse_line(line, line_no);
        if (!frames.empty() && frames.front().features.size() != parsed.features.size()) {
            throw FormatError(fmt::format("line {}: frame has {} features, expected {}", line_no,
                                          parsed.features.size(), frames.front().features.size()));
        }
        if (!parsed.features.allFinite()) {
            throw FormatError(fmt::format("line {}: non-finite feature value", line_no));
        }
        frames.push_back({std::move(parsed.id), std::move(parsed.features)});
    });
    return frames;
}

std::vector<FrameRecord> load_frames(const std::filesystem::path& path) {
    auto in = open_input(path);
    return load_frames(in);
}

std::string format_record(const ImageRecord& record) {
    std::string out = fmt::format("{{\"id\":{},\"views\":{},\"faves\":{},\"features\":[",
                                  json(record.id).dump(), record.views, record.faves);
    for (Eigen::Index k = 0; k < record.features.size(); ++k) {
        if (k > 0) out += ',';
        out += fmt::format("{:.17g}", record.features[k]);
    }
    out += ']';
    if (record.latent_score) out += fmt::format(",\"latent_score\":{:.17g}", *record.latent_score);
    out += '}';
    return out;
}

void save_dataset(const Dataset& dataset, std::ostream& out) {
    for (const auto& r : dataset.records()) out << format_record(r) << '\n';
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    save_dataset(dataset, out);
}

Histogram score_histogram(std::span<const Score> scores, std::size_t bins) {
    if (bins < 1) throw ConfigError("histogram needs at least one bin");
    if (scores.empty()) throw EmptyInputError("histogram of an empty dataset");

    Histogram h;
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) {
        h.edges[b] = static_cast<double>(b) / static_cast<double>(bins);
    }
    h.counts.assign(bins, 0);
    for (Score s : scores) {
        auto b = static_cast<std::size_t>(s.value() * static_cast<double>(bins));
        // Guard against s * bins landing one bin off the exact edge.
        while (b > 0 && s.value() < h.edges[b]) --b;
        while (b + 1 < bins && s.value() >= h.edges[b + 1]) ++b;
        h.counts[std::min(b, bins - 1)] += 1;
    }
    return h;
}

Histogram score_histogram(const Dataset& dataset, std::size_t bins) {
    const auto scores = dataset_scores(dataset);
    return score_histogram(scores, bins);
}

void write_histogram_csv(const Histogram& histogram, std::ostream& out) {
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < histogram.counts.size(); ++b) {
        out << fmt::format("{:.17g},{:.17g},{}\n", histogram.edges[b], histogram.edges[b + 1],
                           histogram.counts[b]);
    }
}

} // namespace aespace
