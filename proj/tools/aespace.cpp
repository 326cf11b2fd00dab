// aespace: synthetic data, triplet training and ranking from the command line.
//
// Every subcommand writes its primary output to --out (or --model-out) and a run
// metadata record next to it at <output>.meta.json. Exit codes: 0 success,
// 1 runtime failure, 2 usage error.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "aespace/data_model.hpp"
#include "aespace/encoder.hpp"
#include "aespace/errors.hpp"
#include "aespace/ranker.hpp"
#include "aespace/sampler.hpp"
#include "aespace/synth.hpp"
#include "aespace/trainer.hpp"
#include "aespace/video.hpp"

namespace {

using namespace aespace;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";
constexpr std::uint64_t kSamplerSeedOffset = 0x9E3779B97F4A7C15ULL;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", path));
    return out;
}

void write_metadata(const std::string& primary, const std::string& subcommand, ordered_json config,
                    ordered_json extra, std::chrono::steady_clock::time_point start) {
    ordered_json meta;
    meta["subcommand"] = subcommand;
    meta["version"] = kVersion;
    meta["config"] = std::move(config);
    for (auto& [k, v] : extra.items()) meta[k] = v;
    meta["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    auto out = open_output(primary + ".meta.json");
    out << meta.dump(2) << '\n';
}

Dataset load_checked(const std::string& path) {
    auto result = load_dataset(std::filesystem::path(path));
    for (const auto& r : result.rejected) {
        std::cerr << fmt::format("{}:{}: rejected ({}): {}\n", path, r.line, r.field, r.reason);
    }
    if (!result.rejected.empty()) {
        std::cerr << fmt::format("{}: {} record(s) rejected\n", path, result.rejected.size());
    }
    return std::move(result.dataset);
}

std::vector<double> truth_scores(const Dataset& dataset, const std::string& truth) {
    std::vector<double> out;
    out.reserve(dataset.size());
    if (truth == "latent") {
        for (const auto& r : dataset.records()) {
            if (!r.latent_score) throw Error(fmt::format("record '{}' has no latent_score", r.id));
            out.push_back(*r.latent_score);
        }
    } else {
        for (Score s : dataset_scores(dataset)) out.push_back(s.value());
    }
    return out;
}

// Seed: the flag wins, then AESPACE_SEED, then the default.
std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t value) {
    if (flag->count() > 0) return value;
    if (const char* env = std::getenv("AESPACE_SEED")) {
        try {
            std::size_t used = 0;
            const auto parsed = std::stoull(env, &used);
            if (used == std::string(env).size()) return parsed;
        } catch (const std::exception&) {
        }
        throw UsageError(fmt::format("AESPACE_SEED='{}' is not an unsigned integer", env));
    }
    return value;
}

struct Options {
    // synth
    SynthConfig synth;
    // shared
    std::string input, out, model, frames;
    std::uint64_t seed = 1;
    // histogram
    std::size_t bins = 10;
    // sample / train
    double alpha = 0.25, beta = 0.75;
    std::string pair_ref = "anchor";
    std::size_t count = 1000;
    // train
    TrainConfig train;
    std::string model_out, log_out;
    bool no_directional = false, literal_sign = false, verbose = false;
    // eval
    std::vector<double> thresholds = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    std::string truth = "score";
    // video
    KalmanConfig kalman;
    PeakConfig peaks;
};

ordered_json synth_json(const SynthConfig& c) {
    return {{"n", c.n}, {"d_in", c.d_in}, {"noise_sigma", c.noise_sigma}, {"seed", c.seed},
            {"view_range", {c.view_lo, c.view_hi}}};
}

int run_synth(const Options& o, std::chrono::steady_clock::time_point start) {
    const auto result = generate(o.synth);
    {
        auto out = open_output(o.out);
        save_dataset(result.dataset, out);
    }
    std::ostringstream sidecar;
    write_synth_sidecar(o.synth, result.mixing, sidecar);
    write_metadata(o.out, "synth", synth_json(o.synth),
                   {{"output", o.out}, {"records", result.dataset.size()},
                    {"generator", ordered_json::parse(sidecar.str())}},
                   start);
    return 0;
}

int run_score(const Options& o, std::chrono::steady_clock::time_point start) {
    const Dataset dataset = load_checked(o.input);
    const auto scores = dataset_scores(dataset);
    auto out = open_output(o.out);
    out << "id,score\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        out << fmt::format("{},{:.17g}\n", dataset[i].id, scores[i].value());
    }
    write_metadata(o.out, "score", ordered_json::object(),
                   {{"input", o.input}, {"output", o.out}, {"records", dataset.size()}}, start);
    return 0;
}

int run_histogram(const Options& o, std::chrono::steady_clock::time_point start) {
    const Dataset dataset = load_checked(o.input);
    const auto h = score_histogram(dataset, o.bins);
    auto out = open_output(o.out);
    write_histogram_csv(h, out);
    write_metadata(o.out, "histogram", {{"bins", o.bins}},
                   {{"input", o.input}, {"output", o.out}, {"records", dataset.size()}}, start);
    return 0;
}

int run_sample(const Options& o, std::chrono::steady_clock::time_point start) {
    const Dataset dataset = load_checked(o.input);
    SamplerConfig cfg{o.alpha, o.beta, o.seed, parse_pair_ref(o.pair_ref)};
    TripletSampler sampler(dataset_scores(dataset), cfg);
    std::vector<Triplet> triplets;
    triplets.reserve(o.count);
    for (std::size_t k = 0; k < o.count; ++k) triplets.push_back(sampler.sample());
    auto out = open_output(o.out);
    write_triplets_csv(triplets, out);
    ordered_json extra{{"input", o.input},
                       {"output", o.out},
                       {"proposed", sampler.stats().proposed},
                       {"accepted", sampler.stats().accepted},
                       {"acceptance_rate", sampler.stats().acceptance_rate()},
                       {"estimated_cardinality", estimate_cardinality(dataset.size(), sampler.stats())}};
    if (!triplets.empty()) extra["balance_fraction"] = balance_fraction(triplets);
    write_metadata(o.out, "sample",
                   {{"alpha", o.alpha}, {"beta", o.beta}, {"seed", o.seed},
                    {"pair_ref", o.pair_ref}, {"count", o.count}},
                   extra, start);
    return 0;
}

int run_train(Options o, std::chrono::steady_clock::time_point start) {
    const Dataset dataset = load_checked(o.input);
    TrainConfig& cfg = o.train;
    cfg.seed = o.seed;
    cfg.loss.directional = !o.no_directional;
    cfg.loss.literal_sign = o.literal_sign;
    cfg.sampler = SamplerConfig{o.alpha, o.beta, o.seed + kSamplerSeedOffset, parse_pair_ref(o.pair_ref)};

    TrainObserver observer;
    if (o.verbose) {
        observer = [](const TrainLogEntry& e) {
            std::cerr << fmt::format("step {:>7}  loss {:.5f}  le {:.5f}  ld {:.5f}  lr {:.1e}  acc {:.4f}\n",
                                     e.step, e.mean_loss, e.mean_le, e.mean_ld, e.lr, e.acceptance_rate);
        };
    }
    const TrainResult result = train(dataset, cfg, observer);
    save_encoder(result.params, std::filesystem::path(o.model_out));
    {
        auto log = open_output(o.log_out);
        write_train_log_csv(result.log, log);
    }
    ordered_json config{
        {"layer_dims", cfg.layer_dims(*dataset.d_in())},
        {"margin", cfg.loss.margin},
        {"dir_margin", cfg.loss.dir_margin},
        {"directional", cfg.loss.directional},
        {"literal_sign", cfg.loss.literal_sign},
        {"alpha", cfg.sampler.alpha},
        {"beta", cfg.sampler.beta},
        {"pair_ref", std::string(to_string(cfg.sampler.pair_ref))},
        {"lr_init", cfg.lr_init},
        {"lr_decay_factor", cfg.lr_decay_factor},
        {"lr_floor", cfg.lr_floor},
        {"batch_size", cfg.batch_size},
        {"max_steps", cfg.max_steps},
        {"plateau_window", cfg.plateau_window},
        {"plateau_patience", cfg.plateau_patience},
        {"plateau_min_rel_improvement", cfg.plateau_min_rel_improvement},
        {"seed", cfg.seed},
        {"sampler_seed", cfg.sampler.seed}};
    ordered_json extra{{"input", o.input},
                       {"model_out", o.model_out},
                       {"log_out", o.log_out},
                       {"steps_run", result.steps_run},
                       {"final_lr", result.final_lr},
                       {"acceptance_rate", result.sampler_stats.acceptance_rate()},
                       {"estimated_cardinality",
                        result.sampler_stats.proposed > 0
                            ? estimate_cardinality(dataset.size(), result.sampler_stats)
                            : 0.0}};
    if (!result.log.empty()) extra["final_window_loss"] = result.log.back().mean_loss;
    write_metadata(o.model_out, "train", config, extra, start);
    return 0;
}

int run_embed(const Options& o, std::chrono::steady_clock::time_point start) {
    const EncoderParams params = load_encoder(std::filesystem::path(o.model));
    const Dataset dataset = load_checked(o.input);
    if (!dataset.empty() && *dataset.d_in() != params.input_dim()) {
        throw ConfigError(fmt::format("model expects {} features, dataset has {}",
                                      params.input_dim(), *dataset.d_in()));
    }
    auto out = open_output(o.out);
    out << "id,projection_score";
    for (std::size_t k = 0; k < params.output_dim(); ++k) out << ",phi_" << k;
    out << '\n';
    for (const auto& r : dataset.records()) {
        const Vector phi = forward(params, r.features);
        out << r.id << fmt::format(",{:.17g}", projection_score(phi));
        for (Eigen::Index k = 0; k < phi.size(); ++k) out << fmt::format(",{:.17g}", phi[k]);
        out << '\n';
    }
    write_metadata(o.out, "embed", ordered_json::object(),
                   {{"model", o.model}, {"input", o.input}, {"output", o.out}, {"records", dataset.size()}},
                   start);
    return 0;
}

int run_rank(const Options& o, std::chrono::steady_clock::time_point start) {
    const EncoderParams params = load_encoder(std::filesystem::path(o.model));
    const Dataset dataset = load_checked(o.input);
    const auto ranked = rank_collection(params, dataset);
    auto out = open_output(o.out);
    write_ranked_csv(ranked, out);
    write_metadata(o.out, "rank", ordered_json::object(),
                   {{"model", o.model}, {"input", o.input}, {"output", o.out}, {"records", dataset.size()}},
                   start);
    return 0;
}

int run_eval(const Options& o, std::chrono::steady_clock::time_point start) {
    const EncoderParams params = load_encoder(std::filesystem::path(o.model));
    const Dataset dataset = load_checked(o.input);
    const auto projection = projection_scores(params, dataset);
    const auto truth = truth_scores(dataset, o.truth);
    const auto table = pairwise_agreement(projection, truth, o.thresholds);
    auto out = open_output(o.out);
    write_agreement_csv(table, out);

    std::vector<RankedItem> predicted, expected;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        predicted.push_back({dataset[i].id, projection[i]});
        expected.push_back({dataset[i].id, truth[i]});
    }
    const auto a = ids_of(rank_by_score(std::move(predicted)));
    const auto b = ids_of(rank_by_score(std::move(expected)));
    write_metadata(o.out, "eval", {{"thresholds", o.thresholds}, {"truth", o.truth}},
                   {{"model", o.model}, {"input", o.input}, {"output", o.out},
                    {"records", dataset.size()}, {"kendall_tau", kendall_tau(a, b)}},
                   start);
    return 0;
}

int run_video(const Options& o, std::chrono::steady_clock::time_point start) {
    const EncoderParams params = load_encoder(std::filesystem::path(o.model));
    const auto frames = load_frames(std::filesystem::path(o.frames));
    const auto t0 = std::chrono::steady_clock::now();
    const auto raw = score_sequence(params, frames);
    const double scoring_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<double> smoothed;
    std::vector<std::size_t> peaks;
    if (!raw.empty()) {
        smoothed = kalman_smooth(raw, o.kalman);
        peaks = detect_peaks(smoothed, o.peaks);
    }
    auto out = open_output(o.out);
    write_video_csv(raw, smoothed, peaks, out);
    ordered_json extra{{"model", o.model}, {"frames", o.frames}, {"output", o.out},
                       {"frame_count", frames.size()}, {"peaks", peaks}};
    if (scoring_seconds > 0.0 && !frames.empty()) {
        extra["frames_per_second"] = static_cast<double>(frames.size()) / scoring_seconds;
    }
    write_metadata(o.out, "video",
                   {{"q", o.kalman.q}, {"r", o.kalman.r}, {"p0", o.kalman.p0},
                    {"min_separation", o.peaks.min_separation},
                    {"min_prominence", o.peaks.min_prominence}},
                   extra, start);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"aespace: learn an aesthetic embedding from view/fave statistics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    app.option_defaults()->always_capture_default();

    Options o;

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with latent scores");
    synth->add_option("--n", o.synth.n, "number of records");
    synth->add_option("--din", o.synth.d_in, "feature dimension");
    synth->add_option("--noise", o.synth.noise_sigma, "feature noise standard deviation");
    auto* synth_seed = synth->add_option("--seed", o.synth.seed, "random seed (env AESPACE_SEED if absent)");
    synth->add_option("--view-lo", o.synth.view_lo, "lowest view count");
    synth->add_option("--view-hi", o.synth.view_hi, "highest view count");
    synth->add_option("--out", o.out, "output metadata file")->required();

    auto* score = app.add_subcommand("score", "per-record crowd score ln(faves)/ln(views)");
    score->add_option("--input", o.input, "metadata file")->required();
    score->add_option("--out", o.out, "CSV id,score")->required();

    auto* histogram = app.add_subcommand("histogram", "score distribution over [0, 1]");
    histogram->add_option("--input", o.input, "metadata file")->required();
    histogram->add_option("--bins", o.bins, "number of bins")->check(CLI::PositiveNumber);
    histogram->add_option("--out", o.out, "CSV bin_lo,bin_hi,count")->required();

    auto* sample = app.add_subcommand("sample", "draw training triplets and dump them");
    sample->add_option("--input", o.input, "metadata file")->required();
    sample->add_option("--alpha", o.alpha, "lower ratio bound (exclusive)");
    sample->add_option("--beta", o.beta, "upper ratio bound (exclusive)");
    auto* sample_seed = sample->add_option("--seed", o.seed, "random seed (env AESPACE_SEED if absent)");
    sample->add_option("--count", o.count, "triplets to draw");
    sample->add_option("--pair-ref", o.pair_ref, "negative compared against pair mean or anchor")
        ->check(CLI::IsMember({"mean", "anchor"}));
    sample->add_option("--out", o.out, "CSV a,p,n,pair_above,ratio")->required();

    auto* train_cmd = app.add_subcommand("train", "train the encoder with the directional triplet loss");
    train_cmd->add_option("--input", o.input, "metadata file")->required();
    train_cmd->add_option("--embed-dim", o.train.embed_dim, "embedding dimension");
    train_cmd->add_option("--hidden", o.train.hidden, "hidden layer widths, comma separated")->delimiter(',');
    train_cmd->add_option("--margin", o.train.loss.margin, "triplet margin");
    train_cmd->add_option("--dir-margin", o.train.loss.dir_margin, "directional margin");
    train_cmd->add_option("--alpha", o.alpha, "lower ratio bound (exclusive)");
    train_cmd->add_option("--beta", o.beta, "upper ratio bound (exclusive)");
    train_cmd->add_option("--lr", o.train.lr_init, "initial learning rate");
    train_cmd->add_option("--batch", o.train.batch_size, "triplets per step");
    train_cmd->add_option("--steps", o.train.max_steps, "maximum SGD steps");
    auto* train_seed = train_cmd->add_option("--seed", o.seed, "random seed (env AESPACE_SEED if absent)");
    train_cmd->add_option("--model-out", o.model_out, "model file")->required();
    train_cmd->add_option("--log-out", o.log_out, "CSV training log")->required();
    train_cmd->add_flag("--no-directional", o.no_directional, "drop the norm-ordering term");
    train_cmd->add_flag("--literal-sign", o.literal_sign, "signed (unbounded) directional term");
    train_cmd->add_option("--pair-ref", o.pair_ref, "negative compared against pair mean or anchor")
        ->check(CLI::IsMember({"mean", "anchor"}));
    train_cmd->add_flag("--verbose", o.verbose, "print one line per log window to stderr");

    auto* embed = app.add_subcommand("embed", "write embeddings and projection scores");
    embed->add_option("--model", o.model, "model file")->required();
    embed->add_option("--input", o.input, "metadata file")->required();
    embed->add_option("--out", o.out, "CSV id,projection_score,phi_*")->required();

    auto* rank = app.add_subcommand("rank", "sort a collection by projection score");
    rank->add_option("--model", o.model, "model file")->required();
    rank->add_option("--input", o.input, "metadata file")->required();
    rank->add_option("--out", o.out, "CSV rank,id,score")->required();

    auto* eval = app.add_subcommand("eval", "pairwise agreement of projection and true scores");
    eval->add_option("--model", o.model, "model file")->required();
    eval->add_option("--input", o.input, "metadata file")->required();
    eval->add_option("--thresholds", o.thresholds, "score-gap thresholds, comma separated")->delimiter(',');
    eval->add_option("--truth", o.truth, "ground truth: crowd score or latent_score")
        ->check(CLI::IsMember({"score", "latent"}));
    eval->add_option("--out", o.out, "CSV delta,pairs,agreement")->required();

    auto* video = app.add_subcommand("video", "score, smooth and find peaks in a frame sequence");
    video->add_option("--model", o.model, "model file")->required();
    video->add_option("--frames", o.frames, "frame records, one per line in temporal order")->required();
    video->add_option("--q", o.kalman.q, "process-noise variance");
    video->add_option("--r", o.kalman.r, "measurement-noise variance");
    video->add_option("--min-sep", o.peaks.min_separation, "minimum frames between peaks");
    video->add_option("--min-prom", o.peaks.min_prominence, "minimum peak prominence");
    video->add_option("--out", o.out, "CSV frame,raw_score,smoothed_score,is_peak")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        if (*synth) {
            o.synth.seed = resolve_seed(synth_seed, o.synth.seed);
            o.synth.validate();
            return run_synth(o, start);
        }
        if (*score) return run_score(o, start);
        if (*histogram) return run_histogram(o, start);
        if (*sample) {
            o.seed = resolve_seed(sample_seed, o.seed);
            return run_sample(o, start);
        }
        if (*train_cmd) {
            o.seed = resolve_seed(train_seed, o.seed);
            return run_train(o, start);
        }
        if (*embed) return run_embed(o, start);
        if (*rank) return run_rank(o, start);
        if (*eval) return run_eval(o, start);
        if (*video) return run_video(o, start);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
