#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "demandforge/config.hpp"
#include "demandforge/csv.hpp"
#include "demandforge/dataset.hpp"
#include "demandforge/error.hpp"
#include "demandforge/numfmt.hpp"
#include "demandforge/random.hpp"
#include "demandforge/validation.hpp"

namespace demandforge {

// ============================================================================
// Search space
// ============================================================================

struct ParamValues {
    std::string name;
    std::vector<double> values;
};

struct FamilySpace {
    Family family = Family::gbdt;
    std::vector<ParamValues> params;
};

/// Cartesian product, per family, of hyperparameter values x setups, and
/// additionally x feature sets for families that consume features.
struct SearchSpace {
    std::vector<FamilySpace> families;
    std::vector<FeatureSpec> feature_sets;
    std::vector<Setup> setups{Setup::single_model};

    void validate() const {
        require(!families.empty(), ErrorKind::ConfigError, "search space has no model families");
        require(!setups.empty(), ErrorKind::ConfigError, "search space has no setups");
        std::set<Setup> seen_setups(setups.begin(), setups.end());
        require(seen_setups.size() == setups.size(), ErrorKind::ConfigError, "duplicate setups in search space");
        for (const auto& f : families) {
            if (f.family == Family::linear_ar || f.family == Family::gbdt) {
                require(!feature_sets.empty(), ErrorKind::ConfigError,
                        to_string(f.family) + " needs at least one feature set");
            }
            std::set<std::string> names;
            for (const auto& p : f.params) {
                require(!p.values.empty(), ErrorKind::ConfigError, "empty value set for " + p.name);
                require(names.insert(p.name).second, ErrorKind::ConfigError, "duplicate hyperparameter " + p.name);
                std::set<double> distinct(p.values.begin(), p.values.end());
                require(distinct.size() == p.values.size(), ErrorKind::ConfigError, "duplicate values for " + p.name);
                ForecasterSpec probe{f.family, {}, Setup::single_model};
                for (double v : p.values) set_hyperparameter(probe, p.name, v);
            }
        }
        std::set<std::string> distinct_sets;
        for (const auto& fs : feature_sets) {
            fs.validate();
            require(!fs.empty(), ErrorKind::ConfigError, "empty feature set in search space");
            require(distinct_sets.insert(to_json(fs).dump()).second, ErrorKind::ConfigError,
                    "duplicate feature set in search space");
        }
    }

    static std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
        require(b == 0 || a <= (std::uint64_t{1} << 62) / b, ErrorKind::ConfigError, "search space too large");
        return a * b;
    }

    std::uint64_t family_size(const FamilySpace& f) const {
        std::uint64_t n = setups.size();
        for (const auto& p : f.params) n = checked_mul(n, p.values.size());
        if (f.family == Family::linear_ar || f.family == Family::gbdt) n = checked_mul(n, feature_sets.size());
        return n;
    }

    std::uint64_t size() const {
        std::uint64_t n = 0;
        for (const auto& f : families) {
            n += family_size(f);
            require(n <= (std::uint64_t{1} << 62), ErrorKind::ConfigError, "search space too large");
        }
        return n;
    }

    /// Mixed-radix decoding; hyperparameters vary slowest, setup fastest.
    Configuration at(std::uint64_t index) const {
        for (const auto& f : families) {
            const std::uint64_t block = family_size(f);
            if (index >= block) {
                index -= block;
                continue;
            }
            ForecasterSpec spec{f.family, {}, Setup::single_model};
            spec.setup = setups[index % setups.size()];
            index /= setups.size();
            FeatureSpec features;
            if (spec.uses_features()) {
                features = feature_sets[index % feature_sets.size()];
                index /= feature_sets.size();
            }
            for (auto it = f.params.rbegin(); it != f.params.rend(); ++it) {
                set_hyperparameter(spec, it->name, it->values[index % it->values.size()]);
                index /= it->values.size();
            }
            return make_configuration(spec, features);
        }
        fail(ErrorKind::OutOfRange, "configuration index beyond the search space");
    }
};

/// Uniform draws over the space without duplicates, deterministic per seed;
/// the whole space in index order when `count` reaches its size.
inline std::vector<Configuration> sample_configs(const SearchSpace& space, std::uint64_t count, std::uint64_t seed) {
    require(count >= 1, ErrorKind::InvalidArgument, "sample count must be >= 1");
    space.validate();
    const std::uint64_t size = space.size();
    std::vector<Configuration> out;
    std::map<std::string, std::string> contents;
    auto accept = [&](Configuration c) {
        const std::string dump = c.content().dump();
        auto [it, inserted] = contents.emplace(c.id, dump);
        if (!inserted) {
            require(it->second == dump, ErrorKind::HashCollision, "configuration id collision on " + c.id);
            return;
        }
        out.push_back(std::move(c));
    };
    if (count >= size) {
        for (std::uint64_t i = 0; i < size; ++i) accept(space.at(i));
        return out;
    }
    std::mt19937_64 rng(seed);
    std::set<std::uint64_t> drawn;
    while (out.size() < count) {
        const std::uint64_t idx = uniform_index(rng, size);
        if (drawn.insert(idx).second) accept(space.at(idx));
    }
    return out;
}

// ============================================================================
// Leaderboard
// ============================================================================

struct LeaderboardRow {
    ScoredConfig score;
    Configuration config;
};

struct Leaderboard {
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<LeaderboardRow> rows;  // sorted by combined_rank
};

inline nlohmann::json score_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    return v;
}

inline double score_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        fail(ErrorKind::ParseError, "bad score '" + s + "'");
    }
    return j.get<double>();
}

inline nlohmann::json to_json(const Leaderboard& board) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : board.rows) {
        rows.push_back({{"combined_rank", r.score.combined_rank},
                        {"config_id", r.score.config_id},
                        {"rank_ts", r.score.rank_ts},
                        {"rank_kf", r.score.rank_kf},
                        {"score_ts", score_to_json(r.score.score_ts)},
                        {"score_kf", score_to_json(r.score.score_kf)},
                        {"config", to_json(r.config)}});
    }
    return nlohmann::json{{"metadata", board.metadata}, {"rows", rows}};
}

inline Leaderboard leaderboard_from_json(const nlohmann::json& j) {
    Leaderboard board;
    try {
        board.metadata = j.at("metadata");
        for (const auto& r : j.at("rows")) {
            LeaderboardRow row;
            row.config = configuration_from_json(r.at("config"));
            row.score.config_id = r.at("config_id").get<std::string>();
            require(row.score.config_id == row.config.id, ErrorKind::CorruptPayload, "leaderboard row id mismatch");
            row.score.combined_rank = r.at("combined_rank").get<int>();
            row.score.rank_ts = r.at("rank_ts").get<int>();
            row.score.rank_kf = r.at("rank_kf").get<int>();
            row.score.score_ts = score_from_json(r.at("score_ts"));
            row.score.score_kf = score_from_json(r.at("score_kf"));
            board.rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, std::string("bad leaderboard: ") + e.what());
    }
    for (std::size_t i = 0; i < board.rows.size(); ++i) {
        require(board.rows[i].score.combined_rank == static_cast<int>(i) + 1, ErrorKind::ParseError,
                "leaderboard rows are not sorted by combined rank");
    }
    return board;
}

inline std::string leaderboard_json_text(const Leaderboard& board) { return to_json(board).dump(2) + "\n"; }

inline void write_leaderboard_json(const std::filesystem::path& path, const Leaderboard& board) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::IoError, "cannot write " + path.string());
    out << leaderboard_json_text(board);
    require(out.good(), ErrorKind::IoError, "failed writing " + path.string());
}

inline Leaderboard read_leaderboard_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::IoError, "cannot open " + path.string());
    try {
        return leaderboard_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, path.string() + ": " + e.what());
    }
}

inline void write_leaderboard_csv(std::ostream& out, const Leaderboard& board) {
    csv::write_row(out, {"combined_rank", "config_id", "family", "setup", "score_ts", "score_kf", "rank_ts", "rank_kf",
                         "params", "features"});
    for (const auto& r : board.rows) {
        const auto content = r.config.content();
        csv::write_row(out, {std::to_string(r.score.combined_rank), r.score.config_id,
                             to_string(r.config.forecaster.family), to_string(r.config.forecaster.setup),
                             format_double(r.score.score_ts), format_double(r.score.score_kf),
                             std::to_string(r.score.rank_ts), std::to_string(r.score.rank_kf),
                             content.at("forecaster").at("params").dump(), content.at("features").dump()});
    }
}

inline std::vector<Configuration> select_top(const Leaderboard& board, std::int64_t n) {
    require(n >= 1 && static_cast<std::size_t>(n) <= board.rows.size(), ErrorKind::OutOfRange,
            "top-n must be between 1 and " + std::to_string(board.rows.size()));
    std::vector<Configuration> out;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) out.push_back(board.rows[i].config);
    return out;
}

// ============================================================================
// Search execution
// ============================================================================

struct CvSettings {
    std::int64_t n_folds = 3;
    std::int64_t k = 3;
    std::int64_t horizon = 3;
    std::uint64_t seed = 0;
};

struct SearchOptions {
    std::string metric = "mase";
    std::size_t workers = 1;
    std::optional<std::filesystem::path> log_path;  // append-only partial results
    nlohmann::json metadata = nlohmann::json::object();
};

struct SearchStats {
    std::size_t tasks = 0;
    std::size_t reused = 0;
    std::size_t failed = 0;
};

namespace detail {

using TaskKey = std::tuple<std::string, Strategy, std::size_t>;

inline std::string log_record(const TaskKey& key, double score) {
    nlohmann::json j{{"config_id", std::get<0>(key)},
                     {"strategy", to_string(std::get<1>(key))},
                     {"fold", std::get<2>(key)},
                     {"score", score_to_json(score)}};
    return j.dump() + "\n";
}

/// Reads completed tasks. A final line without a newline is an interrupted
/// write; it is discarded and the file truncated back to the last full record.
inline std::map<TaskKey, double> read_search_log(const std::filesystem::path& path) {
    std::map<TaskKey, double> done;
    if (!std::filesystem::exists(path)) return done;
    std::string text;
    {
        std::ifstream in(path, std::ios::binary);
        require(in.good(), ErrorKind::IoError, "cannot read " + path.string());
        text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    const std::size_t complete = text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1;
    if (complete != text.size()) {
        std::error_code ec;
        std::filesystem::resize_file(path, complete, ec);
        require(!ec, ErrorKind::IoError, "cannot repair " + path.string() + ": " + ec.message());
    }
    std::size_t line_no = 0, pos = 0;
    while (pos < complete) {
        const std::size_t end = text.find('\n', pos);
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            TaskKey key{j.at("config_id").get<std::string>(), parse_strategy(j.at("strategy").get<std::string>()),
                        j.at("fold").get<std::size_t>()};
            done.emplace(std::move(key), score_from_json(j.at("score")));
        } catch (const std::exception& e) {
            fail(ErrorKind::IoError, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return done;
}

}  // namespace detail

/// Scores every configuration on every fold of both strategies, reusing
/// results already present in the partial-result log, and ranks them with
/// combine_rankings. The result does not depend on the worker count or on
/// the order tasks complete in.
inline Leaderboard run_search(const std::vector<Configuration>& configs, const Panel& panel, const CvSettings& cv,
                              const SearchOptions& options, SearchStats* stats = nullptr) {
    require(!configs.empty(), ErrorKind::InvalidArgument, "no configurations to search");
    require(is_regression_metric(options.metric), ErrorKind::InvalidArgument,
            "tuning metric must be one of mae, rmse, mase, smape");
    {
        std::map<std::string, std::string> contents;
        for (const auto& c : configs) {
            auto [it, inserted] = contents.emplace(c.id, c.content().dump());
            require(inserted || it->second == c.content().dump(), ErrorKind::HashCollision,
                    "configuration id collision on " + c.id);
            require(inserted, ErrorKind::InvalidArgument, "duplicate configuration " + c.id);
        }
    }

    const FoldPlan ts_plan = timeseries_folds(panel, cv.n_folds, cv.horizon);
    const FoldPlan kf_plan = series_kfolds(panel, cv.k, cv.horizon, cv.seed);

    struct Task {
        std::size_t config;
        Strategy strategy;
        std::size_t fold;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        for (std::size_t f = 0; f < ts_plan.folds.size(); ++f) tasks.push_back({c, Strategy::timeseries, f});
        for (std::size_t f = 0; f < kf_plan.folds.size(); ++f) tasks.push_back({c, Strategy::series_kfold, f});
    }

    std::map<detail::TaskKey, double> done;
    if (options.log_path) done = detail::read_search_log(*options.log_path);

    std::vector<double> scores(tasks.size(), 0.0);
    std::vector<std::size_t> pending;
    SearchStats local_stats;
    local_stats.tasks = tasks.size();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto it = done.find({configs[tasks[i].config].id, tasks[i].strategy, tasks[i].fold});
        if (it != done.end()) {
            scores[i] = it->second;
            ++local_stats.reused;
        } else {
            pending.push_back(i);
        }
    }

    std::ofstream log;
    if (options.log_path && !pending.empty()) {
        log.open(*options.log_path, std::ios::binary | std::ios::app);
        require(log.good(), ErrorKind::IoError, "cannot append to " + options.log_path->string());
    }

    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t n = next.fetch_add(1);
            if (n >= pending.size()) return;
            const std::size_t i = pending[n];
            const Task& t = tasks[i];
            try {
                const Configuration& config = configs[t.config];
                const FoldPlan& plan = t.strategy == Strategy::timeseries ? ts_plan : kf_plan;
                const double score = evaluate_fold(config, panel, plan.folds[t.fold], options.metric);
                scores[i] = score;
                if (log.is_open()) {
                    const std::string record = detail::log_record({config.id, t.strategy, t.fold}, score);
                    std::lock_guard<std::mutex> lock(log_mutex);
                    log << record;
                    log.flush();
                    require(log.good(), ErrorKind::IoError, "failed writing " + options.log_path->string());
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(pending.size());
                return;
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, pending.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    if (log.is_open()) {
        // Completion order depends on thread scheduling; once every task is in,
        // rewrite the log in task order so finished runs leave identical files.
        log.close();
        std::string text;
        std::set<detail::TaskKey> written;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            detail::TaskKey key{configs[tasks[i].config].id, tasks[i].strategy, tasks[i].fold};
            text += detail::log_record(key, scores[i]);
            written.insert(std::move(key));
        }
        for (const auto& [key, score] : done) {
            if (!written.count(key)) text += detail::log_record(key, score);
        }
        const auto tmp = std::filesystem::path(options.log_path->string() + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << text;
            require(out.good(), ErrorKind::IoError, "failed writing " + tmp.string());
        }
        std::error_code ec;
        std::filesystem::rename(tmp, *options.log_path, ec);
        require(!ec, ErrorKind::IoError, "cannot replace " + options.log_path->string() + ": " + ec.message());
    }

    std::vector<ScoredConfig> scored(configs.size());
    std::vector<double> ts_sum(configs.size(), 0.0), kf_sum(configs.size(), 0.0);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Task& t = tasks[i];
        if (std::isinf(scores[i])) ++local_stats.failed;
        (t.strategy == Strategy::timeseries ? ts_sum : kf_sum)[t.config] += scores[i];
    }
    for (std::size_t c = 0; c < configs.size(); ++c) {
        scored[c].config_id = configs[c].id;
        scored[c].score_ts = ts_sum[c] / static_cast<double>(ts_plan.folds.size());
        scored[c].score_kf = kf_sum[c] / static_cast<double>(kf_plan.folds.size());
    }
    scored = combine_rankings(std::move(scored));

    std::map<std::string, const Configuration*> by_id;
    for (const auto& c : configs) by_id.emplace(c.id, &c);
    Leaderboard board;
    board.metadata = options.metadata;
    board.metadata["metric"] = options.metric;
    board.metadata["configurations"] = configs.size();
    board.metadata["cv"] = {{"n_folds", cv.n_folds}, {"k", cv.k}, {"horizon", cv.horizon}, {"seed", cv.seed}};
    board.metadata["series"] = panel.size();
    for (auto& s : scored) board.rows.push_back({s, *by_id.at(s.config_id)});
    if (stats) *stats = local_stats;
    return board;
}

}  // namespace demandforge
