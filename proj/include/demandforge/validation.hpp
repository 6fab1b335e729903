#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "demandforge/config.hpp"
#include "demandforge/dataset.hpp"
#include "demandforge/error.hpp"
#include "demandforge/metrics.hpp"
#include "demandforge/models.hpp"
#include "demandforge/random.hpp"

namespace demandforge {

enum class Strategy { timeseries, series_kfold };

inline std::string to_string(Strategy s) { return s == Strategy::timeseries ? "timeseries" : "series_kfold"; }
inline Strategy parse_strategy(std::string_view s) {
    if (s == "timeseries") return Strategy::timeseries;
    if (s == "series_kfold") return Strategy::series_kfold;
    fail(ErrorKind::InvalidArgument, "unknown strategy '" + std::string(s) + "'");
}

/// Half-open timestep range [begin, end) within one series.
struct Window {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const Window&) const = default;
};

/// `train` lists the series (and ranges) the model is fitted on. For every
/// entry in `validation` the model sees the series' history [0, begin) as
/// context and is scored on [begin, end).
struct Fold {
    std::map<SeriesKey, Window> train;
    std::map<SeriesKey, Window> validation;
    bool operator==(const Fold&) const = default;
};

struct FoldPlan {
    Strategy strategy = Strategy::timeseries;
    std::size_t horizon = 0;
    std::size_t k = 0;  // n_folds for timeseries, k for series_kfold
    std::vector<Fold> folds;
    bool operator==(const FoldPlan&) const = default;
};

/// Expanding-window folds: fold i (1-based) trains on [0, N - (n_folds - i + 1) h)
/// and validates on the next h steps, per series with its own length N.
/// `min_train` is the shortest acceptable training prefix (feature warm-up + 1).
inline FoldPlan timeseries_folds(const Panel& panel, std::int64_t n_folds, std::int64_t horizon,
                                 std::int64_t min_train = 1) {
    require(n_folds >= 1, ErrorKind::InvalidArgument, "n_folds must be positive");
    require(horizon >= 1, ErrorKind::InvalidArgument, "horizon must be positive");
    require(min_train >= 1, ErrorKind::InvalidArgument, "min_train must be positive");
    const auto n = static_cast<std::size_t>(n_folds);
    const auto h = static_cast<std::size_t>(horizon);
    const std::size_t needed = n * h + static_cast<std::size_t>(min_train);
    std::string offenders;
    for (const auto& s : panel.series()) {
        if (s.length() < needed) offenders += " " + s.key.label() + " (length " + std::to_string(s.length()) + ")";
    }
    require(offenders.empty(), ErrorKind::SeriesTooShort,
            "series shorter than " + std::to_string(needed) + ":" + offenders);

    FoldPlan plan{Strategy::timeseries, h, n, {}};
    for (std::size_t i = 1; i <= n; ++i) {
        Fold fold;
        for (const auto& s : panel.series()) {
            const std::size_t cut = s.length() - (n - i + 1) * h;
            fold.train.emplace(s.key, Window{0, cut});
            fold.validation.emplace(s.key, Window{cut, cut + h});
        }
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

/// Series k-fold: keys shuffled with a seeded RNG and cut into k groups
/// whose sizes differ by at most one. Fold i trains on every series outside
/// group i (full length) and scores group i on its final h steps.
inline FoldPlan series_kfolds(const Panel& panel, std::int64_t k, std::int64_t horizon, std::uint64_t seed) {
    require(k >= 1, ErrorKind::InvalidArgument, "k must be positive");
    require(horizon >= 1, ErrorKind::InvalidArgument, "horizon must be positive");
    require(static_cast<std::size_t>(k) <= panel.size(), ErrorKind::TooFewSeries,
            "k = " + std::to_string(k) + " exceeds the " + std::to_string(panel.size()) + " series in the panel");
    const auto h = static_cast<std::size_t>(horizon);
    std::string offenders;
    for (const auto& s : panel.series()) {
        if (s.length() <= h) offenders += " " + s.key.label() + " (length " + std::to_string(s.length()) + ")";
    }
    require(offenders.empty(), ErrorKind::SeriesTooShort, "series not longer than the horizon:" + offenders);

    std::vector<const Series*> order;
    for (const auto& s : panel.series()) order.push_back(&s);
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_index(rng, i))]);
    }

    const auto groups = static_cast<std::size_t>(k);
    const std::size_t base = order.size() / groups;
    const std::size_t extra = order.size() % groups;
    FoldPlan plan{Strategy::series_kfold, h, groups, {}};
    std::size_t pos = 0;
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t size = base + (g < extra ? 1 : 0);
        Fold fold;
        for (std::size_t i = 0; i < order.size(); ++i) {
            const Series& s = *order[i];
            if (i >= pos && i < pos + size) {
                fold.validation.emplace(s.key, Window{s.length() - h, s.length()});
            } else {
                fold.train.emplace(s.key, Window{0, s.length()});
            }
        }
        pos += size;
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

inline nlohmann::json to_json(const FoldPlan& plan) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : plan.folds) {
        nlohmann::json train = nlohmann::json::array(), val = nlohmann::json::array();
        for (const auto& [key, w] : f.train) train.push_back({{"series", key.parts()}, {"begin", w.begin}, {"end", w.end}});
        for (const auto& [key, w] : f.validation) val.push_back({{"series", key.parts()}, {"begin", w.begin}, {"end", w.end}});
        folds.push_back({{"train", train}, {"validation", val}});
    }
    nlohmann::json j{{"strategy", to_string(plan.strategy)}, {"horizon", plan.horizon}, {"folds", folds}};
    j[plan.strategy == Strategy::timeseries ? "n_folds" : "k"] = plan.k;
    return j;
}

inline Panel select_windows(const Panel& panel, const std::map<SeriesKey, Window>& windows) {
    std::vector<Series> out;
    for (const auto& [key, w] : windows) {
        const Series* s = panel.find(key);
        require(s != nullptr, ErrorKind::UnknownSeries, "fold refers to unknown series " + key.label());
        require(w.begin < w.end && w.end <= s->length(), ErrorKind::OutOfRange,
                "fold window out of range for series " + key.label());
        out.push_back(slice_series(*s, w.begin, w.end));
    }
    return panel.with_series(std::move(out));
}

/// Fits the configuration on the fold's training selection and scores its
/// forecasts of the validation windows. Any library error (fit, predict or
/// metric) is a failed fold and scores +infinity.
inline double evaluate_fold(const Configuration& config, const Panel& panel, const Fold& fold,
                            const std::string& metric = "mase", std::string* failure = nullptr) {
    require(is_regression_metric(metric), ErrorKind::InvalidArgument, "tuning metric must be a regression metric");
    try {
        require(!fold.train.empty(), ErrorKind::InsufficientData, "fold has no training series");
        require(!fold.validation.empty(), ErrorKind::InsufficientData, "fold has no validation series");
        const Panel train = select_windows(panel, fold.train);
        std::map<SeriesKey, Window> context, target;
        std::size_t h = 0;
        for (const auto& [key, w] : fold.validation) {
            require(w.begin > 0, ErrorKind::InsufficientData, "validation series " + key.label() + " has no history");
            context.emplace(key, Window{0, w.begin});
            target.emplace(key, w);
            require(h == 0 || h == w.end - w.begin, ErrorKind::InvalidArgument, "validation windows differ in length");
            h = w.end - w.begin;
        }
        const FittedModel model = fit(config.forecaster, train, config.features);
        const Forecast forecast = predict(model, select_windows(panel, context), static_cast<std::int64_t>(h));
        const double score = regression_metric(metric, align(forecast, select_windows(panel, target)));
        return std::isnan(score) ? std::numeric_limits<double>::infinity() : score;
    } catch (const Error& e) {
        if (failure) *failure = e.what();
        return std::numeric_limits<double>::infinity();
    }
}

struct ScoredConfig {
    std::string config_id;
    double score_ts = 0.0;
    double score_kf = 0.0;
    int rank_ts = 0;
    int rank_kf = 0;
    int combined_rank = 0;
    bool operator==(const ScoredConfig&) const = default;
};

/// 1-based dense ranks of `scores` ascending; NaN ranks with +infinity.
inline std::vector<int> dense_ranks(const std::vector<double>& scores) {
    auto key = [](double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; };
    std::vector<double> distinct;
    for (double v : scores) distinct.push_back(key(v));
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> ranks;
    for (double v : scores) {
        ranks.push_back(static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), key(v)) - distinct.begin()) + 1);
    }
    return ranks;
}

/// Orders configurations by the mean of their two dense ranks, then by the
/// timeseries rank, then by config id. combined_rank is the 1-based position.
inline std::vector<ScoredConfig> combine_rankings(std::vector<ScoredConfig> scored) {
    std::vector<double> ts, kf;
    for (const auto& s : scored) {
        ts.push_back(s.score_ts);
        kf.push_back(s.score_kf);
    }
    const auto rts = dense_ranks(ts);
    const auto rkf = dense_ranks(kf);
    for (std::size_t i = 0; i < scored.size(); ++i) {
        scored[i].rank_ts = rts[i];
        scored[i].rank_kf = rkf[i];
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredConfig& a, const ScoredConfig& b) {
        const int sa = a.rank_ts + a.rank_kf, sb = b.rank_ts + b.rank_kf;
        if (sa != sb) return sa < sb;
        if (a.rank_ts != b.rank_ts) return a.rank_ts < b.rank_ts;
        return a.config_id < b.config_id;
    });
    for (std::size_t i = 0; i < scored.size(); ++i) scored[i].combined_rank = static_cast<int>(i) + 1;
    return scored;
}

}  // namespace demandforge
