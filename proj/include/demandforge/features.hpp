#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "demandforge/dataset.hpp"
#include "demandforge/error.hpp"
#include "demandforge/numfmt.hpp"

namespace demandforge {

struct PatternFeatures {
    double zero_pct = 0.0;
    double last_nonzero = 0.0;
    double trend = 0.0;
    double updown_count = 0.0;
};

struct StatisticFeatures {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double std = 0.0;
};

/// Intermittency and shape descriptors of one trailing window.
///   zero_pct      fraction of exact zeros
///   last_nonzero  most recent non-zero value, 0 when the window is all zeros
///   trend         OLS slope of value against position 0..W-1
///   updown_count  adjacent first-difference pairs that are both non-zero and
///                 of opposite sign (a zero difference breaks the chain)
inline PatternFeatures pattern_features(std::span<const double> window) {
    require(window.size() >= 2, ErrorKind::InvalidArgument, "pattern window needs at least 2 values");
    const std::size_t w = window.size();
    PatternFeatures f;
    std::size_t zeros = 0;
    for (double v : window) zeros += (v == 0.0);
    f.zero_pct = static_cast<double>(zeros) / static_cast<double>(w);
    for (std::size_t i = w; i-- > 0;) {
        if (window[i] != 0.0) {
            f.last_nonzero = window[i];
            break;
        }
    }

    const double x_mean = static_cast<double>(w - 1) / 2.0;
    double y_mean = 0.0;
    for (double v : window) y_mean += v;
    y_mean /= static_cast<double>(w);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
        const double dx = static_cast<double>(i) - x_mean;
        sxy += dx * (window[i] - y_mean);
        sxx += dx * dx;
    }
    f.trend = sxy / sxx;

    int count = 0;
    for (std::size_t i = 0; i + 2 < w; ++i) {
        const double d0 = window[i + 1] - window[i];
        const double d1 = window[i + 2] - window[i + 1];
        if ((d0 > 0.0 && d1 < 0.0) || (d0 < 0.0 && d1 > 0.0)) ++count;
    }
    f.updown_count = count;
    return f;
}

/// Mean, extrema and population standard deviation of one trailing window.
inline StatisticFeatures statistic_features(std::span<const double> window) {
    require(window.size() >= 2, ErrorKind::InvalidArgument, "statistic window needs at least 2 values");
    StatisticFeatures f;
    const double n = static_cast<double>(window.size());
    double sum = 0.0;
    f.min = window.front();
    f.max = window.front();
    for (double v : window) {
        sum += v;
        f.min = std::min(f.min, v);
        f.max = std::max(f.max, v);
    }
    f.mean = sum / n;
    double ss = 0.0;
    for (double v : window) ss += (v - f.mean) * (v - f.mean);
    f.std = std::sqrt(ss / n);
    // Keep min <= mean <= max exact despite rounding in the sum.
    f.mean = std::clamp(f.mean, f.min, f.max);
    return f;
}

/// Feature families selected for one configuration. Lags and windows are kept
/// sorted and unique.
struct FeatureSpec {
    std::vector<int> lags;
    std::vector<int> windows;
    bool include_pattern = false;
    bool include_statistic = false;
    std::vector<std::string> exogenous;

    FeatureSpec normalized() const {
        FeatureSpec out = *this;
        std::sort(out.lags.begin(), out.lags.end());
        out.lags.erase(std::unique(out.lags.begin(), out.lags.end()), out.lags.end());
        std::sort(out.windows.begin(), out.windows.end());
        out.windows.erase(std::unique(out.windows.begin(), out.windows.end()), out.windows.end());
        return out;
    }

    void validate() const {
        for (int lag : lags) require(lag >= 1, ErrorKind::InvalidArgument, "lags must be positive");
        for (int w : windows) {
            require(w >= 1, ErrorKind::InvalidArgument, "windows must be positive");
            if (include_pattern || include_statistic) {
                require(w >= 2, ErrorKind::InvalidArgument, "pattern/statistic windows must be >= 2");
            }
        }
    }

    bool empty() const {
        return lags.empty() && exogenous.empty() && !((include_pattern || include_statistic) && !windows.empty());
    }

    /// Warm-up length W: rows at t < W are not materialized.
    std::size_t warmup() const {
        int w = 0;
        for (int lag : lags) w = std::max(w, lag);
        for (int win : windows) w = std::max(w, win);
        return static_cast<std::size_t>(w);
    }

    std::vector<std::string> column_names() const {
        const FeatureSpec s = normalized();
        std::vector<std::string> names;
        for (int lag : s.lags) names.push_back("lag_" + std::to_string(lag));
        if (s.include_pattern) {
            for (int w : s.windows) {
                const std::string suffix = "_w" + std::to_string(w);
                names.push_back("zero_pct" + suffix);
                names.push_back("last_nonzero" + suffix);
                names.push_back("trend" + suffix);
                names.push_back("updown_count" + suffix);
            }
        }
        if (s.include_statistic) {
            for (int w : s.windows) {
                const std::string suffix = "_w" + std::to_string(w);
                names.push_back("mean" + suffix);
                names.push_back("min" + suffix);
                names.push_back("max" + suffix);
                names.push_back("std" + suffix);
            }
        }
        for (const auto& e : s.exogenous) names.push_back("exo_" + e);
        return names;
    }

    bool operator==(const FeatureSpec&) const = default;
};

/// Column-wise lag of a raw series; entry i corresponds to timestep max(lags)+i.
inline std::vector<std::vector<double>> lagged_features(std::span<const double> values, std::vector<int> lags) {
    for (int lag : lags) require(lag >= 1, ErrorKind::InvalidArgument, "lags must be positive");
    std::sort(lags.begin(), lags.end());
    lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
    const std::size_t start = lags.empty() ? 0 : static_cast<std::size_t>(lags.back());
    std::vector<std::vector<double>> columns(lags.size());
    for (std::size_t t = start; t < values.size(); ++t) {
        for (std::size_t j = 0; j < lags.size(); ++j) columns[j].push_back(values[t - static_cast<std::size_t>(lags[j])]);
    }
    return columns;
}

/// Computes the feature vector for timestep t = history.size() from strictly
/// past values. `exogenous_at_t` holds the selected exogenous values in spec order.
/// `spec` must be normalized and history.size() >= spec.warmup().
inline void append_feature_row(const FeatureSpec& spec, std::span<const double> history,
                               std::span<const double> exogenous_at_t, std::vector<double>& out) {
    const std::size_t t = history.size();
    for (int lag : spec.lags) out.push_back(history[t - static_cast<std::size_t>(lag)]);
    if (spec.include_pattern) {
        for (int w : spec.windows) {
            auto f = pattern_features(history.subspan(t - static_cast<std::size_t>(w)));
            out.insert(out.end(), {f.zero_pct, f.last_nonzero, f.trend, f.updown_count});
        }
    }
    if (spec.include_statistic) {
        for (int w : spec.windows) {
            auto f = statistic_features(history.subspan(t - static_cast<std::size_t>(w)));
            out.insert(out.end(), {f.mean, f.min, f.max, f.std});
        }
    }
    out.insert(out.end(), exogenous_at_t.begin(), exogenous_at_t.end());
}

/// Tabular supervised-learning view: one row per (series, timestep >= warmup).
struct FeatureMatrix {
    std::vector<std::string> column_names;
    std::size_t warmup = 0;
    std::vector<SeriesKey> row_keys;
    std::vector<std::size_t> row_timesteps;
    std::vector<double> values;  // row-major, rows() x cols()
    std::vector<double> targets;

    std::size_t rows() const { return targets.size(); }
    std::size_t cols() const { return column_names.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols(), cols()}; }

    bool operator==(const FeatureMatrix&) const = default;
};

namespace detail {

inline std::vector<std::size_t> exogenous_indices(const Panel& panel, const FeatureSpec& spec) {
    std::vector<std::size_t> idx;
    for (const auto& name : spec.exogenous) idx.push_back(panel.exogenous_index(name));
    return idx;
}

inline void append_series_rows(const Series& s, const FeatureSpec& spec, const std::vector<std::size_t>& exo_idx,
                               FeatureMatrix& m) {
    const std::size_t w = m.warmup;
    std::vector<double> exo(exo_idx.size());
    for (std::size_t t = w; t < s.length(); ++t) {
        for (std::size_t j = 0; j < exo_idx.size(); ++j) exo[j] = s.exogenous[exo_idx[j]][t];
        append_feature_row(spec, std::span<const double>(s.values.data(), t), exo, m.values);
        m.row_keys.push_back(s.key);
        m.row_timesteps.push_back(t);
        m.targets.push_back(s.values[t]);
    }
}

}  // namespace detail

/// Pools rows of every series in key order, timesteps ascending within a series.
inline FeatureMatrix build_matrix(const Panel& panel, const FeatureSpec& raw_spec) {
    raw_spec.validate();
    const FeatureSpec spec = raw_spec.normalized();
    FeatureMatrix m;
    m.column_names = spec.column_names();
    m.warmup = spec.warmup();
    const auto exo_idx = detail::exogenous_indices(panel, spec);
    for (const auto& s : panel.series()) detail::append_series_rows(s, spec, exo_idx, m);
    require(m.rows() > 0, ErrorKind::EmptyMatrix,
            "no series longer than the feature warm-up of " + std::to_string(m.warmup));
    return m;
}

inline void write_matrix_csv(std::ostream& out, const FeatureMatrix& m) {
    std::vector<std::string> header{"series", "timestep"};
    header.insert(header.end(), m.column_names.begin(), m.column_names.end());
    header.push_back("target");
    csv::write_row(out, header);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::vector<std::string> row{m.row_keys[r].label(), std::to_string(m.row_timesteps[r])};
        for (double v : m.row(r)) row.push_back(format_double(v));
        row.push_back(format_double(m.targets[r]));
        csv::write_row(out, row);
    }
}

}  // namespace demandforge
