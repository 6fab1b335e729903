#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "demandforge/csv.hpp"
#include "demandforge/dataset.hpp"
#include "demandforge/error.hpp"
#include "demandforge/models.hpp"
#include "demandforge/numfmt.hpp"

namespace demandforge {

/// Aligned actuals and predictions of one series over an evaluation window.
struct EvalSeries {
    SeriesKey key;
    std::vector<double> actual;
    std::vector<double> predicted;
};

using EvalSet = std::vector<EvalSeries>;

inline void validate_eval(const EvalSet& pairs) {
    require(!pairs.empty(), ErrorKind::EmptyInput, "no series to evaluate");
    for (const auto& p : pairs) {
        require(!p.actual.empty(), ErrorKind::EmptyInput, "series " + p.key.label() + " has an empty window");
        require(p.actual.size() == p.predicted.size(), ErrorKind::InvalidArgument,
                "series " + p.key.label() + " has misaligned actuals and predictions");
        for (std::size_t t = 0; t < p.actual.size(); ++t) {
            require(std::isfinite(p.actual[t]) && std::isfinite(p.predicted[t]), ErrorKind::InvalidArgument,
                    "series " + p.key.label() + " has non-finite values");
        }
    }
}

/// Pairs every series of `actuals` with its forecast; the forecast must cover
/// each series for exactly the actual window length.
inline EvalSet align(const Forecast& forecast, const Panel& actuals) {
    EvalSet out;
    for (const auto& s : actuals.series()) {
        auto it = forecast.values.find(s.key);
        require(it != forecast.values.end(), ErrorKind::UnknownSeries, "no forecast for series " + s.key.label());
        require(it->second.size() == s.length(), ErrorKind::InvalidArgument,
                "forecast for " + s.key.label() + " does not match the actual window");
        out.push_back({s.key, s.values, it->second});
    }
    return out;
}

// ============================================================================
// Regression metrics
// ============================================================================

/// Mean absolute error pooled over every (series, t).
inline double mae(const EvalSet& pairs) {
    validate_eval(pairs);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : pairs) {
        for (std::size_t t = 0; t < p.actual.size(); ++t) sum += std::abs(p.actual[t] - p.predicted[t]);
        n += p.actual.size();
    }
    return sum / static_cast<double>(n);
}

inline double rmse(const EvalSet& pairs) {
    validate_eval(pairs);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : pairs) {
        for (std::size_t t = 0; t < p.actual.size(); ++t) {
            const double e = p.actual[t] - p.predicted[t];
            sum += e * e;
        }
        n += p.actual.size();
    }
    return std::sqrt(sum / static_cast<double>(n));
}

/// Symmetric MAPE in [0, 2]; a point where both values are 0 contributes 0.
inline double smape(const EvalSet& pairs) {
    validate_eval(pairs);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : pairs) {
        for (std::size_t t = 0; t < p.actual.size(); ++t) {
            const double denom = std::abs(p.actual[t]) + std::abs(p.predicted[t]);
            if (denom > 0.0) sum += 2.0 * std::abs(p.actual[t] - p.predicted[t]) / denom;
        }
        n += p.actual.size();
    }
    return sum / static_cast<double>(n);
}

struct MaseReport {
    double value = 0.0;
    std::vector<double> per_series;  // NaN for excluded series
    std::vector<SeriesKey> excluded;
};

/// MASE with the scale taken from the evaluation window itself:
///   (1/N) sum |y_t - yhat_t|  /  (1/(N-1)) sum_{t>=2} |y_t - y_{t-1}|
/// Series with a zero denominator are excluded; the panel value is the
/// unweighted mean over the remaining series.
inline MaseReport mase_report(const EvalSet& pairs) {
    validate_eval(pairs);
    MaseReport report;
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& p : pairs) {
        const std::size_t n = p.actual.size();
        require(n >= 2, ErrorKind::InvalidArgument, "MASE needs at least 2 points for series " + p.key.label());
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t < n; ++t) num += std::abs(p.actual[t] - p.predicted[t]);
        for (std::size_t t = 1; t < n; ++t) den += std::abs(p.actual[t] - p.actual[t - 1]);
        num /= static_cast<double>(n);
        den /= static_cast<double>(n - 1);
        if (den == 0.0) {
            report.per_series.push_back(std::numeric_limits<double>::quiet_NaN());
            report.excluded.push_back(p.key);
            continue;
        }
        report.per_series.push_back(num / den);
        sum += num / den;
        ++used;
    }
    if (used == 0) {
        fail(ErrorKind::ZeroDenominator,
             "every series has constant actuals on the evaluation window (" + std::to_string(pairs.size()) + " excluded)");
    }
    report.value = sum / static_cast<double>(used);
    return report;
}

inline double mase(const EvalSet& pairs) { return mase_report(pairs).value; }

// ============================================================================
// Inventory simulation
// ============================================================================

struct InventoryStep {
    SeriesKey key;
    std::size_t step = 0;
    double replenishment = 0.0;
    double demand = 0.0;
    double fulfilled = 0.0;
    double unfulfilled = 0.0;
    double end_inventory = 0.0;
};

struct InventoryOutcome {
    std::vector<InventoryStep> trace;
    double total_demand = 0.0;
    double total_fulfilled = 0.0;
    double total_unfulfilled = 0.0;
    double total_end_inventory = 0.0;
    std::size_t steps = 0;  // evaluation window length (longest series)
    double unit_cost = 1.0;
    int days_per_period = 1;
    double sr = 0.0;   // unfulfilled / total demand, in [0, 1]
    double doi = 0.0;  // average inventory cost / cost of goods sold * days
};

/// Instant-replenishment simulation: each period the predicted quantity
/// arrives before demand, demand is served from stock, and shortfalls are
/// lost. Average inventory is the end-of-period stock averaged over every
/// (series, step) point; days = window length * days per period.
inline InventoryOutcome simulate_inventory(const EvalSet& pairs, Frequency frequency, double unit_cost = 1.0,
                                           double initial_inventory = 0.0) {
    validate_eval(pairs);
    require(unit_cost > 0.0, ErrorKind::InvalidArgument, "unit cost must be positive");
    require(initial_inventory >= 0.0, ErrorKind::InvalidArgument, "initial inventory must be >= 0");
    InventoryOutcome out;
    out.unit_cost = unit_cost;
    out.days_per_period = frequency.days_per_period();
    for (const auto& p : pairs) {
        double stock = initial_inventory;
        out.steps = std::max(out.steps, p.actual.size());
        for (std::size_t t = 0; t < p.actual.size(); ++t) {
            require(p.actual[t] >= 0.0 && p.predicted[t] >= 0.0, ErrorKind::InvalidArgument,
                    "inventory simulation needs non-negative demand and replenishment");
            InventoryStep s;
            s.key = p.key;
            s.step = t;
            s.replenishment = p.predicted[t];
            s.demand = p.actual[t];
            stock += s.replenishment;
            s.fulfilled = std::min(stock, s.demand);
            s.unfulfilled = s.demand - s.fulfilled;
            stock -= s.fulfilled;
            s.end_inventory = stock;
            out.total_demand += s.demand;
            out.total_fulfilled += s.fulfilled;
            out.total_unfulfilled += s.unfulfilled;
            out.total_end_inventory += s.end_inventory;
            out.trace.push_back(std::move(s));
        }
    }
    require(out.total_demand > 0.0, ErrorKind::ZeroDemand, "total demand is zero; stockout rate is undefined");
    out.sr = std::clamp(out.total_unfulfilled / out.total_demand, 0.0, 1.0);

    const double steps = static_cast<double>(out.steps);
    const double avg_inventory_cost = unit_cost * out.total_end_inventory / static_cast<double>(out.trace.size());
    const double cogs = unit_cost * out.total_fulfilled;
    const double days = steps * out.days_per_period;
    if (out.total_end_inventory == 0.0) {
        out.doi = 0.0;
    } else if (cogs == 0.0) {
        out.doi = std::numeric_limits<double>::infinity();
    } else {
        out.doi = avg_inventory_cost / cogs * days;
    }
    return out;
}

inline void write_inventory_trace_csv(std::ostream& out, const std::vector<std::string>& key_names,
                                      const InventoryOutcome& outcome, const std::string& model = {}) {
    std::vector<std::string> header;
    if (!model.empty()) header.push_back("model");
    header.insert(header.end(), key_names.begin(), key_names.end());
    for (const char* c : {"step", "replenishment", "demand", "fulfilled", "unfulfilled", "end_inventory"}) {
        header.push_back(c);
    }
    csv::write_row(out, header);
    for (const auto& s : outcome.trace) {
        std::vector<std::string> row;
        if (!model.empty()) row.push_back(model);
        row.insert(row.end(), s.key.parts().begin(), s.key.parts().end());
        row.push_back(std::to_string(s.step + 1));
        for (double v : {s.replenishment, s.demand, s.fulfilled, s.unfulfilled, s.end_inventory}) {
            row.push_back(format_double(v));
        }
        csv::write_row(out, row);
    }
}

// ============================================================================
// Metric registry
// ============================================================================

inline bool is_regression_metric(std::string_view name) {
    return name == "mae" || name == "rmse" || name == "mase" || name == "smape";
}
inline bool is_inventory_metric(std::string_view name) { return name == "sr" || name == "doi"; }
inline bool is_known_metric(std::string_view name) { return is_regression_metric(name) || is_inventory_metric(name); }

inline double regression_metric(std::string_view name, const EvalSet& pairs) {
    if (name == "mae") return mae(pairs);
    if (name == "rmse") return rmse(pairs);
    if (name == "mase") return mase(pairs);
    if (name == "smape") return smape(pairs);
    fail(ErrorKind::InvalidArgument, "unknown regression metric '" + std::string(name) + "'");
}

// ============================================================================
// Trade-off table
// ============================================================================

struct NamedForecast {
    std::string name;
    Forecast forecast;
};

struct TradeoffRow {
    std::string name;
    std::map<std::string, double> metrics;  // metric name -> value
    std::string error;                      // non-empty when the row failed
};

struct TradeoffTable {
    std::vector<std::string> metric_names;
    std::vector<TradeoffRow> rows;
    std::map<std::string, std::string> argmin;  // metric -> model name
};

/// One row per model with the requested metrics, plus the argmin model for
/// each metric (ties go to the lexicographically smallest name, so the
/// result does not depend on input order). Metric failures mark the row
/// failed instead of aborting.
inline TradeoffTable tradeoff_table(const std::vector<NamedForecast>& models, const Panel& actuals,
                                    std::vector<std::string> metric_names = {"mase", "sr", "doi"},
                                    double unit_cost = 1.0) {
    for (const auto& m : metric_names) {
        require(is_known_metric(m), ErrorKind::InvalidArgument, "unknown metric '" + m + "'");
    }
    TradeoffTable table;
    table.metric_names = metric_names;
    const bool needs_inventory = std::any_of(metric_names.begin(), metric_names.end(),
                                             [](const std::string& m) { return is_inventory_metric(m); });
    for (const auto& model : models) {
        TradeoffRow row;
        row.name = model.name;
        try {
            const EvalSet pairs = align(model.forecast, actuals);
            std::optional<InventoryOutcome> inv;
            if (needs_inventory) inv = simulate_inventory(pairs, actuals.frequency(), unit_cost);
            for (const auto& m : metric_names) {
                if (m == "sr") {
                    row.metrics[m] = inv->sr;
                } else if (m == "doi") {
                    row.metrics[m] = inv->doi;
                } else {
                    row.metrics[m] = regression_metric(m, pairs);
                }
            }
        } catch (const Error& e) {
            row.metrics.clear();
            row.error = e.what();
        }
        table.rows.push_back(std::move(row));
    }
    for (const auto& m : metric_names) {
        const TradeoffRow* best = nullptr;
        for (const auto& row : table.rows) {
            if (!row.error.empty()) continue;
            const double v = row.metrics.at(m);
            if (std::isnan(v)) continue;
            if (!best || v < best->metrics.at(m) || (v == best->metrics.at(m) && row.name < best->name)) best = &row;
        }
        if (best) table.argmin[m] = best->name;
    }
    return table;
}

inline std::string metric_header(const std::string& metric) {
    if (metric == "sr") return "SR (%)";
    if (metric == "doi") return "DOI";
    std::string upper = metric;
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return upper;
}

/// Columns: model, then each metric (SR as a percentage); failed rows carry
/// empty metric cells and the error text.
inline void write_tradeoff_csv(std::ostream& out, const TradeoffTable& table) {
    std::vector<std::string> header{"model"};
    for (const auto& m : table.metric_names) header.push_back(metric_header(m));
    header.push_back("error");
    csv::write_row(out, header);
    for (const auto& row : table.rows) {
        std::vector<std::string> cells{row.name};
        for (const auto& m : table.metric_names) {
            if (!row.error.empty()) {
                cells.emplace_back();
                continue;
            }
            const double v = row.metrics.at(m);
            cells.push_back(format_double(m == "sr" ? v * 100.0 : v));
        }
        cells.push_back(row.error);
        csv::write_row(out, cells);
    }
}

}  // namespace demandforge
