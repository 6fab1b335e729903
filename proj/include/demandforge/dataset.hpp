#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "demandforge/csv.hpp"
#include "demandforge/error.hpp"
#include "demandforge/numfmt.hpp"

namespace demandforge {

// ============================================================================
// Keys and frequency
// ============================================================================

class SeriesKey {
public:
    SeriesKey() = default;
    explicit SeriesKey(std::vector<std::string> parts) : parts_(std::move(parts)) {
        require(!parts_.empty(), ErrorKind::InvalidArgument, "series key needs at least one part");
    }
    SeriesKey(std::initializer_list<std::string> parts) : SeriesKey(std::vector<std::string>(parts)) {}

    const std::vector<std::string>& parts() const { return parts_; }

    /// Single-string label; '|' separates parts, '\' escapes '|' and '\'.
    std::string label() const {
        std::string out;
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            if (i) out.push_back('|');
            for (char c : parts_[i]) {
                if (c == '|' || c == '\\') out.push_back('\\');
                out.push_back(c);
            }
        }
        return out;
    }

    static SeriesKey from_label(std::string_view label) {
        std::vector<std::string> parts(1);
        for (std::size_t i = 0; i < label.size(); ++i) {
            char c = label[i];
            if (c == '\\' && i + 1 < label.size()) {
                parts.back().push_back(label[++i]);
            } else if (c == '|') {
                parts.emplace_back();
            } else {
                parts.back().push_back(c);
            }
        }
        return SeriesKey(std::move(parts));
    }

    auto operator<=>(const SeriesKey&) const = default;
    bool operator==(const SeriesKey&) const = default;

private:
    std::vector<std::string> parts_;
};

enum class FrequencyUnit { daily, weekly, monthly };

struct Frequency {
    FrequencyUnit unit = FrequencyUnit::daily;

    int days_per_period() const {
        switch (unit) {
            case FrequencyUnit::daily: return 1;
            case FrequencyUnit::weekly: return 7;
            case FrequencyUnit::monthly: return 30;
        }
        return 1;
    }
    bool operator==(const Frequency&) const = default;
};

inline std::string to_string(FrequencyUnit unit) {
    switch (unit) {
        case FrequencyUnit::daily: return "daily";
        case FrequencyUnit::weekly: return "weekly";
        case FrequencyUnit::monthly: return "monthly";
    }
    return "daily";
}

inline Frequency parse_frequency(std::string_view name) {
    if (name == "daily") return {FrequencyUnit::daily};
    if (name == "weekly") return {FrequencyUnit::weekly};
    if (name == "monthly") return {FrequencyUnit::monthly};
    fail(ErrorKind::InvalidArgument, "unknown frequency '" + std::string(name) + "'");
}

// ============================================================================
// Calendar helpers (absolute period indices; 0 = the period containing 1970-01-01)
// ============================================================================

namespace calendar {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// Howard Hinnant's days_from_civil.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline std::int64_t year_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return y + (m <= 2);
}

inline bool valid_date(std::int64_t y, unsigned m, unsigned d) {
    if (m < 1 || m > 12 || d < 1) return false;
    static constexpr unsigned days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    unsigned limit = days[m - 1] + ((m == 2 && leap) ? 1 : 0);
    return d <= limit;
}

/// Parses `text` under a strptime-like `format` supporting %Y, %m, %d and
/// literal characters, or the special format "period" (an integer absolute
/// period index). Returns the absolute period index at `freq`.
inline std::optional<std::int64_t> parse_period(std::string_view text, std::string_view format, Frequency freq) {
    text = trim(text);
    if (format == "period") return parse_int(text);

    std::optional<std::int64_t> year;
    unsigned month = 1, day = 1;
    std::size_t pos = 0;
    auto read_digits = [&](std::size_t max_len, std::int64_t& out) {
        std::size_t start = pos;
        bool negative = false;
        if (pos < text.size() && text[pos] == '-' && max_len > 2) {
            negative = true;
            ++pos;
            ++start;
        }
        while (pos < text.size() && pos - start < max_len && text[pos] >= '0' && text[pos] <= '9') ++pos;
        if (pos == start) return false;
        auto v = parse_int(text.substr(start, pos - start));
        if (!v) return false;
        out = negative ? -*v : *v;
        return true;
    };
    for (std::size_t i = 0; i < format.size(); ++i) {
        if (format[i] == '%' && i + 1 < format.size()) {
            char spec = format[++i];
            std::int64_t v = 0;
            switch (spec) {
                case 'Y':
                    if (!read_digits(4, v)) return std::nullopt;
                    year = v;
                    break;
                case 'm':
                    if (!read_digits(2, v)) return std::nullopt;
                    month = static_cast<unsigned>(v);
                    break;
                case 'd':
                    if (!read_digits(2, v)) return std::nullopt;
                    day = static_cast<unsigned>(v);
                    break;
                case '%':
                    if (pos >= text.size() || text[pos] != '%') return std::nullopt;
                    ++pos;
                    break;
                default:
                    return std::nullopt;
            }
        } else {
            if (pos >= text.size() || text[pos] != format[i]) return std::nullopt;
            ++pos;
        }
    }
    if (pos != text.size() || !year || !valid_date(*year, month, day)) return std::nullopt;

    switch (freq.unit) {
        case FrequencyUnit::daily: return days_from_civil(*year, month, day);
        case FrequencyUnit::weekly: return floor_div(days_from_civil(*year, month, day), 7);
        case FrequencyUnit::monthly: return (*year - 1970) * 12 + static_cast<std::int64_t>(month) - 1;
    }
    return std::nullopt;
}

inline std::int64_t year_of_period(std::int64_t period, Frequency freq) {
    switch (freq.unit) {
        case FrequencyUnit::daily: return year_from_days(period);
        case FrequencyUnit::weekly: return year_from_days(period * 7);
        case FrequencyUnit::monthly: return 1970 + floor_div(period, 12);
    }
    return 1970;
}

}  // namespace calendar

// ============================================================================
// Cleaning and loading configuration
// ============================================================================

enum class MissingPolicy { drop_row, zero_fill, forward_fill };
enum class GapFillPolicy { zero, forward, reject };
enum class NegativeTargetPolicy { clamp_zero, reject };

struct CleaningPolicy {
    MissingPolicy missing = MissingPolicy::forward_fill;
    GapFillPolicy gap_fill = GapFillPolicy::zero;
    NegativeTargetPolicy negative_target = NegativeTargetPolicy::clamp_zero;
    bool operator==(const CleaningPolicy&) const = default;
};

inline MissingPolicy parse_missing_policy(std::string_view s) {
    if (s == "drop_row") return MissingPolicy::drop_row;
    if (s == "zero_fill") return MissingPolicy::zero_fill;
    if (s == "forward_fill") return MissingPolicy::forward_fill;
    fail(ErrorKind::InvalidArgument, "unknown missing policy '" + std::string(s) + "'");
}
inline GapFillPolicy parse_gap_policy(std::string_view s) {
    if (s == "zero") return GapFillPolicy::zero;
    if (s == "forward") return GapFillPolicy::forward;
    if (s == "reject") return GapFillPolicy::reject;
    fail(ErrorKind::InvalidArgument, "unknown gap_fill policy '" + std::string(s) + "'");
}
inline NegativeTargetPolicy parse_negative_policy(std::string_view s) {
    if (s == "clamp_zero") return NegativeTargetPolicy::clamp_zero;
    if (s == "reject") return NegativeTargetPolicy::reject;
    fail(ErrorKind::InvalidArgument, "unknown negative_target policy '" + std::string(s) + "'");
}
inline std::string to_string(MissingPolicy p) {
    switch (p) {
        case MissingPolicy::drop_row: return "drop_row";
        case MissingPolicy::zero_fill: return "zero_fill";
        case MissingPolicy::forward_fill: return "forward_fill";
    }
    return "";
}
inline std::string to_string(GapFillPolicy p) {
    switch (p) {
        case GapFillPolicy::zero: return "zero";
        case GapFillPolicy::forward: return "forward";
        case GapFillPolicy::reject: return "reject";
    }
    return "";
}
inline std::string to_string(NegativeTargetPolicy p) {
    return p == NegativeTargetPolicy::clamp_zero ? "clamp_zero" : "reject";
}

struct LoaderSpec {
    std::filesystem::path path;
    std::vector<std::string> key_columns;
    std::string timestamp_column = "timestamp";
    std::string target_column = "target";
    std::vector<std::string> exogenous_columns;
    std::string timestamp_format = "%Y-%m-%d";
    Frequency frequency{};
    CleaningPolicy cleaning{};
};

/// Counts of every cleaning action load_panel performed.
struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t rows_dropped_missing = 0;
    std::size_t leading_rows_dropped = 0;
    std::size_t targets_zero_filled = 0;
    std::size_t targets_forward_filled = 0;
    std::size_t exogenous_filled = 0;
    std::size_t gap_periods_filled = 0;
    std::size_t negatives_clamped = 0;
};

// ============================================================================
// Panel
// ============================================================================

struct Observation {
    std::int64_t timestep = 0;
    double target = 0.0;
    std::vector<double> exogenous;
};

/// One series of a panel. `values[t]` is the target at timestep t; `exogenous[c][t]`
/// is exogenous column c (panel schema order). `origin` is the absolute period of t=0.
struct Series {
    SeriesKey key;
    std::int64_t origin = 0;
    std::vector<double> values;
    std::vector<std::vector<double>> exogenous;

    std::size_t length() const { return values.size(); }
    Observation observation(std::size_t t) const {
        Observation o{static_cast<std::int64_t>(t), values.at(t), {}};
        for (const auto& column : exogenous) o.exogenous.push_back(column.at(t));
        return o;
    }
    bool operator==(const Series&) const = default;
};

/// Immutable collection of aligned series. Series are kept sorted by key and
/// the exogenous schema is kept in alphabetical order.
class Panel {
public:
    Panel() = default;

    Panel(Frequency frequency, std::vector<std::string> key_names, std::vector<std::string> exogenous_schema,
          std::vector<Series> series, CleaningPolicy cleaning = {}, std::string target_name = "target")
        : frequency_(frequency),
          key_names_(std::move(key_names)),
          target_name_(std::move(target_name)),
          cleaning_(cleaning) {
        require(!key_names_.empty(), ErrorKind::InvalidArgument, "panel needs at least one key column");
        std::vector<std::size_t> order(exogenous_schema.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return exogenous_schema[a] < exogenous_schema[b]; });
        for (std::size_t i : order) schema_.push_back(exogenous_schema[i]);
        for (std::size_t i = 1; i < schema_.size(); ++i) {
            require(schema_[i] != schema_[i - 1], ErrorKind::SchemaCollision, "duplicate exogenous column " + schema_[i]);
        }

        for (auto& s : series) {
            require(!s.values.empty(), ErrorKind::InvalidArgument, "series " + s.key.label() + " is empty");
            require(s.key.parts().size() == key_names_.size(), ErrorKind::InvalidArgument,
                    "series " + s.key.label() + " has wrong number of key parts");
            require(s.exogenous.size() == schema_.size(), ErrorKind::InvalidArgument,
                    "series " + s.key.label() + " does not match the exogenous schema");
            for (double v : s.values) {
                require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidArgument,
                        "series " + s.key.label() + " has a negative or non-finite target");
            }
            std::vector<std::vector<double>> reordered;
            reordered.reserve(order.size());
            for (std::size_t i : order) {
                require(s.exogenous[i].size() == s.values.size(), ErrorKind::InvalidArgument,
                        "series " + s.key.label() + " has misaligned exogenous values");
                for (double v : s.exogenous[i]) {
                    require(std::isfinite(v), ErrorKind::InvalidArgument, "non-finite exogenous value");
                }
                reordered.push_back(std::move(s.exogenous[i]));
            }
            s.exogenous = std::move(reordered);
        }
        std::sort(series.begin(), series.end(), [](const Series& a, const Series& b) { return a.key < b.key; });
        for (std::size_t i = 1; i < series.size(); ++i) {
            require(series[i].key != series[i - 1].key, ErrorKind::DuplicateKey,
                    "duplicate series key " + series[i].key.label());
        }
        series_ = std::move(series);
    }

    const Frequency& frequency() const { return frequency_; }
    const std::vector<std::string>& key_names() const { return key_names_; }
    const std::vector<std::string>& exogenous_schema() const { return schema_; }
    const std::string& target_name() const { return target_name_; }
    const CleaningPolicy& cleaning() const { return cleaning_; }
    const std::vector<Series>& series() const { return series_; }
    std::size_t size() const { return series_.size(); }
    bool empty() const { return series_.empty(); }

    const Series* find(const SeriesKey& key) const {
        auto it = std::lower_bound(series_.begin(), series_.end(), key,
                                   [](const Series& s, const SeriesKey& k) { return s.key < k; });
        return (it != series_.end() && it->key == key) ? &*it : nullptr;
    }

    std::vector<SeriesKey> keys() const {
        std::vector<SeriesKey> out;
        out.reserve(series_.size());
        for (const auto& s : series_) out.push_back(s.key);
        return out;
    }

    std::size_t exogenous_index(std::string_view name) const {
        for (std::size_t i = 0; i < schema_.size(); ++i) {
            if (schema_[i] == name) return i;
        }
        fail(ErrorKind::MissingColumn, "exogenous column '" + std::string(name) + "' not in panel");
    }

    /// Same metadata, different series.
    Panel with_series(std::vector<Series> series) const {
        return Panel(frequency_, key_names_, schema_, std::move(series), cleaning_, target_name_);
    }

    bool operator==(const Panel&) const = default;

private:
    Frequency frequency_{};
    std::vector<std::string> key_names_;
    std::vector<std::string> schema_;
    std::string target_name_ = "target";
    CleaningPolicy cleaning_{};
    std::vector<Series> series_;
};

/// Copy of `s` restricted to timesteps [begin, end); origin shifts with begin.
inline Series slice_series(const Series& s, std::size_t begin, std::size_t end) {
    Series out;
    out.key = s.key;
    out.origin = s.origin + static_cast<std::int64_t>(begin);
    out.values.assign(s.values.begin() + static_cast<std::ptrdiff_t>(begin),
                      s.values.begin() + static_cast<std::ptrdiff_t>(end));
    for (const auto& column : s.exogenous) {
        out.exogenous.emplace_back(column.begin() + static_cast<std::ptrdiff_t>(begin),
                                   column.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

// ============================================================================
// Loading
// ============================================================================

namespace detail {

inline bool is_missing_token(std::string_view text) {
    text = trim(text);
    return text.empty() || text == "NA" || text == "NaN" || text == "nan" || text == "null" || text == "NULL";
}

inline std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorKind::MissingColumn, "column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
}

struct RawRow {
    std::int64_t period = 0;
    std::optional<double> target;
    std::vector<std::optional<double>> exogenous;
    std::size_t line = 0;
};

}  // namespace detail

/// Reads a panel CSV from `in` using the column mapping in `spec` (spec.path
/// is ignored). Cleaning statistics are accumulated into `report` when given.
inline Panel load_panel(std::istream& in, const LoaderSpec& spec, LoadReport* report = nullptr) {
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    require(!spec.key_columns.empty(), ErrorKind::InvalidArgument, "loader spec needs at least one key column");

    auto records = csv::read(in);
    require(!records.empty(), ErrorKind::ParseError, "missing header row");
    const auto& header = records.front().fields;

    std::vector<std::size_t> key_idx;
    for (const auto& name : spec.key_columns) key_idx.push_back(detail::column_index(header, name));
    const std::size_t ts_idx = detail::column_index(header, spec.timestamp_column);
    const std::size_t target_idx = detail::column_index(header, spec.target_column);
    std::vector<std::size_t> exo_idx;
    for (const auto& name : spec.exogenous_columns) exo_idx.push_back(detail::column_index(header, name));

    std::map<SeriesKey, std::vector<detail::RawRow>> grouped;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::string where = "line " + std::to_string(rec.line);
        if (rec.fields.size() == 1 && trim(rec.fields[0]).empty()) continue;
        require(rec.fields.size() == header.size(), ErrorKind::ParseError,
                where + ": expected " + std::to_string(header.size()) + " fields, found " +
                    std::to_string(rec.fields.size()));
        ++rep.rows_read;

        std::vector<std::string> parts;
        for (std::size_t i : key_idx) parts.push_back(rec.fields[i]);

        detail::RawRow row;
        row.line = rec.line;
        auto period = calendar::parse_period(rec.fields[ts_idx], spec.timestamp_format, spec.frequency);
        require(period.has_value(), ErrorKind::ParseError,
                where + ": cannot parse timestamp '" + rec.fields[ts_idx] + "'");
        row.period = *period;

        if (!detail::is_missing_token(rec.fields[target_idx])) {
            auto v = parse_double(rec.fields[target_idx]);
            require(v.has_value(), ErrorKind::ParseError, where + ": cannot parse target '" + rec.fields[target_idx] + "'");
            if (*v < 0.0) {
                require(spec.cleaning.negative_target == NegativeTargetPolicy::clamp_zero, ErrorKind::NegativeTarget,
                        where + ": negative target " + rec.fields[target_idx]);
                ++rep.negatives_clamped;
                *v = 0.0;
            }
            row.target = *v;
        }
        for (std::size_t i : exo_idx) {
            if (detail::is_missing_token(rec.fields[i])) {
                row.exogenous.emplace_back();
            } else {
                auto v = parse_double(rec.fields[i]);
                require(v.has_value(), ErrorKind::ParseError,
                        where + ": cannot parse value '" + rec.fields[i] + "' in column " + header[i]);
                row.exogenous.push_back(*v);
            }
        }
        grouped[SeriesKey(std::move(parts))].push_back(std::move(row));
    }

    const auto& policy = spec.cleaning;
    std::vector<Series> out;
    for (auto& [key, rows] : grouped) {
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.period < b.period; });
        for (std::size_t i = 1; i < rows.size(); ++i) {
            require(rows[i].period != rows[i - 1].period, ErrorKind::FrequencyViolation,
                    "series " + key.label() + " has two observations in one period (lines " +
                        std::to_string(std::min(rows[i - 1].line, rows[i].line)) + " and " +
                        std::to_string(std::max(rows[i - 1].line, rows[i].line)) + ")");
        }

        // Missing targets.
        std::vector<detail::RawRow> kept;
        std::optional<double> last_target;
        for (auto& row : rows) {
            if (!row.target) {
                switch (policy.missing) {
                    case MissingPolicy::drop_row:
                        ++rep.rows_dropped_missing;
                        continue;
                    case MissingPolicy::zero_fill:
                        row.target = 0.0;
                        ++rep.targets_zero_filled;
                        break;
                    case MissingPolicy::forward_fill:
                        if (!last_target) {
                            ++rep.leading_rows_dropped;
                            continue;
                        }
                        row.target = last_target;
                        ++rep.targets_forward_filled;
                        break;
                }
            }
            last_target = row.target;
            kept.push_back(std::move(row));
        }
        if (kept.empty()) continue;

        // Missing exogenous values.
        if (policy.missing == MissingPolicy::drop_row) {
            std::vector<detail::RawRow> complete;
            for (auto& row : kept) {
                bool ok = std::all_of(row.exogenous.begin(), row.exogenous.end(), [](const auto& v) { return v.has_value(); });
                if (ok) {
                    complete.push_back(std::move(row));
                } else {
                    ++rep.rows_dropped_missing;
                }
            }
            kept = std::move(complete);
            if (kept.empty()) continue;
        } else {
            for (std::size_t c = 0; c < exo_idx.size(); ++c) {
                double carry = 0.0;
                for (auto& row : kept) {
                    if (row.exogenous[c]) {
                        carry = *row.exogenous[c];
                    } else {
                        row.exogenous[c] = policy.missing == MissingPolicy::zero_fill ? 0.0 : carry;
                        ++rep.exogenous_filled;
                    }
                }
            }
        }

        // Gap filling onto a contiguous period grid.
        Series series;
        series.key = key;
        series.origin = kept.front().period;
        series.exogenous.resize(exo_idx.size());
        std::int64_t expected = series.origin;
        for (const auto& row : kept) {
            while (expected < row.period) {
                require(policy.gap_fill != GapFillPolicy::reject, ErrorKind::GapError,
                        "series " + key.label() + " has no observation for period " + std::to_string(expected) +
                            " (before line " + std::to_string(row.line) + ")");
                const bool forward = policy.gap_fill == GapFillPolicy::forward;
                series.values.push_back(forward ? series.values.back() : 0.0);
                for (auto& column : series.exogenous) column.push_back(forward ? column.back() : 0.0);
                ++rep.gap_periods_filled;
                ++expected;
            }
            series.values.push_back(*row.target);
            for (std::size_t c = 0; c < exo_idx.size(); ++c) series.exogenous[c].push_back(*row.exogenous[c]);
            ++expected;
        }
        out.push_back(std::move(series));
    }
    require(!out.empty(), ErrorKind::EmptyInput, "no usable observations");
    return Panel(spec.frequency, spec.key_columns, spec.exogenous_columns, std::move(out), spec.cleaning,
                 spec.target_column);
}

inline Panel load_panel(const LoaderSpec& spec, LoadReport* report = nullptr) {
    std::ifstream in(spec.path, std::ios::binary);
    require(in.good(), ErrorKind::IoError, "cannot open " + spec.path.string());
    return load_panel(in, spec, report);
}

// ============================================================================
// Canonical CSV export
// ============================================================================

/// Columns: key parts, timestamp (absolute period index), target, exogenous
/// (alphabetical). Rows ordered by key, then timestep.
inline void write_panel_csv(std::ostream& out, const Panel& panel) {
    std::vector<std::string> header = panel.key_names();
    header.push_back("timestamp");
    header.push_back(panel.target_name());
    for (const auto& name : panel.exogenous_schema()) header.push_back(name);
    csv::write_row(out, header);
    for (const auto& s : panel.series()) {
        for (std::size_t t = 0; t < s.length(); ++t) {
            std::vector<std::string> row = s.key.parts();
            row.push_back(std::to_string(s.origin + static_cast<std::int64_t>(t)));
            row.push_back(format_double(s.values[t]));
            for (const auto& column : s.exogenous) row.push_back(format_double(column[t]));
            csv::write_row(out, row);
        }
    }
}

inline void write_panel_csv(const std::filesystem::path& path, const Panel& panel) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::IoError, "cannot write " + path.string());
    write_panel_csv(out, panel);
    require(out.good(), ErrorKind::IoError, "failed writing " + path.string());
}

/// Loader spec that reads back what write_panel_csv produced for `panel`.
inline LoaderSpec canonical_loader_spec(const Panel& panel, std::filesystem::path path = {}) {
    LoaderSpec spec;
    spec.path = std::move(path);
    spec.key_columns = panel.key_names();
    spec.timestamp_column = "timestamp";
    spec.target_column = panel.target_name();
    spec.exogenous_columns = panel.exogenous_schema();
    spec.timestamp_format = "period";
    spec.frequency = panel.frequency();
    spec.cleaning = panel.cleaning();
    return spec;
}

// ============================================================================
// Holdout split
// ============================================================================

inline std::pair<Panel, Panel> split_holdout(const Panel& panel, std::int64_t horizon) {
    require(horizon > 0, ErrorKind::InvalidArgument, "holdout horizon must be positive");
    const auto h = static_cast<std::size_t>(horizon);
    std::vector<std::string> short_keys;
    for (const auto& s : panel.series()) {
        if (s.length() <= h) short_keys.push_back(s.key.label() + " (length " + std::to_string(s.length()) + ")");
    }
    if (!short_keys.empty()) {
        std::string msg = "series not longer than horizon " + std::to_string(horizon) + ":";
        for (const auto& k : short_keys) msg += " " + k;
        fail(ErrorKind::SeriesTooShort, msg);
    }
    std::vector<Series> train, test;
    for (const auto& s : panel.series()) {
        train.push_back(slice_series(s, 0, s.length() - h));
        test.push_back(slice_series(s, s.length() - h, s.length()));
    }
    return {panel.with_series(std::move(train)), panel.with_series(std::move(test))};
}

// ============================================================================
// External-source join
// ============================================================================

enum class JoinKind {
    timestep,  // absolute period index
    year,      // calendar year of the observation's period
    key_part,  // one of the panel's key columns
};

struct ExternalTable {
    JoinKind kind = JoinKind::timestep;
    std::string key_part;  // key column name when kind == key_part
    std::vector<std::string> columns;
    std::vector<std::string> keys;
    std::vector<std::vector<double>> rows;  // rows[i][c]
};

/// Reads an external table CSV whose `key_column` holds join keys; every
/// other column is numeric.
inline ExternalTable read_external_table(std::istream& in, const std::string& key_column, JoinKind kind,
                                         std::string key_part = {}) {
    auto records = csv::read(in);
    require(!records.empty(), ErrorKind::ParseError, "external table missing header row");
    const auto& header = records.front().fields;
    const std::size_t key_idx = detail::column_index(header, key_column);
    ExternalTable table;
    table.kind = kind;
    table.key_part = std::move(key_part);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != key_idx) table.columns.push_back(header[c]);
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        require(rec.fields.size() == header.size(), ErrorKind::ParseError,
                "line " + std::to_string(rec.line) + ": wrong field count");
        table.keys.push_back(std::string(trim(rec.fields[key_idx])));
        std::vector<double> row;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == key_idx) continue;
            auto v = parse_double(rec.fields[c]);
            require(v.has_value(), ErrorKind::ParseError,
                    "line " + std::to_string(rec.line) + ": cannot parse '" + rec.fields[c] + "'");
            row.push_back(*v);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

/// Appends the table's columns to every observation. Observations without a
/// matching table row are filled per the panel's missing-value policy
/// (forward_fill carries the previous matched value, zero before any match;
/// drop_row behaves as zero_fill so series stay gap-free).
inline Panel join_exogenous(const Panel& panel, const ExternalTable& table) {
    for (const auto& row : table.rows) {
        require(row.size() == table.columns.size(), ErrorKind::InvalidArgument, "ragged external table");
    }
    std::set<std::string> seen_columns(panel.exogenous_schema().begin(), panel.exogenous_schema().end());
    for (const auto& name : table.columns) {
        require(seen_columns.insert(name).second, ErrorKind::SchemaCollision,
                "column '" + name + "' already in exogenous schema");
    }

    std::size_t part_idx = 0;
    if (table.kind == JoinKind::key_part) {
        auto it = std::find(panel.key_names().begin(), panel.key_names().end(), table.key_part);
        require(it != panel.key_names().end(), ErrorKind::MissingColumn,
                "key column '" + table.key_part + "' not in panel");
        part_idx = static_cast<std::size_t>(it - panel.key_names().begin());
    }

    std::map<std::string, std::size_t> lookup;
    for (std::size_t r = 0; r < table.keys.size(); ++r) {
        std::string key = table.keys[r];
        if (table.kind != JoinKind::key_part) {
            auto v = parse_int(key);
            require(v.has_value(), ErrorKind::ParseError, "non-integer join key '" + key + "'");
            key = std::to_string(*v);
        }
        require(lookup.emplace(key, r).second, ErrorKind::DuplicateKey, "duplicate join key '" + key + "'");
    }

    const bool forward = panel.cleaning().missing == MissingPolicy::forward_fill;
    std::vector<std::string> schema = panel.exogenous_schema();
    schema.insert(schema.end(), table.columns.begin(), table.columns.end());
    std::vector<Series> out;
    for (const auto& s : panel.series()) {
        Series joined = s;
        std::vector<std::vector<double>> added(table.columns.size());
        std::vector<double> carry(table.columns.size(), 0.0);
        for (std::size_t t = 0; t < s.length(); ++t) {
            const std::int64_t period = s.origin + static_cast<std::int64_t>(t);
            std::string key;
            switch (table.kind) {
                case JoinKind::timestep: key = std::to_string(period); break;
                case JoinKind::year: key = std::to_string(calendar::year_of_period(period, panel.frequency())); break;
                case JoinKind::key_part: key = s.key.parts()[part_idx]; break;
            }
            auto it = lookup.find(key);
            for (std::size_t c = 0; c < table.columns.size(); ++c) {
                double v;
                if (it != lookup.end()) {
                    v = table.rows[it->second][c];
                    carry[c] = v;
                } else {
                    v = forward ? carry[c] : 0.0;
                }
                added[c].push_back(v);
            }
        }
        for (auto& column : added) joined.exogenous.push_back(std::move(column));
        out.push_back(std::move(joined));
    }
    return Panel(panel.frequency(), panel.key_names(), schema, std::move(out), panel.cleaning(), panel.target_name());
}

}  // namespace demandforge
