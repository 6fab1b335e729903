#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "demandforge/dataset.hpp"
#include "demandforge/error.hpp"
#include "demandforge/features.hpp"
#include "demandforge/gbdt.hpp"
#include "demandforge/hash.hpp"
#include "demandforge/linalg.hpp"

namespace demandforge {

enum class Family { seasonal_naive, ses, linear_ar, gbdt };
enum class Setup { single_model, per_series };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::seasonal_naive: return "seasonal_naive";
        case Family::ses: return "ses";
        case Family::linear_ar: return "linear_ar";
        case Family::gbdt: return "gbdt";
    }
    return "";
}
inline Family parse_family(std::string_view s) {
    if (s == "seasonal_naive") return Family::seasonal_naive;
    if (s == "ses") return Family::ses;
    if (s == "linear_ar") return Family::linear_ar;
    if (s == "gbdt") return Family::gbdt;
    fail(ErrorKind::InvalidArgument, "unknown model family '" + std::string(s) + "'");
}
inline std::string to_string(Setup s) { return s == Setup::single_model ? "single_model" : "per_series"; }
inline Setup parse_setup(std::string_view s) {
    if (s == "single_model") return Setup::single_model;
    if (s == "per_series") return Setup::per_series;
    fail(ErrorKind::InvalidArgument, "unknown setup '" + std::string(s) + "'");
}

/// Only the fields of the selected family are meaningful.
struct Hyperparameters {
    int season_length = 1;         // seasonal_naive
    double alpha = 0.5;            // ses
    double ridge_lambda = 1e-6;    // linear_ar
    bool intercept = true;         // linear_ar
    gbdt::Params gbdt{};           // gbdt
};

struct ForecasterSpec {
    Family family = Family::seasonal_naive;
    Hyperparameters params{};
    Setup setup = Setup::single_model;

    bool uses_features() const { return family == Family::linear_ar || family == Family::gbdt; }

    void validate() const {
        switch (family) {
            case Family::seasonal_naive:
                require(params.season_length >= 1, ErrorKind::InvalidArgument, "season_length must be >= 1");
                break;
            case Family::ses:
                require(params.alpha > 0.0 && params.alpha <= 1.0, ErrorKind::InvalidArgument, "alpha must be in (0, 1]");
                break;
            case Family::linear_ar:
                require(params.ridge_lambda >= 0.0 && std::isfinite(params.ridge_lambda), ErrorKind::InvalidArgument,
                        "ridge lambda must be >= 0");
                break;
            case Family::gbdt:
                params.gbdt.validate();
                break;
        }
    }
};

struct LinearState {
    std::vector<double> coefficients;
    double intercept = 0.0;

    double predict(std::span<const double> x) const {
        double y = intercept;
        for (std::size_t i = 0; i < coefficients.size(); ++i) y += coefficients[i] * x[i];
        return y;
    }
    bool operator==(const LinearState&) const = default;
};

using Regressor = std::variant<LinearState, gbdt::Model>;

inline double regressor_predict(const Regressor& r, std::span<const double> x) {
    return std::visit([&](const auto& m) { return m.predict(x); }, r);
}

/// Learned state. Local families (seasonal_naive, ses) keep per-series state
/// in `local`; regression families keep one pooled regressor (single_model)
/// or one regressor per series (per_series).
struct FittedModel {
    ForecasterSpec spec;
    FeatureSpec features;
    std::map<SeriesKey, std::vector<double>> local;
    std::optional<Regressor> pooled;
    std::map<SeriesKey, Regressor> per_series;

    bool knows(const SeriesKey& key) const {
        if (spec.setup == Setup::single_model) return true;
        return spec.uses_features() ? per_series.count(key) > 0 : local.count(key) > 0;
    }
};

/// Horizon-length predictions per series, every value >= 0.
struct Forecast {
    std::size_t horizon = 0;
    std::map<SeriesKey, std::vector<double>> values;
    bool operator==(const Forecast&) const = default;
};

namespace detail {

inline double ses_level(std::span<const double> values, double alpha) {
    double level = values.front();
    for (std::size_t t = 1; t < values.size(); ++t) level = alpha * values[t] + (1.0 - alpha) * level;
    return level;
}

inline FeatureMatrix matrix_or_insufficient(const Panel& panel, const FeatureSpec& spec, const std::string& unit) {
    try {
        return build_matrix(panel, spec);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::EmptyMatrix) {
            fail(ErrorKind::InsufficientData, unit + " has no rows after the feature warm-up of " +
                                                  std::to_string(spec.warmup()));
        }
        throw;
    }
}

inline Regressor fit_regressor(const ForecasterSpec& spec, const FeatureMatrix& m) {
    if (spec.family == Family::linear_ar) {
        auto sol = linalg::ridge_solve(m.values, m.targets, m.rows(), m.cols(), spec.params.ridge_lambda,
                                       spec.params.intercept);
        return LinearState{std::move(sol.coefficients), sol.intercept};
    }
    return gbdt::fit(m.values, m.targets, m.rows(), m.cols(), spec.params.gbdt);
}

}  // namespace detail

inline FittedModel fit(const ForecasterSpec& spec, const Panel& panel, const FeatureSpec& raw_features) {
    spec.validate();
    require(!panel.empty(), ErrorKind::InsufficientData, "cannot fit on an empty panel");
    FittedModel model;
    model.spec = spec;
    model.features = raw_features.normalized();
    if (spec.uses_features()) {
        model.features.validate();
        require(!model.features.empty(), ErrorKind::InvalidArgument,
                to_string(spec.family) + " needs a non-empty feature spec");
    }

    switch (spec.family) {
        case Family::seasonal_naive: {
            const auto m = static_cast<std::size_t>(spec.params.season_length);
            for (const auto& s : panel.series()) {
                require(s.length() >= m, ErrorKind::InsufficientData,
                        "series " + s.key.label() + " is shorter than season length " + std::to_string(m));
                model.local[s.key].assign(s.values.end() - static_cast<std::ptrdiff_t>(m), s.values.end());
            }
            break;
        }
        case Family::ses:
            for (const auto& s : panel.series()) model.local[s.key] = {detail::ses_level(s.values, spec.params.alpha)};
            break;
        case Family::linear_ar:
        case Family::gbdt:
            if (spec.setup == Setup::single_model) {
                model.pooled = detail::fit_regressor(spec, detail::matrix_or_insufficient(panel, model.features, "panel"));
            } else {
                for (const auto& s : panel.series()) {
                    Panel one = panel.with_series({s});
                    model.per_series.emplace(
                        s.key, detail::fit_regressor(
                                   spec, detail::matrix_or_insufficient(one, model.features, "series " + s.key.label())));
                }
            }
            break;
    }
    return model;
}

/// Recursive multi-step forecast from each series' history in `panel`.
/// Predictions for earlier steps are appended to the history (after the
/// non-negativity clamp) before features for later steps are computed;
/// exogenous inputs hold their last observed value.
inline Forecast predict(const FittedModel& model, const Panel& panel, std::int64_t horizon) {
    require(horizon > 0, ErrorKind::InvalidArgument, "forecast horizon must be positive");
    const auto h = static_cast<std::size_t>(horizon);
    Forecast out;
    out.horizon = h;

    std::vector<std::size_t> exo_idx;
    if (model.spec.uses_features()) exo_idx = detail::exogenous_indices(panel, model.features);

    for (const auto& s : panel.series()) {
        require(model.knows(s.key), ErrorKind::UnknownSeries, "model was not fitted on series " + s.key.label());
        std::vector<double> pred;
        pred.reserve(h);
        switch (model.spec.family) {
            case Family::seasonal_naive: {
                const auto m = static_cast<std::size_t>(model.spec.params.season_length);
                require(s.length() >= m, ErrorKind::InsufficientData,
                        "series " + s.key.label() + " is shorter than season length " + std::to_string(m));
                for (std::size_t step = 0; step < h; ++step) pred.push_back(s.values[s.length() - m + step % m]);
                break;
            }
            case Family::ses:
                pred.assign(h, detail::ses_level(s.values, model.spec.params.alpha));
                break;
            case Family::linear_ar:
            case Family::gbdt: {
                const Regressor& reg = model.spec.setup == Setup::single_model ? *model.pooled : model.per_series.at(s.key);
                require(s.length() >= model.features.warmup(), ErrorKind::InsufficientData,
                        "series " + s.key.label() + " is shorter than the feature warm-up");
                std::vector<double> history = s.values;
                std::vector<double> exo(exo_idx.size());
                for (std::size_t j = 0; j < exo_idx.size(); ++j) exo[j] = s.exogenous[exo_idx[j]].back();
                std::vector<double> row;
                for (std::size_t step = 0; step < h; ++step) {
                    row.clear();
                    append_feature_row(model.features, history, exo, row);
                    const double y = std::max(0.0, regressor_predict(reg, row));
                    pred.push_back(y);
                    history.push_back(y);
                }
                break;
            }
        }
        for (double& v : pred) v = std::isfinite(v) ? std::max(0.0, v) : 0.0;
        out.values.emplace(s.key, std::move(pred));
    }
    return out;
}

// ============================================================================
// Binary model payloads
// ============================================================================

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[4] = {'D', 'F', 'M', 'D'};

namespace detail {

class Writer {
public:
    template <typename T>
    void pod(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.append(p, sizeof(T));
    }
    void str(const std::string& s) {
        pod<std::uint64_t>(s.size());
        buf_.append(s);
    }
    void doubles(const std::vector<double>& v) {
        pod<std::uint64_t>(v.size());
        for (double d : v) pod(d);
    }
    void key(const SeriesKey& k) {
        pod<std::uint64_t>(k.parts().size());
        for (const auto& p : k.parts()) str(p);
    }
    std::string& buffer() { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    template <typename T>
    T pod() {
        require(pos_ + sizeof(T) <= data_.size(), ErrorKind::CorruptPayload, "model payload truncated");
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::uint64_t count() {
        auto n = pod<std::uint64_t>();
        require(n <= data_.size() - pos_, ErrorKind::CorruptPayload, "model payload has an implausible length");
        return n;
    }
    std::string str() {
        auto n = count();
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    std::vector<double> doubles() {
        auto n = count();
        std::vector<double> v(n);
        for (auto& d : v) d = pod<double>();
        return v;
    }
    SeriesKey key() {
        auto n = count();
        std::vector<std::string> parts(n);
        for (auto& p : parts) p = str();
        require(!parts.empty(), ErrorKind::CorruptPayload, "empty series key in payload");
        return SeriesKey(std::move(parts));
    }
    bool done() const { return pos_ == data_.size(); }

private:
    std::string_view data_;
    std::size_t pos_ = 0;
};

inline void write_regressor(Writer& w, const Regressor& r) {
    if (const auto* lin = std::get_if<LinearState>(&r)) {
        w.pod<std::uint8_t>(0);
        w.doubles(lin->coefficients);
        w.pod(lin->intercept);
        return;
    }
    const auto& g = std::get<gbdt::Model>(r);
    w.pod<std::uint8_t>(1);
    w.pod(g.base);
    w.pod<std::uint64_t>(g.num_features);
    w.pod<std::uint64_t>(g.trees.size());
    for (const auto& t : g.trees) {
        w.pod<std::uint64_t>(t.nodes.size());
        for (const auto& n : t.nodes) {
            w.pod(n.feature);
            w.pod(n.threshold);
            w.pod(n.left);
            w.pod(n.right);
            w.pod(n.value);
        }
    }
}

inline Regressor read_regressor(Reader& r) {
    auto tag = r.pod<std::uint8_t>();
    if (tag == 0) {
        LinearState lin;
        lin.coefficients = r.doubles();
        lin.intercept = r.pod<double>();
        return lin;
    }
    require(tag == 1, ErrorKind::CorruptPayload, "unknown regressor tag");
    gbdt::Model g;
    g.base = r.pod<double>();
    g.num_features = r.pod<std::uint64_t>();
    auto trees = r.count();
    for (std::uint64_t i = 0; i < trees; ++i) {
        gbdt::Tree t;
        auto nodes = r.count();
        require(nodes >= 1, ErrorKind::CorruptPayload, "empty tree in payload");
        for (std::uint64_t j = 0; j < nodes; ++j) {
            gbdt::Node n;
            n.feature = r.pod<std::int32_t>();
            n.threshold = r.pod<double>();
            n.left = r.pod<std::int32_t>();
            n.right = r.pod<std::int32_t>();
            n.value = r.pod<double>();
            if (n.feature >= 0) {
                require(static_cast<std::uint64_t>(n.feature) < g.num_features && n.left > static_cast<std::int32_t>(j) &&
                            n.right > static_cast<std::int32_t>(j) && static_cast<std::uint64_t>(n.left) < nodes &&
                            static_cast<std::uint64_t>(n.right) < nodes,
                        ErrorKind::CorruptPayload, "malformed tree node");
            }
            t.nodes.push_back(n);
        }
        g.trees.push_back(std::move(t));
    }
    return g;
}

}  // namespace detail

/// Layout: "DFMD" | u32 version | u64 payload size | payload | u64 FNV-1a of payload.
inline std::string save_model(const FittedModel& model) {
    detail::Writer w;
    const auto& sp = model.spec;
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(sp.family));
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(sp.setup));
    w.pod<std::int32_t>(sp.params.season_length);
    w.pod(sp.params.alpha);
    w.pod(sp.params.ridge_lambda);
    w.pod<std::uint8_t>(sp.params.intercept ? 1 : 0);
    w.pod<std::int32_t>(sp.params.gbdt.num_trees);
    w.pod(sp.params.gbdt.learning_rate);
    w.pod<std::int32_t>(sp.params.gbdt.max_depth);
    w.pod<std::int32_t>(sp.params.gbdt.min_samples_leaf);
    w.pod(sp.params.gbdt.feature_fraction);
    w.pod<std::uint64_t>(sp.params.gbdt.seed);

    const auto& f = model.features;
    w.pod<std::uint64_t>(f.lags.size());
    for (int v : f.lags) w.pod<std::int32_t>(v);
    w.pod<std::uint64_t>(f.windows.size());
    for (int v : f.windows) w.pod<std::int32_t>(v);
    w.pod<std::uint8_t>(f.include_pattern ? 1 : 0);
    w.pod<std::uint8_t>(f.include_statistic ? 1 : 0);
    w.pod<std::uint64_t>(f.exogenous.size());
    for (const auto& e : f.exogenous) w.str(e);

    w.pod<std::uint64_t>(model.local.size());
    for (const auto& [k, v] : model.local) {
        w.key(k);
        w.doubles(v);
    }
    w.pod<std::uint8_t>(model.pooled ? 1 : 0);
    if (model.pooled) detail::write_regressor(w, *model.pooled);
    w.pod<std::uint64_t>(model.per_series.size());
    for (const auto& [k, r] : model.per_series) {
        w.key(k);
        detail::write_regressor(w, r);
    }

    const std::string& payload = w.buffer();
    detail::Writer out;
    out.buffer().append(kModelMagic, 4);
    out.pod(kModelFormatVersion);
    out.pod<std::uint64_t>(payload.size());
    out.buffer().append(payload);
    out.pod<std::uint64_t>(fnv1a64(payload));
    return std::move(out.buffer());
}

inline FittedModel load_model(std::string_view bytes) {
    require(bytes.size() >= 16, ErrorKind::CorruptPayload, "model payload too short");
    require(std::memcmp(bytes.data(), kModelMagic, 4) == 0, ErrorKind::CorruptPayload, "not a model payload");
    detail::Reader head(bytes.substr(4));
    const auto version = head.pod<std::uint32_t>();
    require(version == kModelFormatVersion, ErrorKind::VersionMismatch,
            "model payload version " + std::to_string(version) + ", expected " + std::to_string(kModelFormatVersion));
    const auto size = head.pod<std::uint64_t>();
    require(size <= bytes.size() - 16 && bytes.size() - 16 - size == 8, ErrorKind::CorruptPayload,
            "model payload length mismatch");
    const std::string_view payload = bytes.substr(16, size);
    std::uint64_t checksum;
    std::memcpy(&checksum, bytes.data() + 16 + size, 8);
    require(checksum == fnv1a64(payload), ErrorKind::CorruptPayload, "model payload checksum mismatch");

    detail::Reader r(payload);
    FittedModel m;
    auto family = r.pod<std::uint8_t>();
    auto setup = r.pod<std::uint8_t>();
    require(family <= 3 && setup <= 1, ErrorKind::CorruptPayload, "bad model header");
    m.spec.family = static_cast<Family>(family);
    m.spec.setup = static_cast<Setup>(setup);
    m.spec.params.season_length = r.pod<std::int32_t>();
    m.spec.params.alpha = r.pod<double>();
    m.spec.params.ridge_lambda = r.pod<double>();
    m.spec.params.intercept = r.pod<std::uint8_t>() != 0;
    m.spec.params.gbdt.num_trees = r.pod<std::int32_t>();
    m.spec.params.gbdt.learning_rate = r.pod<double>();
    m.spec.params.gbdt.max_depth = r.pod<std::int32_t>();
    m.spec.params.gbdt.min_samples_leaf = r.pod<std::int32_t>();
    m.spec.params.gbdt.feature_fraction = r.pod<double>();
    m.spec.params.gbdt.seed = r.pod<std::uint64_t>();

    auto n = r.count();
    for (std::uint64_t i = 0; i < n; ++i) m.features.lags.push_back(r.pod<std::int32_t>());
    n = r.count();
    for (std::uint64_t i = 0; i < n; ++i) m.features.windows.push_back(r.pod<std::int32_t>());
    m.features.include_pattern = r.pod<std::uint8_t>() != 0;
    m.features.include_statistic = r.pod<std::uint8_t>() != 0;
    n = r.count();
    for (std::uint64_t i = 0; i < n; ++i) m.features.exogenous.push_back(r.str());

    n = r.count();
    for (std::uint64_t i = 0; i < n; ++i) {
        auto k = r.key();
        m.local.emplace(std::move(k), r.doubles());
    }
    if (r.pod<std::uint8_t>()) m.pooled = detail::read_regressor(r);
    n = r.count();
    for (std::uint64_t i = 0; i < n; ++i) {
        auto k = r.key();
        m.per_series.emplace(std::move(k), detail::read_regressor(r));
    }
    require(r.done(), ErrorKind::CorruptPayload, "trailing bytes in model payload");
    try {
        m.spec.validate();
        m.features.validate();
    } catch (const Error& e) {
        fail(ErrorKind::CorruptPayload, std::string("invalid model contents: ") + e.what());
    }
    require(!m.spec.uses_features() || m.spec.setup == Setup::per_series || m.pooled.has_value(),
            ErrorKind::CorruptPayload, "pooled regressor missing");
    return m;
}

}  // namespace demandforge
