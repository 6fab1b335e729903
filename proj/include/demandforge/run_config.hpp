#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "demandforge/config.hpp"
#include "demandforge/dataset.hpp"
#include "demandforge/error.hpp"
#include "demandforge/metrics.hpp"
#include "demandforge/synth.hpp"
#include "demandforge/toml.hpp"
#include "demandforge/tuning.hpp"

namespace demandforge {

struct JoinSpec {
    std::filesystem::path path;
    std::string key_column;
    JoinKind kind = JoinKind::timestep;
    std::string key_part;
};

struct RunConfig {
    std::string name = "dataset";
    std::variant<LoaderSpec, GeneratorSpec> dataset;
    std::vector<JoinSpec> joins;
    std::int64_t horizon = 3;
    CvSettings cv{};
    SearchSpace space{};
    std::uint64_t samples = 100;
    std::uint64_t search_seed = 0;
    std::size_t workers = 1;
    std::string metric = "mase";
    std::vector<std::string> report_metrics{"mase", "sr", "doi"};
    double unit_cost = 1.0;
    std::int64_t top_n = 10;
    std::filesystem::path output = "output";
};

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ConfigError, std::string("key '") + key + "': " + e.what());
    }
}

template <typename T>
T get_required(const nlohmann::json& j, const char* key, const std::string& where) {
    require(j.contains(key), ErrorKind::ConfigError, "missing required key '" + std::string(key) + "' in " + where);
    return get_or<T>(j, key, T{});
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

inline JoinKind parse_join_on(const std::string& on, std::string& key_part) {
    if (on == "timestep") return JoinKind::timestep;
    if (on == "year") return JoinKind::year;
    if (on.rfind("key_part:", 0) == 0) {
        key_part = on.substr(9);
        return JoinKind::key_part;
    }
    fail(ErrorKind::ConfigError, "join 'on' must be timestep, year or key_part:<column>");
}

inline FamilySpace family_space_from_json(const nlohmann::json& j) {
    FamilySpace f;
    f.family = parse_family(get_required<std::string>(j, "name", "[[search.family]]"));
    for (const auto& [key, value] : j.items()) {
        if (key == "name") continue;
        ParamValues p{key, {}};
        auto push = [&](const nlohmann::json& v) {
            if (v.is_boolean()) {
                p.values.push_back(v.get<bool>() ? 1.0 : 0.0);
            } else if (v.is_number()) {
                p.values.push_back(v.get<double>());
            } else {
                fail(ErrorKind::ConfigError, "hyperparameter '" + key + "' must be numeric or boolean");
            }
        };
        if (value.is_array()) {
            for (const auto& v : value) push(v);
        } else {
            push(value);
        }
        f.params.push_back(std::move(p));
    }
    return f;
}

}  // namespace detail

/// Builds a RunConfig from its JSON form; relative paths resolve against `base_dir`.
inline RunConfig run_config_from_json(const nlohmann::json& root, const std::filesystem::path& base_dir = {}) {
    using detail::get_or;
    using detail::get_required;
    RunConfig cfg;
    try {
        cfg.name = get_or<std::string>(root, "name", cfg.name);
        cfg.horizon = get_or<std::int64_t>(root, "horizon", cfg.horizon);
        require(cfg.horizon >= 1, ErrorKind::ConfigError, "horizon must be positive");
        cfg.metric = get_or<std::string>(root, "metric", cfg.metric);
        require(is_regression_metric(cfg.metric), ErrorKind::ConfigError,
                "metric must be one of mae, rmse, mase, smape");
        cfg.report_metrics = get_or<std::vector<std::string>>(root, "report_metrics", cfg.report_metrics);
        require(!cfg.report_metrics.empty(), ErrorKind::ConfigError, "report_metrics is empty");
        for (const auto& m : cfg.report_metrics) {
            require(is_known_metric(m), ErrorKind::ConfigError, "unknown report metric '" + m + "'");
        }
        cfg.unit_cost = get_or<double>(root, "unit_cost", cfg.unit_cost);
        require(cfg.unit_cost > 0.0, ErrorKind::ConfigError, "unit_cost must be positive");
        cfg.output = detail::resolve(base_dir, get_or<std::string>(root, "output", "output"));

        require(root.contains("dataset"), ErrorKind::ConfigError, "missing [dataset] table");
        const auto& ds = root.at("dataset");
        const auto source = get_or<std::string>(ds, "source", "csv");
        if (source == "csv") {
            LoaderSpec spec;
            spec.path = detail::resolve(base_dir, get_required<std::string>(ds, "path", "[dataset]"));
            spec.key_columns = get_required<std::vector<std::string>>(ds, "key_columns", "[dataset]");
            require(!spec.key_columns.empty(), ErrorKind::ConfigError, "key_columns is empty");
            spec.timestamp_column = get_or<std::string>(ds, "timestamp_column", spec.timestamp_column);
            spec.target_column = get_or<std::string>(ds, "target_column", spec.target_column);
            spec.exogenous_columns = get_or<std::vector<std::string>>(ds, "exogenous_columns", {});
            spec.timestamp_format = get_or<std::string>(ds, "timestamp_format", spec.timestamp_format);
            spec.frequency = parse_frequency(get_required<std::string>(ds, "frequency", "[dataset]"));
            if (ds.contains("cleaning")) {
                const auto& c = ds.at("cleaning");
                spec.cleaning.missing = parse_missing_policy(get_or<std::string>(c, "missing", "forward_fill"));
                spec.cleaning.gap_fill = parse_gap_policy(get_or<std::string>(c, "gap_fill", "zero"));
                spec.cleaning.negative_target =
                    parse_negative_policy(get_or<std::string>(c, "negative_target", "clamp_zero"));
            }
            cfg.dataset = spec;
        } else if (source == "generator") {
            GeneratorSpec g;
            g.regime = parse_regime(get_required<std::string>(ds, "regime", "[dataset]"));
            g.n_series = get_or<std::int64_t>(ds, "n_series", g.n_series);
            g.length = get_or<std::int64_t>(ds, "length", g.length);
            g.season_length = get_or<std::int64_t>(ds, "season_length", g.season_length);
            g.intermittency = get_or<double>(ds, "intermittency", g.intermittency);
            g.noise_scale = get_or<double>(ds, "noise_scale", g.noise_scale);
            g.seed = get_required<std::uint64_t>(ds, "seed", "[dataset]");
            g.base_level = get_or<double>(ds, "base_level", g.base_level);
            g.amplitude = get_or<double>(ds, "amplitude", g.amplitude);
            g.level_spread = get_or<double>(ds, "level_spread", g.level_spread);
            g.frequency = parse_frequency(get_or<std::string>(ds, "frequency", "monthly"));
            g.validate();
            cfg.dataset = g;
        } else {
            fail(ErrorKind::ConfigError, "dataset.source must be 'csv' or 'generator'");
        }
        if (ds.contains("join")) {
            for (const auto& jn : ds.at("join")) {
                JoinSpec js;
                js.path = detail::resolve(base_dir, get_required<std::string>(jn, "path", "[[dataset.join]]"));
                js.key_column = get_required<std::string>(jn, "key_column", "[[dataset.join]]");
                js.kind = detail::parse_join_on(get_or<std::string>(jn, "on", "timestep"), js.key_part);
                cfg.joins.push_back(std::move(js));
            }
        }

        const nlohmann::json cv = root.value("cv", nlohmann::json::object());
        cfg.cv.n_folds = get_or<std::int64_t>(cv, "n_folds", 3);
        cfg.cv.k = get_or<std::int64_t>(cv, "k", 3);
        cfg.cv.seed = get_required<std::uint64_t>(cv, "seed", "[cv]");
        cfg.cv.horizon = cfg.horizon;

        const nlohmann::json search = root.value("search", nlohmann::json::object());
        cfg.samples = get_or<std::uint64_t>(search, "samples", cfg.samples);
        require(cfg.samples >= 1, ErrorKind::ConfigError, "search.samples must be >= 1");
        cfg.search_seed = get_required<std::uint64_t>(search, "seed", "[search]");
        cfg.workers = get_or<std::size_t>(search, "workers", 1);
        require(cfg.workers >= 1, ErrorKind::ConfigError, "search.workers must be >= 1");
        cfg.space.setups.clear();
        for (const auto& s : get_or<std::vector<std::string>>(search, "setups", {"single_model"})) {
            cfg.space.setups.push_back(parse_setup(s));
        }
        require(search.contains("family"), ErrorKind::ConfigError, "missing [[search.family]] entries");
        for (const auto& f : search.at("family")) cfg.space.families.push_back(detail::family_space_from_json(f));
        if (search.contains("features")) {
            for (const auto& f : search.at("features")) cfg.space.feature_sets.push_back(feature_spec_from_json(f));
        }
        cfg.space.validate();

        const nlohmann::json ev = root.value("evaluate", nlohmann::json::object());
        cfg.top_n = get_or<std::int64_t>(ev, "top_n", cfg.top_n);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidArgument) fail(ErrorKind::ConfigError, e.what());
        throw;
    }
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from_json(toml::parse_file(path.string()), path.parent_path());
}

}  // namespace demandforge
