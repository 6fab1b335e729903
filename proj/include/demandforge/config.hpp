#pragma once

#include <cmath>
#include <string>

#include "json.hpp"

#include "demandforge/error.hpp"
#include "demandforge/features.hpp"
#include "demandforge/hash.hpp"
#include "demandforge/models.hpp"

namespace demandforge {

using json = nlohmann::json;

// ============================================================================
// JSON forms of model and feature specs
// ============================================================================

inline json to_json(const FeatureSpec& raw) {
    const FeatureSpec f = raw.normalized();
    return json{{"lags", f.lags},
                {"windows", f.windows},
                {"include_pattern", f.include_pattern},
                {"include_statistic", f.include_statistic},
                {"exogenous", f.exogenous}};
}

inline FeatureSpec feature_spec_from_json(const json& j) {
    FeatureSpec f;
    try {
        if (j.contains("lags")) f.lags = j.at("lags").get<std::vector<int>>();
        if (j.contains("windows")) f.windows = j.at("windows").get<std::vector<int>>();
        if (j.contains("include_pattern")) f.include_pattern = j.at("include_pattern").get<bool>();
        if (j.contains("include_statistic")) f.include_statistic = j.at("include_statistic").get<bool>();
        if (j.contains("exogenous")) f.exogenous = j.at("exogenous").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        fail(ErrorKind::ConfigError, std::string("bad feature spec: ") + e.what());
    }
    f = f.normalized();
    f.validate();
    return f;
}

/// Only the selected family's hyperparameters are emitted.
inline json to_json(const ForecasterSpec& s) {
    json params = json::object();
    switch (s.family) {
        case Family::seasonal_naive:
            params["season_length"] = s.params.season_length;
            break;
        case Family::ses:
            params["alpha"] = s.params.alpha;
            break;
        case Family::linear_ar:
            params["ridge_lambda"] = s.params.ridge_lambda;
            params["intercept"] = s.params.intercept;
            break;
        case Family::gbdt:
            params["num_trees"] = s.params.gbdt.num_trees;
            params["learning_rate"] = s.params.gbdt.learning_rate;
            params["max_depth"] = s.params.gbdt.max_depth;
            params["min_samples_leaf"] = s.params.gbdt.min_samples_leaf;
            params["feature_fraction"] = s.params.gbdt.feature_fraction;
            params["seed"] = s.params.gbdt.seed;
            break;
    }
    return json{{"family", to_string(s.family)}, {"setup", to_string(s.setup)}, {"params", params}};
}

/// Sets one named hyperparameter on `s`; names outside the family are rejected.
inline void set_hyperparameter(ForecasterSpec& s, const std::string& name, double value) {
    auto as_int = [&](const char* what) {
        require(value == std::floor(value) && std::abs(value) < 2e9, ErrorKind::ConfigError,
                std::string(what) + " must be an integer");
        return static_cast<int>(value);
    };
    switch (s.family) {
        case Family::seasonal_naive:
            if (name == "season_length") return void(s.params.season_length = as_int("season_length"));
            break;
        case Family::ses:
            if (name == "alpha") return void(s.params.alpha = value);
            break;
        case Family::linear_ar:
            if (name == "ridge_lambda") return void(s.params.ridge_lambda = value);
            if (name == "intercept") return void(s.params.intercept = value != 0.0);
            break;
        case Family::gbdt:
            if (name == "num_trees") return void(s.params.gbdt.num_trees = as_int("num_trees"));
            if (name == "learning_rate") return void(s.params.gbdt.learning_rate = value);
            if (name == "max_depth") return void(s.params.gbdt.max_depth = as_int("max_depth"));
            if (name == "min_samples_leaf") return void(s.params.gbdt.min_samples_leaf = as_int("min_samples_leaf"));
            if (name == "feature_fraction") return void(s.params.gbdt.feature_fraction = value);
            if (name == "seed") {
                require(value >= 0 && value == std::floor(value) && value < 9.007199254740992e15, ErrorKind::ConfigError,
                        "seed must be a non-negative integer");
                return void(s.params.gbdt.seed = static_cast<std::uint64_t>(value));
            }
            break;
    }
    fail(ErrorKind::ConfigError, "hyperparameter '" + name + "' does not apply to family " + to_string(s.family));
}

inline ForecasterSpec forecaster_spec_from_json(const json& j) {
    ForecasterSpec s;
    try {
        s.family = parse_family(j.at("family").get<std::string>());
        s.setup = parse_setup(j.value("setup", std::string("single_model")));
        if (j.contains("params")) {
            for (const auto& [name, value] : j.at("params").items()) {
                if (value.is_boolean()) {
                    set_hyperparameter(s, name, value.get<bool>() ? 1.0 : 0.0);
                } else {
                    set_hyperparameter(s, name, value.get<double>());
                }
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::ConfigError, std::string("bad forecaster spec: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidArgument) fail(ErrorKind::ConfigError, e.what());
        throw;
    }
    s.validate();
    return s;
}

// ============================================================================
// Configuration
// ============================================================================

/// One point of the search space. `id` is the 128-bit FNV-1a hash of the
/// canonical JSON of (forecaster, features); feature-free families drop the
/// feature spec from the hashed content.
struct Configuration {
    std::string id;
    ForecasterSpec forecaster;
    FeatureSpec features;

    json content() const {
        return json{{"forecaster", to_json(forecaster)},
                    {"features", forecaster.uses_features() ? to_json(features) : json(nullptr)}};
    }
};

inline Configuration make_configuration(ForecasterSpec forecaster, FeatureSpec features) {
    Configuration c;
    c.forecaster = forecaster;
    c.features = forecaster.uses_features() ? features.normalized() : FeatureSpec{};
    c.id = fnv1a128_hex(c.content().dump());
    return c;
}

inline json to_json(const Configuration& c) {
    json j = c.content();
    j["config_id"] = c.id;
    return j;
}

inline Configuration configuration_from_json(const json& j) {
    try {
        FeatureSpec features;
        if (j.contains("features") && !j.at("features").is_null()) features = feature_spec_from_json(j.at("features"));
        Configuration c = make_configuration(forecaster_spec_from_json(j.at("forecaster")), features);
        if (j.contains("config_id")) {
            require(j.at("config_id").get<std::string>() == c.id, ErrorKind::CorruptPayload,
                    "configuration id does not match its contents");
        }
        return c;
    } catch (const json::exception& e) {
        fail(ErrorKind::ConfigError, std::string("bad configuration: ") + e.what());
    }
}

}  // namespace demandforge
