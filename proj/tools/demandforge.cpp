#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "demandforge/cli.hpp"
#include "demandforge/log.hpp"
#include "demandforge/run_config.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> output;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
};

demandforge::RunConfig resolve(const Overrides& o) {
    auto cfg = demandforge::load_run_config(o.config);
    if (o.output) cfg.output = *o.output;
    if (o.workers) {
        demandforge::require(*o.workers >= 1, demandforge::ErrorKind::ConfigError, "--workers must be >= 1");
        cfg.workers = *o.workers;
    }
    if (o.seed) cfg.search_seed = *o.seed;
    return cfg;
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "Run configuration (TOML)")->required();
    cmd->add_option("--output", o.output, "Output directory (overrides output)");
    cmd->add_option("--workers", o.workers, "Search workers (overrides search.workers)");
    cmd->add_option("--seed", o.seed, "Search sampling seed (overrides search.seed)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"demandforge: demand forecasting model development"};
    app.require_subcommand(1);

    Overrides o;
    auto* ingest = app.add_subcommand("ingest", "Load and clean the dataset, write the canonical panel");
    add_common(ingest, o);

    auto* tune = app.add_subcommand("tune", "Search configurations under both cross-validation strategies");
    add_common(tune, o);

    std::optional<std::string> leaderboard;
    std::optional<std::int64_t> top_n;
    auto* evaluate = app.add_subcommand("evaluate", "Refit top configurations and report holdout metrics");
    add_common(evaluate, o);
    evaluate->add_option("--leaderboard", leaderboard, "Leaderboard JSON (default <output>/leaderboard.json)");
    evaluate->add_option("--top", top_n, "Number of top configurations (overrides evaluate.top_n)");

    std::string model_path;
    std::optional<std::string> forecast_out;
    auto* forecast = app.add_subcommand("forecast", "Forecast every series with a saved model");
    add_common(forecast, o);
    forecast->add_option("--model", model_path, "Model payload written by evaluate")->required();
    forecast->add_option("--forecast-output", forecast_out, "Forecast CSV (default <output>/forecast.csv)");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = resolve(o);
        if (*ingest) return demandforge::cli::cmd_ingest(cfg);
        if (*tune) return demandforge::cli::cmd_tune(cfg);
        if (*evaluate) {
            const auto path = leaderboard ? std::filesystem::path(*leaderboard) : cfg.output / "leaderboard.json";
            demandforge::cli::cmd_evaluate(cfg, path, top_n.value_or(cfg.top_n));
            return 0;
        }
        if (*forecast) {
            const auto out = forecast_out ? std::filesystem::path(*forecast_out) : cfg.output / "forecast.csv";
            return demandforge::cli::cmd_forecast(cfg, model_path, out);
        }
    } catch (const demandforge::Error& e) {
        demandforge::log::error(e.what());
        return 1;
    } catch (const std::exception& e) {
        demandforge::log::error(std::string("unexpected failure: ") + e.what());
        return 2;
    }
    return 1;
}
