#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "demandforge/dataset.hpp"
#include "demandforge/log.hpp"
#include "demandforge/metrics.hpp"
#include "demandforge/models.hpp"
#include "demandforge/run_config.hpp"
#include "demandforge/synth.hpp"
#include "demandforge/tuning.hpp"
#include "demandforge/validation.hpp"

// Batch commands behind the demandforge executable. Each command reads a
// RunConfig and writes its artifacts into cfg.output; errors propagate as
// demandforge::Error.

namespace demandforge::cli {

namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::IoError, "cannot write " + path.string());
    out << text;
    require(out.good(), ErrorKind::IoError, "failed writing " + path.string());
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void ensure_output(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output, ec);
    require(!ec, ErrorKind::IoError, "cannot create output directory " + cfg.output.string() + ": " + ec.message());
}

/// Loads (or generates) the configured panel and applies external joins.
inline Panel load_dataset(const RunConfig& cfg, LoadReport* report = nullptr) {
    Panel panel = std::visit(
        [&](const auto& spec) -> Panel {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, LoaderSpec>) {
                return load_panel(spec, report);
            } else {
                return generate(spec);
            }
        },
        cfg.dataset);
    for (const auto& join : cfg.joins) {
        std::ifstream in(join.path, std::ios::binary);
        require(in.good(), ErrorKind::IoError, "cannot open " + join.path.string());
        panel = join_exogenous(panel, read_external_table(in, join.key_column, join.kind, join.key_part));
    }
    return panel;
}

inline nlohmann::json dataset_metadata(const RunConfig& cfg, const Panel& panel) {
    nlohmann::json meta{{"dataset", cfg.name},
                        {"frequency", to_string(panel.frequency().unit)},
                        {"series", panel.size()},
                        {"horizon", cfg.horizon}};
    if (const auto* g = std::get_if<GeneratorSpec>(&cfg.dataset)) meta["generator_seed"] = g->seed;
    return meta;
}

// ----------------------------------------------------------------------------

inline int cmd_ingest(const RunConfig& cfg) {
    ensure_output(cfg);
    LoadReport report;
    const Panel panel = load_dataset(cfg, &report);
    write_panel_csv(cfg.output / "panel.csv", panel);

    nlohmann::json lengths = nlohmann::json::object();
    std::size_t min_len = SIZE_MAX, max_len = 0;
    for (const auto& s : panel.series()) {
        lengths[s.key.label()] = s.length();
        min_len = std::min(min_len, s.length());
        max_len = std::max(max_len, s.length());
    }
    nlohmann::json summary{
        {"dataset", cfg.name},
        {"source", std::holds_alternative<LoaderSpec>(cfg.dataset) ? "csv" : "generator"},
        {"frequency", to_string(panel.frequency().unit)},
        {"series_count", panel.size()},
        {"min_length", min_len},
        {"max_length", max_len},
        {"exogenous", panel.exogenous_schema()},
        {"series_lengths", lengths},
        {"cleaning",
         {{"rows_read", report.rows_read},
          {"rows_dropped_missing", report.rows_dropped_missing},
          {"leading_rows_dropped", report.leading_rows_dropped},
          {"targets_zero_filled", report.targets_zero_filled},
          {"targets_forward_filled", report.targets_forward_filled},
          {"exogenous_filled", report.exogenous_filled},
          {"gap_periods_filled", report.gap_periods_filled},
          {"negatives_clamped", report.negatives_clamped}}}};
    write_json(cfg.output / "ingest_summary.json", summary);
    log::info("ingested " + std::to_string(panel.size()) + " series into " + (cfg.output / "panel.csv").string());
    return 0;
}

inline int cmd_tune(const RunConfig& cfg) {
    ensure_output(cfg);
    const Panel panel = load_dataset(cfg);
    const auto [train, holdout] = split_holdout(panel, cfg.horizon);
    const auto configs = sample_configs(cfg.space, cfg.samples, cfg.search_seed);
    log::info("searching " + std::to_string(configs.size()) + " configurations with " +
              std::to_string(cfg.workers) + " workers");

    SearchOptions options;
    options.metric = cfg.metric;
    options.workers = cfg.workers;
    options.log_path = cfg.output / "search_log.jsonl";
    options.metadata = dataset_metadata(cfg, panel);
    options.metadata["search_seed"] = cfg.search_seed;
    options.metadata["space_size"] = cfg.space.size();
    SearchStats stats;
    const Leaderboard board = run_search(configs, train, cfg.cv, options, &stats);

    write_leaderboard_json(cfg.output / "leaderboard.json", board);
    std::ostringstream csv_text;
    write_leaderboard_csv(csv_text, board);
    write_text(cfg.output / "leaderboard.csv", csv_text.str());
    write_json(cfg.output / "folds.json",
               {{"timeseries", to_json(timeseries_folds(train, cfg.cv.n_folds, cfg.horizon))},
                {"series_kfold", to_json(series_kfolds(train, cfg.cv.k, cfg.horizon, cfg.cv.seed))}});
    log::info("search tasks: " + std::to_string(stats.tasks) + ", reused " + std::to_string(stats.reused) +
              ", failed " + std::to_string(stats.failed));
    return 0;
}

struct EvaluateResult {
    TradeoffTable table;
    std::vector<std::pair<std::string, std::string>> failures;  // config id, error
};

/// Refits the top-n leaderboard configurations on the training panel and
/// scores their holdout forecasts with every report metric.
inline EvaluateResult cmd_evaluate(const RunConfig& cfg, const fs::path& leaderboard_path, std::int64_t n) {
    ensure_output(cfg);
    const Leaderboard board = read_leaderboard_json(leaderboard_path);
    const auto top = select_top(board, n);
    const Panel panel = load_dataset(cfg);
    const auto [train, holdout] = split_holdout(panel, cfg.horizon);

    const fs::path model_dir = cfg.output / "models";
    fs::create_directories(model_dir);
    std::vector<NamedForecast> forecasts;
    EvaluateResult result;
    for (const auto& config : top) {
        try {
            const FittedModel model = fit(config.forecaster, train, config.features);
            write_text(model_dir / (config.id + ".dfm"), save_model(model));
            forecasts.push_back({config.id, predict(model, train, cfg.horizon)});
        } catch (const Error& e) {
            log::warn("config " + config.id + " failed: " + e.what());
            result.failures.emplace_back(config.id, e.what());
        }
    }
    result.table = tradeoff_table(forecasts, holdout, cfg.report_metrics, cfg.unit_cost);

    // Report rows follow leaderboard order; failed fits appear as failed rows.
    std::map<std::string, TradeoffRow> by_name;
    for (auto& row : result.table.rows) by_name.emplace(row.name, row);
    for (const auto& [id, err] : result.failures) by_name.emplace(id, TradeoffRow{id, {}, err});
    result.table.rows.clear();
    for (const auto& config : top) result.table.rows.push_back(by_name.at(config.id));

    std::ostringstream tradeoff;
    write_tradeoff_csv(tradeoff, result.table);
    write_text(cfg.output / "tradeoff.csv", tradeoff.str());

    nlohmann::json selections = nlohmann::json::object();
    for (const auto& m : cfg.report_metrics) {
        auto it = result.table.argmin.find(m);
        selections[m] = it == result.table.argmin.end() ? nlohmann::json(nullptr) : nlohmann::json(it->second);
    }
    nlohmann::json failed = nlohmann::json::array();
    for (const auto& row : result.table.rows) {
        if (!row.error.empty()) failed.push_back({{"config_id", row.name}, {"error", row.error}});
    }
    write_json(cfg.output / "selections.json",
               {{"top_n", n}, {"argmin", selections}, {"failed", failed}, {"metrics", cfg.report_metrics}});

    const bool inventory = std::any_of(cfg.report_metrics.begin(), cfg.report_metrics.end(),
                                       [](const std::string& m) { return is_inventory_metric(m); });
    if (inventory) {
        std::ostringstream trace, scatter;
        csv::write_row(scatter, {"model", "combined_rank", "sr", "doi"});
        bool header_written = false;
        for (std::size_t r = 0; r < top.size(); ++r) {
            const auto& row = result.table.rows[r];
            if (!row.error.empty()) continue;
            auto fc = std::find_if(forecasts.begin(), forecasts.end(),
                                   [&](const NamedForecast& f) { return f.name == row.name; });
            const auto outcome = simulate_inventory(align(fc->forecast, holdout), holdout.frequency(), cfg.unit_cost);
            std::ostringstream one;
            write_inventory_trace_csv(one, holdout.key_names(), outcome, row.name);
            std::string text = one.str();
            if (header_written) text = text.substr(text.find('\n') + 1);
            header_written = true;
            trace << text;
            csv::write_row(scatter, {row.name, std::to_string(r + 1), format_double(outcome.sr), format_double(outcome.doi)});
        }
        write_text(cfg.output / "inventory_trace.csv", trace.str());
        write_text(cfg.output / "doi_sr_scatter.csv", scatter.str());
    }
    return result;
}

inline int cmd_forecast(const RunConfig& cfg, const fs::path& model_path, const fs::path& out_path) {
    require(!model_path.empty(), ErrorKind::CorruptPayload, "empty model path");
    const std::string bytes = read_bytes(model_path);
    const FittedModel model = load_model(bytes);
    const Panel panel = load_dataset(cfg);
    const Forecast forecast = predict(model, panel, cfg.horizon);

    std::ostringstream out;
    std::vector<std::string> header = panel.key_names();
    header.push_back("step");
    header.push_back("prediction");
    csv::write_row(out, header);
    for (const auto& [key, values] : forecast.values) {
        for (std::size_t h = 0; h < values.size(); ++h) {
            std::vector<std::string> row = key.parts();
            row.push_back(std::to_string(h + 1));
            row.push_back(format_double(values[h]));
            csv::write_row(out, row);
        }
    }
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_text(out_path, out.str());
    return 0;
}

}  // namespace demandforge::cli
