// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset, e.g. `acceptance 3 4`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "demandforge/demandforge.hpp"
#include "oracles.hpp"

namespace {

using namespace demandforge;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Check {
    // Records the first few failures; everything else only counts.
    Outcome& out;
    int failures = 0;
    void expect(bool ok, const std::string& what) {
        if (ok) return;
        if (failures < 3) out.detail += (out.detail.empty() ? "" : "; ") + what;
        ++failures;
        out.pass = false;
    }
    void near(double got, double want, double tol, const std::string& what) {
        std::ostringstream s;
        s.precision(17);
        s << what << ": got " << got << ", want " << want;
        expect(std::abs(got - want) <= tol, s.str());
    }
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

EvalSet one(std::vector<double> y, std::vector<double> yhat) { return {EvalSeries{SeriesKey({"s"}), y, yhat}}; }

const Frequency kDaily{FrequencyUnit::daily};

// ---------------------------------------------------------------------------
// 1. Metric oracles

Outcome metric_oracles() {
    Outcome out;
    Check c{out};
    c.near(mae(one({1, 2, 3}, {2, 2, 2})), 2.0 / 3.0, 1e-9, "mae example");
    c.near(mae(one({4, 5}, {4, 5})), 0.0, 1e-9, "mae perfect");
    c.near(rmse(one({1, 2}, {2, 4})), std::sqrt(2.5), 1e-9, "rmse example");
    c.near(mase(one({3, 1, 4, 1}, {2, 2, 2, 2})), 0.46875, 1e-9, "mase example");
    const auto inv = simulate_inventory(one({1, 2, 2}, {2, 0, 3}), kDaily);
    c.near(inv.trace[0].end_inventory, 1, 1e-9, "end inventory t0");
    c.near(inv.trace[1].end_inventory, 0, 1e-9, "end inventory t1");
    c.near(inv.trace[2].end_inventory, 1, 1e-9, "end inventory t2");
    c.near(inv.total_unfulfilled, 1, 1e-9, "unfulfilled total");
    c.near(inv.sr, 0.2, 1e-9, "sr example");
    c.near(inv.doi, 0.5, 1e-9, "doi example");
    const auto perfect = simulate_inventory(one({3, 1, 4}, {3, 1, 4}), kDaily);
    c.near(perfect.sr, 0, 1e-9, "perfect sr");
    c.near(perfect.doi, 0, 1e-9, "perfect doi");
    c.near(simulate_inventory(one({3, 1, 4}, {0, 0, 0}), kDaily).sr, 1, 1e-9, "empty shelves sr");

    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> len(1, 6), val(0, 8);
    std::uniform_real_distribution<double> scale(0.25, 8.0);
    int instances = 0;
    while (instances < 1000) {
        const std::size_t n = static_cast<std::size_t>(len(rng));
        std::vector<double> y(n), yhat(n);
        for (auto& v : y) v = val(rng);
        for (auto& v : yhat) v = val(rng);
        const auto ref = oracle::simulate(y, yhat);
        if (ref.demand == 0) continue;
        ++instances;
        const auto pairs = one(y, yhat);

        double abs_sum = 0, sq_sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            abs_sum += std::abs(y[i] - yhat[i]);
            sq_sum += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        }
        const double m = mae(pairs), r = rmse(pairs);
        c.near(m, abs_sum / n, 1e-9, "mae oracle");
        c.near(r, std::sqrt(sq_sum / n), 1e-9, "rmse oracle");
        c.expect(r >= m - 1e-12, "rmse >= mae");

        const double k = scale(rng);
        std::vector<double> ys = y, yhats = yhat;
        for (auto& v : ys) v *= k;
        for (auto& v : yhats) v *= k;
        c.near(mae(one(ys, yhats)), k * m, 1e-9 * std::max(1.0, k * m), "mae scale equivariance");
        c.near(rmse(one(ys, yhats)), k * r, 1e-9 * std::max(1.0, k * r), "rmse scale equivariance");
        double denom = 0;
        for (std::size_t i = 1; i < n; ++i) denom += std::abs(y[i] - y[i - 1]);
        if (n >= 2 && denom > 0) {
            const double ms = mase(pairs);
            c.near(ms, (abs_sum / n) / (denom / (n - 1)), 1e-9, "mase oracle");
            c.near(mase(one(ys, yhats)), ms, 1e-9, "mase scale invariance");
        }

        const auto sim = simulate_inventory(pairs, kDaily);
        c.near(sim.sr, ref.unfulfilled / ref.demand, 1e-12, "sr oracle");
        double prev = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = sim.trace[i];
            c.expect(s.end_inventory == ref.end_inventory[i], "end inventory oracle");
            c.expect(s.end_inventory >= 0, "end inventory non-negative");
            c.expect(s.fulfilled + s.unfulfilled == s.demand, "fulfilled + unfulfilled = demand");
            c.expect(prev + s.replenishment - s.fulfilled == s.end_inventory, "inventory conservation");
            prev = s.end_inventory;
        }
        if (ref.fulfilled > 0) {
            c.near(sim.doi, (ref.end_sum / n) / ref.fulfilled * n, 1e-12, "doi oracle");
        }
        c.expect((sim.doi == 0) == (ref.end_sum == 0), "doi zero iff inventory zero");
        for (std::size_t i = 0; i < n; ++i) {
            auto more = yhat;
            more[i] += 1 + val(rng);
            c.expect(simulate_inventory(one(y, more), kDaily).sr <= sim.sr, "sr monotone in replenishment");
        }
    }
    if (out.pass) out.detail = "hand examples exact, 1000 random instances agree with scalar oracles";
    return out;
}

// ---------------------------------------------------------------------------
// 2. Leakage freedom

Outcome leakage_freedom() {
    Outcome out;
    Check c{out};
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    std::size_t rows_checked = 0;
    for (int panel_no = 0; panel_no < 100; ++panel_no) {
        GeneratorSpec g;
        g.regime = panel_no % 2 ? Regime::few_long : Regime::many_short;
        g.n_series = 2 + static_cast<std::int64_t>(uniform_index(rng, 6));
        g.length = 14 + static_cast<std::int64_t>(uniform_index(rng, 20));
        g.intermittency = 0.5 * u(rng);
        g.noise_scale = 3 * u(rng);
        g.seed = rng();
        Panel panel = generate(g);

        // A constant exogenous column exercises the copy path as well.
        auto series = panel.series();
        for (auto& s : series) s.exogenous.push_back(std::vector<double>(s.length(), 1.5));
        panel = Panel(panel.frequency(), panel.key_names(), {"price"}, series);

        FeatureSpec spec;
        for (int lag = 1; lag <= 12; ++lag) {
            if (u(rng) < 0.3) spec.lags.push_back(lag);
        }
        if (spec.lags.empty()) spec.lags.push_back(1);
        for (int w = 2; w <= 8; ++w) {
            if (u(rng) < 0.3) spec.windows.push_back(w);
        }
        spec.include_pattern = u(rng) < 0.7;
        spec.include_statistic = u(rng) < 0.7;
        if (u(rng) < 0.5) spec.exogenous = {"price"};

        const auto base = build_matrix(panel, spec);
        const std::size_t t = base.warmup + uniform_index(rng, static_cast<std::uint64_t>(g.length) - base.warmup);
        auto perturbed_series = panel.series();
        for (auto& s : perturbed_series) {
            for (std::size_t k = t; k < s.length(); ++k) s.values[k] = 1000 * u(rng);
        }
        const auto perturbed = build_matrix(panel.with_series(perturbed_series), spec);
        c.expect(perturbed.rows() == base.rows(), "row count changed");
        for (std::size_t r = 0; r < base.rows() && r < perturbed.rows(); ++r) {
            if (base.row_timesteps[r] != t) continue;
            ++rows_checked;
            for (std::size_t col = 0; col < base.cols(); ++col) {
                c.expect(base.at(r, col) == perturbed.at(r, col),
                         "panel " + std::to_string(panel_no) + " feature " + base.column_names[col] + " changed");
            }
        }
    }
    if (out.pass) out.detail = "100 panels, " + std::to_string(rows_checked) + " rows at the perturbation step unchanged";
    return out;
}

// ---------------------------------------------------------------------------
// 3. Cross-learning directionality

FeatureSpec cross_learning_features() {
    FeatureSpec f;
    f.lags = {1, 2, 12};
    f.windows = {3};
    f.include_statistic = true;
    return f;
}

ForecasterSpec cross_learning_gbdt(Setup setup) {
    ForecasterSpec spec;
    spec.family = Family::gbdt;
    spec.setup = setup;
    spec.params.gbdt.num_trees = 100;
    spec.params.gbdt.learning_rate = 0.1;
    spec.params.gbdt.max_depth = 2;
    spec.params.gbdt.min_samples_leaf = 5;
    return spec;
}

double holdout_mase(const ForecasterSpec& spec, const FeatureSpec& f, const Panel& train, const Panel& test) {
    return mase(align(predict(fit(spec, train, f), train, test.series().front().length()), test));
}

Outcome cross_learning(bool verbose) {
    Outcome out;
    std::string detail;
    for (Regime regime : {Regime::many_short, Regime::few_long}) {
        int wins = 0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            GeneratorSpec g;
            g.regime = regime;
            g.n_series = regime == Regime::many_short ? 200 : 5;
            g.length = regime == Regime::many_short ? 42 : 480;
            g.intermittency = regime == Regime::many_short ? 0.3 : 0.0;
            g.level_spread = 0.5;
            g.seed = seed;
            const auto [train, test] = split_holdout(generate(g), 3);
            const double single = holdout_mase(cross_learning_gbdt(Setup::single_model), cross_learning_features(), train, test);
            const double multi = holdout_mase(cross_learning_gbdt(Setup::per_series), cross_learning_features(), train, test);
            wins += regime == Regime::many_short ? single < multi : multi < single;
            if (verbose) {
                std::printf("  %s seed %2llu: single %.4f per_series %.4f\n", to_string(regime).c_str(),
                            static_cast<unsigned long long>(seed), single, multi);
            }
        }
        const bool ok = wins >= 8;
        out.pass = out.pass && ok;
        detail += (detail.empty() ? "" : ", ") + to_string(regime) + " " +
                  (regime == Regime::many_short ? "single" : "per_series") + " wins " + std::to_string(wins) + "/10";
    }
    out.detail = detail + " (need >= 8 each)";
    return out;
}

// ---------------------------------------------------------------------------
// 4. Dual-CV robustness

SearchSpace robustness_space() {
    SearchSpace space;
    space.families.push_back({Family::seasonal_naive, {{"season_length", {1, 2, 3, 4, 6, 12}}}});
    space.families.push_back({Family::ses, {{"alpha", {0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0}}}});
    space.families.push_back({Family::linear_ar, {{"ridge_lambda", {1e-6, 1.0, 100.0}}, {"intercept", {0, 1}}}});
    space.families.push_back({Family::gbdt,
                              {{"num_trees", {10, 30}},
                               {"learning_rate", {0.1, 0.3}},
                               {"max_depth", {2, 3}},
                               {"min_samples_leaf", {5, 20}}}});
    FeatureSpec a;
    a.lags = {1, 2, 3};
    FeatureSpec b;
    b.lags = {1, 12};
    FeatureSpec c;
    c.lags = {1, 12};
    c.windows = {3};
    c.include_statistic = true;
    FeatureSpec d;
    d.lags = {1, 2, 3, 6, 12};
    d.windows = {6};
    d.include_pattern = true;
    FeatureSpec e;
    e.lags = {1};
    e.windows = {3, 6};
    e.include_pattern = true;
    e.include_statistic = true;
    space.feature_sets = {a, b, c, d, e};
    space.setups = {Setup::single_model, Setup::per_series};
    return space;
}

double mean_holdout(const std::vector<ScoredConfig>& ranked, const std::map<std::string, double>& holdout, std::size_t n) {
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += holdout.at(ranked[i].config_id);
    return sum / static_cast<double>(n);
}

std::vector<ScoredConfig> order_by(std::vector<ScoredConfig> rows, double ScoredConfig::*score) {
    std::stable_sort(rows.begin(), rows.end(), [&](const ScoredConfig& a, const ScoredConfig& b) {
        if (a.*score != b.*score) return a.*score < b.*score;
        return a.config_id < b.config_id;
    });
    return rows;
}

Outcome dual_cv_robustness(bool verbose) {
    Outcome out;
    int wins = 0;
    const SearchSpace space = robustness_space();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        GeneratorSpec g;
        g.regime = Regime::many_short;
        g.n_series = 200;
        g.length = 42;
        g.intermittency = 0.3;
        g.level_spread = 0.5;
        g.seed = 100 + seed;
        const auto [train, test] = split_holdout(generate(g), 3);
        const auto configs = sample_configs(space, 300, seed);
        CvSettings cv;
        cv.seed = seed;
        const Leaderboard board = run_search(configs, train, cv, {});

        std::vector<ScoredConfig> combined;
        for (const auto& row : board.rows) combined.push_back(row.score);
        const auto by_ts = order_by(combined, &ScoredConfig::score_ts);
        const auto by_kf = order_by(combined, &ScoredConfig::score_kf);

        std::set<std::string> needed;
        for (const auto* ranking : std::vector<const std::vector<ScoredConfig>*>{&combined, &by_ts, &by_kf}) {
            for (std::size_t i = 0; i < 50; ++i) needed.insert((*ranking)[i].config_id);
        }
        std::map<std::string, double> holdout;
        for (const auto& row : board.rows) {
            if (!needed.count(row.config.id)) continue;
            double score = std::numeric_limits<double>::infinity();
            try {
                score = holdout_mase(row.config.forecaster, row.config.features, train, test);
            } catch (const Error&) {
            }
            holdout[row.config.id] = score;
        }
        const double both = mean_holdout(combined, holdout, 50);
        const double ts = mean_holdout(by_ts, holdout, 50);
        const double kf = mean_holdout(by_kf, holdout, 50);
        const bool ok = both <= ts && both <= kf;
        wins += ok;
        if (verbose) {
            std::printf("  seed %2llu: both %.4f ts %.4f kf %.4f %s\n", static_cast<unsigned long long>(seed), both, ts, kf,
                        ok ? "" : "<-");
            std::fflush(stdout);
        }
    }
    out.pass = wins >= 7;
    out.detail = "combined top-50 holdout MASE <= both single strategies in " + std::to_string(wins) + "/10 seeds (need >= 7)";
    return out;
}

// ---------------------------------------------------------------------------
// 5. Search engine determinism

Outcome search_determinism() {
    Outcome out;
    GeneratorSpec g;
    g.n_series = 40;
    g.length = 42;
    g.intermittency = 0.3;
    g.seed = 5;
    const auto [train, test] = split_holdout(generate(g), 3);
    const auto configs = sample_configs(robustness_space(), 100, 5);
    CvSettings cv;
    cv.seed = 5;
    SearchOptions options;
    options.metadata = {{"dataset", "acceptance"}};

    options.workers = 1;
    const std::string w1 = leaderboard_json_text(run_search(configs, train, cv, options));
    options.workers = 4;
    const std::string w4 = leaderboard_json_text(run_search(configs, train, cv, options));

    const fs::path dir = fs::temp_directory_path() / "demandforge_acceptance_resume";
    fs::remove_all(dir);
    fs::create_directories(dir);
    options.log_path = dir / "search_log.jsonl";
    options.workers = 2;
    run_search(configs, train, cv, options);
    std::vector<std::string> lines;
    {
        std::ifstream in(*options.log_path);
        for (std::string l; std::getline(in, l);) lines.push_back(l);
    }
    {
        // Keep the first 40% of records and a torn record, as after a crash.
        std::ofstream cut(*options.log_path, std::ios::binary | std::ios::trunc);
        const std::size_t keep = lines.size() * 2 / 5;
        for (std::size_t i = 0; i < keep; ++i) cut << lines[i] << "\n";
        cut << lines[keep].substr(0, lines[keep].size() / 2);
    }
    options.workers = 4;
    SearchStats stats;
    const std::string resumed = leaderboard_json_text(run_search(configs, train, cv, options, &stats));
    fs::remove_all(dir);

    out.pass = w1 == w4 && w1 == resumed && stats.reused == lines.size() * 2 / 5;
    out.detail = std::string("workers 1 vs 4 ") + (w1 == w4 ? "identical" : "DIFFER") + ", resumed run " +
                 (w1 == resumed ? "identical" : "DIFFERS") + " (" + std::to_string(stats.reused) + " of " +
                 std::to_string(stats.tasks) + " tasks reused, 100 configs)";
    return out;
}

// ---------------------------------------------------------------------------
// 6. Selection-by-metric coherence

Outcome selection_coherence() {
    Outcome out;
    Check c{out};
    GeneratorSpec g;
    g.n_series = 50;
    g.length = 42;
    g.intermittency = 0.3;
    g.level_spread = 0.5;
    g.seed = 6;
    const auto [train, test] = split_holdout(generate(g), 3);
    const auto configs = sample_configs(robustness_space(), 20, 6);
    std::vector<NamedForecast> forecasts;
    for (const auto& config : configs) {
        forecasts.push_back({config.id, predict(fit(config.forecaster, train, config.features), train, 3)});
    }
    const std::vector<std::string> metrics{"mase", "sr", "doi"};
    const auto table = tradeoff_table(forecasts, test, metrics);
    c.expect(table.rows.size() == 20, "expected 20 rows");
    for (const auto& m : metrics) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& row : table.rows) {
            c.expect(row.error.empty(), "row " + row.name + " failed: " + row.error);
            if (row.error.empty()) best = std::min(best, row.metrics.at(m));
        }
        auto it = table.argmin.find(m);
        c.expect(it != table.argmin.end(), "no argmin for " + m);
        if (it == table.argmin.end()) continue;
        const auto row = std::find_if(table.rows.begin(), table.rows.end(),
                                      [&](const TradeoffRow& r) { return r.name == it->second; });
        c.expect(row->metrics.at(m) == best, "argmin-" + m + " is not the minimum");
    }
    // Inventory columns recomputed independently per model.
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        double demand = 0, unfulfilled = 0;
        for (const auto& s : test.series()) {
            const auto ref = oracle::simulate(s.values, forecasts[i].forecast.values.at(s.key));
            demand += ref.demand;
            unfulfilled += ref.unfulfilled;
        }
        c.near(table.rows[i].metrics.at("sr"), unfulfilled / demand, 1e-12, "sr recomputation");
    }
    if (out.pass) {
        out.detail = "argmin-MASE, argmin-SR and argmin-DOI each attain their column minimum over 20 models";
    }
    return out;
}

// ---------------------------------------------------------------------------
// 7. Over/under-forecast asymmetry

Outcome forecast_asymmetry() {
    Outcome out;
    Check c{out};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, 1);
    int comparisons = 0;
    for (int instance = 0; instance < 100; ++instance) {
        GeneratorSpec g;
        g.n_series = 1 + static_cast<std::int64_t>(uniform_index(rng, 10));
        g.length = 3 + static_cast<std::int64_t>(uniform_index(rng, 10));
        g.intermittency = 0.4 * u(rng);
        g.noise_scale = 3 * u(rng);
        g.seed = rng();
        const Panel actual = generate(g);
        EvalSet base;
        double demand = 0;
        for (const auto& s : actual.series()) {
            EvalSeries e{s.key, s.values, {}};
            for (double v : s.values) {
                demand += v;
                e.predicted.push_back(std::max(0.0, v + 4.0 * (u(rng) - 0.5) * (1 + v / 5)));
            }
            base.push_back(std::move(e));
        }
        if (demand == 0) {
            --instance;
            continue;
        }
        const auto ref = simulate_inventory(base, kDaily);
        for (double shift : {0.5, 1.0, 2.0}) {
            EvalSet over = base, under = base;
            for (auto& e : over) {
                for (auto& v : e.predicted) v += shift;
            }
            for (auto& e : under) {
                for (auto& v : e.predicted) v = std::max(0.0, v - shift);
            }
            const auto hi = simulate_inventory(over, kDaily);
            const auto lo = simulate_inventory(under, kDaily);
            const std::string tag = "instance " + std::to_string(instance) + " c=" + fmt("%g", shift);
            c.expect(hi.sr <= ref.sr, tag + ": +c raised SR");
            c.expect(hi.doi >= ref.doi, tag + fmt(": +c lowered DOI (%.6g -> %.6g)", ref.doi, hi.doi));
            c.expect(lo.sr >= ref.sr, tag + ": -c lowered SR");
            comparisons += 3;
        }
    }
    if (out.pass) {
        out.detail = "100 instances x c in {0.5, 1, 2}: " + std::to_string(comparisons) + " comparisons hold";
    } else {
        out.detail = std::to_string(c.failures) + " violations, e.g. " + out.detail;
    }
    return out;
}

// ---------------------------------------------------------------------------
// 8. End-to-end reproducibility

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        files[fs::relative(e.path(), root).generic_string()] =
            std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    return files;
}

Outcome end_to_end() {
    Outcome out;
    const fs::path dir = fs::temp_directory_path() / "demandforge_acceptance_e2e";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "run.toml") << R"(name = "acceptance"
horizon = 3
report_metrics = ["mase", "mae", "rmse", "sr", "doi"]

[dataset]
source = "generator"
regime = "many_short"
n_series = 60
length = 42
intermittency = 0.3
level_spread = 0.5
seed = 8

[cv]
seed = 8

[search]
samples = 100
seed = 8
workers = 2
setups = ["single_model", "per_series"]

[[search.family]]
name = "seasonal_naive"
season_length = [1, 3, 12]

[[search.family]]
name = "ses"
alpha = [0.1, 0.3, 0.5, 0.9]

[[search.family]]
name = "linear_ar"
ridge_lambda = [1e-6, 1.0]

[[search.family]]
name = "gbdt"
num_trees = [10, 30]
max_depth = [2, 3]
min_samples_leaf = [5, 20]

[[search.features]]
lags = [1, 2, 3]

[[search.features]]
lags = [1, 12]
windows = [3]
include_statistic = true

[[search.features]]
lags = [1, 2, 3, 12]
windows = [6]
include_pattern = true

[evaluate]
top_n = 20
)";
    bool commands_ok = true;
    for (const char* run : {"a", "b"}) {
        for (const char* cmd : {"ingest", "tune", "evaluate"}) {
            const std::string line = std::string("\"") + DEMANDFORGE_CLI + "\" " + cmd + " --config \"" +
                                     (dir / "run.toml").string() + "\" --output \"" + (dir / run).string() + "\"";
            commands_ok = commands_ok && std::system(line.c_str()) == 0;
        }
    }
    const auto a = read_tree(dir / "a");
    const auto b = read_tree(dir / "b");
    std::string differing;
    for (const auto& [name, bytes] : a) {
        auto it = b.find(name);
        if (it == b.end() || it->second != bytes) differing += " " + name;
    }
    out.pass = commands_ok && a.size() == b.size() && differing.empty() && a.count("leaderboard.json") &&
               a.count("tradeoff.csv");
    out.detail = std::to_string(a.size()) + " files per tree, " +
                 (differing.empty() && a.size() == b.size() ? std::string("byte-identical") : "differing:" + differing) +
                 (commands_ok ? "" : ", a command failed");
    fs::remove_all(dir);
    return out;
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    bool verbose = false;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "-v") {
            verbose = true;
        } else {
            only.insert(std::atoi(argv[i]));
        }
    }
    const std::vector<Criterion> criteria{
        {1, "metric oracles", 5, metric_oracles},
        {2, "leakage freedom", 10, leakage_freedom},
        {3, "cross-learning directionality", 600, [&] { return cross_learning(verbose); }},
        {4, "dual-CV robustness", 900, [&] { return dual_cv_robustness(verbose); }},
        {5, "search determinism", 120, search_determinism},
        {6, "selection-by-metric coherence", 60, selection_coherence},
        {7, "over/under-forecast asymmetry", 5, forecast_asymmetry},
        {8, "end-to-end reproducibility", 300, end_to_end},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds > c.budget_seconds) {
            o.pass = false;
            o.detail += fmt(" [over the %.0f s budget]", c.budget_seconds);
        }
        failed += !o.pass;
        std::printf("%s %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
