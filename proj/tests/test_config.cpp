#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "demandforge/run_config.hpp"
#include "demandforge/toml.hpp"

namespace demandforge {
namespace {

TEST(Toml, ScalarsTablesAndArrays) {
    const auto j = toml::parse(R"(# comment
name = "demo"   # trailing
count = 1_000
ratio = 0.25
exp = 1e-6
neg = -3
flag = true
path = 'C:\raw'
list = [1, 2,
        3,]
mixed = ["a", "b"]
inline = { x = 1, y.z = "q" }

[dataset]
source = "generator"
seed = 7

[dataset.cleaning]
missing = "zero_fill"

[[search.family]]
name = "ses"
alpha = [0.1, 0.5]

[[search.family]]
name = "gbdt"
"quoted key" = 2
)");
    EXPECT_EQ(j.at("name"), "demo");
    EXPECT_EQ(j.at("count"), 1000);
    EXPECT_DOUBLE_EQ(j.at("ratio").get<double>(), 0.25);
    EXPECT_DOUBLE_EQ(j.at("exp").get<double>(), 1e-6);
    EXPECT_EQ(j.at("neg"), -3);
    EXPECT_EQ(j.at("flag"), true);
    EXPECT_EQ(j.at("path"), "C:\\raw");
    EXPECT_EQ(j.at("list"), nlohmann::json({1, 2, 3}));
    EXPECT_EQ(j.at("inline").at("y").at("z"), "q");
    EXPECT_EQ(j.at("dataset").at("seed"), 7);
    EXPECT_EQ(j.at("dataset").at("cleaning").at("missing"), "zero_fill");
    ASSERT_EQ(j.at("search").at("family").size(), 2u);
    EXPECT_EQ(j.at("search").at("family")[1].at("quoted key"), 2);
}

TEST(Toml, ErrorsCiteLines) {
    for (const char* bad : {"a = 1\nb = \n", "a = 1\na = 2\n", "a = [1, 2\n", "a = \"open\n", "a = 1 2\n",
                            "a = 1979-05-27\n"}) {
        try {
            toml::parse(bad);
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
            EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
        }
    }
}

const char* kGeneratorConfig = R"(
name = "synthetic"
horizon = 3
metric = "mase"
report_metrics = ["mase", "mae", "sr", "doi"]
output = "out"

[dataset]
source = "generator"
regime = "many_short"
n_series = 30
length = 42
intermittency = 0.3
seed = 5

[cv]
n_folds = 2
k = 3
seed = 11

[search]
samples = 20
seed = 3
workers = 2
setups = ["single_model", "per_series"]

[[search.family]]
name = "seasonal_naive"
season_length = [1, 12]

[[search.family]]
name = "linear_ar"
ridge_lambda = [1e-6, 1.0]
intercept = [true, false]

[[search.features]]
lags = [1, 2, 3]

[[search.features]]
lags = [1, 12]
windows = [3]
include_statistic = true

[evaluate]
top_n = 4
)";

TEST(RunConfig, GeneratorConfig) {
    const auto cfg = run_config_from_json(toml::parse(kGeneratorConfig), "/base");
    EXPECT_EQ(cfg.name, "synthetic");
    EXPECT_EQ(cfg.horizon, 3);
    EXPECT_EQ(cfg.output, std::filesystem::path("/base/out"));
    const auto& g = std::get<GeneratorSpec>(cfg.dataset);
    EXPECT_EQ(g.n_series, 30);
    EXPECT_DOUBLE_EQ(g.intermittency, 0.3);
    EXPECT_EQ(g.seed, 5u);
    EXPECT_EQ(cfg.cv.n_folds, 2);
    EXPECT_EQ(cfg.cv.seed, 11u);
    EXPECT_EQ(cfg.cv.horizon, 3);
    EXPECT_EQ(cfg.samples, 20u);
    EXPECT_EQ(cfg.workers, 2u);
    EXPECT_EQ(cfg.top_n, 4);
    EXPECT_EQ(cfg.space.families.size(), 2u);
    EXPECT_EQ(cfg.space.feature_sets.size(), 2u);
    EXPECT_EQ(cfg.space.size(), 2u * 2 + 2u * 2 * 2 * 2);
}

TEST(RunConfig, SeedsMustBeExplicit) {
    for (const std::string key : {"seed = 11\n", "seed = 3\n", "seed = 5\n"}) {
        std::string text = kGeneratorConfig;
        text.erase(text.find(key), key.size());
        try {
            run_config_from_json(toml::parse(text));
            FAIL() << key;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
        }
    }
}

TEST(RunConfig, RejectsUnknownNames) {
    auto replace = [](std::string text, const std::string& from, const std::string& to) {
        text.replace(text.find(from), from.size(), to);
        return text;
    };
    const std::string base = kGeneratorConfig;
    for (const auto& text : {replace(base, "metric = \"mase\"", "metric = \"sr\""),
                             replace(base, "\"doi\"]", "\"mape\"]"),
                             replace(base, "season_length = [1, 12]", "alpha = [0.5]"),
                             replace(base, "name = \"linear_ar\"", "name = \"lstm\""),
                             replace(base, "intermittency = 0.3", "intermittency = 3"),
                             replace(base, "horizon = 3", "horizon = 0")}) {
        try {
            run_config_from_json(toml::parse(text));
            FAIL() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::ConfigError) << e.what();
        }
    }
}

TEST(RunConfig, CsvDatasetWithJoin) {
    const auto cfg = run_config_from_json(toml::parse(R"(
[dataset]
source = "csv"
path = "data/sales.csv"
key_columns = ["site", "product"]
timestamp_column = "month"
target_column = "qty"
timestamp_format = "%Y-%m"
frequency = "monthly"

[dataset.cleaning]
missing = "zero_fill"
gap_fill = "reject"

[[dataset.join]]
path = "data/population.csv"
key_column = "year"
on = "year"

[[dataset.join]]
path = "data/sites.csv"
key_column = "site"
on = "key_part:site"

[cv]
seed = 1

[search]
seed = 2

[[search.family]]
name = "ses"
alpha = 0.5
)"),
                                         "/cfg");
    const auto& spec = std::get<LoaderSpec>(cfg.dataset);
    EXPECT_EQ(spec.path, std::filesystem::path("/cfg/data/sales.csv"));
    EXPECT_EQ(spec.key_columns, (std::vector<std::string>{"site", "product"}));
    EXPECT_EQ(spec.cleaning.missing, MissingPolicy::zero_fill);
    EXPECT_EQ(spec.cleaning.gap_fill, GapFillPolicy::reject);
    ASSERT_EQ(cfg.joins.size(), 2u);
    EXPECT_EQ(cfg.joins[0].kind, JoinKind::year);
    EXPECT_EQ(cfg.joins[1].kind, JoinKind::key_part);
    EXPECT_EQ(cfg.joins[1].key_part, "site");
}

TEST(ForecasterJson, RoundTripKeepsRelevantParams) {
    ForecasterSpec f;
    f.family = Family::gbdt;
    f.params.gbdt.num_trees = 17;
    f.params.gbdt.learning_rate = 0.3;
    f.setup = Setup::per_series;
    const auto j = to_json(f);
    EXPECT_FALSE(j.at("params").contains("alpha"));
    const auto back = forecaster_spec_from_json(j);
    EXPECT_EQ(to_json(back), j);
    EXPECT_EQ(back.params.gbdt.num_trees, 17);
    EXPECT_EQ(back.setup, Setup::per_series);
}

}  // namespace
}  // namespace demandforge
