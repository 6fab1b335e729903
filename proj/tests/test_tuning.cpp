#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "demandforge/synth.hpp"
#include "demandforge/tuning.hpp"

namespace demandforge {
namespace {

namespace fs = std::filesystem;

FeatureSpec lags(std::vector<int> l) {
    FeatureSpec f;
    f.lags = std::move(l);
    return f;
}

SearchSpace small_space() {
    SearchSpace space;
    space.families.push_back({Family::seasonal_naive, {{"season_length", {1, 12}}}});
    space.families.push_back({Family::ses, {{"alpha", {0.2, 0.5, 0.9}}}});
    space.families.push_back({Family::linear_ar, {{"ridge_lambda", {1e-6, 1.0}}}});
    space.families.push_back(
        {Family::gbdt, {{"num_trees", {5, 10}}, {"max_depth", {2, 3}}, {"learning_rate", {0.1, 0.3}}}});
    space.feature_sets = {lags({1}), lags({1, 2, 3}), lags({1, 12})};
    space.setups = {Setup::single_model, Setup::per_series};
    return space;
}

Panel search_panel(std::uint64_t seed = 3) {
    GeneratorSpec g;
    g.n_series = 9;
    g.length = 30;
    g.intermittency = 0.2;
    g.seed = seed;
    return generate(g);
}

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("demandforge_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TEST(SearchSpace, SizeWithoutEnumeration) {
    SearchSpace space;
    FamilySpace f{Family::gbdt, {}};
    for (int i = 0; i < 10; ++i) f.params.push_back({"p" + std::to_string(i), {1, 2, 3}});
    space.families.push_back(f);
    for (int i = 1; i <= 40; ++i) space.feature_sets.push_back(lags({i}));
    EXPECT_EQ(space.size(), 2361960u);

    EXPECT_EQ(small_space().size(), 2u * 2 + 3u * 2 + 2u * 3 * 2 + 8u * 3 * 2);
}

TEST(SampleConfigs, ExhaustsSmallSpaces) {
    SearchSpace space;
    space.families.push_back({Family::ses, {{"alpha", {0.1, 0.2, 0.3}}}});
    space.setups = {Setup::single_model, Setup::per_series};
    ASSERT_EQ(space.size(), 6u);
    const auto configs = sample_configs(space, 10, 1);
    ASSERT_EQ(configs.size(), 6u);
    std::set<std::string> ids;
    for (const auto& c : configs) ids.insert(c.id);
    EXPECT_EQ(ids.size(), 6u);
}

TEST(SampleConfigs, DeterministicDistinctAndInSpace) {
    SearchSpace space = small_space();
    space.families[3].params.push_back({"seed", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}});
    space.families[3].params.push_back({"min_samples_leaf", {1, 2, 5, 10, 20}});
    space.families[3].params.push_back({"feature_fraction", {0.5, 0.8, 1.0}});
    ASSERT_GT(space.size(), 3000u);
    const auto a = sample_configs(space, 3000, 42);
    const auto b = sample_configs(space, 3000, 42);
    ASSERT_EQ(a.size(), 3000u);
    std::set<std::string> ids;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].id, b[i].id);
        ids.insert(a[i].id);
    }
    EXPECT_EQ(ids.size(), 3000u);
    std::set<std::string> all;
    for (std::uint64_t i = 0; i < space.size(); ++i) all.insert(space.at(i).id);
    EXPECT_EQ(all.size(), space.size());
    for (const auto& id : ids) EXPECT_TRUE(all.count(id));
    EXPECT_NE(sample_configs(space, 50, 1)[0].id, sample_configs(space, 50, 2)[0].id);
}

TEST(SearchSpace, Validation) {
    auto bad = small_space();
    bad.families[0].params[0].name = "alpha";
    EXPECT_THROW(bad.validate(), Error);
    bad = small_space();
    bad.feature_sets.push_back(lags({3, 2, 1}));
    EXPECT_THROW(bad.validate(), Error);
    bad = small_space();
    bad.feature_sets.clear();
    EXPECT_THROW(bad.validate(), Error);
}

TEST(Configuration, IdsFollowContent) {
    ForecasterSpec f;
    f.family = Family::linear_ar;
    const auto a = make_configuration(f, lags({2, 1}));
    const auto b = make_configuration(f, lags({1, 2}));
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.id.size(), 32u);
    f.params.ridge_lambda = 0.5;
    EXPECT_NE(make_configuration(f, lags({1, 2})).id, a.id);
    const auto back = configuration_from_json(to_json(a));
    EXPECT_EQ(back.id, a.id);
    auto tampered = to_json(a);
    tampered["config_id"] = std::string(32, '0');
    EXPECT_THROW(configuration_from_json(tampered), Error);
}

TEST(RunSearch, DominantConfigRanksFirst) {
    const Panel panel = search_panel();
    ForecasterSpec good;
    good.family = Family::seasonal_naive;
    good.params.season_length = 12;
    ForecasterSpec bad;
    bad.family = Family::linear_ar;
    FeatureSpec impossible = lags({29});  // fails on every fold
    const std::vector<Configuration> configs{make_configuration(bad, impossible), make_configuration(good, {})};
    CvSettings cv;
    const auto board = run_search(configs, panel, cv, {});
    ASSERT_EQ(board.rows.size(), 2u);
    EXPECT_EQ(board.rows[0].config.id, configs[1].id);
    EXPECT_EQ(board.rows[0].score.combined_rank, 1);
    EXPECT_TRUE(std::isinf(board.rows[1].score.score_ts));
    EXPECT_TRUE(std::isinf(board.rows[1].score.score_kf));
}

TEST(RunSearch, WorkerCountsAndResumeGiveIdenticalBoards) {
    const Panel panel = search_panel(5);
    const auto configs = sample_configs(small_space(), 40, 9);
    CvSettings cv;
    cv.seed = 4;
    SearchOptions options;
    options.metadata = {{"dataset", "unit"}};
    const std::string one = leaderboard_json_text(run_search(configs, panel, cv, options));
    options.workers = 4;
    EXPECT_EQ(leaderboard_json_text(run_search(configs, panel, cv, options)), one);

    const fs::path dir = temp_dir("resume");
    options.log_path = dir / "log.jsonl";
    SearchStats stats;
    EXPECT_EQ(leaderboard_json_text(run_search(configs, panel, cv, options, &stats)), one);
    EXPECT_EQ(stats.reused, 0u);
    EXPECT_EQ(stats.tasks, 40u * 6u);

    // Keep half the records plus a torn final line.
    std::ifstream in(*options.log_path);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    in.close();
    ASSERT_EQ(lines.size(), stats.tasks);
    {
        std::ofstream out(*options.log_path, std::ios::binary | std::ios::trunc);
        for (std::size_t i = 0; i < lines.size() / 2; ++i) out << lines[i] << "\n";
        out << lines[lines.size() / 2].substr(0, 17);
    }
    options.workers = 3;
    EXPECT_EQ(leaderboard_json_text(run_search(configs, panel, cv, options, &stats)), one);
    EXPECT_EQ(stats.reused, lines.size() / 2);

    // A complete log makes the rerun pure reuse.
    EXPECT_EQ(leaderboard_json_text(run_search(configs, panel, cv, options, &stats)), one);
    EXPECT_EQ(stats.reused, stats.tasks);
    fs::remove_all(dir);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(RunSearch, FinishedLogDoesNotDependOnWorkers) {
    const Panel panel = search_panel(6);
    const auto configs = sample_configs(small_space(), 30, 2);
    const fs::path dir = temp_dir("logorder");
    SearchOptions options;
    options.log_path = dir / "one.jsonl";
    run_search(configs, panel, CvSettings{}, options);
    options.log_path = dir / "four.jsonl";
    options.workers = 4;
    run_search(configs, panel, CvSettings{}, options);
    EXPECT_EQ(slurp(dir / "one.jsonl"), slurp(dir / "four.jsonl"));

    // Records for configurations outside this search are kept.
    const std::string foreign = R"({"config_id":"zz","fold":0,"score":1.0,"strategy":"timeseries"})";
    {
        std::ofstream out(dir / "mixed.jsonl", std::ios::binary);
        out << foreign << "\n";
    }
    options.log_path = dir / "mixed.jsonl";
    run_search(configs, panel, CvSettings{}, options);
    const std::string mixed = slurp(dir / "mixed.jsonl");
    EXPECT_EQ(mixed.substr(0, slurp(dir / "one.jsonl").size()), slurp(dir / "one.jsonl"));
    EXPECT_NE(mixed.find("\"zz\""), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "mixed.jsonl.tmp"));
    fs::remove_all(dir);
}

TEST(RunSearch, CorruptLogIsIoError) {
    const fs::path dir = temp_dir("corrupt");
    {
        std::ofstream out(dir / "log.jsonl");
        out << "not json\n";
    }
    SearchOptions options;
    options.log_path = dir / "log.jsonl";
    ForecasterSpec f;
    f.family = Family::ses;
    try {
        run_search({make_configuration(f, {})}, search_panel(), CvSettings{}, options);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::IoError);
    }
    fs::remove_all(dir);
}

TEST(Leaderboard, RoundTripAndTop) {
    const auto configs = sample_configs(small_space(), 12, 2);
    const auto board = run_search(configs, search_panel(), CvSettings{}, {});
    const fs::path dir = temp_dir("board");
    write_leaderboard_json(dir / "b.json", board);
    const auto back = read_leaderboard_json(dir / "b.json");
    EXPECT_EQ(leaderboard_json_text(back), leaderboard_json_text(board));

    const auto top1 = select_top(board, 1);
    ASSERT_EQ(top1.size(), 1u);
    EXPECT_EQ(top1[0].id, board.rows[0].config.id);
    const auto top5 = select_top(board, 5);
    const auto all = select_top(board, static_cast<std::int64_t>(board.rows.size()));
    for (std::size_t i = 0; i < top5.size(); ++i) EXPECT_EQ(top5[i].id, all[i].id);
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i].id, board.rows[i].config.id);
    EXPECT_THROW(select_top(board, 0), Error);
    try {
        select_top(board, 13);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::OutOfRange);
    }

    std::ostringstream csv;
    write_leaderboard_csv(csv, board);
    const std::string text = csv.str();
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 13u);
    fs::remove_all(dir);
}

TEST(Leaderboard, SelectTopOnLargeBoard) {
    Leaderboard board;
    ForecasterSpec f;
    f.family = Family::ses;
    for (int i = 0; i < 3000; ++i) {
        f.params.alpha = (i + 1) / 3001.0;
        auto c = make_configuration(f, {});
        board.rows.push_back({ScoredConfig{c.id, 1, 1, 1, 1, i + 1}, c});
    }
    EXPECT_EQ(select_top(board, 1000).size(), 1000u);
}

}  // namespace
}  // namespace demandforge
