// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace sigsplit;
namespace fs = std::filesystem;

namespace
{

const FeatureDataset& corpus()
{
    static const FeatureDataset ds = [] {
        SynthConfig cfg;
        cfg.n_users = 6;
        cfg.genuine_per_user = 7;
        cfg.skilled_per_user = 2;
        cfg.min_length = 40;
        cfg.max_length = 60;
        cfg.rng_seed = 21;
        return extract_all(generate(cfg).dataset, {});
    }();
    return ds;
}

RunSettings small_settings()
{
    RunSettings s;
    s.bits = {2, 3};
    s.grid_step = 0.05;
    return s;
}

class TempDir
{
public:
    TempDir()
    {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("sigsplit_pipe_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

} // namespace

TEST(ScoreConfiguration, TrialLayout)
{
    const auto split = split_protocol(corpus(), Protocol{5});
    const auto spec = make_split(SplitKind::test1);
    std::vector<UserModel> models;
    for (const auto& u : split.users)
        models.push_back({u.user_id, dtw_enroll(u.train, spec)});
    const auto sc = score_configuration(split, models, spec, {}, 1);
    const std::size_t k = split.users.size();
    const std::size_t probes = k * 2;
    EXPECT_EQ(sc.ident.probe_users.size(), probes);
    EXPECT_EQ(sc.ident.pairs.size(), probes * k);
    EXPECT_EQ(sc.table.trials.size(), k * (2 + (k - 1) * 2 + 2));
    // Per target: genuine, then random, then skilled.
    const auto& first = sc.table.trials;
    EXPECT_EQ(first[0].kind, TrialKind::genuine);
    EXPECT_EQ(first[2].kind, TrialKind::random_forgery);
    EXPECT_EQ(first[2 + (k - 1) * 2].kind, TrialKind::skilled_forgery);
    for (const auto& t : sc.table.trials)
        EXPECT_NO_THROW(validate(t));
    for (std::size_t i = 0; i < sc.table.trials.size(); ++i)
    {
        const auto& t = sc.table.trials[i];
        if (t.kind == TrialKind::skilled_forgery)
            continue;
        const auto m = std::find_if(models.begin(), models.end(), [&](const UserModel& u) { return u.user_id == t.claimed_user; });
        EXPECT_TRUE(m != models.end());
    }
}

TEST(ScoreConfiguration, WorkerCountDoesNotChangeResults)
{
    const auto split = split_protocol(corpus(), Protocol{5});
    const auto spec = make_split(SplitKind::test2);
    std::vector<UserModel> models;
    for (const auto& u : split.users)
        models.push_back({u.user_id, vq_enroll(u.train, spec, 3, {})});
    const auto a = score_configuration(split, models, spec, {}, 1);
    const auto b = score_configuration(split, models, spec, {}, 4);
    EXPECT_EQ(a.table, b.table);
    EXPECT_EQ(a.ident.pairs, b.ident.pairs);
}

TEST(ScoreConfiguration, ModelCountMismatch)
{
    const auto split = split_protocol(corpus(), Protocol{5});
    EXPECT_THROW(score_configuration(split, {}, make_split(SplitKind::whole), {}, 1), Error);
}

TEST(ParallelFor, PropagatesExceptions)
{
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                     if (i == 7)
                         throw Error(Module::cli, "boom");
                 }),
                 Error);
    std::vector<int> seen(50, 0);
    parallel_for(50, 4, [&](std::size_t i) { seen[i] += 1; });
    for (int v : seen)
        EXPECT_EQ(v, 1);
}

TEST(RunGrid, EmitsEveryCell)
{
    const auto results = run_grid(corpus(), small_settings());
    // vq: 5 splits x 2 bit depths, dtw: 5 splits.
    ASSERT_EQ(results.size(), 15u);
    std::set<std::tuple<int, int, unsigned>> keys;
    for (const auto& r : results)
    {
        const auto& row = r.row;
        keys.insert({static_cast<int>(row.engine), static_cast<int>(row.split), row.bits.value_or(0)});
        EXPECT_EQ(row.bits.has_value(), row.engine == Engine::vq);
        const bool whole = row.split == SplitKind::whole;
        for (const auto* c : {&row.idr, &row.dcf_random, &row.dcf_skilled})
            EXPECT_EQ(c->alpha_0.has_value(), !whole);
        EXPECT_GE(row.idr.alpha_opt, row.idr.alpha_1);
        EXPECT_LE(row.dcf_random.alpha_opt, row.dcf_random.alpha_1);
        EXPECT_LE(row.dcf_skilled.alpha_opt, row.dcf_skilled.alpha_1);
        if (!whole)
        {
            EXPECT_LE(row.dcf_random.alpha_opt, *row.dcf_random.alpha_0);
            EXPECT_LE(row.dcf_skilled.alpha_opt, *row.dcf_skilled.alpha_0);
            EXPECT_GE(row.idr.alpha_opt, *row.idr.alpha_0);
        }
        else
        {
            EXPECT_EQ(row.alpha_random, 1.0);
            EXPECT_EQ(row.alpha_idr, 1.0);
        }
        EXPECT_FALSE(r.det_random.empty());
        EXPECT_FALSE(r.det_skilled.empty());
    }
    EXPECT_EQ(keys.size(), 15u);
}

TEST(RunGrid, LadderRowsMatchDirectEnrollment)
{
    auto s = small_settings();
    s.engines = {Engine::vq};
    s.splits = {SplitKind::test3};
    s.bits = {3};
    const auto grid = run_grid(corpus(), s);
    ASSERT_EQ(grid.size(), 1u);
    const auto split = split_protocol(corpus(), Protocol{5});
    const auto spec = make_split(SplitKind::test3);
    std::vector<UserModel> models;
    for (const auto& u : split.users)
        models.push_back({u.user_id, vq_enroll(u.train, spec, 3, s.lbg)});
    EXPECT_EQ(grid[0].table, score_configuration(split, models, spec, {}, 1).table);
}

TEST(RunGrid, HeldOutModeLabelsRows)
{
    auto s = small_settings();
    s.engines = {Engine::dtw};
    s.splits = {SplitKind::test1};
    s.alpha_mode = AlphaMode::held_out;
    const auto r = run_grid(corpus(), s);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].row.alpha_mode, AlphaMode::held_out);
}

TEST(RunGrid, DeterministicAcrossWorkers)
{
    auto s = small_settings();
    s.splits = {SplitKind::test4, SplitKind::whole};
    s.workers = 1;
    const auto a = run_grid(corpus(), s);
    s.workers = 3;
    const auto b = run_grid(corpus(), s);
    ASSERT_EQ(a.size(), b.size());
    std::vector<ReportRow> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        ra.push_back(a[i].row);
        rb.push_back(b[i].row);
    }
    EXPECT_EQ(report_document({}, ra).dump(), report_document({}, rb).dump());
}

TEST(RunGrid, InvalidSettings)
{
    auto s = small_settings();
    s.grid_step = 0.0;
    EXPECT_THROW(run_grid(corpus(), s), Error);
    s = small_settings();
    s.engines = {Engine::vq};
    s.bits = {};
    EXPECT_THROW(run_grid(corpus(), s), Error);
    s = small_settings();
    s.n_train = {7};
    EXPECT_THROW(run_grid(corpus(), s), Error);
}

TEST(ModelIo, RoundTripIsExact)
{
    const auto split = split_protocol(corpus(), Protocol{5});
    for (auto k : {SplitKind::test1, SplitKind::whole})
    {
        const auto spec = make_split(k);
        const UserModel vq{"u", vq_enroll(split.users[0].train, spec, 3, {})};
        const UserModel dt{"u", dtw_enroll(split.users[0].train, spec)};
        EXPECT_EQ(user_model_from_json(nlohmann::json::parse(to_json(vq).dump())), vq);
        EXPECT_EQ(user_model_from_json(nlohmann::json::parse(to_json(dt).dump())), dt);
    }
    EXPECT_THROW(user_model_from_json(nlohmann::json{{"user_id", "u"}}), Error);
    auto broken = to_json(UserModel{"u", vq_enroll(split.users[0].train, make_split(SplitKind::whole), 1, {})});
    broken["cb1"]["bits"] = 4;
    EXPECT_THROW(user_model_from_json(broken), Error);
}

TEST(Report, RowJsonRoundTrip)
{
    const auto results = run_grid(corpus(), small_settings());
    for (const auto& r : results)
    {
        const auto j = to_json(r.row);
        for (const char* key : {"test_name", "engine", "bits", "n_train", "alpha_mode", "p_true", "c_miss", "c_fa",
                                "grid_step", "delta_half_window", "alpha_opt", "idr", "dcf_random", "dcf_skilled"})
            EXPECT_TRUE(j.contains(key)) << key;
        for (const char* metric : {"idr", "dcf_random", "dcf_skilled"})
            for (const char* cell : {"alpha_opt", "alpha_0", "alpha_1"})
                EXPECT_TRUE(j[metric].contains(cell));
        EXPECT_EQ(to_json(report_row_from_json(j)), j);
    }
}

TEST(Report, FileNamingNeverOverwrites)
{
    TempDir tmp;
    const auto rows = std::vector<ReportRow>{run_grid(corpus(), small_settings()).front().row};
    const auto doc = report_document({{"k", 1}}, rows);
    const auto p1 = write_report_file(tmp.path(), doc);
    const auto p2 = write_report_file(tmp.path(), doc);
    EXPECT_EQ(p1, p2);
    EXPECT_EQ(p1.filename().string().rfind("report_", 0), 0u);
    auto other = doc;
    other["rows"][0]["idr"]["alpha_1"] = -1.0;
    const auto p3 = write_report_file(tmp.path(), other);
    EXPECT_NE(p3, p1);
    EXPECT_NE(p3.filename().string().find("-1.json"), std::string::npos);
    const auto p4 = write_report_file(tmp.path(), report_document({{"k", 2}}, rows));
    EXPECT_NE(p4.stem().string().substr(0, 23), p1.stem().string().substr(0, 23));
}

TEST(Report, CollectSkipsCorruptFiles)
{
    TempDir tmp;
    const auto results = run_grid(corpus(), small_settings());
    std::vector<ReportRow> rows;
    for (const auto& r : results)
        rows.push_back(r.row);
    write_report_file(tmp.path(), report_document({}, rows));
    std::ofstream(tmp.path() / "junk.json") << "{ not json";
    std::ofstream(tmp.path() / "other.json") << R"({"schema": "something-else"})";
    std::vector<std::string> problems;
    auto got = collect_reports(tmp.path(), problems);
    EXPECT_EQ(got.size(), rows.size());
    EXPECT_EQ(problems.size(), 2u);

    std::vector<std::string> none;
    EXPECT_TRUE(collect_reports(tmp.path() / "missing", none).empty());
    EXPECT_EQ(none.size(), 1u);
}

TEST(Report, SortedCsvAndMarkdown)
{
    auto s = small_settings();
    s.splits = {SplitKind::test1};
    s.bits = {3, 2};
    auto results = run_grid(corpus(), s);
    std::vector<ReportRow> rows;
    for (auto it = results.rbegin(); it != results.rend(); ++it)
        rows.push_back(it->row);
    sort_rows(rows);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].engine, Engine::dtw);
    EXPECT_EQ(*rows[1].bits, 2u);
    EXPECT_EQ(*rows[2].bits, 3u);

    const auto csv = rows_to_csv(rows);
    std::istringstream is(csv);
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header.rfind("engine,n_train,test_name,bits,alpha_mode,idr_opt", 0), 0u);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line.rfind("dtw,5,TEST1,,oracle,", 0), 0u);
    std::size_t n = 1;
    while (std::getline(is, line))
        ++n;
    EXPECT_EQ(n, 3u);

    const auto md = rows_to_markdown(rows);
    EXPECT_NE(md.find("**"), std::string::npos);
    EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 5);
}
