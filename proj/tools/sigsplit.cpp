// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

// sigsplit: online signature verification with split feature vectors.
//
//   sigsplit generate --users 20 --seed 7 --out corpus/
//   sigsplit run      --dataset corpus/ --out reports/
//   sigsplit report   --dir reports/
//
// Every subcommand also accepts --config FILE with `key=value` lines naming
// long options of that subcommand; options given on the command line win.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"

#include <sigsplit/sigsplit.hpp>

namespace fs = std::filesystem;
using namespace sigsplit;

namespace
{

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

/// Raised for bad flag values that CLI11 cannot check on its own.
struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw Error(Module::cli, "cannot read '" + p.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& p, const std::string& body)
{
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw Error(Module::cli, "cannot write '" + p.string() + "'");
    out << body;
}

/// Expands `--config FILE` into `--key=value` arguments placed before the
/// user's own arguments, skipping keys the user already passed.
std::vector<std::string> expand_config(const std::vector<std::string>& args)
{
    std::vector<std::string> out;
    std::string config;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i)
    {
        if (args[i] == "--config" && i + 1 < args.size())
        {
            config = args[++i];
            continue;
        }
        if (args[i].rfind("--config=", 0) == 0)
        {
            config = args[i].substr(9);
            continue;
        }
        rest.push_back(args[i]);
    }
    if (config.empty())
        return args;
    if (rest.size() < 2)
        throw UsageError("--config needs a subcommand");

    auto given = [&](const std::string& key) {
        const std::string flag = "--" + key;
        return std::any_of(rest.begin(), rest.end(),
                           [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    };
    std::vector<std::string> injected;
    std::istringstream in(read_file(config));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(config + ":" + std::to_string(lineno) + ": expected key=value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (!given(key))
            injected.push_back("--" + key + "=" + value);
    }
    out.push_back(rest[0]);
    out.push_back(rest[1]);
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), rest.begin() + 2, rest.end());
    return out;
}

// ---------------------------------------------------------------------------
// Shared option groups

struct PipelineOptions
{
    std::string dataset;
    std::string manifest;
    std::size_t delta_m = 2;
    std::string local_distance = "squared_euclidean";
    bool no_path_normalize = false;
    double lbg_epsilon = 0.01;
    std::size_t lbg_max_iters = 100;
    double lbg_threshold = 1e-5;
    std::uint64_t seed = 0;
    double p_true = 0.5;
    double c_miss = 1.0;
    double c_fa = 1.0;
    double grid_step = 0.01;

    void add_dataset(CLI::App* cmd)
    {
        cmd->add_option("--dataset", dataset, "dataset root directory")->required();
        cmd->add_option("--manifest", manifest, "manifest path (default: <dataset>/manifest.txt)");
        cmd->add_option("--delta-m", delta_m, "delta half-window M (window 2M+1)")->check(CLI::Range(1, 50));
    }

    void add_matching(CLI::App* cmd)
    {
        cmd->add_option("--local-distance", local_distance, "DTW local distance")
            ->check(CLI::IsMember({"squared_euclidean", "euclidean"}));
        cmd->add_flag("--no-path-normalize", no_path_normalize, "do not divide DTW cost by La+Lb");
        cmd->add_option("--lbg-epsilon", lbg_epsilon, "LBG split perturbation")->check(CLI::PositiveNumber);
        cmd->add_option("--lbg-max-iters", lbg_max_iters, "k-means iterations per codebook size")
            ->check(CLI::Range(1, 100000));
        cmd->add_option("--lbg-threshold", lbg_threshold, "relative improvement stopping threshold")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--seed", seed, "LBG tie-breaking seed");
    }

    void add_costs(CLI::App* cmd)
    {
        cmd->add_option("--p-true", p_true, "target prior in the DCF")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--c-miss", c_miss, "cost of a miss")->check(CLI::PositiveNumber);
        cmd->add_option("--c-fa", c_fa, "cost of a false acceptance")->check(CLI::PositiveNumber);
        cmd->add_option("--grid-step", grid_step, "alpha grid step")->check(CLI::Range(1e-6, 0.5));
    }

    fs::path manifest_path() const { return manifest.empty() ? fs::path(dataset) / "manifest.txt" : fs::path(manifest); }

    DeltaConfig delta() const { return DeltaConfig{delta_m}; }

    DtwConfig dtw() const
    {
        return DtwConfig{local_distance == "euclidean" ? LocalDistance::euclidean : LocalDistance::squared_euclidean,
                         !no_path_normalize};
    }

    LbgConfig lbg() const { return LbgConfig{lbg_epsilon, lbg_max_iters, lbg_threshold, seed}; }

    CostConfig cost() const
    {
        CostConfig c{c_miss, c_fa, p_true};
        if (!(p_true > 0.0 && p_true < 1.0))
            throw UsageError("--p-true must lie strictly between 0 and 1");
        return c;
    }

    FeatureDataset load_features() const
    {
        const auto ds = load_dataset(dataset, manifest_path(), delta().window());
        return extract_all(ds, delta());
    }

    nlohmann::json echo() const
    {
        return {{"delta_half_window", delta_m},
                {"dtw_local_distance", local_distance},
                {"dtw_path_normalize", !no_path_normalize},
                {"lbg_epsilon", lbg_epsilon},
                {"lbg_max_iters", lbg_max_iters},
                {"lbg_threshold", lbg_threshold},
                {"seed", seed},
                {"p_true", p_true},
                {"c_miss", c_miss},
                {"c_fa", c_fa},
                {"grid_step", grid_step}};
    }
};

SplitKind parse_split_or_throw(const std::string& s)
{
    auto k = parse_split_kind(s);
    if (!k)
        throw UsageError("unknown split '" + s + "' (TEST1..TEST4, WHOLE)");
    return *k;
}

Engine parse_engine_or_throw(const std::string& s)
{
    auto e = parse_engine(s);
    if (!e)
        throw UsageError("unknown engine '" + s + "' (vq, dtw)");
    return *e;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateCmd
{
    SynthConfig cfg;
    std::size_t delta_m = 2;
    std::string out;

    void attach(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("generate", "write a synthetic SVC-format corpus and manifest");
        cmd->add_option("--users", cfg.n_users, "number of users")->check(CLI::Range(1, 100000));
        cmd->add_option("--genuine", cfg.genuine_per_user, "genuine signatures per user")->check(CLI::Range(1, 10000));
        cmd->add_option("--skilled", cfg.skilled_per_user, "skilled forgeries per user")->check(CLI::Range(0, 10000));
        cmd->add_option("--min-len", cfg.min_length, "minimum signature length");
        cmd->add_option("--max-len", cfg.max_length, "maximum signature length");
        cmd->add_option("--sigma-genuine", cfg.sigma_genuine, "genuine jitter (fraction of channel spread)");
        cmd->add_option("--sigma-forgery", cfg.sigma_forgery, "forgery jitter (fraction of channel spread)");
        cmd->add_option("--warp-genuine", cfg.warp_genuine, "genuine time-warp strength");
        cmd->add_option("--warp-forgery", cfg.warp_forgery, "forgery time-warp strength");
        cmd->add_option("--shape-variation", cfg.shape_variation, "per-signature wave jitter");
        cmd->add_option("--seed", cfg.rng_seed, "generator seed");
        cmd->add_option("--delta-m", delta_m, "delta half-window used by the separability check")
            ->check(CLI::Range(1, 50));
        cmd->add_option("--out", out, "output directory")->required();
        cmd->callback([this] { run(); });
    }

    void run()
    {
        const DeltaConfig delta{delta_m};
        auto corpus = generate(cfg, delta);
        write_corpus(corpus, cfg, out);
        std::cout << "wrote " << corpus.manifest.size() << " signatures for " << corpus.dataset.size()
                  << " users to " << out << " (seed " << corpus.seed_used << ", separability "
                  << corpus.check.genuine_mean << " < " << corpus.check.skilled_mean << ")\n";
    }
};

// ---------------------------------------------------------------------------
// extract

struct ExtractCmd
{
    std::string input;
    std::string out;
    std::size_t delta_m = 2;

    void attach(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("extract", "write the 15-channel normalized feature matrix of one signature");
        cmd->add_option("--input", input, "SVC (.svc/.txt) or CSV (.csv) signature file")->required();
        cmd->add_option("--delta-m", delta_m, "delta half-window M")->check(CLI::Range(1, 50));
        cmd->add_option("--out", out, "output CSV (default: stdout)");
        cmd->callback([this] { run(); });
    }

    void run()
    {
        auto sig = parse_signature_file(input);
        sig.user_id = fs::path(input).stem().string();
        const auto m = extract(sig, DeltaConfig{delta_m});
        std::ostringstream os;
        os.precision(17);
        os << join_channels(m.channels()) << '\n';
        for (std::size_t i = 0; i < m.rows(); ++i)
        {
            for (std::size_t j = 0; j < m.cols(); ++j)
                os << (j ? "," : "") << m(i, j);
            os << '\n';
        }
        if (out.empty())
            std::cout << os.str();
        else
            write_file(out, os.str());
    }
};

// ---------------------------------------------------------------------------
// train / evaluate

constexpr const char* kModelSchema = "sigsplit-models/1";

struct TrainCmd
{
    PipelineOptions opt;
    std::string engine = "dtw";
    unsigned bits = 6;
    std::size_t n_train = 5;
    std::string split = "WHOLE";
    std::string out;

    void attach(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("train", "enroll every user and write the models");
        opt.add_dataset(cmd);
        opt.add_matching(cmd);
        cmd->add_option("--engine", engine, "vq or dtw")->check(CLI::IsMember({"vq", "dtw"}));
        cmd->add_option("--bits", bits, "codebook bits (vq)")->check(CLI::Range(0, 12));
        cmd->add_option("--n-train", n_train, "enrollment signatures per user")->check(CLI::Range(1, 1000));
        cmd->add_option("--split", split, "TEST1..TEST4 or WHOLE");
        cmd->add_option("--out", out, "model file (JSON)")->required();
        cmd->callback([this] { run(); });
    }

    void run()
    {
        const auto kind = parse_split_or_throw(split);
        const auto eng = parse_engine_or_throw(engine);
        const auto features = opt.load_features();
        const auto protocol = split_protocol(features, Protocol{n_train});
        const auto spec = make_split(kind);
        MatcherConfig mc{eng, bits, opt.lbg(), opt.dtw()};
        nlohmann::json doc;
        doc["schema"] = kModelSchema;
        doc["engine"] = engine;
        doc["split"] = split;
        doc["bits"] = eng == Engine::vq ? nlohmann::json(bits) : nlohmann::json(nullptr);
        doc["n_train"] = n_train;
        doc["config"] = opt.echo();
        auto models = nlohmann::json::array();
        for (const auto& u : protocol.users)
        {
            try
            {
                models.push_back(to_json(enroll(u.user_id, u.train, spec, mc)));
            }
            catch (const Error& e)
            {
                throw Error(e.module(), "user '" + u.user_id + "': " + e.message());
            }
        }
        doc["models"] = std::move(models);
        write_file(out, doc.dump() + "\n");
        std::cout << "wrote " << protocol.users.size() << " " << engine << " models to " << out << '\n';
    }
};

struct EvaluateCmd
{
    PipelineOptions opt;
    std::string models_path;
    std::string out;
    std::size_t workers = 1;

    void attach(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("evaluate", "score all test trials against trained models");
        opt.add_dataset(cmd);
        cmd->add_option("--models", models_path, "model file written by train")->required();
        cmd->add_option("--local-distance", opt.local_distance, "DTW local distance")
            ->check(CLI::IsMember({"squared_euclidean", "euclidean"}));
        cmd->add_flag("--no-path-normalize", opt.no_path_normalize, "do not divide DTW cost by La+Lb");
        cmd->add_option("--workers", workers, "scoring threads")->check(CLI::Range(1, 1024));
        cmd->add_option("--out", out, "score table CSV (claimed,true,kind,d1,d2)")->required();
        cmd->callback([this] { run(); });
    }

    void run()
    {
        nlohmann::json doc;
        try
        {
            doc = nlohmann::json::parse(read_file(models_path));
        }
        catch (const nlohmann::json::exception& e)
        {
            throw Error(Module::cli, models_path + ": " + e.what());
        }
        if (doc.value("schema", "") != kModelSchema)
            throw Error(Module::cli, models_path + ": not a sigsplit model file");
        const auto kind = parse_split_or_throw(doc.at("split").get<std::string>());
        const auto n_train = doc.at("n_train").get<std::size_t>();
        std::vector<UserModel> models;
        for (const auto& m : doc.at("models"))
            models.push_back(user_model_from_json(m));

        const auto features = opt.load_features();
        const auto protocol = split_protocol(features, Protocol{n_train});
        if (protocol.users.size() != models.size())
            throw Error(Module::cli, "model file holds " + std::to_string(models.size()) + " users, dataset has " +
                                         std::to_string(protocol.users.size()));
        for (std::size_t i = 0; i < models.size(); ++i)
            if (models[i].user_id != protocol.users[i].user_id)
                throw Error(Module::cli, "model user '" + models[i].user_id + "' does not match dataset user '" +
                                             protocol.users[i].user_id + "'");
        const auto scores = score_configuration(protocol, models, make_split(kind), opt.dtw(), workers);
        std::ostringstream os;
        write_score_table(os, scores.table);
        write_file(out, os.str());
        std::cout << "wrote " << scores.table.trials.size() << " trials to " << out << '\n';
    }
};

// ---------------------------------------------------------------------------
// sweep

struct SweepCmd
{
    PipelineOptions opt;
    std::string scores;
    std::string out;
    std::string det_dir;

    void attach(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("sweep", "tune the fusion weight on a score table");
        cmd->add_option("--scores", scores, "score table CSV")->required();
        opt.add_costs(cmd);
        cmd->add_option("--out", out, "JSON result (default: stdout)");
        cmd->add_option("--det-dir", det_dir, "also write DET points at the tuned alphas");
        cmd->callback([this] { run(); });
    }

    void run()
    {
        std::ifstream in(scores, std::ios::binary);
        if (!in)
            throw Error(Module::cli, "cannot read '" + scores + "'");
        const auto table = read_score_table(in);
        const auto cost = opt.cost();
        nlohmann::json doc{{"p_true", cost.p_true}, {"c_miss", cost.c_miss}, {"c_fa", cost.c_fa},
                           {"grid_step", opt.grid_step}, {"units", "percent"}};
        for (auto kind : {TrialKind::random_forgery, TrialKind::skilled_forgery})
        {
            const auto sw = sweep_alpha(table, cost, opt.grid_step, kind);
            auto curve = nlohmann::json::array();
            for (const auto& p : sw.per_alpha)
                curve.push_back({{"alpha", p.alpha}, {"min_dcf", 100.0 * p.min_dcf}, {"threshold", p.threshold}});
            doc[std::string(to_string(kind))] = {
                {"alpha_opt", sw.alpha_opt}, {"min_dcf", 100.0 * sw.min_dcf_at_opt}, {"per_alpha", curve}};
            if (!det_dir.empty())
            {
                auto [g, i] = fused_scores(table, kind, sw.alpha_opt);
                std::ostringstream os;
                write_det_csv(os, det_points(g, i));
                write_file(fs::path(det_dir) / ("det_" + std::string(to_string(kind)) + ".csv"), os.str());
            }
        }
        if (out.empty())
            std::cout << doc.dump(2) << '\n';
        else
            write_file(out, doc.dump(2) + "\n");
    }
};

// ---------------------------------------------------------------------------
// run

struct RunCmd
{
    PipelineOptions opt;
    std::vector<std::string> engines{"vq", "dtw"};
    std::vector<unsigned> bits{4, 5, 6, 7, 8};
    std::vector<std::size_t> n_train{5};
    std::vector<std::string> splits{"TEST1", "TEST2", "TEST3", "TEST4", "WHOLE"};
    std::string alpha_mode = "oracle";
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::string out;
    bool quiet = false;

    void attach(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("run", "full protocol grid: enroll, score, tune alpha, report");
        opt.add_dataset(cmd);
        opt.add_matching(cmd);
        opt.add_costs(cmd);
        cmd->add_option("--engine", engines, "engines (comma-separated: vq,dtw)")
            ->delimiter(',')
            ->check(CLI::IsMember({"vq", "dtw"}));
        cmd->add_option("--bits", bits, "codebook sizes for vq (comma-separated)")
            ->delimiter(',')
            ->check(CLI::Range(0, 12));
        cmd->add_option("--n-train", n_train, "enrollment counts (comma-separated)")
            ->delimiter(',')
            ->check(CLI::Range(1, 1000));
        cmd->add_option("--splits", splits, "splits (comma-separated: TEST1..TEST4,WHOLE)")->delimiter(',');
        cmd->add_option("--alpha-mode", alpha_mode, "oracle (tune on evaluation trials) or held_out")
            ->check(CLI::IsMember({"oracle", "held_out"}));
        cmd->add_option("--workers", workers, "threads for enrollment and scoring")->check(CLI::Range(1, 1024));
        cmd->add_option("--out", out, "report directory")->required();
        cmd->add_flag("--quiet", quiet, "no progress output");
        cmd->callback([this] { run(); });
    }

    void run()
    {
        RunSettings s;
        s.engines.clear();
        for (const auto& e : engines)
            s.engines.push_back(parse_engine_or_throw(e));
        s.bits = bits;
        s.n_train = n_train;
        s.splits.clear();
        for (const auto& k : splits)
            s.splits.push_back(parse_split_or_throw(k));
        s.delta = opt.delta();
        s.lbg = opt.lbg();
        s.dtw = opt.dtw();
        s.cost = opt.cost();
        s.grid_step = opt.grid_step;
        s.alpha_mode = alpha_mode == "held_out" ? AlphaMode::held_out : AlphaMode::oracle;
        s.workers = workers;

        const auto features = opt.load_features();
        auto progress = [this](const std::string& label) {
            if (!quiet)
                std::cerr << "done: " << label << '\n';
        };
        const auto results = run_grid(features, s, progress);

        nlohmann::json config = opt.echo();
        config["dataset"] = fs::path(opt.dataset).lexically_normal().generic_string();
        config["engines"] = engines;
        config["bits"] = bits;
        config["n_train"] = n_train;
        config["splits"] = splits;
        config["alpha_mode"] = alpha_mode;
        config["users"] = features.size();

        std::vector<ReportRow> rows;
        for (const auto& r : results)
            rows.push_back(r.row);
        const auto doc = report_document(config, rows);
        const auto path = write_report_file(out, doc);
        const auto stem = path.stem().string();
        for (const auto& r : results)
        {
            std::string tag = std::string(to_string(r.row.engine)) + std::to_string(r.row.n_train) + "_" +
                              std::string(to_string(r.row.split));
            if (r.row.bits)
                tag += "_b" + std::to_string(*r.row.bits);
            const fs::path det = fs::path(out) / (stem + "_det");
            std::ostringstream rnd, skl;
            write_det_csv(rnd, r.det_random);
            write_det_csv(skl, r.det_skilled);
            write_file(det / (tag + "_random.csv"), rnd.str());
            write_file(det / (tag + "_skilled.csv"), skl.str());
        }
        std::cout << "wrote " << rows.size() << " report rows to " << path.string() << '\n';
    }
};

// ---------------------------------------------------------------------------
// report

struct ReportCmd
{
    std::string dir;
    std::string out;

    void attach(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("report", "merge report files into summary.csv and summary.md");
        cmd->add_option("--dir", dir, "directory holding report_*.json")->required();
        cmd->add_option("--out", out, "output directory (default: --dir)");
        cmd->callback([this] { run(); });
    }

    void run()
    {
        std::vector<std::string> problems;
        auto rows = collect_reports(dir, problems);
        for (const auto& p : problems)
            std::cerr << "skipped " << p << '\n';
        if (rows.empty())
            throw Error(Module::cli, "no valid report rows in '" + dir + "'");
        sort_rows(rows);
        const fs::path target = out.empty() ? fs::path(dir) : fs::path(out);
        write_file(target / "summary.csv", rows_to_csv(rows));
        write_file(target / "summary.md", rows_to_markdown(rows));
        std::cout << "merged " << rows.size() << " rows into " << (target / "summary.csv").string() << '\n';
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Online signature verification with split feature vectors"};
    app.require_subcommand(1);
    GenerateCmd generate_cmd;
    ExtractCmd extract_cmd;
    TrainCmd train_cmd;
    EvaluateCmd evaluate_cmd;
    SweepCmd sweep_cmd;
    RunCmd run_cmd;
    ReportCmd report_cmd;
    generate_cmd.attach(app);
    extract_cmd.attach(app);
    train_cmd.attach(app);
    evaluate_cmd.attach(app);
    sweep_cmd.attach(app);
    run_cmd.attach(app);
    report_cmd.attach(app);

    try
    {
        std::vector<std::string> args(argv, argv + argc);
        args = expand_config(args);
        std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
        app.parse(reversed);
        return 0;
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return kExitUsage;
    }
    catch (const UsageError& e)
    {
        std::cerr << "[cli] " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const Error& e)
    {
        std::cerr << e.what() << '\n';
        return kExitData;
    }
    catch (const std::exception& e)
    {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}
