// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_PIPELINE_HPP_
#define SIGSPLIT_PIPELINE_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "dataset_io.hpp"
#include "error.hpp"
#include "features.hpp"
#include "fusion.hpp"
#include "model.hpp"
#include "signal.hpp"

namespace sigsplit
{

/// Where the fusion weight is tuned. `oracle` tunes on the evaluation trials
/// themselves; `held_out` tunes on even-indexed users and reports on the
/// odd-indexed ones.
enum class AlphaMode
{
    oracle,
    held_out,
};

inline constexpr std::string_view to_string(AlphaMode m) noexcept
{
    return m == AlphaMode::oracle ? "oracle" : "held_out";
}

struct RunSettings
{
    std::vector<Engine> engines{Engine::vq, Engine::dtw};
    std::vector<unsigned> bits{4, 5, 6, 7, 8};
    std::vector<std::size_t> n_train{5};
    std::vector<SplitKind> splits{kAllSplits.begin(), kAllSplits.end()};
    DeltaConfig delta;
    LbgConfig lbg;
    DtwConfig dtw;
    CostConfig cost;
    double grid_step = 0.01;
    AlphaMode alpha_mode = AlphaMode::oracle;
    std::size_t workers = 1;
};

/// Metric value at the tuned alpha and at both endpoints. alpha_0 is absent
/// for single-set splits.
struct MetricCells
{
    double alpha_opt = 0.0;
    std::optional<double> alpha_0;
    double alpha_1 = 0.0;
};

/// One table cell group: IDR and minDCF (random, skilled), in percent.
struct ReportRow
{
    SplitKind split = SplitKind::whole;
    Engine engine = Engine::dtw;
    std::optional<unsigned> bits;
    std::size_t n_train = 0;
    AlphaMode alpha_mode = AlphaMode::oracle;
    CostConfig cost;
    double grid_step = 0.01;
    std::size_t delta_half_window = 2;

    double alpha_idr = 1.0;
    double alpha_random = 1.0;
    double alpha_skilled = 1.0;
    MetricCells idr;
    MetricCells dcf_random;
    MetricCells dcf_skilled;
};

/// Raw scores of one configuration: the probe x model matrix over all test
/// genuine signatures plus the skilled trials, flattened into a ScoreTable.
struct ConfigScores
{
    IdentificationMatrix ident;
    ScoreTable table;
};

struct ConfigResult
{
    ReportRow row;
    ScoreTable table;
    std::vector<DetPoint> det_random;  ///< at the tuned random-forgery alpha
    std::vector<DetPoint> det_skilled; ///< at the tuned skilled-forgery alpha
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be
/// written to per-index slots; the first exception is rethrown.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::mutex mu;
    std::size_t next = 0;
    std::exception_ptr failure;
    auto body = [&] {
        while (true)
        {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next >= n || failure)
                    return;
                i = next++;
            }
            try
            {
                fn(i);
            }
            catch (...)
            {
                std::lock_guard lock(mu);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back(body);
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

/// Scores every test genuine signature against every model and every
/// skilled forgery against its target. Trials are ordered by target user:
/// genuine, then random forgeries (pool order), then skilled.
inline ConfigScores score_configuration(const ProtocolSplit<FeatureMatrix>& split, const std::vector<UserModel>& models,
                                        const SplitSpec& spec, const DtwConfig& dtw_cfg, std::size_t workers)
{
    const std::size_t k = models.size();
    if (k != split.users.size())
        throw Error(Module::fusion_eval, "one model per user is required");

    struct ProbeRef
    {
        std::size_t user;
        std::size_t index;
    };
    std::vector<ProbeRef> probes;
    for (std::size_t u = 0; u < split.users.size(); ++u)
        for (std::size_t s = 0; s < split.users[u].test_genuine.size(); ++s)
            probes.push_back({u, s});

    ConfigScores out;
    for (const auto& m : models)
        out.ident.model_users.push_back(m.user_id);
    for (const auto& p : probes)
        out.ident.probe_users.push_back(split.users[p.user].user_id);
    out.ident.pairs.resize(probes.size() * k);

    std::vector<std::vector<ScorePair>> skilled(k);
    const std::size_t jobs = probes.size() + k;
    parallel_for(jobs, workers, [&](std::size_t job) {
        if (job < probes.size())
        {
            const auto& p = probes[job];
            const auto& feat = split.users[p.user].test_genuine[p.index];
            for (std::size_t c = 0; c < k; ++c)
                out.ident.pairs[job * k + c] = score(models[c], feat, spec, dtw_cfg);
        }
        else
        {
            const std::size_t t = job - probes.size();
            for (const auto& f : split.users[t].skilled)
                skilled[t].push_back(score(models[t], f, spec, dtw_cfg));
        }
    });

    for (std::size_t t = 0; t < k; ++t)
    {
        for (std::size_t r = 0; r < probes.size(); ++r)
            if (probes[r].user == t)
                out.table.trials.push_back({models[t].user_id, models[t].user_id, TrialKind::genuine, out.ident.pairs[r * k + t]});
        for (std::size_t r = 0; r < probes.size(); ++r)
            if (probes[r].user != t)
                out.table.trials.push_back({models[t].user_id, out.ident.probe_users[r], TrialKind::random_forgery,
                                            out.ident.pairs[r * k + t]});
        for (const auto& sp : skilled[t])
            out.table.trials.push_back({models[t].user_id, models[t].user_id, TrialKind::skilled_forgery, sp});
    }
    return out;
}

namespace detail
{

inline ScoreTable filter_claimed(const ScoreTable& t, const std::vector<std::string>& users)
{
    ScoreTable out;
    for (const auto& tr : t.trials)
        if (std::find(users.begin(), users.end(), tr.claimed_user) != users.end())
            out.trials.push_back(tr);
    return out;
}

inline IdentificationMatrix filter_probes(const IdentificationMatrix& m, const std::vector<std::string>& users)
{
    IdentificationMatrix out;
    out.model_users = m.model_users;
    const std::size_t k = m.model_users.size();
    for (std::size_t r = 0; r < m.probe_users.size(); ++r)
    {
        if (std::find(users.begin(), users.end(), m.probe_users[r]) == users.end())
            continue;
        out.probe_users.push_back(m.probe_users[r]);
        out.pairs.insert(out.pairs.end(), m.pairs.begin() + static_cast<std::ptrdiff_t>(r * k),
                         m.pairs.begin() + static_cast<std::ptrdiff_t>((r + 1) * k));
    }
    return out;
}

inline double min_dcf_at(const ScoreTable& t, TrialKind impostor, double alpha, const CostConfig& cost)
{
    auto [g, i] = fused_scores(t, impostor, alpha);
    return min_dcf(g, i, cost).min_dcf;
}

/// Highest IDR on the grid; ties go to the smaller alpha.
inline double best_idr_alpha(const IdentificationMatrix& m, const std::vector<double>& grid)
{
    double best_alpha = grid.front();
    double best = -1.0;
    for (double a : grid)
    {
        const double v = m.idr_at(a);
        if (v > best)
        {
            best = v;
            best_alpha = a;
        }
    }
    return best_alpha;
}

} // namespace detail

/// Turns raw scores into a report row: tunes alpha per metric and reads
/// every metric at the tuned alpha and at both endpoints.
inline ConfigResult evaluate_configuration(const ConfigScores& scores, const RunSettings& settings, SplitKind split,
                                           Engine engine, std::optional<unsigned> bits, std::size_t n_train)
{
    ConfigResult res;
    auto& row = res.row;
    row.split = split;
    row.engine = engine;
    row.bits = bits;
    row.n_train = n_train;
    row.alpha_mode = settings.alpha_mode;
    row.cost = settings.cost;
    row.grid_step = settings.grid_step;
    row.delta_half_window = settings.delta.half_window;

    const bool two_sets = scores.table.has_set2();
    const auto grid = two_sets ? alpha_grid(settings.grid_step) : std::vector<double>{1.0};

    const ScoreTable* tune_table = &scores.table;
    const ScoreTable* eval_table = &scores.table;
    const IdentificationMatrix* tune_ident = &scores.ident;
    const IdentificationMatrix* eval_ident = &scores.ident;
    ScoreTable tune_t, eval_t;
    IdentificationMatrix tune_m, eval_m;
    if (settings.alpha_mode == AlphaMode::held_out)
    {
        const auto& users = scores.ident.model_users;
        if (users.size() < 2)
            throw Error(Module::fusion_eval, "held-out alpha needs at least two users");
        std::vector<std::string> even, odd;
        for (std::size_t i = 0; i < users.size(); ++i)
            (i % 2 == 0 ? even : odd).push_back(users[i]);
        tune_t = detail::filter_claimed(scores.table, even);
        eval_t = detail::filter_claimed(scores.table, odd);
        tune_m = detail::filter_probes(scores.ident, even);
        eval_m = detail::filter_probes(scores.ident, odd);
        tune_table = &tune_t;
        eval_table = &eval_t;
        tune_ident = &tune_m;
        eval_ident = &eval_m;
    }

    const auto sweep_r = sweep_alpha(*tune_table, settings.cost, settings.grid_step, TrialKind::random_forgery);
    const auto sweep_s = sweep_alpha(*tune_table, settings.cost, settings.grid_step, TrialKind::skilled_forgery);
    row.alpha_random = sweep_r.alpha_opt;
    row.alpha_skilled = sweep_s.alpha_opt;
    row.alpha_idr = detail::best_idr_alpha(*tune_ident, grid);

    auto cells = [&](auto&& metric, double tuned) {
        MetricCells c;
        c.alpha_opt = metric(tuned);
        c.alpha_1 = metric(1.0);
        if (two_sets)
            c.alpha_0 = metric(0.0);
        return c;
    };
    row.idr = cells([&](double a) { return 100.0 * eval_ident->idr_at(a); }, row.alpha_idr);
    row.dcf_random = cells(
        [&](double a) { return 100.0 * detail::min_dcf_at(*eval_table, TrialKind::random_forgery, a, settings.cost); },
        row.alpha_random);
    row.dcf_skilled = cells(
        [&](double a) { return 100.0 * detail::min_dcf_at(*eval_table, TrialKind::skilled_forgery, a, settings.cost); },
        row.alpha_skilled);

    {
        auto [g, i] = fused_scores(scores.table, TrialKind::random_forgery, row.alpha_random);
        res.det_random = det_points(g, i);
    }
    {
        auto [g, i] = fused_scores(scores.table, TrialKind::skilled_forgery, row.alpha_skilled);
        res.det_skilled = det_points(g, i);
    }
    res.table = scores.table;
    return res;
}

/// Progress callback: receives a short label for each finished configuration.
using ProgressFn = std::function<void(const std::string&)>;

/// Evaluates every (engine, n_train, split[, bits]) configuration on an
/// extracted dataset. VQ codebooks for all bit depths come from one LBG run.
inline std::vector<ConfigResult> run_grid(const FeatureDataset& ds, const RunSettings& settings,
                                          const ProgressFn& progress = {})
{
    settings.cost.validate();
    alpha_grid(settings.grid_step);
    std::vector<ConfigResult> out;
    for (std::size_t n_train : settings.n_train)
    {
        const auto split = split_protocol(ds, Protocol{n_train});
        for (Engine engine : settings.engines)
        {
            for (SplitKind kind : settings.splits)
            {
                const auto spec = make_split(kind);
                const std::size_t k = split.users.size();
                if (engine == Engine::dtw)
                {
                    std::vector<UserModel> models(k);
                    parallel_for(k, settings.workers, [&](std::size_t u) {
                        models[u] = UserModel{split.users[u].user_id, dtw_enroll(split.users[u].train, spec)};
                    });
                    auto scores = score_configuration(split, models, spec, settings.dtw, settings.workers);
                    out.push_back(evaluate_configuration(scores, settings, kind, engine, std::nullopt, n_train));
                    if (progress)
                        progress("dtw n_train=" + std::to_string(n_train) + " " + std::string(to_string(kind)));
                    continue;
                }
                if (settings.bits.empty())
                    throw Error(Module::vq_engine, "vq engine needs at least one codebook size");
                const unsigned max_bits = *std::max_element(settings.bits.begin(), settings.bits.end());
                std::vector<std::vector<VqModel>> ladders(k);
                parallel_for(k, settings.workers, [&](std::size_t u) {
                    try
                    {
                        ladders[u] = vq_enroll_ladder(split.users[u].train, spec, max_bits, settings.lbg);
                    }
                    catch (const Error& e)
                    {
                        throw Error(Module::vq_engine, "user '" + split.users[u].user_id + "': " + e.message());
                    }
                });
                for (unsigned b : settings.bits)
                {
                    std::vector<UserModel> models;
                    for (std::size_t u = 0; u < k; ++u)
                        models.push_back(UserModel{split.users[u].user_id, ladders[u][b]});
                    auto scores = score_configuration(split, models, spec, settings.dtw, settings.workers);
                    out.push_back(evaluate_configuration(scores, settings, kind, engine, b, n_train));
                    if (progress)
                        progress("vq n_train=" + std::to_string(n_train) + " " + std::string(to_string(kind)) +
                                 " bits=" + std::to_string(b));
                }
            }
        }
    }
    return out;
}

} // namespace sigsplit
#endif // SIGSPLIT_PIPELINE_HPP_
