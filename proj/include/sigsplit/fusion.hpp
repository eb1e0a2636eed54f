// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_FUSION_HPP_
#define SIGSPLIT_FUSION_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "model.hpp"
#include "score.hpp"
#include "signal.hpp"

namespace sigsplit
{

// ---------------------------------------------------------------------------
// Trials

enum class TrialKind
{
    genuine,
    random_forgery,
    skilled_forgery,
};

inline constexpr std::string_view to_string(TrialKind k) noexcept
{
    switch (k)
    {
    case TrialKind::genuine: return "genuine";
    case TrialKind::random_forgery: return "random";
    case TrialKind::skilled_forgery: return "skilled";
    }
    return "?";
}

inline std::optional<TrialKind> parse_trial_kind(std::string_view s) noexcept
{
    if (s == "genuine")
        return TrialKind::genuine;
    if (s == "random")
        return TrialKind::random_forgery;
    if (s == "skilled")
        return TrialKind::skilled_forgery;
    return std::nullopt;
}

/// One verification attempt: a signature of true_user claimed as claimed_user.
struct Trial
{
    std::string claimed_user;
    std::string true_user;
    TrialKind kind = TrialKind::genuine;
    ScorePair pair;

    friend bool operator==(const Trial&, const Trial&) = default;
};

struct ScoreTable
{
    std::vector<Trial> trials;

    bool has_set2() const noexcept
    {
        return !trials.empty() && std::all_of(trials.begin(), trials.end(), [](const Trial& t) { return t.pair.d2.has_value(); });
    }

    friend bool operator==(const ScoreTable&, const ScoreTable&) = default;
};

/// Checks the label consistency rules between users and trial kinds.
inline void validate(const Trial& t)
{
    const bool same = t.claimed_user == t.true_user;
    if (t.kind == TrialKind::genuine && !same)
        throw Error(Module::fusion_eval, "genuine trial with claimed '" + t.claimed_user + "' != true '" + t.true_user + "'");
    if (t.kind == TrialKind::random_forgery && same)
        throw Error(Module::fusion_eval, "random-forgery trial claims its own user '" + t.true_user + "'");
    if (!(t.pair.d1 >= 0.0) || (t.pair.d2 && !(*t.pair.d2 >= 0.0)))
        throw Error(Module::fusion_eval, "negative or NaN distance in trial");
}

// ---------------------------------------------------------------------------
// Fusion and costs

/// alpha*d1 + (1-alpha)*d2. Single-set pairs only accept alpha = 1.
inline double fuse(const ScorePair& pair, double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(Module::fusion_eval, "fuse: alpha " + std::to_string(alpha) + " outside [0, 1]");
    if (!pair.d2)
    {
        if (alpha != 1.0)
            throw Error(Module::fusion_eval, "fuse: alpha must be 1 when the second score is absent");
        return pair.d1;
    }
    if (alpha == 1.0)
        return pair.d1;
    if (alpha == 0.0)
        return *pair.d2;
    return alpha * pair.d1 + (1.0 - alpha) * *pair.d2;
}

struct CostConfig
{
    double c_miss = 1.0;
    double c_fa = 1.0;
    double p_true = 0.5;

    void validate() const
    {
        if (!(c_miss > 0.0) || !(c_fa > 0.0))
            throw Error(Module::fusion_eval, "costs must be positive");
        if (!(p_true > 0.0 && p_true < 1.0))
            throw Error(Module::fusion_eval, "p_true must lie in (0, 1)");
    }
};

/// Detection cost c_miss*P_miss*P_true + c_fa*P_fa*(1-P_true), rates as fractions.
inline double dcf(double p_miss, double p_fa, const CostConfig& cost)
{
    return cost.c_miss * p_miss * cost.p_true + cost.c_fa * p_fa * (1.0 - cost.p_true);
}

struct MinDcf
{
    double min_dcf = 0.0;
    double threshold = 0.0; ///< smallest threshold reaching min_dcf; may be -inf
};

/// Operating point of the accept-iff-score<=threshold rule.
struct DetPoint
{
    double threshold = 0.0;
    double p_fa = 0.0;
    double p_miss = 0.0;
};

/// One point per candidate threshold: -inf (reject all) followed by every
/// distinct pooled score in increasing order. Scores are distances.
inline std::vector<DetPoint> det_points(std::span<const double> genuine, std::span<const double> impostor)
{
    if (genuine.empty() || impostor.empty())
        throw Error(Module::fusion_eval, "det_points: genuine and impostor score lists must be non-empty");
    std::vector<double> g(genuine.begin(), genuine.end());
    std::vector<double> im(impostor.begin(), impostor.end());
    std::sort(g.begin(), g.end());
    std::sort(im.begin(), im.end());
    std::vector<double> all;
    all.reserve(g.size() + im.size());
    std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(all));
    all.erase(std::unique(all.begin(), all.end()), all.end());

    const double ng = static_cast<double>(g.size());
    const double ni = static_cast<double>(im.size());
    std::vector<DetPoint> out;
    out.reserve(all.size() + 1);
    out.push_back({-std::numeric_limits<double>::infinity(), 0.0, 1.0});
    std::size_t gi = 0;
    std::size_t ii = 0;
    for (double th : all)
    {
        while (gi < g.size() && g[gi] <= th)
            ++gi;
        while (ii < im.size() && im[ii] <= th)
            ++ii;
        out.push_back({th, static_cast<double>(ii) / ni, static_cast<double>(g.size() - gi) / ng});
    }
    return out;
}

/// Minimum DCF over all candidate thresholds, with the smallest threshold
/// achieving it.
inline MinDcf min_dcf(std::span<const double> genuine, std::span<const double> impostor, const CostConfig& cost)
{
    cost.validate();
    if (genuine.empty() || impostor.empty())
        throw Error(Module::fusion_eval, "min_dcf: genuine and impostor score lists must be non-empty");
    MinDcf best{std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& pt : det_points(genuine, impostor))
    {
        const double v = dcf(pt.p_miss, pt.p_fa, cost);
        if (v < best.min_dcf)
            best = {v, pt.threshold};
    }
    return best;
}

// ---------------------------------------------------------------------------
// Alpha sweep

/// The alpha grid {0, step, 2*step, ..., 1}; 1 is always the last point.
inline std::vector<double> alpha_grid(double step)
{
    if (!(step > 0.0 && step <= 0.5))
        throw Error(Module::fusion_eval, "alpha grid step must lie in (0, 0.5]");
    std::vector<double> grid;
    for (std::size_t i = 0;; ++i)
    {
        const double a = static_cast<double>(i) * step;
        if (a >= 1.0 - 1e-9)
            break;
        grid.push_back(a);
    }
    grid.push_back(1.0);
    return grid;
}

struct AlphaPoint
{
    double alpha = 0.0;
    double min_dcf = 0.0;
    double threshold = 0.0;
};

struct AlphaSweep
{
    double alpha_opt = 1.0;
    double min_dcf_at_opt = 0.0;
    std::vector<AlphaPoint> per_alpha;

    /// The grid point at alpha (exact match), if evaluated.
    std::optional<AlphaPoint> at(double alpha) const
    {
        for (const auto& p : per_alpha)
            if (p.alpha == alpha)
                return p;
        return std::nullopt;
    }
};

/// Fused genuine and impostor score lists at one alpha.
inline std::pair<std::vector<double>, std::vector<double>> fused_scores(const ScoreTable& table, TrialKind impostor,
                                                                        double alpha)
{
    std::vector<double> gen;
    std::vector<double> imp;
    for (const auto& t : table.trials)
    {
        if (t.kind == TrialKind::genuine)
            gen.push_back(fuse(t.pair, alpha));
        else if (t.kind == impostor)
            imp.push_back(fuse(t.pair, alpha));
    }
    return {std::move(gen), std::move(imp)};
}

/// minDCF for every alpha on the grid against one impostor kind; the optimum
/// is the smallest alpha reaching the lowest value. Tables without a second
/// score only evaluate alpha = 1.
inline AlphaSweep sweep_alpha(const ScoreTable& table, const CostConfig& cost, double grid_step, TrialKind impostor)
{
    if (table.trials.empty())
        throw Error(Module::fusion_eval, "sweep_alpha: empty score table");
    if (impostor == TrialKind::genuine)
        throw Error(Module::fusion_eval, "sweep_alpha: impostor kind must be random or skilled");
    const auto grid = table.has_set2() ? alpha_grid(grid_step) : std::vector<double>{1.0};
    if (!table.has_set2())
        alpha_grid(grid_step); // still validate the step

    AlphaSweep out;
    out.min_dcf_at_opt = std::numeric_limits<double>::infinity();
    for (double a : grid)
    {
        auto [gen, imp] = fused_scores(table, impostor, a);
        const auto r = min_dcf(gen, imp, cost);
        out.per_alpha.push_back({a, r.min_dcf, r.threshold});
        if (r.min_dcf < out.min_dcf_at_opt)
        {
            out.min_dcf_at_opt = r.min_dcf;
            out.alpha_opt = a;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Identification

/// Index of the model with the smallest fused score; ties go to the
/// lexicographically smallest user id.
inline std::size_t argmin_user(std::span<const UserModel> models, std::span<const double> fused)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < models.size(); ++i)
    {
        if (fused[i] < fused[best] || (fused[i] == fused[best] && models[i].user_id < models[best].user_id))
            best = i;
    }
    return best;
}

/// 1:N search: returns the user whose model gives the smallest fused distance.
inline std::string identify(std::span<const UserModel> models, const FeatureMatrix& test, const SplitSpec& spec,
                            double alpha, const DtwConfig& dtw_cfg = {})
{
    if (models.empty())
        throw Error(Module::fusion_eval, "identify: no enrolled models");
    const Engine engine = models.front().engine();
    std::vector<double> fused(models.size());
    for (std::size_t i = 0; i < models.size(); ++i)
    {
        if (models[i].engine() != engine)
            throw Error(Module::fusion_eval, "identify: models mix engines");
        fused[i] = fuse(score(models[i], test, spec, dtw_cfg), alpha);
    }
    return models[argmin_user(models, fused)].user_id;
}

/// A test signature with its true identity.
struct LabeledProbe
{
    std::string true_user;
    const FeatureMatrix* features = nullptr;
};

/// Fraction of probes identified as their true user.
inline double idr(std::span<const UserModel> models, std::span<const LabeledProbe> probes, const SplitSpec& spec,
                  double alpha, const DtwConfig& dtw_cfg = {})
{
    if (probes.empty())
        throw Error(Module::fusion_eval, "idr: empty test set");
    std::size_t hits = 0;
    for (const auto& p : probes)
        if (identify(models, *p.features, spec, alpha, dtw_cfg) == p.true_user)
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(probes.size());
}

/// Probe x model score matrix; IDR at any alpha can be read off it without
/// rescoring.
struct IdentificationMatrix
{
    std::vector<std::string> model_users;  ///< column labels
    std::vector<std::string> probe_users;  ///< true user of each row
    std::vector<ScorePair> pairs;          ///< row-major, probes x models

    double idr_at(double alpha) const
    {
        if (probe_users.empty())
            throw Error(Module::fusion_eval, "idr: empty test set");
        const std::size_t k = model_users.size();
        std::size_t hits = 0;
        for (std::size_t r = 0; r < probe_users.size(); ++r)
        {
            std::size_t best = 0;
            double best_v = fuse(pairs[r * k], alpha);
            for (std::size_t c = 1; c < k; ++c)
            {
                const double v = fuse(pairs[r * k + c], alpha);
                if (v < best_v || (v == best_v && model_users[c] < model_users[best]))
                {
                    best = c;
                    best_v = v;
                }
            }
            if (model_users[best] == probe_users[r])
                ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(probe_users.size());
    }
};

// ---------------------------------------------------------------------------
// CSV exchange

namespace detail
{

inline std::string format_double(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line)
    {
        if (c == ',')
        {
            out.push_back(cur);
            cur.clear();
        }
        else if (c != '\r')
        {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, std::size_t line, Module module)
{
    try
    {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    }
    catch (const std::exception&)
    {
        throw Error(module, "line " + std::to_string(line) + ": '" + s + "' is not a number");
    }
}

} // namespace detail

inline constexpr std::string_view kScoreTableHeader = "claimed,true,kind,d1,d2";

/// Writes `claimed,true,kind,d1,d2`; d2 is left empty when absent.
inline void write_score_table(std::ostream& os, const ScoreTable& table)
{
    os << kScoreTableHeader << '\n';
    for (const auto& t : table.trials)
    {
        os << t.claimed_user << ',' << t.true_user << ',' << to_string(t.kind) << ','
           << detail::format_double(t.pair.d1) << ',';
        if (t.pair.d2)
            os << detail::format_double(*t.pair.d2);
        os << '\n';
    }
}

inline ScoreTable read_score_table(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw Error(Module::fusion_eval, "score table: missing header");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != kScoreTableHeader)
        throw Error(Module::fusion_eval, "score table: header must be '" + std::string(kScoreTableHeader) + "'");
    ScoreTable table;
    std::size_t lineno = 1;
    while (std::getline(is, line))
    {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 5)
            throw Error(Module::fusion_eval, "score table line " + std::to_string(lineno) + ": expected 5 fields");
        auto kind = parse_trial_kind(f[2]);
        if (!kind)
            throw Error(Module::fusion_eval, "score table line " + std::to_string(lineno) + ": unknown kind '" + f[2] + "'");
        Trial t{f[0], f[1], *kind, {detail::parse_double(f[3], lineno, Module::fusion_eval), std::nullopt}};
        if (!f[4].empty())
            t.pair.d2 = detail::parse_double(f[4], lineno, Module::fusion_eval);
        validate(t);
        table.trials.push_back(std::move(t));
    }
    return table;
}

/// Two-column `p_fa,p_miss` CSV, sorted by threshold.
inline void write_det_csv(std::ostream& os, std::span<const DetPoint> points)
{
    os << "p_fa,p_miss\n";
    for (const auto& p : points)
        os << detail::format_double(p.p_fa) << ',' << detail::format_double(p.p_miss) << '\n';
}

} // namespace sigsplit
#endif // SIGSPLIT_FUSION_HPP_
