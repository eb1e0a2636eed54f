// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_DTW_HPP_
#define SIGSPLIT_DTW_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "score.hpp"
#include "signal.hpp"

namespace sigsplit
{

enum class LocalDistance
{
    squared_euclidean,
    euclidean,
};

inline constexpr std::string_view to_string(LocalDistance d) noexcept
{
    return d == LocalDistance::squared_euclidean ? "squared_euclidean" : "euclidean";
}

struct DtwConfig
{
    LocalDistance local_distance = LocalDistance::squared_euclidean;
    bool path_normalize = true; ///< divide the path cost by La + Lb
};

namespace detail
{

inline double local_cost(std::span<const double> a, std::span<const double> b, LocalDistance kind) noexcept
{
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
    {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return kind == LocalDistance::euclidean ? std::sqrt(acc) : acc;
}

} // namespace detail

/// Optimal warping cost between two feature sequences.
///
/// C(i,j) = d(a_i, b_j) + min(C(i-1,j), C(i,j-1), C(i-1,j-1)), C(0,0) = d(a_0, b_0),
/// no band or slope constraint. Memory is two rows of the shorter sequence.
inline double dtw(const FeatureMatrix& a, const FeatureMatrix& b, const DtwConfig& cfg = {})
{
    if (a.channels() != b.channels())
    {
        throw Error(Module::dtw_engine, "dtw: channel mismatch [" + join_channels(a.channels()) + "] vs [" +
                                            join_channels(b.channels()) + "]");
    }
    if (a.empty() || b.empty())
        throw Error(Module::dtw_engine, "dtw: empty input sequence");

    // Outer loop over the longer sequence; the recurrence is symmetric so the
    // transposed table yields the same value.
    const FeatureMatrix& outer = a.rows() >= b.rows() ? a : b;
    const FeatureMatrix& inner = a.rows() >= b.rows() ? b : a;
    const std::size_t n = outer.rows();
    const std::size_t m = inner.rows();
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> prev(m, inf);
    std::vector<double> cur(m, inf);
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto oi = outer.row(i);
        for (std::size_t j = 0; j < m; ++j)
        {
            const double d = detail::local_cost(oi, inner.row(j), cfg.local_distance);
            double best;
            if (i == 0 && j == 0)
                best = 0.0;
            else
            {
                best = inf;
                if (i > 0)
                    best = std::min(best, prev[j]);
                if (j > 0)
                    best = std::min(best, cur[j - 1]);
                if (i > 0 && j > 0)
                    best = std::min(best, prev[j - 1]);
            }
            cur[j] = d + best;
        }
        std::swap(prev, cur);
    }
    const double total = prev[m - 1];
    if (cfg.path_normalize)
        return total / static_cast<double>(n + m);
    return total;
}

/// Template model: projected enrollment signatures kept verbatim.
struct DtwModel
{
    SplitKind split = SplitKind::whole;
    std::vector<FeatureMatrix> set1;
    std::vector<FeatureMatrix> set2; ///< empty for WHOLE

    friend bool operator==(const DtwModel&, const DtwModel&) = default;
};

inline DtwModel dtw_enroll(std::span<const FeatureMatrix> train, const SplitSpec& spec)
{
    if (train.empty())
        throw Error(Module::dtw_engine, "dtw_enroll: at least one training signature is required");
    DtwModel model{spec.name, {}, {}};
    for (const auto& sig : train)
    {
        auto [s1, s2] = apply_split(sig, spec);
        model.set1.push_back(std::move(s1));
        if (spec.has_set2())
            model.set2.push_back(std::move(s2));
    }
    return model;
}

/// Minimum distance over the references, per set.
inline ScorePair dtw_score(const DtwModel& model, const FeatureMatrix& test, const SplitSpec& spec,
                           const DtwConfig& cfg = {})
{
    if (model.split != spec.name)
    {
        throw Error(Module::dtw_engine, "dtw_score: model enrolled for " + std::string(to_string(model.split)) +
                                            ", scored with " + std::string(to_string(spec.name)));
    }
    if (model.set1.empty())
        throw Error(Module::dtw_engine, "dtw_score: model holds no references");
    auto [t1, t2] = apply_split(test, spec);
    auto best_of = [&](const std::vector<FeatureMatrix>& refs, const FeatureMatrix& probe) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : refs)
            best = std::min(best, dtw(r, probe, cfg));
        return best;
    };
    ScorePair out{best_of(model.set1, t1), std::nullopt};
    if (spec.has_set2())
    {
        if (model.set2.empty())
            throw Error(Module::dtw_engine, "dtw_score: model holds no second-set references");
        out.d2 = best_of(model.set2, t2);
    }
    return out;
}

} // namespace sigsplit
#endif // SIGSPLIT_DTW_HPP_
