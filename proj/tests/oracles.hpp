// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations. Deliberately naive: no rolling
// buffers, no sorting tricks, no shared helpers with the library.

#ifndef SIGSPLIT_TESTS_ORACLES_HPP_
#define SIGSPLIT_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <sigsplit/sigsplit.hpp>

namespace oracle
{

inline bool close(double got, double want, double rel = 1e-9)
{
    return std::abs(got - want) <= rel * std::max(1.0, std::abs(want));
}

/// Delta regression evaluated term by term, replicating the end samples.
inline std::vector<double> delta(const std::vector<double>& s, int m)
{
    const int n = static_cast<int>(s.size());
    std::vector<double> out(s.size());
    for (int i = 0; i < n; ++i)
    {
        long double num = 0;
        long double den = 0;
        for (int k = -m; k <= m; ++k)
        {
            const int j = std::clamp(i + k, 0, n - 1);
            num += static_cast<long double>(k) * s[j];
            den += static_cast<long double>(k) * k;
        }
        out[i] = static_cast<double>(num / den);
    }
    return out;
}

inline std::vector<double> zscore(const std::vector<double>& c)
{
    long double mean = 0;
    for (double v : c)
        mean += v;
    mean /= c.size();
    long double var = 0;
    for (double v : c)
        var += (v - mean) * (v - mean);
    var /= c.size();
    const long double sd = std::sqrt(var);
    std::vector<double> out(c.size(), 0.0);
    if (sd < 1e-12)
        return out;
    for (std::size_t i = 0; i < c.size(); ++i)
        out[i] = static_cast<double>((c[i] - mean) / sd);
    return out;
}

/// Mean over rows of the smallest squared distance to any centroid.
inline double distortion(const std::vector<std::vector<double>>& centroids, const std::vector<std::vector<double>>& rows)
{
    long double total = 0;
    for (const auto& r : rows)
    {
        long double best = std::numeric_limits<long double>::infinity();
        for (const auto& c : centroids)
        {
            long double d = 0;
            for (std::size_t j = 0; j < r.size(); ++j)
                d += (static_cast<long double>(r[j]) - c[j]) * (static_cast<long double>(r[j]) - c[j]);
            best = std::min(best, d);
        }
        total += best;
    }
    return static_cast<double>(total / rows.size());
}

inline double local(const std::vector<double>& a, const std::vector<double>& b, bool squared)
{
    double s = 0;
    for (std::size_t j = 0; j < a.size(); ++j)
        s += (a[j] - b[j]) * (a[j] - b[j]);
    return squared ? s : std::sqrt(s);
}

/// Minimum cost over every monotone warping path, found by explicit
/// enumeration. Only feasible for short sequences.
inline double dtw_paths(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                        bool squared, bool normalize)
{
    const std::size_t la = a.size();
    const std::size_t lb = b.size();
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
        acc += local(a[i], b[j], squared);
        if (i == la - 1 && j == lb - 1)
        {
            best = std::min(best, acc);
            return;
        }
        if (i + 1 < la)
            walk(i + 1, j, acc);
        if (j + 1 < lb)
            walk(i, j + 1, acc);
        if (i + 1 < la && j + 1 < lb)
            walk(i + 1, j + 1, acc);
    };
    walk(0, 0, 0.0);
    return normalize ? best / static_cast<double>(la + lb) : best;
}

/// Full-table DTW without memory tricks, for sequences too long to enumerate.
inline double dtw_table(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                        bool squared, bool normalize)
{
    const std::size_t la = a.size();
    const std::size_t lb = b.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> g(la + 1, std::vector<double>(lb + 1, inf));
    g[0][0] = 0;
    for (std::size_t i = 1; i <= la; ++i)
        for (std::size_t j = 1; j <= lb; ++j)
            g[i][j] = local(a[i - 1], b[j - 1], squared) + std::min({g[i - 1][j], g[i][j - 1], g[i - 1][j - 1]});
    return normalize ? g[la][lb] / static_cast<double>(la + lb) : g[la][lb];
}

inline std::vector<std::vector<double>> rows_of(const sigsplit::FeatureMatrix& m)
{
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < m.rows(); ++i)
        out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

struct Rates
{
    double p_fa;
    double p_miss;
};

/// Accept iff score <= threshold.
inline Rates rates_at(const std::vector<double>& gen, const std::vector<double>& imp, double th)
{
    double miss = 0;
    double fa = 0;
    for (double g : gen)
        if (!(g <= th))
            ++miss;
    for (double i : imp)
        if (i <= th)
            ++fa;
    return {fa / imp.size(), miss / gen.size()};
}

struct MinDcf
{
    double value;
    double threshold;
};

/// DCF at -inf and at every pooled score; the smallest threshold reaching
/// the minimum wins.
inline MinDcf min_dcf(const std::vector<double>& gen, const std::vector<double>& imp, double c_miss, double c_fa,
                      double p_true)
{
    std::vector<double> cands{-std::numeric_limits<double>::infinity()};
    cands.insert(cands.end(), gen.begin(), gen.end());
    cands.insert(cands.end(), imp.begin(), imp.end());
    MinDcf best{std::numeric_limits<double>::infinity(), 0.0};
    for (double th : cands)
    {
        const auto r = rates_at(gen, imp, th);
        const double v = c_miss * r.p_miss * p_true + c_fa * r.p_fa * (1 - p_true);
        if (v < best.value || (v == best.value && th < best.threshold))
            best = {v, th};
    }
    return best;
}

/// 1:N identification by nearest reference with naive loops over every
/// (probe, user, reference) triple. Ties go to the smaller user id.
inline double nearest_reference_idr(const std::vector<std::string>& users,
                                    const std::vector<std::vector<std::vector<std::vector<double>>>>& refs,
                                    const std::vector<std::string>& probe_users,
                                    const std::vector<std::vector<std::vector<double>>>& probes)
{
    std::size_t hits = 0;
    for (std::size_t p = 0; p < probes.size(); ++p)
    {
        std::string best_user;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < users.size(); ++u)
        {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& r : refs[u])
                d = std::min(d, dtw_table(r, probes[p], true, true));
            if (d < best || (d == best && users[u] < best_user))
            {
                best = d;
                best_user = users[u];
            }
        }
        if (best_user == probe_users[p])
            ++hits;
    }
    return static_cast<double>(hits) / probes.size();
}

/// Random matrix with unnamed-but-distinct channels.
inline sigsplit::FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                             double scale = 1.0)
{
    std::normal_distribution<double> nd(0.0, scale);
    std::vector<sigsplit::FeatureChannel> chans;
    for (std::size_t j = 0; j < cols; ++j)
        chans.push_back({static_cast<sigsplit::Channel>(j % sigsplit::kNumChannels),
                         static_cast<int>(j / sigsplit::kNumChannels)});
    std::vector<double> data(rows * cols);
    for (auto& v : data)
        v = nd(rng);
    return sigsplit::FeatureMatrix(rows, std::move(chans), std::move(data));
}

} // namespace oracle

#endif // SIGSPLIT_TESTS_ORACLES_HPP_
