// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_FEATURES_HPP_
#define SIGSPLIT_FEATURES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "signal.hpp"

namespace sigsplit
{

/// Delta regression window: half_window samples on each side of the current
/// one, 2*half_window+1 in total.
struct DeltaConfig
{
    std::size_t half_window = 2;

    std::size_t window() const noexcept { return 2 * half_window + 1; }

    void validate() const
    {
        if (half_window < 1)
            throw Error(Module::feature_ext, "delta half-window must be >= 1 (window length >= 3)");
    }
};

/// Standard deviations below this are treated as a constant column.
inline constexpr double kConstantColumnStd = 1e-12;

/// Least-squares local slope over a 2M+1 window:
///
///   out[n] = sum_{k=-M..M} k * s[n+k] / sum_{k=-M..M} k^2
///
/// Indices outside [0, L) are clamped to the nearest endpoint, so the output
/// keeps length L and a constant input maps to exact zeros.
inline std::vector<double> delta(std::span<const double> series, const DeltaConfig& cfg)
{
    cfg.validate();
    const std::size_t n = series.size();
    if (n < cfg.window())
    {
        throw Error(Module::feature_ext,
                    "delta: series of length " + std::to_string(n) + " is shorter than the window (" +
                        std::to_string(cfg.window()) + ")");
    }
    const auto m = static_cast<std::ptrdiff_t>(cfg.half_window);
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    double denom = 0.0;
    for (std::ptrdiff_t k = 1; k <= m; ++k)
        denom += 2.0 * static_cast<double>(k * k);

    std::vector<double> out(n);
    for (std::ptrdiff_t i = 0; i <= last; ++i)
    {
        double acc = 0.0;
        // Pair +k with -k: k*s[i+k] - k*s[i-k].
        for (std::ptrdiff_t k = 1; k <= m; ++k)
        {
            const auto hi = std::min(i + k, last);
            const auto lo = std::max(i - k, std::ptrdiff_t{0});
            acc += static_cast<double>(k) * (series[hi] - series[lo]);
        }
        out[i] = acc / denom;
    }
    return out;
}

/// delta applied twice.
inline std::vector<double> delta_delta(std::span<const double> series, const DeltaConfig& cfg)
{
    auto first = delta(series, cfg);
    return delta(first, cfg);
}

/// Population mean and standard deviation (divides by L).
struct ColumnStats
{
    double mean = 0.0;
    double std = 0.0;
};

inline ColumnStats column_stats(std::span<const double> col)
{
    ColumnStats s;
    if (col.empty())
        return s;
    double sum = 0.0;
    for (double v : col)
        sum += v;
    s.mean = sum / static_cast<double>(col.size());
    double ss = 0.0;
    for (double v : col)
        ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(col.size()));
    return s;
}

/// z-score with population std. Constant columns map to zeros.
inline std::vector<double> zscore(std::span<const double> col)
{
    if (col.size() < 2)
        throw Error(Module::feature_ext, "zscore: column needs at least 2 values");
    const auto s = column_stats(col);
    std::vector<double> out(col.size(), 0.0);
    if (s.std < kConstantColumnStd)
        return out;
    for (std::size_t i = 0; i < col.size(); ++i)
        out[i] = (col[i] - s.mean) / s.std;
    return out;
}

/// Builds the 15-column normalized feature matrix of one signature.
///
/// Deltas and delta-deltas are taken on the raw channels; afterwards every
/// column is z-scored against this signature's own statistics. Column order
/// is the Channel enum order.
inline FeatureMatrix extract(const RawSignature& sig, const DeltaConfig& cfg)
{
    cfg.validate();
    if (sig.length() < cfg.window())
    {
        throw Error(Module::feature_ext,
                    "signature of user '" + sig.user_id + "' has " + std::to_string(sig.length()) +
                        " samples, fewer than the delta window (" + std::to_string(cfg.window()) + ")");
    }
    const std::size_t n = sig.length();
    std::array<std::vector<double>, kNumBaseChannels> base;
    for (auto& b : base)
        b.resize(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto& s = sig.samples[i];
        base[0][i] = s.x;
        base[1][i] = s.y;
        base[2][i] = s.p;
        base[3][i] = s.az;
        base[4][i] = s.al;
    }

    std::vector<std::vector<double>> cols(kNumChannels);
    for (std::size_t b = 0; b < kNumBaseChannels; ++b)
    {
        cols[b] = zscore(base[b]);
        cols[kNumBaseChannels + b] = zscore(delta(base[b], cfg));
        cols[2 * kNumBaseChannels + b] = zscore(delta_delta(base[b], cfg));
    }
    std::vector<FeatureChannel> chans;
    chans.reserve(kNumChannels);
    for (auto c : all_channels())
        chans.push_back({c, 0});
    return FeatureMatrix::from_columns(std::move(chans), cols);
}

/// Extracts every signature of a dataset, preserving its layout.
inline FeatureDataset extract_all(const Dataset& ds, const DeltaConfig& cfg)
{
    FeatureDataset out;
    out.users.reserve(ds.users.size());
    for (const auto& u : ds.users)
    {
        BasicUserRecord<FeatureMatrix> rec;
        rec.user_id = u.user_id;
        for (const auto& s : u.genuine)
            rec.genuine.push_back(extract(s, cfg));
        for (const auto& s : u.skilled)
            rec.skilled.push_back(extract(s, cfg));
        out.users.push_back(std::move(rec));
    }
    return out;
}

} // namespace sigsplit
#endif // SIGSPLIT_FEATURES_HPP_
