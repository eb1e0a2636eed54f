// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_VQ_HPP_
#define SIGSPLIT_VQ_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "score.hpp"
#include "signal.hpp"

namespace sigsplit
{

struct LbgConfig
{
    double perturbation = 0.01;             ///< split factor: c*(1+e), c*(1-e)
    std::size_t max_kmeans_iters = 100;     ///< per codebook size
    double rel_improvement_threshold = 1e-5;
    std::uint64_t rng_seed = 0;

    void validate() const
    {
        if (!(perturbation > 0.0))
            throw Error(Module::vq_engine, "LBG perturbation must be > 0");
        if (!(rel_improvement_threshold > 0.0))
            throw Error(Module::vq_engine, "LBG improvement threshold must be > 0");
        if (max_kmeans_iters == 0)
            throw Error(Module::vq_engine, "LBG max_kmeans_iters must be >= 1");
    }
};

/// K = 2^bits centroids over a fixed channel list, stored row-major.
struct Codebook
{
    unsigned bits = 0;
    std::vector<FeatureChannel> channels;
    std::vector<double> centroids; ///< size() * dim() values

    std::size_t dim() const noexcept { return channels.size(); }
    std::size_t size() const noexcept { return dim() == 0 ? 0 : centroids.size() / dim(); }

    std::span<const double> centroid(std::size_t k) const noexcept
    {
        return std::span<const double>(centroids).subspan(k * dim(), dim());
    }

    friend bool operator==(const Codebook&, const Codebook&) = default;
};

/// Distortions observed while training, one vector per codebook size
/// (index = bits). Each entry is the mean squared distance right after an
/// assignment step.
struct LbgTrace
{
    std::vector<std::vector<double>> levels;
};

namespace detail
{

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

/// Nearest centroid; lowest index wins ties.
inline std::pair<std::size_t, double> nearest(std::span<const double> v, std::span<const double> centroids,
                                              std::size_t dim) noexcept
{
    const std::size_t k = centroids.size() / dim;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
    {
        const double d = squared_distance(v, centroids.subspan(c * dim, dim));
        if (d < best_d)
        {
            best_d = d;
            best = c;
        }
    }
    return {best, best_d};
}

/// Assigns every vector; returns mean distortion.
inline double assign(std::span<const double> vectors, std::size_t dim, std::span<const double> centroids,
                     std::vector<std::size_t>& owner, std::vector<double>& dist)
{
    const std::size_t n = vectors.size() / dim;
    owner.resize(n);
    dist.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        auto [c, d] = nearest(vectors.subspan(i * dim, dim), centroids, dim);
        owner[i] = c;
        dist[i] = d;
        total += d;
    }
    return total / static_cast<double>(n);
}

/// Moves each non-empty centroid to the mean of its cell and re-seeds each
/// empty one at the vector farthest from its nearest centroid. Exact ties
/// between farthest candidates are broken by the seeded generator.
inline void update_and_repair(std::span<const double> vectors, std::size_t dim, std::vector<double>& centroids,
                              const std::vector<std::size_t>& owner, std::mt19937_64& rng)
{
    const std::size_t k = centroids.size() / dim;
    const std::size_t n = owner.size();
    std::vector<double> sums(centroids.size(), 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto v = vectors.subspan(i * dim, dim);
        double* s = sums.data() + owner[i] * dim;
        for (std::size_t j = 0; j < dim; ++j)
            s[j] += v[j];
        ++counts[owner[i]];
    }
    for (std::size_t c = 0; c < k; ++c)
    {
        if (counts[c] == 0)
            continue;
        const double inv = 1.0 / static_cast<double>(counts[c]);
        for (std::size_t j = 0; j < dim; ++j)
            centroids[c * dim + j] = sums[c * dim + j] * inv;
    }

    std::vector<double> dist;
    bool any_empty = false;
    for (auto cnt : counts)
        any_empty = any_empty || cnt == 0;
    if (any_empty)
    {
        dist.assign(n, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < k; ++c)
                if (counts[c] != 0)
                    dist[i] = std::min(dist[i], squared_distance(vectors.subspan(i * dim, dim),
                                                                 std::span<const double>(centroids).subspan(c * dim, dim)));
    }

    for (std::size_t c = 0; c < k; ++c)
    {
        if (counts[c] != 0)
            continue;
        double far = -1.0;
        std::vector<std::size_t> ties;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (dist[i] > far)
            {
                far = dist[i];
                ties.assign(1, i);
            }
            else if (dist[i] == far)
            {
                ties.push_back(i);
            }
        }
        std::size_t pick = ties.front();
        if (ties.size() > 1)
            pick = ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)];
        const auto v = vectors.subspan(pick * dim, dim);
        for (std::size_t j = 0; j < dim; ++j)
            centroids[c * dim + j] = v[j];
        // The re-seeded vector is now covered; later repairs pick elsewhere.
        for (std::size_t i = 0; i < n; ++i)
            dist[i] = std::min(dist[i], squared_distance(vectors.subspan(i * dim, dim), v));
    }
}

inline bool has_empty_cell(const std::vector<std::size_t>& owner, std::size_t k)
{
    std::vector<char> seen(k, 0);
    std::size_t covered = 0;
    for (auto o : owner)
        if (!seen[o])
        {
            seen[o] = 1;
            ++covered;
        }
    return covered < k;
}

} // namespace detail

/// Trains codebooks of size 1, 2, 4, ... 2^max_bits with the LBG splitting
/// procedure and returns all of them (index = bits).
///
/// Starts from the global mean. Each doubling splits every centroid c into
/// c*(1+e) and c*(1-e) (components with |c| < 1e-12 use c+e and c-e) and then
/// refines with k-means until the relative improvement drops below the
/// threshold or the iteration cap is hit. A refinement never stops while a
/// cell is empty, up to N extra repair rounds.
inline std::vector<Codebook> lbg_train_ladder(std::span<const double> vectors, std::size_t dim,
                                              unsigned max_bits, const LbgConfig& cfg,
                                              const std::vector<FeatureChannel>& channels,
                                              LbgTrace* trace = nullptr)
{
    cfg.validate();
    if (dim == 0)
        throw Error(Module::vq_engine, "LBG: vectors must have at least one dimension");
    if (vectors.size() % dim != 0)
        throw Error(Module::vq_engine, "LBG: data size is not a multiple of the dimension");
    if (channels.size() != dim)
        throw Error(Module::vq_engine, "LBG: channel list does not match the dimension");
    if (max_bits >= 31)
        throw Error(Module::vq_engine, "LBG: bits out of range");
    const std::size_t n = vectors.size() / dim;
    const std::size_t target = std::size_t{1} << max_bits;
    if (n < target)
    {
        throw Error(Module::vq_engine, "LBG: " + std::to_string(n) + " training vectors cannot fill " +
                                           std::to_string(target) + " centroids (bits=" +
                                           std::to_string(max_bits) + ")");
    }
    for (double v : vectors)
        if (!std::isfinite(v))
            throw Error(Module::vq_engine, "LBG: non-finite training value");

    std::mt19937_64 rng(cfg.rng_seed);
    std::vector<double> cent(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            cent[j] += vectors[i * dim + j];
    for (auto& c : cent)
        c /= static_cast<double>(n);

    std::vector<Codebook> ladder;
    std::vector<std::size_t> owner;
    std::vector<double> dist;
    if (trace)
        trace->levels.assign(max_bits + 1, {});

    {
        const double d0 = detail::assign(vectors, dim, cent, owner, dist);
        if (trace)
            trace->levels[0].push_back(d0);
        ladder.push_back(Codebook{0, channels, cent});
    }

    for (unsigned b = 1; b <= max_bits; ++b)
    {
        const std::size_t k_old = cent.size() / dim;
        std::vector<double> split(2 * cent.size());
        for (std::size_t c = 0; c < k_old; ++c)
        {
            for (std::size_t j = 0; j < dim; ++j)
            {
                const double v = cent[c * dim + j];
                double hi = v * (1.0 + cfg.perturbation);
                double lo = v * (1.0 - cfg.perturbation);
                if (std::abs(v) < 1e-12)
                {
                    hi = v + cfg.perturbation;
                    lo = v - cfg.perturbation;
                }
                split[(2 * c) * dim + j] = hi;
                split[(2 * c + 1) * dim + j] = lo;
            }
        }
        cent = std::move(split);
        const std::size_t k = cent.size() / dim;

        double prev = detail::assign(vectors, dim, cent, owner, dist);
        if (trace)
            trace->levels[b].push_back(prev);
        std::size_t iters = 0;
        std::size_t repairs = 0;
        while (true)
        {
            const bool empty = detail::has_empty_cell(owner, k);
            detail::update_and_repair(vectors, dim, cent, owner, rng);
            const double cur = detail::assign(vectors, dim, cent, owner, dist);
            if (trace)
                trace->levels[b].push_back(cur);
            ++iters;
            const double improvement = prev > 0.0 ? (prev - cur) / prev : 0.0;
            prev = cur;
            if (empty)
                ++repairs;
            const bool still_empty = detail::has_empty_cell(owner, k);
            if (still_empty && repairs <= n)
                continue;
            if (iters >= cfg.max_kmeans_iters || improvement < cfg.rel_improvement_threshold)
                break;
        }
        ladder.push_back(Codebook{b, channels, cent});
    }
    return ladder;
}

/// Trains a single codebook of 2^bits centroids.
inline Codebook lbg_train(std::span<const double> vectors, std::size_t dim, unsigned bits, const LbgConfig& cfg,
                          const std::vector<FeatureChannel>& channels, LbgTrace* trace = nullptr)
{
    return lbg_train_ladder(vectors, dim, bits, cfg, channels, trace).back();
}

inline Codebook lbg_train(const FeatureMatrix& m, unsigned bits, const LbgConfig& cfg, LbgTrace* trace = nullptr)
{
    return lbg_train(m.data(), m.cols(), bits, cfg, m.channels(), trace);
}

/// Mean over rows of the squared distance to the nearest centroid.
inline double distortion(const Codebook& cb, const FeatureMatrix& m)
{
    if (m.channels() != cb.channels)
    {
        throw Error(Module::vq_engine, "distortion: matrix channels [" + join_channels(m.channels()) +
                                           "] do not match codebook channels [" + join_channels(cb.channels) +
                                           "]");
    }
    if (m.rows() == 0)
        throw Error(Module::vq_engine, "distortion: empty feature matrix");
    double total = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        total += detail::nearest(m.row(i), cb.centroids, cb.dim()).second;
    return total / static_cast<double>(m.rows());
}

/// One codebook per channel set. cb2 is absent for WHOLE.
struct VqModel
{
    SplitKind split = SplitKind::whole;
    Codebook cb1;
    std::optional<Codebook> cb2;

    friend bool operator==(const VqModel&, const VqModel&) = default;
};

/// Pools rows of the given signatures after projection onto one set.
inline FeatureMatrix pool_rows(std::span<const FeatureMatrix> sigs, std::span<const Channel> set)
{
    std::vector<double> data;
    std::size_t rows = 0;
    std::vector<FeatureChannel> chans;
    for (const auto& s : sigs)
    {
        auto p = project(s, set);
        if (chans.empty())
            chans = p.channels();
        data.insert(data.end(), p.data().begin(), p.data().end());
        rows += p.rows();
    }
    if (chans.empty())
        for (Channel c : set)
            chans.push_back({c, 0});
    return FeatureMatrix(rows, std::move(chans), std::move(data));
}

/// Trains all codebook sizes up to max_bits for both sets at once.
/// Entry b of the result equals vq_enroll(..., bits=b, ...).
inline std::vector<VqModel> vq_enroll_ladder(std::span<const FeatureMatrix> train, const SplitSpec& spec,
                                             unsigned max_bits, const LbgConfig& cfg)
{
    if (train.empty())
        throw Error(Module::vq_engine, "vq_enroll: no training signatures");
    auto train_set = [&](std::span<const Channel> set, const char* label) {
        auto pooled = pool_rows(train, set);
        try
        {
            return lbg_train_ladder(pooled.data(), pooled.cols(), max_bits, cfg, pooled.channels());
        }
        catch (const Error& e)
        {
            throw Error(Module::vq_engine, std::string(label) + ": " + e.message());
        }
    };
    auto l1 = train_set(spec.set1, "set1");
    std::vector<Codebook> l2;
    if (spec.has_set2())
        l2 = train_set(spec.set2, "set2");
    std::vector<VqModel> out;
    for (unsigned b = 0; b <= max_bits; ++b)
    {
        VqModel m{spec.name, std::move(l1[b]), std::nullopt};
        if (spec.has_set2())
            m.cb2 = std::move(l2[b]);
        out.push_back(std::move(m));
    }
    return out;
}

inline VqModel vq_enroll(std::span<const FeatureMatrix> train, const SplitSpec& spec, unsigned bits,
                         const LbgConfig& cfg)
{
    return std::move(vq_enroll_ladder(train, spec, bits, cfg).back());
}

/// Quantizes both projections of a test signature with their codebooks.
inline ScorePair vq_score(const VqModel& model, const FeatureMatrix& test, const SplitSpec& spec)
{
    if (model.split != spec.name)
    {
        throw Error(Module::vq_engine, "vq_score: model trained for " + std::string(to_string(model.split)) +
                                           ", scored with " + std::string(to_string(spec.name)));
    }
    auto [set1, set2] = apply_split(test, spec);
    ScorePair out{distortion(model.cb1, set1), std::nullopt};
    if (spec.has_set2())
    {
        if (!model.cb2)
            throw Error(Module::vq_engine, "vq_score: model has no second codebook");
        out.d2 = distortion(*model.cb2, set2);
    }
    return out;
}

} // namespace sigsplit
#endif // SIGSPLIT_VQ_HPP_
