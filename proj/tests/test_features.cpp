// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace sigsplit;

namespace
{

std::vector<double> random_series(std::size_t n, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd(0.0, 3.0);
    std::vector<double> s(n);
    for (auto& v : s)
        v = nd(rng);
    return s;
}

RawSignature sinusoid_signature(std::size_t n)
{
    RawSignature sig;
    sig.user_id = "sin";
    for (std::size_t i = 0; i < n; ++i)
    {
        const double t = static_cast<double>(i) / static_cast<double>(n);
        sig.samples.push_back({std::sin(6.0 * t), std::cos(4.0 * t) + t, 300 + 200 * std::sin(3.0 * t),
                               900 + 40 * std::cos(2.0 * t), 450 + 10 * t * t, std::nullopt});
    }
    return sig;
}

} // namespace

TEST(Delta, ConstantSequenceGivesZeros)
{
    const std::vector<double> s{5, 5, 5, 5, 5};
    for (double v : delta(s, DeltaConfig{1}))
        EXPECT_EQ(v, 0.0);
}

TEST(Delta, UnitRampInteriorSlopeIsOne)
{
    const std::vector<double> s{0, 1, 2, 3, 4, 5, 6};
    EXPECT_DOUBLE_EQ(delta(s, DeltaConfig{2})[3], 1.0);
}

TEST(Delta, ShortSequenceMatchesHandEvaluation)
{
    const std::vector<double> s{1, 3, 2, 5, 4};
    const auto got = delta(s, DeltaConfig{1});
    const auto want = oracle::delta(s, 1);
    const std::vector<double> frozen{1.0, 0.5, 1.0, 1.0, -0.5};
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        EXPECT_DOUBLE_EQ(got[i], want[i]);
        EXPECT_DOUBLE_EQ(got[i], frozen[i]);
    }
}

TEST(Delta, WindowLongerThanSeriesIsAnError)
{
    const std::vector<double> s{1, 2, 3, 4};
    EXPECT_THROW(delta(s, DeltaConfig{2}), Error);
    EXPECT_THROW(delta(s, DeltaConfig{0}), Error);
    EXPECT_NO_THROW(delta(std::vector<double>{1, 2, 3, 4, 5}, DeltaConfig{2}));
}

TEST(Delta, MatchesOracleOnRandomSeries)
{
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 200; ++trial)
    {
        const std::size_t m = 1 + trial % 4;
        const auto s = random_series(2 * m + 1 + rng() % 40, rng);
        const auto got = delta(s, DeltaConfig{m});
        const auto want = oracle::delta(s, static_cast<int>(m));
        for (std::size_t i = 0; i < s.size(); ++i)
            ASSERT_TRUE(oracle::close(got[i], want[i])) << got[i] << " vs " << want[i];
    }
}

TEST(Delta, IsLinear)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial)
    {
        const auto s = random_series(30, rng);
        const auto u = random_series(30, rng);
        const double a = 1.7;
        const double b = -0.4;
        std::vector<double> mix(30);
        for (std::size_t i = 0; i < 30; ++i)
            mix[i] = a * s[i] + b * u[i];
        const auto ds = delta(s, {});
        const auto du = delta(u, {});
        const auto dm = delta(mix, {});
        for (std::size_t i = 0; i < 30; ++i)
            EXPECT_TRUE(oracle::close(dm[i], a * ds[i] + b * du[i]));
    }
}

TEST(Delta, ShiftEquivariantAwayFromBoundaries)
{
    std::mt19937_64 rng(9);
    const auto s = random_series(40, rng);
    const std::vector<double> shifted(s.begin() + 3, s.end());
    const auto d = delta(s, {});
    const auto ds = delta(shifted, {});
    for (std::size_t i = 2; i + 2 < shifted.size(); ++i)
        EXPECT_TRUE(oracle::close(ds[i], d[i + 3]));
}

TEST(DeltaDelta, ConstantGivesZeros)
{
    const std::vector<double> s(9, -2.5);
    for (double v : delta_delta(s, {}))
        EXPECT_EQ(v, 0.0);
}

TEST(DeltaDelta, RampInteriorIsZero)
{
    std::vector<double> s(20);
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = 3.0 * static_cast<double>(i) - 1.0;
    const auto dd = delta_delta(s, {});
    for (std::size_t i = 4; i + 4 < s.size(); ++i)
        EXPECT_NEAR(dd[i], 0.0, 1e-12);
    EXPECT_GT(std::abs(dd[0]), 0.1);
}

TEST(DeltaDelta, QuadraticInteriorIsConstant)
{
    std::vector<double> s(12);
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = static_cast<double>(i * i);
    const auto got = delta_delta(s, DeltaConfig{1});
    const auto want = oracle::delta(oracle::delta(s, 1), 1);
    for (std::size_t i = 2; i + 2 < s.size(); ++i)
    {
        EXPECT_DOUBLE_EQ(got[i], want[i]);
        EXPECT_DOUBLE_EQ(got[i], 2.0);
    }
}

TEST(Zscore, ConstantColumnMapsToZeros)
{
    for (double v : zscore(std::vector<double>{4, 4, 4}))
        EXPECT_EQ(v, 0.0);
}

TEST(Zscore, ThreeValues)
{
    const auto z = zscore(std::vector<double>{1, 2, 3});
    EXPECT_NEAR(z[0], -1.2247, 1e-4);
    EXPECT_NEAR(z[1], 0.0, 1e-12);
    EXPECT_NEAR(z[2], 1.2247, 1e-4);
}

TEST(Zscore, TooShortIsAnError)
{
    EXPECT_THROW(zscore(std::vector<double>{1}), Error);
}

TEST(Zscore, MeanZeroUnitStdAndIdempotent)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial)
    {
        auto c = random_series(5 + trial, rng);
        for (auto& v : c)
            v = 50.0 + 10.0 * v;
        const auto z = zscore(c);
        const auto st = column_stats(z);
        EXPECT_NEAR(st.mean, 0.0, 1e-9);
        EXPECT_NEAR(st.std, 1.0, 1e-6);
        const auto zz = zscore(z);
        for (std::size_t i = 0; i < z.size(); ++i)
            EXPECT_NEAR(zz[i], z[i], 1e-9);
        const auto want = oracle::zscore(c);
        for (std::size_t i = 0; i < z.size(); ++i)
            EXPECT_TRUE(oracle::close(z[i], want[i]));
    }
}

TEST(Extract, FifteenCanonicalChannels)
{
    const auto m = extract(sinusoid_signature(40), {});
    ASSERT_EQ(m.cols(), 15u);
    EXPECT_EQ(m.rows(), 40u);
    for (std::size_t j = 0; j < 15; ++j)
        EXPECT_EQ(m.channels()[j], (FeatureChannel{static_cast<Channel>(j), 0}));
}

TEST(Extract, MinimumLengthAcceptedShorterRejected)
{
    EXPECT_EQ(extract(sinusoid_signature(5), DeltaConfig{2}).rows(), 5u);
    EXPECT_EQ(extract(sinusoid_signature(7), DeltaConfig{3}).rows(), 7u);
    EXPECT_THROW(extract(sinusoid_signature(4), DeltaConfig{2}), Error);
}

TEST(Extract, ColumnsAreNormalized)
{
    const auto m = extract(sinusoid_signature(120), {});
    for (std::size_t j = 0; j < m.cols(); ++j)
    {
        const auto st = column_stats(m.column(j));
        EXPECT_NEAR(st.mean, 0.0, 1e-9) << j;
        EXPECT_NEAR(st.std, 1.0, 1e-6) << j;
    }
}

TEST(Extract, DeltasComeFromRawChannels)
{
    const auto sig = sinusoid_signature(50);
    const auto m = extract(sig, {});
    std::vector<double> raw_y;
    for (const auto& s : sig.samples)
        raw_y.push_back(s.y);
    const auto want = oracle::zscore(oracle::delta(raw_y, 2));
    const auto got = m.column(static_cast<std::size_t>(Channel::dy));
    for (std::size_t i = 0; i < want.size(); ++i)
        EXPECT_TRUE(oracle::close(got[i], want[i]));
}

TEST(Extract, ConstantChannelGivesZeroColumns)
{
    auto sig = sinusoid_signature(30);
    for (auto& s : sig.samples)
        s.az = 7.0;
    const auto m = extract(sig, {});
    for (auto c : {Channel::az, Channel::daz, Channel::ddaz})
        for (double v : m.column(static_cast<std::size_t>(c)))
            EXPECT_EQ(v, 0.0);
}

TEST(Extract, Deterministic)
{
    const auto sig = sinusoid_signature(64);
    EXPECT_EQ(extract(sig, {}), extract(sig, {}));
}
