// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace sigsplit;

namespace
{

FeatureMatrix seq1d(std::vector<double> v)
{
    const std::size_t n = v.size();
    return FeatureMatrix(n, {{Channel::x, 0}}, std::move(v));
}

std::vector<FeatureMatrix> random_signatures(std::size_t n, std::size_t rows, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<FeatureMatrix> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(oracle::random_matrix(rows + i, kNumChannels, rng));
    return out;
}

} // namespace

TEST(Dtw, SelfDistanceIsZero)
{
    std::mt19937_64 rng(1);
    const auto a = oracle::random_matrix(17, 4, rng);
    EXPECT_EQ(dtw(a, a), 0.0);
}

TEST(Dtw, ConstantSequencesOfDifferentLength)
{
    EXPECT_EQ(dtw(seq1d({0}), seq1d({0, 0, 0})), 0.0);
}

TEST(Dtw, SmallCaseMatchesPathEnumeration)
{
    const DtwConfig raw{LocalDistance::squared_euclidean, false};
    const double got = dtw(seq1d({1, 2, 3}), seq1d({1, 3}), raw);
    EXPECT_DOUBLE_EQ(got, oracle::dtw_paths({{1}, {2}, {3}}, {{1}, {3}}, true, false));
    EXPECT_DOUBLE_EQ(got, 1.0);
    EXPECT_DOUBLE_EQ(dtw(seq1d({1, 2, 3}), seq1d({1, 3})), 1.0 / 5.0);
}

TEST(Dtw, MatchesPathEnumerationOnRandomShortSequences)
{
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> len(1, 6);
    for (int trial = 0; trial < 300; ++trial)
    {
        const std::size_t dim = 1 + trial % 3;
        const auto a = oracle::random_matrix(len(rng), dim, rng);
        const auto b = oracle::random_matrix(len(rng), dim, rng);
        for (bool sq : {true, false})
            for (bool norm : {true, false})
            {
                const DtwConfig cfg{sq ? LocalDistance::squared_euclidean : LocalDistance::euclidean, norm};
                const double want = oracle::dtw_paths(oracle::rows_of(a), oracle::rows_of(b), sq, norm);
                ASSERT_TRUE(oracle::close(dtw(a, b, cfg), want));
            }
    }
}

TEST(Dtw, SymmetricAndNonNegative)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial)
    {
        const auto a = oracle::random_matrix(3 + rng() % 30, 3, rng);
        const auto b = oracle::random_matrix(3 + rng() % 30, 3, rng);
        EXPECT_EQ(dtw(a, b), dtw(b, a));
        EXPECT_GE(dtw(a, b), 0.0);
        EXPECT_TRUE(oracle::close(dtw(a, b), oracle::dtw_table(oracle::rows_of(a), oracle::rows_of(b), true, true)));
    }
}

TEST(Dtw, ChannelMismatchAndEmptyInputAreErrors)
{
    const FeatureMatrix y(2, {{Channel::y, 0}}, {1, 2});
    EXPECT_THROW(dtw(seq1d({1, 2}), y), Error);
    const FeatureMatrix empty(0, {{Channel::x, 0}}, {});
    EXPECT_THROW(dtw(seq1d({1}), empty), Error);
}

TEST(DtwEnroll, Test3KeepsFiveReferencesPerSet)
{
    const auto sigs = random_signatures(5, 20, 4);
    const auto model = dtw_enroll(sigs, make_split(SplitKind::test3));
    ASSERT_EQ(model.set1.size(), 5u);
    ASSERT_EQ(model.set2.size(), 5u);
    EXPECT_EQ(model.set1[0].cols(), 8u);
    EXPECT_EQ(model.set2[0].cols(), 4u);
}

TEST(DtwEnroll, WholeSingleReference)
{
    const auto sigs = random_signatures(1, 20, 5);
    const auto model = dtw_enroll(sigs, make_split(SplitKind::whole));
    EXPECT_EQ(model.set1.size(), 1u);
    EXPECT_TRUE(model.set2.empty());
}

TEST(DtwEnroll, NoSignaturesIsAnError)
{
    EXPECT_THROW(dtw_enroll(std::vector<FeatureMatrix>{}, make_split(SplitKind::whole)), Error);
}

TEST(DtwScore, EnrolledSignatureScoresZero)
{
    const auto sigs = random_signatures(5, 20, 6);
    const auto spec = make_split(SplitKind::test2);
    const auto model = dtw_enroll(sigs, spec);
    const auto s = dtw_score(model, sigs[3], spec);
    EXPECT_EQ(s.d1, 0.0);
    ASSERT_TRUE(s.d2);
    EXPECT_EQ(*s.d2, 0.0);
}

TEST(DtwScore, MinimumOverReferences)
{
    // Reference r is at distance 5 from t, r' at distance 3 (raw cost, 1 sample each).
    const DtwModel model{SplitKind::whole, {}, {}};
    std::vector<double> t(15, 0.0);
    std::vector<double> r(15, 0.0);
    std::vector<double> r2(15, 0.0);
    r[0] = std::sqrt(5.0);
    r2[0] = std::sqrt(3.0);
    std::vector<FeatureChannel> chans;
    for (auto c : all_channels())
        chans.push_back({c, 0});
    DtwModel m = model;
    m.set1 = {FeatureMatrix(1, chans, r), FeatureMatrix(1, chans, r2)};
    const DtwConfig raw{LocalDistance::squared_euclidean, false};
    const auto s = dtw_score(m, FeatureMatrix(1, chans, t), make_split(SplitKind::whole), raw);
    EXPECT_NEAR(s.d1, 3.0, 1e-12);
    EXPECT_FALSE(s.d2);
}

TEST(DtwScore, AddingReferencesNeverIncreasesScores)
{
    const auto sigs = random_signatures(5, 20, 7);
    const auto probes = random_signatures(6, 22, 8);
    const auto spec = make_split(SplitKind::test4);
    for (const auto& p : probes)
    {
        double prev1 = std::numeric_limits<double>::infinity();
        double prev2 = prev1;
        for (std::size_t n = 1; n <= sigs.size(); ++n)
        {
            const auto model = dtw_enroll(std::span(sigs).first(n), spec);
            const auto s = dtw_score(model, p, spec);
            EXPECT_LE(s.d1, prev1);
            EXPECT_LE(*s.d2, prev2);
            prev1 = s.d1;
            prev2 = *s.d2;
        }
    }
}

TEST(DtwScore, SplitMismatchIsAnError)
{
    const auto sigs = random_signatures(1, 20, 9);
    const auto model = dtw_enroll(sigs, make_split(SplitKind::whole));
    EXPECT_THROW(dtw_score(model, sigs[0], make_split(SplitKind::test1)), Error);
}
