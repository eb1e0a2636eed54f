// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_SCORE_HPP_
#define SIGSPLIT_SCORE_HPP_

#include <optional>

namespace sigsplit
{

/// Distances of one test signature to one user model, one per channel set.
/// d2 is absent when the split has a single set.
struct ScorePair
{
    double d1 = 0.0;
    std::optional<double> d2;

    friend bool operator==(const ScorePair&, const ScorePair&) = default;
};

} // namespace sigsplit
#endif // SIGSPLIT_SCORE_HPP_
