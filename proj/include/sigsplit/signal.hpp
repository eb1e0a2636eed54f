// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_SIGNAL_HPP_
#define SIGSPLIT_SIGNAL_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace sigsplit
{

/// One pen sample as reported by the digitizer.
struct Sample
{
    double x = 0.0;  ///< horizontal position, tablet units
    double y = 0.0;  ///< vertical position, tablet units
    double p = 0.0;  ///< pressure, >= 0 (0 means pen up)
    double az = 0.0; ///< azimuth
    double al = 0.0; ///< altitude
    std::optional<double> t; ///< timestamp in ms; never used by matchers

    friend bool operator==(const Sample&, const Sample&) = default;
};

enum class SignatureKind
{
    genuine,
    skilled_forgery,
};

inline constexpr std::string_view to_string(SignatureKind k) noexcept
{
    return k == SignatureKind::genuine ? "genuine" : "skilled";
}

/// One signing act. Pen-up samples are kept.
struct RawSignature
{
    std::vector<Sample> samples;
    std::string user_id;
    SignatureKind kind = SignatureKind::genuine;
    std::optional<int> session;

    std::size_t length() const noexcept { return samples.size(); }
};

/// Rejects signatures that cannot go through the delta window or carry
/// negative pressure.
inline void validate_signature(const RawSignature& sig, std::size_t min_length)
{
    if (sig.samples.size() < min_length)
    {
        throw Error(Module::signal_core,
                    "signature of user '" + sig.user_id + "' has " +
                        std::to_string(sig.samples.size()) +
                        " samples, fewer than the delta window (" +
                        std::to_string(min_length) + ")");
    }
    for (std::size_t i = 0; i < sig.samples.size(); ++i)
    {
        if (!(sig.samples[i].p >= 0.0))
        {
            throw Error(Module::signal_core,
                        "negative pressure at sample " + std::to_string(i) +
                            " of user '" + sig.user_id + "'");
        }
    }
}

// ---------------------------------------------------------------------------
// Channels

/// The five digitizer channels.
enum class BaseChannel : int
{
    x = 0,
    y,
    p,
    az,
    al,
};

/// Derivative order of an extended channel.
enum class Order : int
{
    base = 0,
    delta,
    delta_delta,
};

/// One of the 15 extended channels: base channel x derivative order.
/// The numeric value is the canonical column index produced by extraction:
/// [x y p az al | dx dy dp daz dal | ddx ddy ddp ddaz ddal].
enum class Channel : int
{
    x = 0, y, p, az, al,
    dx, dy, dp, daz, dal,
    ddx, ddy, ddp, ddaz, ddal,
};

inline constexpr std::size_t kNumBaseChannels = 5;
inline constexpr std::size_t kNumChannels = 15;

inline constexpr Channel make_channel(BaseChannel b, Order o) noexcept
{
    return static_cast<Channel>(static_cast<int>(o) * 5 + static_cast<int>(b));
}

inline constexpr BaseChannel base_of(Channel c) noexcept
{
    return static_cast<BaseChannel>(static_cast<int>(c) % 5);
}

inline constexpr Order order_of(Channel c) noexcept
{
    return static_cast<Order>(static_cast<int>(c) / 5);
}

inline constexpr std::array<std::string_view, kNumChannels> kChannelNames = {
    "x",  "y",  "p",  "az",  "al",
    "dx", "dy", "dp", "daz", "dal",
    "ddx", "ddy", "ddp", "ddaz", "ddal",
};

inline constexpr std::string_view to_string(Channel c) noexcept
{
    return kChannelNames[static_cast<std::size_t>(c)];
}

inline std::optional<Channel> parse_channel(std::string_view name) noexcept
{
    for (std::size_t i = 0; i < kNumChannels; ++i)
        if (kChannelNames[i] == name)
            return static_cast<Channel>(i);
    return std::nullopt;
}

inline constexpr std::array<Channel, kNumChannels> all_channels() noexcept
{
    std::array<Channel, kNumChannels> out{};
    for (std::size_t i = 0; i < kNumChannels; ++i)
        out[i] = static_cast<Channel>(i);
    return out;
}

/// A matrix column identity: the channel plus the frame offset it came from
/// when consecutive samples were stacked (0 for unstacked matrices).
struct FeatureChannel
{
    Channel id = Channel::x;
    int frame = 0;

    friend bool operator==(const FeatureChannel&, const FeatureChannel&) = default;
};

inline std::string to_string(const FeatureChannel& c)
{
    std::string s(to_string(c.id));
    if (c.frame != 0)
        s += "@" + std::to_string(c.frame);
    return s;
}

inline std::optional<FeatureChannel> parse_feature_channel(std::string_view name)
{
    int frame = 0;
    if (auto at = name.find('@'); at != std::string_view::npos)
    {
        const auto digits = name.substr(at + 1);
        if (digits.empty())
            return std::nullopt;
        for (char ch : digits)
        {
            if (ch < '0' || ch > '9')
                return std::nullopt;
            frame = frame * 10 + (ch - '0');
        }
        name = name.substr(0, at);
    }
    auto c = parse_channel(name);
    if (!c)
        return std::nullopt;
    return FeatureChannel{*c, frame};
}

inline std::string join_channels(std::span<const FeatureChannel> chans)
{
    std::string s;
    for (std::size_t i = 0; i < chans.size(); ++i)
    {
        if (i)
            s += ',';
        s += to_string(chans[i]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// FeatureMatrix

/// Row-major L x D matrix of features with a channel label per column.
/// Immutable once built.
class FeatureMatrix
{
public:
    FeatureMatrix() = default;

    FeatureMatrix(std::size_t rows, std::vector<FeatureChannel> channels, std::vector<double> data)
        : rows_(rows), channels_(std::move(channels)), data_(std::move(data))
    {
        if (data_.size() != rows_ * channels_.size())
        {
            throw Error(Module::signal_core,
                        "feature matrix data size " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows_) + "x" +
                            std::to_string(channels_.size()));
        }
        for (std::size_t i = 0; i < channels_.size(); ++i)
            for (std::size_t j = i + 1; j < channels_.size(); ++j)
                if (channels_[i] == channels_[j])
                    throw Error(Module::signal_core,
                                "duplicate channel '" + to_string(channels_[i]) +
                                    "' in feature matrix");
    }

    /// Builds a matrix from columns of equal length.
    static FeatureMatrix from_columns(std::vector<FeatureChannel> channels,
                                      const std::vector<std::vector<double>>& columns)
    {
        if (columns.size() != channels.size())
            throw Error(Module::signal_core, "column count does not match channel count");
        const std::size_t rows = columns.empty() ? 0 : columns.front().size();
        std::vector<double> data(rows * columns.size());
        for (std::size_t j = 0; j < columns.size(); ++j)
        {
            if (columns[j].size() != rows)
                throw Error(Module::signal_core, "ragged columns");
            for (std::size_t i = 0; i < rows; ++i)
                data[i * columns.size() + j] = columns[j][i];
        }
        return FeatureMatrix(rows, std::move(channels), std::move(data));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return channels_.size(); }
    bool empty() const noexcept { return rows_ == 0 || channels_.empty(); }

    const std::vector<FeatureChannel>& channels() const noexcept { return channels_; }
    std::span<const double> data() const noexcept { return data_; }

    std::span<const double> row(std::size_t i) const noexcept
    {
        return std::span<const double>(data_).subspan(i * cols(), cols());
    }

    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols() + j]; }

    std::vector<double> column(std::size_t j) const
    {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            out[i] = (*this)(i, j);
        return out;
    }

    std::optional<std::size_t> find(FeatureChannel c) const noexcept
    {
        auto it = std::find(channels_.begin(), channels_.end(), c);
        if (it == channels_.end())
            return std::nullopt;
        return static_cast<std::size_t>(it - channels_.begin());
    }

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::vector<FeatureChannel> channels_;
    std::vector<double> data_;
};

/// Concatenates S consecutive rows into one, without overlap. Trailing rows
/// that do not fill a complete frame are dropped. Column c of frame k gets
/// the channel of column c with frame offset k.
inline FeatureMatrix stack_frames(const FeatureMatrix& m, std::size_t frames)
{
    if (frames == 0)
        throw Error(Module::signal_core, "stack_frames: frame count must be >= 1");
    const std::size_t out_rows = m.rows() / frames;
    if (out_rows == 0)
    {
        throw Error(Module::signal_core,
                    "stack_frames: " + std::to_string(m.rows()) +
                        " rows cannot fill one frame of " + std::to_string(frames));
    }
    std::vector<FeatureChannel> chans;
    chans.reserve(m.cols() * frames);
    for (std::size_t k = 0; k < frames; ++k)
        for (const auto& c : m.channels())
            chans.push_back({c.id, c.frame * static_cast<int>(frames) + static_cast<int>(k)});
    const auto src = m.data();
    std::vector<double> data(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(out_rows * frames * m.cols()));
    return FeatureMatrix(out_rows, std::move(chans), std::move(data));
}

/// Inverse of stack_frames for matrices whose frame offsets were assigned by
/// it: splits every row back into its frames.
inline FeatureMatrix unstack_frames(const FeatureMatrix& m, std::size_t frames)
{
    if (frames == 0 || m.cols() % frames != 0)
        throw Error(Module::signal_core, "unstack_frames: column count not divisible by frames");
    const std::size_t d = m.cols() / frames;
    std::vector<FeatureChannel> chans;
    for (std::size_t j = 0; j < d; ++j)
    {
        auto c = m.channels()[j];
        c.frame /= static_cast<int>(frames);
        chans.push_back(c);
    }
    const auto src = m.data();
    return FeatureMatrix(m.rows() * frames, std::move(chans), std::vector<double>(src.begin(), src.end()));
}

/// Copies the listed columns, in the listed order.
inline FeatureMatrix project(const FeatureMatrix& m, std::span<const Channel> channels)
{
    std::vector<std::size_t> idx;
    idx.reserve(channels.size());
    for (Channel c : channels)
    {
        auto j = m.find(FeatureChannel{c, 0});
        if (!j)
            throw Error(Module::signal_core,
                        "channel '" + std::string(to_string(c)) + "' missing from feature matrix");
        idx.push_back(*j);
    }
    std::vector<FeatureChannel> chans;
    chans.reserve(idx.size());
    for (Channel c : channels)
        chans.push_back({c, 0});
    std::vector<double> data(m.rows() * idx.size());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j)
            data[i * idx.size() + j] = m(i, idx[j]);
    return FeatureMatrix(m.rows(), std::move(chans), std::move(data));
}

// ---------------------------------------------------------------------------
// Split specifications

enum class SplitKind
{
    test1,
    test2,
    test3,
    test4,
    whole,
};

inline constexpr std::array<SplitKind, 5> kAllSplits = {
    SplitKind::test1, SplitKind::test2, SplitKind::test3, SplitKind::test4, SplitKind::whole};

inline constexpr std::string_view to_string(SplitKind k) noexcept
{
    switch (k)
    {
    case SplitKind::test1: return "TEST1";
    case SplitKind::test2: return "TEST2";
    case SplitKind::test3: return "TEST3";
    case SplitKind::test4: return "TEST4";
    case SplitKind::whole: return "WHOLE";
    }
    return "?";
}

inline std::optional<SplitKind> parse_split_kind(std::string_view s) noexcept
{
    for (auto k : kAllSplits)
        if (to_string(k) == s)
            return k;
    return std::nullopt;
}

/// Which channels feed the first and the second matcher.
struct SplitSpec
{
    SplitKind name = SplitKind::whole;
    std::vector<Channel> set1;
    std::vector<Channel> set2; ///< empty for WHOLE

    bool has_set2() const noexcept { return !set2.empty(); }
};

/// The fixed channel selections. Order inside a set is part of the contract.
inline SplitSpec make_split(SplitKind kind)
{
    using C = Channel;
    switch (kind)
    {
    case SplitKind::test1:
        return {kind, {C::x, C::y, C::dx, C::dy, C::ddx, C::ddy}, {C::p, C::dp}};
    case SplitKind::test2:
        return {kind, {C::x, C::y, C::dx, C::dy, C::ddx, C::ddy}, {C::p, C::az, C::al, C::dp, C::daz, C::dal}};
    case SplitKind::test3:
        return {kind, {C::x, C::y, C::p, C::dx, C::dy, C::dp, C::ddx, C::ddy}, {C::az, C::al, C::daz, C::dal}};
    case SplitKind::test4:
        return {kind, {C::x, C::y, C::p, C::dx, C::dy, C::dp, C::ddx, C::ddy}, {C::p, C::az, C::al, C::dp, C::daz, C::dal}};
    case SplitKind::whole:
        break;
    }
    auto all = all_channels();
    return {SplitKind::whole, std::vector<Channel>(all.begin(), all.end()), {}};
}

/// Projects a matrix onto the two channel sets. A channel listed in both sets
/// is copied into both outputs. The second output is empty for WHOLE.
inline std::pair<FeatureMatrix, FeatureMatrix> apply_split(const FeatureMatrix& m, const SplitSpec& spec)
{
    auto first = project(m, spec.set1);
    FeatureMatrix second;
    if (spec.has_set2())
        second = project(m, spec.set2);
    return {std::move(first), std::move(second)};
}

// ---------------------------------------------------------------------------
// Dataset

/// Per-user signatures. Lists are sorted by session index.
template <class Item>
struct BasicUserRecord
{
    std::string user_id;
    std::vector<Item> genuine;
    std::vector<Item> skilled;
};

template <class Item>
struct BasicDataset
{
    std::vector<BasicUserRecord<Item>> users;

    std::size_t size() const noexcept { return users.size(); }
};

using UserRecord = BasicUserRecord<RawSignature>;
using Dataset = BasicDataset<RawSignature>;
using FeatureDataset = BasicDataset<FeatureMatrix>;

} // namespace sigsplit
#endif // SIGSPLIT_SIGNAL_HPP_
