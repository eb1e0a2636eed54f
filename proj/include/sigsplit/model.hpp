// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_MODEL_HPP_
#define SIGSPLIT_MODEL_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "dtw.hpp"
#include "error.hpp"
#include "score.hpp"
#include "signal.hpp"
#include "vq.hpp"

namespace sigsplit
{

enum class Engine
{
    vq,
    dtw,
};

inline constexpr std::string_view to_string(Engine e) noexcept { return e == Engine::vq ? "vq" : "dtw"; }

inline std::optional<Engine> parse_engine(std::string_view s) noexcept
{
    if (s == "vq")
        return Engine::vq;
    if (s == "dtw")
        return Engine::dtw;
    return std::nullopt;
}

/// Per-user matcher state for either engine.
struct UserModel
{
    std::string user_id;
    std::variant<VqModel, DtwModel> state;

    Engine engine() const noexcept { return std::holds_alternative<VqModel>(state) ? Engine::vq : Engine::dtw; }

    SplitKind split() const noexcept
    {
        return std::visit([](const auto& m) { return m.split; }, state);
    }

    friend bool operator==(const UserModel&, const UserModel&) = default;
};

/// Everything needed to enroll and score with one engine.
struct MatcherConfig
{
    Engine engine = Engine::dtw;
    unsigned bits = 6; ///< vq only
    LbgConfig lbg;
    DtwConfig dtw;
};

inline UserModel enroll(std::string user_id, std::span<const FeatureMatrix> train, const SplitSpec& spec,
                        const MatcherConfig& cfg)
{
    if (cfg.engine == Engine::vq)
        return UserModel{std::move(user_id), vq_enroll(train, spec, cfg.bits, cfg.lbg)};
    return UserModel{std::move(user_id), dtw_enroll(train, spec)};
}

inline ScorePair score(const UserModel& model, const FeatureMatrix& test, const SplitSpec& spec,
                       const DtwConfig& dtw_cfg = {})
{
    if (const auto* vq = std::get_if<VqModel>(&model.state))
        return vq_score(*vq, test, spec);
    return dtw_score(std::get<DtwModel>(model.state), test, spec, dtw_cfg);
}

} // namespace sigsplit
#endif // SIGSPLIT_MODEL_HPP_
