// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_MODEL_IO_HPP_
#define SIGSPLIT_MODEL_IO_HPP_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "model.hpp"
#include "signal.hpp"

// JSON records for trained models:
//
//   codebook: {"bits": b, "dim": D, "channels": ["x", ...], "centroids": [row-major K*D]}
//   matrix:   {"rows": L, "channels": [...], "data": [row-major L*D]}
//   user:     {"user_id": "...", "engine": "vq"|"dtw", "split": "TEST1",
//              "cb1": codebook, "cb2": codebook|null}              (vq)
//              "set1": [matrix...], "set2": [matrix...]}           (dtw)
//
// Doubles are written with round-trip precision, so a reload is bit-exact.

namespace sigsplit
{

namespace detail
{

inline nlohmann::json channels_to_json(const std::vector<FeatureChannel>& chans)
{
    auto arr = nlohmann::json::array();
    for (const auto& c : chans)
        arr.push_back(to_string(c));
    return arr;
}

inline std::vector<FeatureChannel> channels_from_json(const nlohmann::json& j)
{
    std::vector<FeatureChannel> out;
    for (const auto& v : j)
    {
        auto c = parse_feature_channel(v.get<std::string>());
        if (!c)
            throw Error(Module::dataset_io, "unknown channel '" + v.get<std::string>() + "' in model file");
        out.push_back(*c);
    }
    return out;
}

} // namespace detail

inline nlohmann::json to_json(const Codebook& cb)
{
    return {{"bits", cb.bits},
            {"dim", cb.dim()},
            {"channels", detail::channels_to_json(cb.channels)},
            {"centroids", cb.centroids}};
}

inline Codebook codebook_from_json(const nlohmann::json& j)
{
    Codebook cb;
    cb.bits = j.at("bits").get<unsigned>();
    cb.channels = detail::channels_from_json(j.at("channels"));
    cb.centroids = j.at("centroids").get<std::vector<double>>();
    if (j.at("dim").get<std::size_t>() != cb.dim() || cb.centroids.size() != (std::size_t{1} << cb.bits) * cb.dim())
        throw Error(Module::dataset_io, "codebook record has inconsistent bits/dim/centroid count");
    return cb;
}

inline nlohmann::json to_json(const FeatureMatrix& m)
{
    return {{"rows", m.rows()},
            {"channels", detail::channels_to_json(m.channels())},
            {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

inline FeatureMatrix matrix_from_json(const nlohmann::json& j)
{
    return FeatureMatrix(j.at("rows").get<std::size_t>(), detail::channels_from_json(j.at("channels")),
                         j.at("data").get<std::vector<double>>());
}

inline nlohmann::json to_json(const UserModel& m)
{
    nlohmann::json j{{"user_id", m.user_id},
                     {"engine", std::string(to_string(m.engine()))},
                     {"split", std::string(to_string(m.split()))}};
    if (const auto* vq = std::get_if<VqModel>(&m.state))
    {
        j["cb1"] = to_json(vq->cb1);
        j["cb2"] = vq->cb2 ? to_json(*vq->cb2) : nlohmann::json(nullptr);
    }
    else
    {
        const auto& d = std::get<DtwModel>(m.state);
        auto s1 = nlohmann::json::array();
        auto s2 = nlohmann::json::array();
        for (const auto& r : d.set1)
            s1.push_back(to_json(r));
        for (const auto& r : d.set2)
            s2.push_back(to_json(r));
        j["set1"] = std::move(s1);
        j["set2"] = std::move(s2);
    }
    return j;
}

inline UserModel user_model_from_json(const nlohmann::json& j)
{
    try
    {
        const auto split = parse_split_kind(j.at("split").get<std::string>());
        const auto engine = parse_engine(j.at("engine").get<std::string>());
        if (!split || !engine)
            throw Error(Module::dataset_io, "model record has unknown split or engine");
        UserModel m;
        m.user_id = j.at("user_id").get<std::string>();
        if (*engine == Engine::vq)
        {
            VqModel vq{*split, codebook_from_json(j.at("cb1")), std::nullopt};
            if (!j.at("cb2").is_null())
                vq.cb2 = codebook_from_json(j.at("cb2"));
            m.state = std::move(vq);
        }
        else
        {
            DtwModel d{*split, {}, {}};
            for (const auto& r : j.at("set1"))
                d.set1.push_back(matrix_from_json(r));
            for (const auto& r : j.at("set2"))
                d.set2.push_back(matrix_from_json(r));
            m.state = std::move(d);
        }
        return m;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Module::dataset_io, std::string("malformed model record: ") + e.what());
    }
}

} // namespace sigsplit
#endif // SIGSPLIT_MODEL_IO_HPP_
