// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_ERROR_HPP_
#define SIGSPLIT_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace sigsplit
{

/// Pipeline stage an error originated from. Printed as the message prefix.
enum class Module
{
    signal_core,
    feature_ext,
    vq_engine,
    dtw_engine,
    fusion_eval,
    dataset_io,
    synthgen,
    cli,
};

inline constexpr std::string_view module_name(Module m) noexcept
{
    switch (m)
    {
    case Module::signal_core: return "signal_core";
    case Module::feature_ext: return "feature_ext";
    case Module::vq_engine: return "vq_engine";
    case Module::dtw_engine: return "dtw_engine";
    case Module::fusion_eval: return "fusion_eval";
    case Module::dataset_io: return "dataset_io";
    case Module::synthgen: return "synthgen";
    case Module::cli: return "cli";
    }
    return "unknown";
}

/// Base of every error thrown by the library. what() reads "[module] message".
class Error : public std::runtime_error
{
public:
    Error(Module module, const std::string& message)
        : std::runtime_error("[" + std::string(module_name(module)) + "] " + message),
          module_(module),
          message_(message)
    {}

    Module module() const noexcept { return module_; }
    const std::string& message() const noexcept { return message_; }

private:
    Module module_;
    std::string message_;
};

} // namespace sigsplit
#endif // SIGSPLIT_ERROR_HPP_
