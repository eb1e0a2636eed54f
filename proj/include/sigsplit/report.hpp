// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_REPORT_HPP_
#define SIGSPLIT_REPORT_HPP_

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "pipeline.hpp"

// Report row (one per engine/n_train/split/bits configuration); metric
// values are percentages:
//
//   {"test_name": "TEST1", "engine": "vq", "bits": 6 | null, "n_train": 5,
//    "alpha_mode": "oracle", "p_true": 0.5, "c_miss": 1, "c_fa": 1,
//    "grid_step": 0.01, "delta_half_window": 2,
//    "alpha_opt": {"idr": a, "dcf_random": a, "dcf_skilled": a},
//    "idr":         {"alpha_opt": v, "alpha_0": v | null, "alpha_1": v},
//    "dcf_random":  {...same keys...},
//    "dcf_skilled": {...same keys...}}
//
// alpha_0 is null only for WHOLE, which has no second feature set.

namespace sigsplit
{

inline constexpr const char* kReportSchema = "sigsplit-report/1";

inline nlohmann::json to_json(const MetricCells& c)
{
    return {{"alpha_opt", c.alpha_opt},
            {"alpha_0", c.alpha_0 ? nlohmann::json(*c.alpha_0) : nlohmann::json(nullptr)},
            {"alpha_1", c.alpha_1}};
}

inline MetricCells metric_cells_from_json(const nlohmann::json& j)
{
    MetricCells c;
    c.alpha_opt = j.at("alpha_opt").get<double>();
    c.alpha_1 = j.at("alpha_1").get<double>();
    if (!j.at("alpha_0").is_null())
        c.alpha_0 = j.at("alpha_0").get<double>();
    return c;
}

inline nlohmann::json to_json(const ReportRow& r)
{
    nlohmann::json j;
    j["test_name"] = std::string(to_string(r.split));
    j["engine"] = std::string(to_string(r.engine));
    j["bits"] = r.bits ? nlohmann::json(*r.bits) : nlohmann::json(nullptr);
    j["n_train"] = r.n_train;
    j["alpha_mode"] = std::string(to_string(r.alpha_mode));
    j["p_true"] = r.cost.p_true;
    j["c_miss"] = r.cost.c_miss;
    j["c_fa"] = r.cost.c_fa;
    j["grid_step"] = r.grid_step;
    j["delta_half_window"] = r.delta_half_window;
    j["alpha_opt"] = {{"idr", r.alpha_idr}, {"dcf_random", r.alpha_random}, {"dcf_skilled", r.alpha_skilled}};
    j["idr"] = to_json(r.idr);
    j["dcf_random"] = to_json(r.dcf_random);
    j["dcf_skilled"] = to_json(r.dcf_skilled);
    return j;
}

inline ReportRow report_row_from_json(const nlohmann::json& j)
{
    try
    {
        ReportRow r;
        auto split = parse_split_kind(j.at("test_name").get<std::string>());
        auto engine = parse_engine(j.at("engine").get<std::string>());
        if (!split || !engine)
            throw Error(Module::cli, "report row has unknown test_name or engine");
        r.split = *split;
        r.engine = *engine;
        if (!j.at("bits").is_null())
            r.bits = j.at("bits").get<unsigned>();
        r.n_train = j.at("n_train").get<std::size_t>();
        r.alpha_mode = j.at("alpha_mode").get<std::string>() == "held_out" ? AlphaMode::held_out : AlphaMode::oracle;
        r.cost.p_true = j.at("p_true").get<double>();
        r.cost.c_miss = j.at("c_miss").get<double>();
        r.cost.c_fa = j.at("c_fa").get<double>();
        r.grid_step = j.at("grid_step").get<double>();
        r.delta_half_window = j.at("delta_half_window").get<std::size_t>();
        const auto& a = j.at("alpha_opt");
        r.alpha_idr = a.at("idr").get<double>();
        r.alpha_random = a.at("dcf_random").get<double>();
        r.alpha_skilled = a.at("dcf_skilled").get<double>();
        r.idr = metric_cells_from_json(j.at("idr"));
        r.dcf_random = metric_cells_from_json(j.at("dcf_random"));
        r.dcf_skilled = metric_cells_from_json(j.at("dcf_skilled"));
        return r;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Module::cli, std::string("malformed report row: ") + e.what());
    }
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Full report document. `config` is echoed verbatim; the body carries no
/// timestamps so identical runs produce identical bytes.
inline nlohmann::json report_document(const nlohmann::json& config, const std::vector<ReportRow>& rows)
{
    nlohmann::json doc;
    doc["schema"] = kReportSchema;
    doc["config"] = config;
    auto arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back(to_json(r));
    doc["rows"] = std::move(arr);
    return doc;
}

/// Writes `report_<hash>.json` into dir, where the hash covers the config.
/// An existing file with the same bytes is left alone; different content
/// goes to `report_<hash>-N.json`. Returns the path used.
inline std::filesystem::path write_report_file(const std::filesystem::path& dir, const nlohmann::json& doc)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::string body = doc.dump(2) + "\n";
    const std::string stem = "report_" + fnv1a_hex(doc.at("config").dump());
    for (int n = 0;; ++n)
    {
        const auto path = dir / (stem + (n ? "-" + std::to_string(n) : std::string()) + ".json");
        if (fs::exists(path))
        {
            std::ifstream in(path, std::ios::binary);
            std::stringstream buf;
            buf << in.rdbuf();
            if (buf.str() == body)
                return path;
            continue;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw Error(Module::cli, "cannot write '" + path.string() + "'");
        out << body;
        return path;
    }
}

/// Rows from every *.json report in dir. Unreadable files are listed in
/// `problems` and skipped.
inline std::vector<ReportRow> collect_reports(const std::filesystem::path& dir, std::vector<std::string>& problems)
{
    namespace fs = std::filesystem;
    std::vector<ReportRow> rows;
    if (!fs::is_directory(dir))
    {
        problems.push_back(dir.string() + ": not a directory");
        return rows;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
    {
        try
        {
            std::ifstream in(f, std::ios::binary);
            auto doc = nlohmann::json::parse(in);
            if (doc.value("schema", "") != kReportSchema)
                throw Error(Module::cli, "not a sigsplit report");
            std::vector<ReportRow> here;
            for (const auto& r : doc.at("rows"))
                here.push_back(report_row_from_json(r));
            rows.insert(rows.end(), here.begin(), here.end());
        }
        catch (const std::exception& e)
        {
            problems.push_back(f.filename().string() + ": " + e.what());
        }
    }
    return rows;
}

/// Sort key (engine, n_train, split, bits); DTW rows have no bits.
inline void sort_rows(std::vector<ReportRow>& rows)
{
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::make_tuple(to_string(a.engine), a.n_train, static_cast<int>(a.split), a.bits.value_or(0)) <
               std::make_tuple(to_string(b.engine), b.n_train, static_cast<int>(b.split), b.bits.value_or(0));
    });
}

namespace detail
{

inline std::string fmt2(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct TableColumn
{
    const char* name;
    std::optional<double> (*get)(const ReportRow&);
    bool higher_is_better;
};

inline const std::vector<TableColumn>& table_columns()
{
    static const std::vector<TableColumn> cols = {
        {"idr_opt", [](const ReportRow& r) -> std::optional<double> { return r.idr.alpha_opt; }, true},
        {"idr_a0", [](const ReportRow& r) { return r.idr.alpha_0; }, true},
        {"idr_a1", [](const ReportRow& r) -> std::optional<double> { return r.idr.alpha_1; }, true},
        {"dcf_r_opt", [](const ReportRow& r) -> std::optional<double> { return r.dcf_random.alpha_opt; }, false},
        {"dcf_r_a0", [](const ReportRow& r) { return r.dcf_random.alpha_0; }, false},
        {"dcf_r_a1", [](const ReportRow& r) -> std::optional<double> { return r.dcf_random.alpha_1; }, false},
        {"dcf_s_opt", [](const ReportRow& r) -> std::optional<double> { return r.dcf_skilled.alpha_opt; }, false},
        {"dcf_s_a0", [](const ReportRow& r) { return r.dcf_skilled.alpha_0; }, false},
        {"dcf_s_a1", [](const ReportRow& r) -> std::optional<double> { return r.dcf_skilled.alpha_1; }, false},
    };
    return cols;
}

} // namespace detail

inline std::string rows_to_csv(const std::vector<ReportRow>& rows)
{
    std::ostringstream os;
    os << "engine,n_train,test_name,bits,alpha_mode";
    for (const auto& c : detail::table_columns())
        os << ',' << c.name;
    os << ",alpha_idr,alpha_random,alpha_skilled\n";
    for (const auto& r : rows)
    {
        os << to_string(r.engine) << ',' << r.n_train << ',' << to_string(r.split) << ','
           << (r.bits ? std::to_string(*r.bits) : std::string()) << ',' << to_string(r.alpha_mode);
        for (const auto& c : detail::table_columns())
        {
            os << ',';
            if (auto v = c.get(r))
                os << detail::fmt2(*v);
        }
        os << ',' << detail::fmt2(r.alpha_idr) << ',' << detail::fmt2(r.alpha_random) << ','
           << detail::fmt2(r.alpha_skilled) << '\n';
    }
    return os.str();
}

/// Markdown table; the best value of each metric column (highest IDR,
/// lowest DCF) is bold.
inline std::string rows_to_markdown(const std::vector<ReportRow>& rows)
{
    const auto& cols = detail::table_columns();
    std::vector<std::optional<double>> best(cols.size());
    for (const auto& r : rows)
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (auto v = cols[i].get(r))
                if (!best[i] || (cols[i].higher_is_better ? *v > *best[i] : *v < *best[i]))
                    best[i] = *v;

    std::ostringstream os;
    os << "| engine | n_train | test | bits |";
    for (const auto& c : cols)
        os << ' ' << c.name << " |";
    os << "\n|---|---|---|---|";
    for (std::size_t i = 0; i < cols.size(); ++i)
        os << "---|";
    os << '\n';
    for (const auto& r : rows)
    {
        os << "| " << to_string(r.engine) << " | " << r.n_train << " | " << to_string(r.split) << " | "
           << (r.bits ? std::to_string(*r.bits) : std::string()) << " |";
        for (std::size_t i = 0; i < cols.size(); ++i)
        {
            auto v = cols[i].get(r);
            if (!v)
                os << "  |";
            else if (detail::fmt2(*v) == detail::fmt2(*best[i]))
                os << " **" << detail::fmt2(*v) << "** |";
            else
                os << ' ' << detail::fmt2(*v) << " |";
        }
        os << '\n';
    }
    return os.str();
}

} // namespace sigsplit
#endif // SIGSPLIT_REPORT_HPP_
