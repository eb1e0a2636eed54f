// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_DATASET_IO_HPP_
#define SIGSPLIT_DATASET_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "signal.hpp"

namespace sigsplit
{

// ---------------------------------------------------------------------------
// SVC2004 text format
//
//   L
//   X Y timestamp button_status azimuth altitude pressure     (L lines)
//
// All fields are integers. The button status is not kept: pressure 0 already
// marks pen-up, and the writer regenerates it as (pressure > 0).

enum class ParseErrorKind
{
    empty_input,
    count_mismatch,
    short_line,
    long_line,
    non_numeric,
    invalid_value,
    bad_header,
};

inline constexpr std::string_view to_string(ParseErrorKind k) noexcept
{
    switch (k)
    {
    case ParseErrorKind::empty_input: return "empty input";
    case ParseErrorKind::count_mismatch: return "line count mismatch";
    case ParseErrorKind::short_line: return "short line";
    case ParseErrorKind::long_line: return "too many fields";
    case ParseErrorKind::non_numeric: return "non-numeric token";
    case ParseErrorKind::invalid_value: return "invalid value";
    case ParseErrorKind::bad_header: return "bad header";
    }
    return "?";
}

/// Structured parse failure. line is 1-based; 0 when not tied to a line.
class ParseError : public Error
{
public:
    ParseError(ParseErrorKind kind, std::size_t line, const std::string& detail)
        : Error(Module::dataset_io, std::string(to_string(kind)) +
                                        (line ? " at line " + std::to_string(line) : std::string()) +
                                        (detail.empty() ? std::string() : ": " + detail)),
          kind_(kind),
          line_(line)
    {}

    ParseErrorKind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }

private:
    ParseErrorKind kind_;
    std::size_t line_;
};

namespace detail
{

inline std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size())
    {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r')
            ++j;
        if (j > i)
            out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::optional<long long> to_integer(std::string_view tok)
{
    long long v = 0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (first != last && *first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last)
        return std::nullopt;
    return v;
}

/// Splits text into lines, dropping a trailing run of blank lines.
inline std::vector<std::string_view> lines_of(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size())
    {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos)
        {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    while (!out.empty() && split_ws(out.back()).empty())
        out.pop_back();
    return out;
}

} // namespace detail

/// Parses one SVC2004 file. Only the samples are filled in; identity comes
/// from the manifest.
inline RawSignature parse_svc(std::string_view text)
{
    const auto lines = detail::lines_of(text);
    if (lines.empty())
        throw ParseError(ParseErrorKind::empty_input, 0, "no point count");
    const auto head = detail::split_ws(lines[0]);
    if (head.size() != 1)
        throw ParseError(ParseErrorKind::bad_header, 1, "first line must hold the point count only");
    const auto declared = detail::to_integer(head[0]);
    if (!declared)
        throw ParseError(ParseErrorKind::non_numeric, 1, "'" + std::string(head[0]) + "'");
    if (*declared < 0)
        throw ParseError(ParseErrorKind::bad_header, 1, "negative point count");
    const std::size_t data_lines = lines.size() - 1;
    if (data_lines != static_cast<std::size_t>(*declared))
    {
        throw ParseError(ParseErrorKind::count_mismatch, 0,
                         "declared " + std::to_string(*declared) + " points, found " + std::to_string(data_lines));
    }

    RawSignature sig;
    sig.samples.reserve(data_lines);
    for (std::size_t i = 1; i < lines.size(); ++i)
    {
        const auto toks = detail::split_ws(lines[i]);
        if (toks.size() < 7)
            throw ParseError(ParseErrorKind::short_line, i + 1, "expected 7 fields, found " + std::to_string(toks.size()));
        if (toks.size() > 7)
            throw ParseError(ParseErrorKind::long_line, i + 1, "expected 7 fields, found " + std::to_string(toks.size()));
        long long v[7];
        for (std::size_t k = 0; k < 7; ++k)
        {
            auto parsed = detail::to_integer(toks[k]);
            if (!parsed)
                throw ParseError(ParseErrorKind::non_numeric, i + 1, "'" + std::string(toks[k]) + "'");
            v[k] = *parsed;
        }
        if (v[6] < 0)
            throw ParseError(ParseErrorKind::invalid_value, i + 1, "negative pressure");
        Sample s;
        s.x = static_cast<double>(v[0]);
        s.y = static_cast<double>(v[1]);
        s.t = static_cast<double>(v[2]);
        s.az = static_cast<double>(v[4]);
        s.al = static_cast<double>(v[5]);
        s.p = static_cast<double>(v[6]);
        sig.samples.push_back(s);
    }
    return sig;
}

/// Writes SVC2004 text. Values are rounded to integers; missing timestamps
/// are filled at 10 ms spacing.
inline std::string write_svc(const RawSignature& sig)
{
    std::ostringstream os;
    os << sig.samples.size() << '\n';
    for (std::size_t i = 0; i < sig.samples.size(); ++i)
    {
        const auto& s = sig.samples[i];
        const long long t = s.t ? std::llround(*s.t) : static_cast<long long>(i) * 10;
        const long long p = std::llround(s.p);
        os << std::llround(s.x) << ' ' << std::llround(s.y) << ' ' << t << ' ' << (p > 0 ? 1 : 0) << ' '
           << std::llround(s.az) << ' ' << std::llround(s.al) << ' ' << p << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Generic CSV signature format: header x,y,p,az,al[,t], one sample per line.

inline RawSignature parse_signature_csv(std::string_view text)
{
    const auto lines = detail::lines_of(text);
    if (lines.empty())
        throw ParseError(ParseErrorKind::empty_input, 0, "no header");
    std::string header(lines[0]);
    header.erase(std::remove(header.begin(), header.end(), '\r'), header.end());
    bool with_t = false;
    if (header == "x,y,p,az,al,t")
        with_t = true;
    else if (header != "x,y,p,az,al")
        throw ParseError(ParseErrorKind::bad_header, 1, "expected 'x,y,p,az,al[,t]'");
    const std::size_t nfields = with_t ? 6 : 5;

    RawSignature sig;
    for (std::size_t i = 1; i < lines.size(); ++i)
    {
        std::vector<std::string> f;
        std::string cur;
        for (char c : lines[i])
        {
            if (c == ',')
            {
                f.push_back(cur);
                cur.clear();
            }
            else if (c != '\r' && c != ' ' && c != '\t')
                cur += c;
        }
        f.push_back(cur);
        if (f.size() < nfields)
            throw ParseError(ParseErrorKind::short_line, i + 1, "expected " + std::to_string(nfields) + " fields");
        if (f.size() > nfields)
            throw ParseError(ParseErrorKind::long_line, i + 1, "expected " + std::to_string(nfields) + " fields");
        double v[6] = {};
        for (std::size_t k = 0; k < nfields; ++k)
        {
            const char* first = f[k].data();
            const char* last = f[k].data() + f[k].size();
            auto [ptr, ec] = std::from_chars(first, last, v[k]);
            if (ec != std::errc() || ptr != last || first == last || !std::isfinite(v[k]))
                throw ParseError(ParseErrorKind::non_numeric, i + 1, "'" + f[k] + "'");
        }
        if (v[2] < 0)
            throw ParseError(ParseErrorKind::invalid_value, i + 1, "negative pressure");
        Sample s{v[0], v[1], v[2], v[3], v[4], std::nullopt};
        if (with_t)
            s.t = v[5];
        sig.samples.push_back(s);
    }
    return sig;
}

inline std::string write_signature_csv(const RawSignature& sig)
{
    const bool with_t = !sig.samples.empty() &&
                        std::all_of(sig.samples.begin(), sig.samples.end(), [](const Sample& s) { return s.t.has_value(); });
    std::ostringstream os;
    os.precision(17);
    os << (with_t ? "x,y,p,az,al,t\n" : "x,y,p,az,al\n");
    for (const auto& s : sig.samples)
    {
        os << s.x << ',' << s.y << ',' << s.p << ',' << s.az << ',' << s.al;
        if (with_t)
            os << ',' << *s.t;
        os << '\n';
    }
    return os.str();
}

/// Picks the parser from the extension: .csv is the generic format, anything
/// else is SVC.
inline RawSignature parse_signature_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Module::dataset_io, "cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const auto text = buf.str();
    if (path.extension() == ".csv")
        return parse_signature_csv(text);
    return parse_svc(text);
}

// ---------------------------------------------------------------------------
// Manifest: one record per line, `relative-path user_id kind session`, where
// kind is `genuine` or `skilled`. Blank lines and `#` comments are ignored.

struct ManifestEntry
{
    std::string path;
    std::string user_id;
    SignatureKind kind = SignatureKind::genuine;
    int session = 0;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

inline std::vector<ManifestEntry> parse_manifest(std::string_view text)
{
    std::vector<ManifestEntry> out;
    std::size_t lineno = 0;
    for (auto line : detail::lines_of(text))
    {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        const auto toks = detail::split_ws(line);
        if (toks.empty())
            continue;
        if (toks.size() != 4)
            throw ParseError(toks.size() < 4 ? ParseErrorKind::short_line : ParseErrorKind::long_line, lineno,
                             "manifest records are 'path user kind session'");
        ManifestEntry e;
        e.path = std::string(toks[0]);
        e.user_id = std::string(toks[1]);
        if (toks[2] == "genuine")
            e.kind = SignatureKind::genuine;
        else if (toks[2] == "skilled")
            e.kind = SignatureKind::skilled_forgery;
        else
            throw ParseError(ParseErrorKind::invalid_value, lineno, "kind must be genuine or skilled");
        auto session = detail::to_integer(toks[3]);
        if (!session)
            throw ParseError(ParseErrorKind::non_numeric, lineno, "'" + std::string(toks[3]) + "'");
        e.session = static_cast<int>(*session);
        out.push_back(std::move(e));
    }
    return out;
}

inline std::string write_manifest(const std::vector<ManifestEntry>& entries, std::string_view preamble = {})
{
    std::ostringstream os;
    os << preamble;
    for (const auto& e : entries)
        os << e.path << ' ' << e.user_id << ' ' << to_string(e.kind) << ' ' << e.session << '\n';
    return os.str();
}

/// Every problem found while loading a dataset, reported at once.
class DatasetError : public Error
{
public:
    explicit DatasetError(std::vector<std::string> issues)
        : Error(Module::dataset_io, summarize(issues)), issues_(std::move(issues))
    {}

    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string summarize(const std::vector<std::string>& issues)
    {
        std::string s = std::to_string(issues.size()) + " problem(s) loading dataset";
        for (const auto& i : issues)
            s += "\n  " + i;
        return s;
    }

    std::vector<std::string> issues_;
};

/// Loads every file listed in the manifest (paths relative to root).
/// Users come out sorted by id, signatures sorted by session index.
/// Signatures shorter than min_length are rejected.
inline Dataset load_dataset(const std::filesystem::path& root, const std::filesystem::path& manifest_path,
                            std::size_t min_length)
{
    std::ifstream in(manifest_path);
    if (!in)
        throw DatasetError({"no users found: cannot read manifest '" + manifest_path.string() + "'"});
    std::stringstream buf;
    buf << in.rdbuf();
    std::vector<ManifestEntry> entries;
    try
    {
        entries = parse_manifest(buf.str());
    }
    catch (const ParseError& e)
    {
        throw DatasetError({manifest_path.string() + ": " + e.message()});
    }
    if (entries.empty())
        throw DatasetError({"no users found in manifest '" + manifest_path.string() + "'"});

    std::vector<std::string> issues;
    struct Loaded
    {
        int session;
        std::size_t order;
        RawSignature sig;
    };
    std::map<std::string, std::pair<std::vector<Loaded>, std::vector<Loaded>>> by_user;
    for (std::size_t i = 0; i < entries.size(); ++i)
    {
        const auto& e = entries[i];
        const auto file = root / e.path;
        auto& slot = by_user[e.user_id];
        if (!std::filesystem::exists(file))
        {
            issues.push_back(e.path + ": missing file for user '" + e.user_id + "'");
            continue;
        }
        try
        {
            auto sig = parse_signature_file(file);
            sig.user_id = e.user_id;
            sig.kind = e.kind;
            sig.session = e.session;
            if (sig.length() < min_length)
            {
                issues.push_back(e.path + ": " + std::to_string(sig.length()) +
                                 " samples, shorter than the delta window (" + std::to_string(min_length) + ")");
                continue;
            }
            auto& list = e.kind == SignatureKind::genuine ? slot.first : slot.second;
            list.push_back({e.session, i, std::move(sig)});
        }
        catch (const Error& err)
        {
            issues.push_back(e.path + ": " + err.message());
        }
    }
    if (!issues.empty())
        throw DatasetError(std::move(issues));

    Dataset ds;
    for (auto& [user, lists] : by_user)
    {
        auto order = [](const Loaded& a, const Loaded& b) {
            return a.session != b.session ? a.session < b.session : a.order < b.order;
        };
        std::sort(lists.first.begin(), lists.first.end(), order);
        std::sort(lists.second.begin(), lists.second.end(), order);
        UserRecord rec;
        rec.user_id = user;
        for (auto& l : lists.first)
            rec.genuine.push_back(std::move(l.sig));
        for (auto& l : lists.second)
            rec.skilled.push_back(std::move(l.sig));
        ds.users.push_back(std::move(rec));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Protocol

/// Enrollment protocol: the first n_train genuine signatures (session order)
/// train the model, the remaining genuine ones and all skilled forgeries are
/// test material.
struct Protocol
{
    std::size_t n_train = 5;
};

template <class Item>
struct UserSplit
{
    std::string user_id;
    std::vector<Item> train;
    std::vector<Item> test_genuine;
    std::vector<Item> skilled;
};

template <class Item>
struct ProtocolSplit
{
    std::vector<UserSplit<Item>> users;

    /// Random-forgery pool for one target: every other user's test genuine
    /// signatures, as (user index, signature index) pairs.
    std::vector<std::pair<std::size_t, std::size_t>> random_pool(std::size_t target) const
    {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t u = 0; u < users.size(); ++u)
        {
            if (u == target)
                continue;
            for (std::size_t s = 0; s < users[u].test_genuine.size(); ++s)
                out.emplace_back(u, s);
        }
        return out;
    }
};

template <class Item>
ProtocolSplit<Item> split_protocol(const BasicDataset<Item>& ds, const Protocol& proto)
{
    if (proto.n_train < 1)
        throw Error(Module::dataset_io, "protocol: n_train must be >= 1");
    ProtocolSplit<Item> out;
    for (const auto& u : ds.users)
    {
        if (u.genuine.size() < proto.n_train + 1)
        {
            throw Error(Module::dataset_io, "user '" + u.user_id + "' has " + std::to_string(u.genuine.size()) +
                                                " genuine signatures; protocol needs " +
                                                std::to_string(proto.n_train + 1));
        }
        UserSplit<Item> s;
        s.user_id = u.user_id;
        const auto cut = u.genuine.begin() + static_cast<std::ptrdiff_t>(proto.n_train);
        s.train.assign(u.genuine.begin(), cut);
        s.test_genuine.assign(cut, u.genuine.end());
        s.skilled = u.skilled;
        out.users.push_back(std::move(s));
    }
    return out;
}

} // namespace sigsplit
#endif // SIGSPLIT_DATASET_IO_HPP_
