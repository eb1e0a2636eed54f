// Copyright 2026 The sigsplit Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIGSPLIT_SYNTH_HPP_
#define SIGSPLIT_SYNTH_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dataset_io.hpp"
#include "dtw.hpp"
#include "error.hpp"
#include "features.hpp"
#include "signal.hpp"

namespace sigsplit
{

struct SynthConfig
{
    std::size_t n_users = 20;
    std::size_t genuine_per_user = 10;
    std::size_t skilled_per_user = 5;
    std::size_t min_length = 100;
    std::size_t max_length = 160;
    double sigma_genuine = 0.15; ///< jitter, as a fraction of each channel's spread
    double sigma_forgery = 0.30;
    double warp_genuine = 0.20;  ///< std of the time-warp coefficients
    double warp_forgery = 0.35;
    double shape_variation = 0.35; ///< per-signature wave amplitude/phase jitter
    std::uint64_t rng_seed = 1;

    void validate(std::size_t min_signature_length) const
    {
        auto fail = [](const std::string& m) { throw Error(Module::synthgen, m); };
        if (n_users < 1)
            fail("n_users must be >= 1");
        if (genuine_per_user < 1)
            fail("genuine_per_user must be >= 1");
        if (!(sigma_genuine > 0.0))
            fail("sigma_genuine must be > 0");
        if (!(sigma_forgery > sigma_genuine))
            fail("sigma_forgery must exceed sigma_genuine");
        if (!(warp_genuine >= 0.0) || !(warp_forgery >= 0.0))
            fail("warp strengths must be >= 0");
        if (!(shape_variation >= 0.0))
            fail("shape_variation must be >= 0");
        if (min_length > max_length)
            fail("min_length exceeds max_length");
        if (min_length < min_signature_length)
            fail("min_length " + std::to_string(min_length) + " is below the delta window (" +
                 std::to_string(min_signature_length) + ")");
    }
};

/// Mean WHOLE-feature DTW distance of genuine samples and of skilled
/// forgeries to the noise-free prototype of the claimed user.
struct SeparabilityCheck
{
    double genuine_mean = 0.0;
    double skilled_mean = 0.0;
    std::size_t attempts = 1;

    bool passed() const noexcept { return genuine_mean < skilled_mean; }
};

struct SynthCorpus
{
    Dataset dataset;
    std::vector<ManifestEntry> manifest;
    SeparabilityCheck check;
    std::uint64_t seed_requested = 0;
    std::uint64_t seed_used = 0;
};

namespace detail
{

inline std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Wave
{
    double amp;
    double freq;
    double phase;
};

/// offset + slope*s + sum of sinusoids, s in [0, 1].
struct Curve
{
    double offset = 0.0;
    double slope = 0.0;
    std::vector<Wave> waves;

    double operator()(double s) const noexcept
    {
        double v = offset + slope * s;
        for (const auto& w : waves)
            v += w.amp * std::sin(2.0 * std::numbers::pi * w.freq * s + w.phase);
        return v;
    }
};

/// Latent per-user trajectory and dynamics.
struct Prototype
{
    Curve x, y, p, az, al;
    double spread[5] = {1, 1, 1, 1, 1}; ///< channel std, sets the jitter scale
};

inline Prototype draw_prototype(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * U(rng); };
    auto waves = [&](std::size_t n, double flo, double fhi, double alo, double ahi) {
        std::vector<Wave> w;
        for (std::size_t i = 0; i < n; ++i)
            w.push_back({uni(alo, ahi), uni(flo, fhi), uni(0.0, 2.0 * std::numbers::pi)});
        return w;
    };
    Prototype pr;
    const auto nx = 3 + static_cast<std::size_t>(U(rng) * 3.0);
    const auto ny = 3 + static_cast<std::size_t>(U(rng) * 3.0);
    pr.x = {uni(2000, 4000), uni(2000, 6000), waves(nx, 0.5, 4.0, 200.0, 1200.0)};
    pr.y = {uni(2000, 4000), uni(-500, 500), waves(ny, 0.5, 4.0, 200.0, 1000.0)};
    pr.p = {uni(300, 600), 0.0, waves(2, 0.5, 3.0, 50.0, 200.0)};
    pr.az = {uni(300, 3000), uni(-300, 300), waves(1, 0.3, 1.5, 20.0, 100.0)};
    pr.al = {uni(300, 800), uni(-150, 150), waves(1, 0.3, 1.5, 10.0, 60.0)};

    const Curve* curves[5] = {&pr.x, &pr.y, &pr.p, &pr.az, &pr.al};
    for (std::size_t c = 0; c < 5; ++c)
    {
        constexpr std::size_t grid = 256;
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t i = 0; i < grid; ++i)
        {
            const double v = (*curves[c])(static_cast<double>(i) / (grid - 1));
            sum += v;
            sq += v * v;
        }
        const double mean = sum / grid;
        pr.spread[c] = std::max(1.0, std::sqrt(std::max(0.0, sq / grid - mean * mean)));
    }
    return pr;
}

/// Smooth monotone map of [0,1] onto itself:
/// s + sum_k c_k sin(k*pi*s) / (k*pi), with sum |c_k| < 1.
struct TimeWarp
{
    double c[3] = {0, 0, 0};

    static TimeWarp draw(std::mt19937_64& rng, double strength)
    {
        TimeWarp w;
        if (strength <= 0.0)
            return w;
        std::normal_distribution<double> N(0.0, strength);
        double total = 0.0;
        for (auto& v : w.c)
        {
            v = N(rng);
            total += std::abs(v);
        }
        if (total > 0.9)
            for (auto& v : w.c)
                v *= 0.9 / total;
        return w;
    }

    double operator()(double s) const noexcept
    {
        double v = s;
        for (int k = 0; k < 3; ++k)
        {
            const double kp = (k + 1) * std::numbers::pi;
            v += c[k] * std::sin(kp * s) / kp;
        }
        return v;
    }
};

struct Rendering
{
    const Prototype* shape;    ///< source of x, y
    const Prototype* dynamics; ///< source of p, az, al
    double shape_sigma;
    double dynamics_sigma;
    double warp;
    double variation; ///< relative amplitude / absolute phase jitter per wave
};

/// A copy of the prototype with every wave's amplitude scaled by
/// (1 + N(0, v)) and its phase shifted by N(0, v).
inline Prototype vary(const Prototype& p, double v, std::mt19937_64& rng)
{
    Prototype out = p;
    if (v <= 0.0)
        return out;
    std::normal_distribution<double> N(0.0, v);
    for (Curve* c : {&out.x, &out.y, &out.p, &out.az, &out.al})
        for (auto& w : c->waves)
        {
            w.amp *= 1.0 + N(rng);
            w.phase += N(rng);
        }
    return out;
}

inline RawSignature render(const Rendering& base, std::size_t length, std::mt19937_64& rng, bool noise_free = false)
{
    Prototype shape_var;
    Prototype dyn_var;
    Rendering r = base;
    if (!noise_free)
    {
        shape_var = vary(*base.shape, base.variation, rng);
        dyn_var = vary(*base.dynamics, base.variation, rng);
        r.shape = &shape_var;
        r.dynamics = &dyn_var;
    }
    const auto warp = noise_free ? TimeWarp{} : TimeWarp::draw(rng, r.warp);
    std::normal_distribution<double> N(0.0, 1.0);
    auto jitter = [&](double sigma, double spread) { return noise_free ? 0.0 : N(rng) * sigma * spread; };
    RawSignature sig;
    sig.samples.reserve(length);
    for (std::size_t i = 0; i < length; ++i)
    {
        const double s = warp(static_cast<double>(i) / static_cast<double>(length - 1));
        Sample smp;
        smp.x = std::round(r.shape->x(s) + jitter(r.shape_sigma, r.shape->spread[0]));
        smp.y = std::round(r.shape->y(s) + jitter(r.shape_sigma, r.shape->spread[1]));
        smp.p = std::max(0.0, std::round(r.dynamics->p(s) + jitter(r.dynamics_sigma, r.dynamics->spread[2])));
        smp.az = std::round(r.dynamics->az(s) + jitter(r.dynamics_sigma, r.dynamics->spread[3]));
        smp.al = std::round(r.dynamics->al(s) + jitter(r.dynamics_sigma, r.dynamics->spread[4]));
        smp.t = static_cast<double>(i) * 10.0;
        sig.samples.push_back(smp);
    }
    return sig;
}

inline std::string user_name(std::size_t index, std::size_t n_users)
{
    const std::size_t width = std::max<std::size_t>(3, std::to_string(n_users).size());
    std::string digits = std::to_string(index + 1);
    return "u" + std::string(width - digits.size(), '0') + digits;
}

inline std::string two_digits(std::size_t i)
{
    return (i < 10 ? "0" : "") + std::to_string(i);
}

struct DrawnCorpus
{
    Dataset dataset;
    std::vector<ManifestEntry> manifest;
    std::vector<RawSignature> prototypes; ///< noise-free renderings, one per user
};

inline DrawnCorpus draw_corpus(const SynthConfig& cfg, std::uint64_t seed)
{
    const std::size_t n = cfg.n_users;
    std::vector<Prototype> protos;
    std::vector<std::mt19937_64> user_rng;
    for (std::size_t u = 0; u < n; ++u)
    {
        user_rng.emplace_back(splitmix64(seed ^ splitmix64(u + 1)));
        protos.push_back(draw_prototype(user_rng.back()));
    }

    DrawnCorpus out;
    const std::size_t mid = (cfg.min_length + cfg.max_length) / 2;
    for (std::size_t u = 0; u < n; ++u)
    {
        auto& rng = user_rng[u];
        std::uniform_int_distribution<std::size_t> len(cfg.min_length, cfg.max_length);
        UserRecord rec;
        rec.user_id = user_name(u, n);

        const Rendering genuine{&protos[u], &protos[u], cfg.sigma_genuine, cfg.sigma_genuine, cfg.warp_genuine,
                                cfg.shape_variation};
        for (std::size_t g = 0; g < cfg.genuine_per_user; ++g)
        {
            auto sig = render(genuine, len(rng), rng);
            sig.user_id = rec.user_id;
            sig.kind = SignatureKind::genuine;
            sig.session = static_cast<int>(g + 1);
            out.manifest.push_back({rec.user_id + "/g" + two_digits(g + 1) + ".svc", rec.user_id,
                                    SignatureKind::genuine, static_cast<int>(g + 1)});
            rec.genuine.push_back(std::move(sig));
        }
        for (std::size_t k = 0; k < cfg.skilled_per_user; ++k)
        {
            std::size_t forger = u;
            if (n > 1)
                forger = (u + 1 + std::uniform_int_distribution<std::size_t>(0, n - 2)(rng)) % n;
            const Rendering forged{&protos[u], &protos[forger], cfg.sigma_forgery, cfg.sigma_genuine, cfg.warp_forgery,
                                   cfg.shape_variation};
            auto sig = render(forged, len(rng), rng);
            sig.user_id = rec.user_id;
            sig.kind = SignatureKind::skilled_forgery;
            sig.session = static_cast<int>(k + 1);
            out.manifest.push_back({rec.user_id + "/s" + two_digits(k + 1) + ".svc", rec.user_id,
                                    SignatureKind::skilled_forgery, static_cast<int>(k + 1)});
            rec.skilled.push_back(std::move(sig));
        }
        const Rendering clean{&protos[u], &protos[u], cfg.sigma_genuine, cfg.sigma_genuine, 0.0, 0.0};
        auto proto_sig = render(clean, mid, rng, true);
        proto_sig.user_id = rec.user_id;
        out.prototypes.push_back(std::move(proto_sig));
        out.dataset.users.push_back(std::move(rec));
    }
    return out;
}

inline SeparabilityCheck measure_separability(const DrawnCorpus& c, const DeltaConfig& delta_cfg)
{
    SeparabilityCheck chk;
    double gsum = 0.0;
    double ssum = 0.0;
    std::size_t gn = 0;
    std::size_t sn = 0;
    for (std::size_t u = 0; u < c.dataset.users.size(); ++u)
    {
        const auto proto = extract(c.prototypes[u], delta_cfg);
        for (const auto& g : c.dataset.users[u].genuine)
        {
            gsum += dtw(proto, extract(g, delta_cfg));
            ++gn;
        }
        for (const auto& s : c.dataset.users[u].skilled)
        {
            ssum += dtw(proto, extract(s, delta_cfg));
            ++sn;
        }
    }
    chk.genuine_mean = gn ? gsum / static_cast<double>(gn) : 0.0;
    // Without forgeries there is nothing to separate from.
    chk.skilled_mean = sn ? ssum / static_cast<double>(sn) : std::numeric_limits<double>::infinity();
    return chk;
}

} // namespace detail

/// Draws a corpus. If genuine samples are not on average closer to their
/// prototype than skilled forgeries, the next seed is tried (up to 100 times).
inline SynthCorpus generate(const SynthConfig& cfg, const DeltaConfig& delta_cfg = {})
{
    delta_cfg.validate();
    cfg.validate(delta_cfg.window());
    SynthCorpus out;
    out.seed_requested = cfg.rng_seed;
    for (std::size_t attempt = 0; attempt < 100; ++attempt)
    {
        const std::uint64_t seed = cfg.rng_seed + attempt;
        auto drawn = detail::draw_corpus(cfg, seed);
        auto chk = detail::measure_separability(drawn, delta_cfg);
        chk.attempts = attempt + 1;
        if (chk.passed())
        {
            out.dataset = std::move(drawn.dataset);
            out.manifest = std::move(drawn.manifest);
            out.check = chk;
            out.seed_used = seed;
            return out;
        }
    }
    throw Error(Module::synthgen, "no seed within 100 attempts produced a separable corpus");
}

inline std::string describe(const SynthConfig& cfg)
{
    std::ostringstream os;
    os << "n_users=" << cfg.n_users << '\n'
       << "genuine_per_user=" << cfg.genuine_per_user << '\n'
       << "skilled_per_user=" << cfg.skilled_per_user << '\n'
       << "min_length=" << cfg.min_length << '\n'
       << "max_length=" << cfg.max_length << '\n'
       << "sigma_genuine=" << cfg.sigma_genuine << '\n'
       << "sigma_forgery=" << cfg.sigma_forgery << '\n'
       << "warp_genuine=" << cfg.warp_genuine << '\n'
       << "warp_forgery=" << cfg.warp_forgery << '\n'
       << "shape_variation=" << cfg.shape_variation << '\n'
       << "rng_seed=" << cfg.rng_seed << '\n';
    return os.str();
}

/// Writes <out>/<user>/{gNN,sNN}.svc, <out>/manifest.txt (with the
/// separability check as comments) and <out>/synth_config.txt.
inline void write_corpus(const SynthCorpus& corpus, const SynthConfig& cfg, const std::filesystem::path& out_dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::size_t idx = 0;
    for (const auto& u : corpus.dataset.users)
    {
        fs::create_directories(out_dir / u.user_id);
        auto emit = [&](const RawSignature& sig) {
            const auto& entry = corpus.manifest.at(idx++);
            std::ofstream f(out_dir / entry.path, std::ios::binary);
            if (!f)
                throw Error(Module::synthgen, "cannot write '" + (out_dir / entry.path).string() + "'");
            f << write_svc(sig);
        };
        for (const auto& s : u.genuine)
            emit(s);
        for (const auto& s : u.skilled)
            emit(s);
    }
    std::ostringstream pre;
    pre.precision(10);
    pre << "# path user kind session\n"
        << "# separability genuine_mean=" << corpus.check.genuine_mean
        << " skilled_mean=" << corpus.check.skilled_mean << " passed=" << (corpus.check.passed() ? 1 : 0)
        << " attempts=" << corpus.check.attempts << '\n'
        << "# seed_requested=" << corpus.seed_requested << " seed_used=" << corpus.seed_used << '\n';
    std::ofstream m(out_dir / "manifest.txt", std::ios::binary);
    m << write_manifest(corpus.manifest, pre.str());
    std::ofstream c(out_dir / "synth_config.txt", std::ios::binary);
    c << describe(cfg) << "seed_used=" << corpus.seed_used << '\n';
}

} // namespace sigsplit
#endif // SIGSPLIT_SYNTH_HPP_
