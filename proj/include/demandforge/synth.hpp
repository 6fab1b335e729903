#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "demandforge/dataset.hpp"
#include "demandforge/error.hpp"
#include "demandforge/random.hpp"

namespace demandforge {

enum class Regime {
    many_short,  // many short intermittent series sharing one seasonal phase
    few_long,    // few long seasonal series, each with its own phase
};

inline std::string to_string(Regime r) { return r == Regime::many_short ? "many_short" : "few_long"; }
inline Regime parse_regime(std::string_view s) {
    if (s == "many_short") return Regime::many_short;
    if (s == "few_long") return Regime::few_long;
    fail(ErrorKind::InvalidArgument, "unknown regime '" + std::string(s) + "'");
}

struct GeneratorSpec {
    Regime regime = Regime::many_short;
    std::int64_t n_series = 10;
    std::int64_t length = 42;
    std::int64_t season_length = 12;
    double intermittency = 0.0;  // per-timestep probability of a zero
    double noise_scale = 1.0;    // Gaussian noise standard deviation
    std::uint64_t seed = 0;
    double base_level = 10.0;
    double amplitude = 5.0;
    double level_spread = 0.0;  // per-series base drawn from base_level * (1 +/- spread)
    Frequency frequency{FrequencyUnit::monthly};

    void validate() const {
        require(n_series >= 1, ErrorKind::InvalidArgument, "n_series must be >= 1");
        require(length >= 1, ErrorKind::InvalidArgument, "length must be >= 1");
        require(season_length >= 1, ErrorKind::InvalidArgument, "season_length must be >= 1");
        require(intermittency >= 0.0 && intermittency <= 1.0, ErrorKind::InvalidArgument,
                "intermittency must be in [0, 1]");
        require(noise_scale >= 0.0, ErrorKind::InvalidArgument, "noise_scale must be >= 0");
        require(level_spread >= 0.0 && level_spread <= 1.0, ErrorKind::InvalidArgument,
                "level_spread must be in [0, 1]");
        require(std::isfinite(base_level) && std::isfinite(amplitude), ErrorKind::InvalidArgument,
                "base_level and amplitude must be finite");
    }
};

/// Each value is max(0, base + amplitude * sin(2 pi (t + phase) / m) + noise),
/// then zeroed with probability `intermittency`. Series i draws from its own
/// stream derived from (seed, i), so output does not depend on generation order.
inline Panel generate(const GeneratorSpec& spec) {
    spec.validate();
    const double m = static_cast<double>(spec.season_length);
    std::mt19937_64 shared(derive_seed(spec.seed, 0xFFFFFFFFULL));
    const double shared_phase = uniform01(shared) * m;

    const int width = static_cast<int>(std::to_string(spec.n_series).size());
    std::vector<Series> out;
    for (std::int64_t i = 0; i < spec.n_series; ++i) {
        std::mt19937_64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
        const double own_phase = uniform01(rng) * m;
        const double phase = spec.regime == Regime::many_short ? shared_phase : own_phase;
        const double base = spec.base_level * (1.0 + spec.level_spread * (2.0 * uniform01(rng) - 1.0));

        std::string label = std::to_string(i);
        label.insert(0, static_cast<std::size_t>(width) - label.size(), '0');
        Series s;
        s.key = SeriesKey({"s" + label});
        s.origin = 0;
        for (std::int64_t t = 0; t < spec.length; ++t) {
            const double seasonal = spec.amplitude * std::sin(2.0 * std::numbers::pi * (static_cast<double>(t) + phase) / m);
            const double noise = spec.noise_scale > 0.0 ? spec.noise_scale * standard_normal(rng) : 0.0;
            double v = std::max(0.0, base + seasonal + noise);
            const double u = uniform01(rng);
            if (u < spec.intermittency || spec.intermittency >= 1.0) v = 0.0;
            s.values.push_back(v);
        }
        out.push_back(std::move(s));
    }
    return Panel(spec.frequency, {"series"}, {}, std::move(out), CleaningPolicy{}, "target");
}

}  // namespace demandforge
