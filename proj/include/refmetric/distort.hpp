// Copyright 2026 The refmetric Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Deterministic image distortions. Every operation returns its input unchanged
// (bit-exact) for its identity parameter.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "refmetric/image.hpp"

namespace refmetric {

/// Seeded standard-normal source: std::mt19937_64 (its output sequence is fixed
/// by the C++ standard) feeding Box-Muller on 53-bit uniforms.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

    double operator()()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;        // [0, 1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0;
    bool has_spare_ = false;
};

inline int parse_axis(const std::string& s)
{
    if (s == "x") return 0;
    if (s == "y") return 1;
    if (s == "z") return 2;
    throw Error("unknown axis '" + s + "' (expected x, y or z)");
}

inline const char* axis_name(int axis) { return axis == 0 ? "x" : axis == 1 ? "y" : "z"; }

namespace detail {

inline void require_axis(const Dims& d, int axis)
{
    if (axis < 0 || axis >= d.axes()) throw Error(std::string("axis ") + axis_name(axis) + " not present in image");
}

inline IntensityStats require_nonconstant(const Image& img, const char* what)
{
    auto s = intensity_stats(img);
    if (!(s.max > s.min)) throw Error(std::string(what) + " of a constant image");
    return s;
}

inline std::size_t coord(const Dims& d, std::size_t i, int axis)
{
    if (axis == 0) return i % d.width;
    if (axis == 1) return (i / d.width) % d.height;
    return i / (d.width * d.height);
}

/// Half-sample symmetric extension (d c b a | a b c d | d c b a), any offset.
inline std::size_t reflect_index(long i, long n)
{
    const long period = 2 * n;
    long m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < n ? m : period - 1 - m);
}

}  // namespace detail

/// I_min + range * ((I - I_min) / range)^gamma.
inline Image gamma_transform(const Image& img, double gamma)
{
    if (!(gamma > 0)) throw Error("gamma must be > 0");
    if (gamma == 1.0) return img;
    const auto s = detail::require_nonconstant(img, "gamma transform");
    const double range = s.max - s.min;
    std::vector<double> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = s.min + range * std::pow((img[i] - s.min) / range, gamma);
    return img.with_values(std::move(out));
}

inline Image linear_scale(const Image& img, double f)
{
    if (f == 1.0) return img;
    std::vector<double> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = f * img[i];
    return img.with_values(std::move(out));
}

/// Whole-pixel shift, out(p) = in(p - shift); vacated pixels take the image minimum.
inline Image translate(const Image& img, std::array<long, 3> shift)
{
    const Dims& d = img.dims();
    for (int a = 0; a < 3; ++a) {
        if (shift[a] != 0 && a >= d.axes()) throw Error("translation along an axis the image lacks");
        if (std::abs(shift[a]) >= static_cast<long>(d.extent(a))) throw Error("translation must be smaller than the extent");
    }
    if (shift == std::array<long, 3>{0, 0, 0}) return img;
    const double fill = intensity_stats(img).min;
    std::vector<double> out(img.size(), fill);
    for (std::size_t z = 0; z < d.depth; ++z)
        for (std::size_t y = 0; y < d.height; ++y)
            for (std::size_t x = 0; x < d.width; ++x) {
                const long sx = long(x) - shift[0], sy = long(y) - shift[1], sz = long(z) - shift[2];
                if (sx < 0 || sy < 0 || sz < 0 || sx >= long(d.width) || sy >= long(d.height) || sz >= long(d.depth))
                    continue;
                out[img.index(x, y, z)] = img(std::size_t(sx), std::size_t(sy), std::size_t(sz));
            }
    return img.with_values(std::move(out));
}

/// Lines past the midline along axis become the mirror of the lines before it;
/// the middle line of an odd extent is kept.
inline Image mirror_replace(const Image& img, int axis)
{
    const Dims& d = img.dims();
    detail::require_axis(d, axis);
    const std::size_t n = d.extent(axis);
    if (n < 2) throw Error("mirror_replace needs extent >= 2 along the axis");
    const std::size_t first_replaced = (n + 1) / 2;
    std::vector<double> out(img.values().begin(), img.values().end());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const std::size_t c = detail::coord(d, i, axis);
        if (c < first_replaced) continue;
        const std::size_t src = n - 1 - c;
        std::size_t x = i % d.width, y = (i / d.width) % d.height, z = i / (d.width * d.height);
        (axis == 0 ? x : axis == 1 ? y : z) = src;
        out[i] = img(x, y, z);
    }
    return img.with_values(std::move(out));
}

/// Adds N(0, (sigma_rel * (I_max - I_min))^2) noise drawn from NormalSource(seed) in storage order.
inline Image add_gaussian_noise(const Image& img, double sigma_rel, std::uint64_t seed)
{
    if (!(sigma_rel >= 0)) throw Error("noise sigma must be >= 0");
    if (sigma_rel == 0) return img;
    const auto s = detail::require_nonconstant(img, "relative noise");
    const double sigma = sigma_rel * (s.max - s.min);
    NormalSource normal(seed);
    std::vector<double> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i] + sigma * normal();
    return img.with_values(std::move(out));
}

/// Lines whose coordinate along axis is a multiple of period get += amplitude_rel * (I_max - I_min).
inline Image add_stripes(const Image& img, int period, double amplitude_rel, int axis)
{
    if (period < 2) throw Error("stripe period must be >= 2");
    detail::require_axis(img.dims(), axis);
    if (amplitude_rel == 0) return img;
    const auto s = intensity_stats(img);
    const double range = s.max > s.min ? s.max - s.min : std::abs(s.max) > 0 ? std::abs(s.max) : 1.0;
    const double offset = amplitude_rel * range;
    std::vector<double> out(img.values().begin(), img.values().end());
    for (std::size_t i = 0; i < img.size(); ++i)
        if (detail::coord(img.dims(), i, axis) % static_cast<std::size_t>(period) == 0) out[i] += offset;
    return img.with_values(std::move(out));
}

/// Normalized Gaussian taps over [-ceil(3 sigma), ceil(3 sigma)].
inline std::vector<double> gaussian_kernel(double sigma)
{
    if (!(sigma > 0)) throw Error("blur sigma must be > 0");
    const int r = static_cast<int>(std::ceil(3 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0;
    for (int i = -r; i <= r; ++i) sum += k[std::size_t(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (auto& v : k) v /= sum;
    return k;
}

/// Separable Gaussian over every axis with extent > 1; half-sample symmetric boundary,
/// which keeps the sum of intensities unchanged for a symmetric kernel.
inline Image gaussian_blur(const Image& img, double sigma)
{
    const auto k = gaussian_kernel(sigma);
    const long r = static_cast<long>(k.size() / 2);
    const Dims& d = img.dims();
    std::vector<double> cur(img.values().begin(), img.values().end()), next(img.size());
    for (int axis = 0; axis < d.axes(); ++axis) {
        const long n = static_cast<long>(d.extent(axis));
        if (n == 1) continue;
        const std::size_t stride = axis == 0 ? 1 : axis == 1 ? d.width : d.width * d.height;
        for (std::size_t i = 0; i < img.size(); ++i) {
            const long c = static_cast<long>(detail::coord(d, i, axis));
            const std::size_t base = i - static_cast<std::size_t>(c) * stride;
            double s = 0;
            for (long t = -r; t <= r; ++t) s += k[std::size_t(t + r)] * cur[base + detail::reflect_index(c + t, n) * stride];
            next[i] = s;
        }
        std::swap(cur, next);
    }
    return img.with_values(std::move(cur));
}

/// Removes floor(fraction * extent) pixels from both ends of every axis.
inline Image crop_fraction(const Image& img, double fraction)
{
    if (!(fraction > 0 && fraction < 0.5)) throw Error("crop fraction must lie in (0, 0.5)");
    const Dims& d = img.dims();
    Rect r = Rect::full(d);
    auto cut = [&](std::size_t n, std::size_t& origin, std::size_t& extent) {
        const auto c = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
        if (2 * c >= n) throw Error("crop fraction leaves an empty image");
        origin = c;
        extent = n - 2 * c;
    };
    cut(d.width, r.x, r.width);
    cut(d.height, r.y, r.height);
    if (d.volumetric) cut(d.depth, r.z, r.depth);
    return crop(img, r);
}

/// One serializable distortion step: {"kind": ..., "params": {...}, "seed": n}.
struct DistortionSpec {
    enum class Kind { gamma, linear_scale, translate, mirror_replace, gaussian_noise, stripes, gaussian_blur, crop_fraction };

    Kind kind = Kind::gamma;
    std::map<std::string, double> params;  // axis params hold 0/1/2
    std::uint64_t seed = 0;

    static const std::map<std::string, Kind>& kinds()
    {
        static const std::map<std::string, Kind> k{{"gamma", Kind::gamma},
                                                   {"linear_scale", Kind::linear_scale},
                                                   {"translate", Kind::translate},
                                                   {"mirror_replace", Kind::mirror_replace},
                                                   {"gaussian_noise", Kind::gaussian_noise},
                                                   {"stripes", Kind::stripes},
                                                   {"gaussian_blur", Kind::gaussian_blur},
                                                   {"crop_fraction", Kind::crop_fraction}};
        return k;
    }

    std::string kind_name() const
    {
        for (const auto& [name, k] : kinds())
            if (k == kind) return name;
        return "?";
    }

    static DistortionSpec gamma(double g) { return {Kind::gamma, {{"gamma", g}}}; }
    static DistortionSpec linear(double f) { return {Kind::linear_scale, {{"factor", f}}}; }
    static DistortionSpec shift(long dx, long dy, long dz = 0)
    {
        return {Kind::translate, {{"dx", double(dx)}, {"dy", double(dy)}, {"dz", double(dz)}}};
    }
    static DistortionSpec mirror(int axis = 1) { return {Kind::mirror_replace, {{"axis", double(axis)}}}; }
    static DistortionSpec noise(double sigma_rel, std::uint64_t seed)
    {
        return {Kind::gaussian_noise, {{"sigma_rel", sigma_rel}}, seed};
    }
    static DistortionSpec stripes(int period = 8, double amplitude_rel = 0.25, int axis = 1)
    {
        return {Kind::stripes, {{"period", double(period)}, {"amplitude_rel", amplitude_rel}, {"axis", double(axis)}}};
    }
    static DistortionSpec blur(double sigma) { return {Kind::gaussian_blur, {{"sigma", sigma}}}; }
    static DistortionSpec crop(double fraction) { return {Kind::crop_fraction, {{"fraction", fraction}}}; }

    double param(const std::string& key) const
    {
        auto it = params.find(key);
        if (it == params.end()) throw Error(kind_name() + " distortion lacks parameter '" + key + "'");
        return it->second;
    }

    void validate() const
    {
        static const std::map<Kind, std::vector<std::string>> required{
            {Kind::gamma, {"gamma"}},
            {Kind::linear_scale, {"factor"}},
            {Kind::translate, {"dx", "dy", "dz"}},
            {Kind::mirror_replace, {"axis"}},
            {Kind::gaussian_noise, {"sigma_rel"}},
            {Kind::stripes, {"period", "amplitude_rel", "axis"}},
            {Kind::gaussian_blur, {"sigma"}},
            {Kind::crop_fraction, {"fraction"}}};
        const auto& keys = required.at(kind);
        for (const auto& [k, v] : params) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end())
                throw Error(kind_name() + " distortion has unknown parameter '" + k + "'");
            if (!std::isfinite(v)) throw Error(kind_name() + " parameter '" + k + "' is not finite");
        }
        for (const auto& k : keys) param(k);
        auto integral = [&](const char* k) {
            if (param(k) != std::floor(param(k))) throw Error(kind_name() + " parameter '" + k + "' must be an integer");
        };
        switch (kind) {
        case Kind::gamma:
            if (!(param("gamma") > 0)) throw Error("gamma must be > 0");
            break;
        case Kind::linear_scale:
            if (param("factor") == 0) throw Error("linear_scale factor must be nonzero");
            break;
        case Kind::translate:
            for (const char* k : {"dx", "dy", "dz"}) integral(k);
            break;
        case Kind::mirror_replace:
            integral("axis");
            if (param("axis") < 0 || param("axis") > 2) throw Error("axis must be x, y or z");
            break;
        case Kind::gaussian_noise:
            if (!(param("sigma_rel") >= 0)) throw Error("noise sigma_rel must be >= 0");
            break;
        case Kind::stripes:
            integral("period");
            integral("axis");
            if (param("period") < 2) throw Error("stripe period must be >= 2");
            if (param("axis") < 0 || param("axis") > 2) throw Error("axis must be x, y or z");
            break;
        case Kind::gaussian_blur:
            if (!(param("sigma") > 0)) throw Error("blur sigma must be > 0");
            break;
        case Kind::crop_fraction:
            if (!(param("fraction") > 0 && param("fraction") < 0.5)) throw Error("crop fraction must lie in (0, 0.5)");
            break;
        }
    }

    nlohmann::json to_json() const
    {
        nlohmann::json p = nlohmann::json::object();
        for (const auto& [k, v] : params) {
            if (k == "axis") p[k] = axis_name(static_cast<int>(v));
            else if (v == std::floor(v) && std::abs(v) < 1e15) p[k] = static_cast<long long>(v);
            else p[k] = v;
        }
        return {{"kind", kind_name()}, {"params", p}, {"seed", seed}};
    }

    static DistortionSpec from_json(const nlohmann::json& j)
    {
        if (!j.is_object()) throw Error("distortion spec must be a JSON object");
        for (const auto& [k, v] : j.items())
            if (k != "kind" && k != "params" && k != "seed") throw Error("distortion spec has unknown field '" + k + "'");
        if (!j.contains("kind") || !j["kind"].is_string()) throw Error("distortion spec needs a string \"kind\"");
        const auto name = j["kind"].get<std::string>();
        auto it = kinds().find(name);
        if (it == kinds().end()) throw Error("unknown distortion kind '" + name + "'");
        DistortionSpec s;
        s.kind = it->second;
        if (j.contains("params")) {
            if (!j["params"].is_object()) throw Error("distortion \"params\" must be an object");
            for (const auto& [k, v] : j["params"].items()) {
                if (k == "axis" && v.is_string()) s.params[k] = parse_axis(v.get<std::string>());
                else if (v.is_number()) s.params[k] = v.get<double>();
                else throw Error("distortion parameter '" + k + "' must be a number");
            }
        }
        if (s.kind == Kind::translate)
            for (const char* k : {"dx", "dy", "dz"}) s.params.try_emplace(k, 0.0);
        if (j.contains("seed")) {
            if (!j["seed"].is_number_integer()) throw Error("distortion \"seed\" must be an integer");
            s.seed = j["seed"].get<std::uint64_t>();
        }
        s.validate();
        return s;
    }

    /// Compact JSON; keys sorted, so equal specs give equal strings.
    std::string canonical() const { return to_json().dump(); }
};

using DistortionChain = std::vector<DistortionSpec>;

inline DistortionChain parse_chain(const nlohmann::json& j)
{
    DistortionChain chain;
    if (j.is_array())
        for (const auto& e : j) chain.push_back(DistortionSpec::from_json(e));
    else
        chain.push_back(DistortionSpec::from_json(j));
    return chain;
}

inline DistortionChain parse_chain(const std::string& text)
{
    try {
        return parse_chain(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed distortion JSON: ") + e.what());
    }
}

inline DistortionChain parse_chain(const char* text) { return parse_chain(std::string(text)); }

inline std::string chain_canonical(const DistortionChain& chain)
{
    nlohmann::json a = nlohmann::json::array();
    for (const auto& s : chain) a.push_back(s.to_json());
    return a.dump();
}

/// Applies one step and records it in the image's provenance trail.
inline Image apply_distortion(const DistortionSpec& spec, const Image& img)
{
    spec.validate();
    using K = DistortionSpec::Kind;
    Image out;
    switch (spec.kind) {
    case K::gamma: out = gamma_transform(img, spec.param("gamma")); break;
    case K::linear_scale: out = linear_scale(img, spec.param("factor")); break;
    case K::translate:
        out = translate(img, {long(spec.param("dx")), long(spec.param("dy")), long(spec.param("dz"))});
        break;
    case K::mirror_replace: out = mirror_replace(img, int(spec.param("axis"))); break;
    case K::gaussian_noise: out = add_gaussian_noise(img, spec.param("sigma_rel"), spec.seed); break;
    case K::stripes:
        out = add_stripes(img, int(spec.param("period")), spec.param("amplitude_rel"), int(spec.param("axis")));
        break;
    case K::gaussian_blur: out = gaussian_blur(img, spec.param("sigma")); break;
    case K::crop_fraction: out = crop_fraction(img, spec.param("fraction")); break;
    }
    return out.with_provenance(spec.canonical());
}

/// Left to right.
inline Image apply_distortion(const DistortionChain& chain, const Image& img)
{
    Image out = img;
    for (const auto& s : chain) out = apply_distortion(s, out);
    return out;
}

}  // namespace refmetric
