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

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "refmetric/fingerprint.hpp"
#include "refmetric/image.hpp"

namespace refmetric {

namespace detail {

/// Parses "a=1,b=2" into a Fingerprint-style map (commas instead of semicolons).
inline std::map<std::string, double> parse_kv_list(std::string_view body, std::string_view context)
{
    std::map<std::string, double> out;
    while (!body.empty()) {
        auto comma = body.find(',');
        auto item = body.substr(0, comma);
        auto eq = item.find('=');
        if (eq == std::string_view::npos)
            throw Error("expected key=value in '" + std::string(context) + "'");
        out[std::string(item.substr(0, eq))] = parse_real(item.substr(eq + 1));
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
    }
    return out;
}

}  // namespace detail

/// Affine intensity normalization I' = (I - a) / b.
struct NormMethod {
    enum class Kind { none, minmax, zscore, custom };
    Kind kind = Kind::none;
    double a = 0;  // custom only
    double b = 1;  // custom only

    static NormMethod none() { return {}; }
    static NormMethod minmax() { return {Kind::minmax}; }
    static NormMethod zscore() { return {Kind::zscore}; }
    static NormMethod custom(double shift, double scale)
    {
        if (!(scale > 0) || !std::isfinite(scale) || !std::isfinite(shift))
            throw Error("custom normalization requires finite a and b > 0");
        return {Kind::custom, shift, scale};
    }

    /// "none", "minmax", "zscore", "custom:a=...,b=..."
    static NormMethod parse(std::string_view s)
    {
        if (s == "none") return none();
        if (s == "minmax") return minmax();
        if (s == "zscore") return zscore();
        if (s.rfind("custom:", 0) == 0) {
            auto kv = detail::parse_kv_list(s.substr(7), s);
            if (kv.size() != 2 || !kv.count("a") || !kv.count("b"))
                throw Error("custom normalization needs exactly a=... and b=...");
            return custom(kv["a"], kv["b"]);
        }
        throw Error("unknown normalization '" + std::string(s) + "' (expected none, minmax, zscore, custom:a=..,b=..)");
    }

    std::string str() const
    {
        switch (kind) {
        case Kind::none: return "none";
        case Kind::minmax: return "minmax";
        case Kind::zscore: return "zscore";
        case Kind::custom: return "custom:a=" + format_real(a) + ",b=" + format_real(b);
        }
        return "none";
    }

    friend bool operator==(const NormMethod&, const NormMethod&) = default;
};

/// Rule producing the SSIM/PSNR data range L.
struct DataRangePolicy {
    enum class Kind { joint, per_reference, per_test, fixed };
    Kind kind = Kind::joint;
    double L = 0;  // fixed only

    static DataRangePolicy joint() { return {}; }
    static DataRangePolicy per_reference() { return {Kind::per_reference}; }
    static DataRangePolicy per_test() { return {Kind::per_test}; }
    static DataRangePolicy fixed(double L)
    {
        if (!(L > 0) || !std::isfinite(L)) throw Error("fixed data range requires finite L > 0");
        return {Kind::fixed, L};
    }

    /// "joint", "ref", "test", "fixed:L=..."
    static DataRangePolicy parse(std::string_view s)
    {
        if (s == "joint") return joint();
        if (s == "ref") return per_reference();
        if (s == "test") return per_test();
        if (s.rfind("fixed:", 0) == 0) {
            auto kv = detail::parse_kv_list(s.substr(6), s);
            if (kv.size() != 1 || !kv.count("L")) throw Error("fixed range needs exactly L=...");
            return fixed(kv["L"]);
        }
        throw Error("unknown data range policy '" + std::string(s) + "' (expected joint, ref, test, fixed:L=..)");
    }

    std::string str() const
    {
        switch (kind) {
        case Kind::joint: return "joint";
        case Kind::per_reference: return "ref";
        case Kind::per_test: return "test";
        case Kind::fixed: return "fixed:L=" + format_real(L);
        }
        return "joint";
    }

    bool per_image() const { return kind == Kind::per_reference || kind == Kind::per_test; }

    friend bool operator==(const DataRangePolicy&, const DataRangePolicy&) = default;
};

inline Image normalize(const Image& img, const NormMethod& m)
{
    if (m.kind == NormMethod::Kind::none) return img;
    double a = m.a, b = m.b;
    auto s = intensity_stats(img);
    if (m.kind == NormMethod::Kind::minmax) {
        a = s.min;
        b = s.max - s.min;
        if (!(b > 0)) throw Error("minmax normalization of a constant image (max == min)");
    } else if (m.kind == NormMethod::Kind::zscore) {
        a = s.mean;
        b = s.std;
        if (!(b > 0)) throw Error("zscore normalization of a constant image (std == 0)");
    }
    std::vector<double> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = (img[i] - a) / b;
    return img.with_values(std::move(out));
}

/// Bin index per element: min(bins-1, floor((I - I_min) / (I_max - I_min) * bins)).
inline Image bin_quantize(const Image& img, int bins)
{
    if (bins < 2) throw Error("binning requires at least 2 bins");
    auto s = intensity_stats(img);
    const double range = s.max - s.min;
    if (!(range > 0)) throw Error("binning a constant image (max == min)");
    std::vector<double> out(img.size());
    const double top = bins - 1;
    for (std::size_t i = 0; i < img.size(); ++i)
        out[i] = std::min(top, std::floor((img[i] - s.min) / range * bins));
    return img.with_values(std::move(out), std::pair<double, double>{0.0, top});
}

inline double resolve_data_range(const IntensityStats& ref, const IntensityStats& test, const DataRangePolicy& p)
{
    double L = 0;
    switch (p.kind) {
    case DataRangePolicy::Kind::joint: L = std::max(ref.max, test.max) - std::min(ref.min, test.min); break;
    case DataRangePolicy::Kind::per_reference: L = ref.max - ref.min; break;
    case DataRangePolicy::Kind::per_test: L = test.max - test.min; break;
    case DataRangePolicy::Kind::fixed: L = p.L; break;
    }
    if (!(L > 0)) throw Error("data range policy '" + p.str() + "' resolves to L = 0 (constant input)");
    return L;
}

inline double resolve_data_range(const Image& ref, const Image& test, const DataRangePolicy& p)
{
    if (p.kind == DataRangePolicy::Kind::fixed) return p.L;
    return resolve_data_range(intensity_stats(ref), intensity_stats(test), p);
}

}  // namespace refmetric
