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

// Structural similarity and its multi-scale variant.
//
// Local statistics come from a separable window evaluated only at positions
// where the window lies fully inside the image (no padding). For 3D images the
// window extends along z as well. With
//   C1 = (k1 L)^2, C2 = (k2 L)^2
//   l  = (2 mu_R mu_I + C1) / (mu_R^2 + mu_I^2 + C1)
//   cs = (2 s_RI + C2) / (s_R^2 + s_I^2 + C2)
// SSIM is the mean of l * cs over all valid positions.

#include <cmath>
#include <numeric>
#include <vector>

#include "refmetric/image.hpp"
#include "refmetric/metrics/score.hpp"
#include "refmetric/normalize.hpp"

namespace refmetric {

struct Window {
    enum class Kind { gaussian, uniform };
    Kind kind = Kind::gaussian;
    double sigma = 1.5;
    int radius = 5;  // gaussian: side = 2 radius + 1
    int side = 7;    // uniform

    static Window gaussian(double sigma, int radius) { return {Kind::gaussian, sigma, radius, 2 * radius + 1}; }
    static Window uniform(int side) { return {Kind::uniform, 0, 0, side}; }

    int support() const { return kind == Kind::gaussian ? 2 * radius + 1 : side; }

    void validate() const
    {
        if (kind == Kind::gaussian && (!(sigma > 0) || radius < 0)) throw Error("gaussian window needs sigma > 0, radius >= 0");
        if (kind == Kind::uniform && side < 1) throw Error("uniform window needs side >= 1");
    }

    /// Normalized 1D weights; the nD window is their outer product.
    std::vector<double> weights() const
    {
        validate();
        std::vector<double> w(static_cast<std::size_t>(support()));
        if (kind == Kind::uniform) {
            std::fill(w.begin(), w.end(), 1.0);
        } else {
            for (int i = -radius; i <= radius; ++i)
                w[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
        }
        double s = std::accumulate(w.begin(), w.end(), 0.0);
        for (auto& x : w) x /= s;
        return w;
    }

    std::string str() const
    {
        if (kind == Kind::uniform) return "uniform:side=" + std::to_string(side);
        return "gaussian:sigma=" + format_real(sigma) + ",radius=" + std::to_string(radius);
    }
};

struct SsimParams {
    DataRangePolicy range = DataRangePolicy::joint();
    Window window = Window::gaussian(1.5, 5);
    double k1 = 0.01;
    double k2 = 0.03;

    void validate() const
    {
        window.validate();
        if (!(k1 > 0) || !(k2 > 0)) throw Error("ssim requires k1 > 0 and k2 > 0");
    }

    Fingerprint fingerprint(double L) const
    {
        Fingerprint fp;
        fp.set("L", L).set("range", range.str()).set("window", window.str()).set("k1", k1).set("k2", k2);
        return fp;
    }
};

/// Standard multi-scale weights; they sum to 1.0001 as published.
inline const std::vector<double>& default_ms_ssim_weights()
{
    static const std::vector<double> w{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    return w;
}

struct MsSsimParams {
    SsimParams base;
    int scales = 5;
    std::vector<double> weights = default_ms_ssim_weights();

    void validate() const
    {
        base.validate();
        if (scales < 1) throw Error("ms_ssim requires at least one scale");
        if (weights.size() != static_cast<std::size_t>(scales))
            throw Error("ms_ssim weights length must equal the scale count");
        double s = 0;
        for (double w : weights) {
            if (!(w > 0)) throw Error("ms_ssim weights must be positive");
            s += w;
        }
        if (std::abs(s - 1.0) > 1e-3) throw Error("ms_ssim weights must sum to 1");
    }

    Fingerprint fingerprint(double L) const
    {
        std::string ws;
        for (double w : weights) ws += (ws.empty() ? "" : ",") + format_real(w);
        Fingerprint fp = base.fingerprint(L);
        fp.set("scales", scales).set("weights", ws).set("downsample", "mean2x2").set("clamp", "relu");
        return fp;
    }
};

namespace detail {

/// Correlates with a 1D kernel along one axis, keeping only fully-covered positions.
inline std::vector<double> filter_valid_axis(std::span<const double> in, Dims& dims, int axis,
                                             std::span<const double> k)
{
    const std::size_t n = k.size();
    Dims out_dims = dims;
    const std::size_t ext = dims.extent(axis);
    if (ext < n) throw Error("window larger than image along an axis");
    const std::size_t out_ext = ext - n + 1;
    if (axis == 0) out_dims.width = out_ext;
    else if (axis == 1) out_dims.height = out_ext;
    else out_dims.depth = out_ext;

    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? dims.width : dims.width * dims.height;
    std::vector<double> out(out_dims.count());
    for (std::size_t z = 0; z < out_dims.depth; ++z)
        for (std::size_t y = 0; y < out_dims.height; ++y)
            for (std::size_t x = 0; x < out_dims.width; ++x) {
                const std::size_t base = (z * dims.height + y) * dims.width + x;
                double s = 0;
                for (std::size_t t = 0; t < n; ++t) s += k[t] * in[base + t * stride];
                out[(z * out_dims.height + y) * out_dims.width + x] = s;
            }
    dims = out_dims;
    return out;
}

inline std::vector<double> filter_valid(std::span<const double> in, Dims dims, std::span<const double> k,
                                        Dims* out_dims = nullptr)
{
    auto v = filter_valid_axis(in, dims, 0, k);
    v = filter_valid_axis(v, dims, 1, k);
    if (dims.volumetric) v = filter_valid_axis(v, dims, 2, k);
    if (out_dims) *out_dims = dims;
    return v;
}

struct SsimMeans {
    double ssim = 0;  // mean of l * cs
    double cs = 0;    // mean of cs
};

inline void check_window_fits(const Dims& d, int support)
{
    const auto s = static_cast<std::size_t>(support);
    if (d.width < s || d.height < s || (d.volumetric && d.depth < s))
        throw Error("ssim window (" + std::to_string(support) + ") larger than image " + d.str());
}

inline SsimMeans ssim_means(const Image& ref, const Image& test, const SsimParams& p, double L)
{
    require_same_dims(ref.dims(), test.dims());
    check_window_fits(ref.dims(), p.window.support());
    const auto w = p.window.weights();
    const std::size_t n = ref.size();
    std::vector<double> rr(n), tt(n), rt(n);
    for (std::size_t i = 0; i < n; ++i) {
        rr[i] = ref[i] * ref[i];
        tt[i] = test[i] * test[i];
        rt[i] = ref[i] * test[i];
    }
    const Dims d = ref.dims();
    auto mu_r = filter_valid(ref.values(), d, w);
    auto mu_t = filter_valid(test.values(), d, w);
    auto e_rr = filter_valid(rr, d, w);
    auto e_tt = filter_valid(tt, d, w);
    auto e_rt = filter_valid(rt, d, w);

    const double c1 = (p.k1 * L) * (p.k1 * L);
    const double c2 = (p.k2 * L) * (p.k2 * L);
    double sum_ssim = 0, sum_cs = 0;
    for (std::size_t i = 0; i < mu_r.size(); ++i) {
        const double mr = mu_r[i], mt = mu_t[i];
        const double vr = e_rr[i] - mr * mr;
        const double vt = e_tt[i] - mt * mt;
        const double cov = e_rt[i] - mr * mt;
        const double l = (2 * mr * mt + c1) / (mr * mr + mt * mt + c1);
        const double cs = (2 * cov + c2) / (vr + vt + c2);
        sum_ssim += l * cs;
        sum_cs += cs;
    }
    const auto m = static_cast<double>(mu_r.size());
    return {sum_ssim / m, sum_cs / m};
}

/// 2x2 (2x2x2 for volumes) mean pooling; a trailing odd row/column is dropped.
inline Image downsample2(const Image& img)
{
    const Dims& d = img.dims();
    const std::size_t w = d.width / 2, h = d.height / 2, dz = d.volumetric ? d.depth / 2 : 1;
    if (w < 1 || h < 1 || dz < 1) throw Error("image too small to downsample");
    Dims od = d.volumetric ? Dims::volume(w, h, dz) : Dims::planar(w, h);
    std::vector<double> out(od.count());
    const std::size_t zc = d.volumetric ? 2 : 1;
    const double inv = 1.0 / static_cast<double>(4 * zc);
    for (std::size_t z = 0; z < dz; ++z)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                double s = 0;
                for (std::size_t c = 0; c < zc; ++c)
                    s += img(2 * x, 2 * y, zc * z + c) + img(2 * x + 1, 2 * y, zc * z + c) +
                         img(2 * x, 2 * y + 1, zc * z + c) + img(2 * x + 1, 2 * y + 1, zc * z + c);
                out[(z * h + y) * w + x] = s * inv;
            }
    return Image(od, std::move(out));
}

}  // namespace detail

inline MetricScore ssim(const Image& ref, const Image& test, const SsimParams& p = {})
{
    p.validate();
    require_same_dims(ref.dims(), test.dims());
    const double L = resolve_data_range(ref, test, p.range);
    return make_score(detail::ssim_means(ref, test, p, L).ssim, "ssim", p.fingerprint(L));
}

/// prod_{j<M} cs_j^{w_j} * ssim_M^{w_M}, with scale j+1 the 2x2-mean-pooled scale j.
/// Negative per-scale means are clamped to 0 before exponentiation. L is resolved
/// once at full resolution and held fixed across scales.
inline MetricScore ms_ssim(const Image& ref, const Image& test, const MsSsimParams& p = {})
{
    p.validate();
    require_same_dims(ref.dims(), test.dims());
    const Dims& d = ref.dims();
    const std::size_t shrink = std::size_t{1} << (p.scales - 1);
    const auto support = static_cast<std::size_t>(p.base.window.support());
    if (d.width / shrink < support || d.height / shrink < support ||
        (d.volumetric && d.depth / shrink < support))
        throw Error("image " + d.str() + " too small for " + std::to_string(p.scales) + " ms_ssim scales with window " +
                    std::to_string(support));
    const double L = resolve_data_range(ref, test, p.base.range);

    Image r = ref, t = test;
    double value = 1.0;
    for (int j = 0; j < p.scales; ++j) {
        auto m = detail::ssim_means(r, t, p.base, L);
        const bool last = j == p.scales - 1;
        const double term = std::max(0.0, last ? m.ssim : m.cs);
        value *= std::pow(term, p.weights[static_cast<std::size_t>(j)]);
        if (!last) {
            r = detail::downsample2(r);
            t = detail::downsample2(t);
        }
    }
    return make_score(value, "ms_ssim", p.fingerprint(L));
}

}  // namespace refmetric
