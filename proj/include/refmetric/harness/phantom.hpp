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

// Synthetic brain-MR-like phantoms: a zero background, an elliptical "brain"
// symmetric about the horizontal midline with seeded texture, and one bright
// elliptical "tumor" inside one vertical half. Intensities are integers so
// phantoms store losslessly as 16-bit PGM.

#include <cstdint>
#include <random>
#include <string>

#include "refmetric/distort.hpp"
#include "refmetric/image.hpp"

namespace refmetric {

enum class TumorHalf { lower, upper, either };

inline const char* tumor_half_name(TumorHalf h)
{
    return h == TumorHalf::lower ? "lower" : h == TumorHalf::upper ? "upper" : "either";
}

inline TumorHalf parse_tumor_half(const std::string& s)
{
    if (s == "lower") return TumorHalf::lower;
    if (s == "upper") return TumorHalf::upper;
    if (s == "either") return TumorHalf::either;
    throw Error("unknown tumor half '" + s + "' (expected lower, upper or either)");
}

struct PhantomParams {
    std::size_t width = 192;
    std::size_t height = 192;
    TumorHalf tumor_half = TumorHalf::either;

    // intensity model
    double tissue_level = 350;
    double texture_std = 45;     // fine texture, correlation ~ texture_sigma px
    double texture_sigma = 0.8;
    double shading_std = 12;     // slow intensity drift
    double shading_sigma = 10;
    double tumor_level = 1000;
    double tumor_texture_std = 12;

    static constexpr std::size_t min_extent = 64;

    void validate() const
    {
        if (width < min_extent || height < min_extent)
            throw Error("phantom dims must be at least " + std::to_string(min_extent) + " per axis");
    }
};

struct Phantom {
    Image image;
    Mask tumor_mask;
    Mask foreground_mask;
    std::uint64_t seed = 0;
    bool tumor_in_lower_half = true;
};

namespace detail {

inline std::vector<double> smooth_noise(std::size_t w, std::size_t h, double sigma, std::uint64_t seed)
{
    NormalSource normal(seed);
    std::vector<double> v(w * h);
    for (auto& x : v) x = normal();
    Image field = gaussian_blur(Image(Dims::planar(w, h), std::move(v)), sigma);
    auto s = intensity_stats(field);
    std::vector<double> out(field.values().begin(), field.values().end());
    for (auto& x : out) x = (x - s.mean) / s.std;
    return out;
}

}  // namespace detail

inline Phantom generate_phantom(std::uint64_t seed, const PhantomParams& p = {})
{
    p.validate();
    const std::size_t w = p.width, h = p.height;
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };

    // brain ellipse; center on the pixel-grid midpoint so mirror_replace along y maps it onto itself
    const double cx = (double(w) - 1) / 2, cy = (double(h) - 1) / 2;
    const double ax = 0.36 * double(w), ay = 0.44 * double(h);
    auto in_brain = [&](double x, double y) {
        const double u = (x - cx) / ax, v = (y - cy) / ay;
        return u * u + v * v <= 1.0;
    };

    // the coin is always drawn, so a phantom regenerated with its resolved half is identical
    const bool coin = (rng() >> 63) != 0;
    const bool lower = p.tumor_half == TumorHalf::either ? coin : p.tumor_half == TumorHalf::lower;

    // tumor: random semi-axes, center uniform over positions where the whole tumor
    // stays inside the brain and strictly inside the chosen half (1 px margin)
    const double scale = double(std::min(w, h)) / 192.0;
    const double tx = uniform(7, 12) * scale, ty = uniform(7, 12) * scale;
    double tcx = 0, tcy = 0;
    auto tumor_fits = [&](double x0, double y0) {
        const double mid = double(h) / 2;
        if (lower ? (y0 - ty < mid + 1) : (y0 + ty > mid - 2)) return false;
        for (int k = 0; k < 64; ++k) {
            const double a = 2 * std::numbers::pi * k / 64;
            if (!in_brain(x0 + (tx + 1) * std::cos(a), y0 + (ty + 1) * std::sin(a))) return false;
        }
        return true;
    };
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
        tcx = uniform(cx - ax, cx + ax);
        tcy = lower ? uniform(cy, cy + ay) : uniform(cy - ay, cy);
        placed = tumor_fits(tcx, tcy);
    }
    if (!placed) throw Error("phantom too small to place a tumor");

    const auto texture = detail::smooth_noise(w, h, p.texture_sigma, seed ^ 0x9e3779b97f4a7c15ULL);
    const auto shading = detail::smooth_noise(w, h, p.shading_sigma, seed ^ 0xc2b2ae3d27d4eb4fULL);
    const auto tumor_tex = detail::smooth_noise(w, h, 1.0, seed ^ 0x165667b19e3779f9ULL);

    std::vector<double> img(w * h, 0.0);
    std::vector<std::uint8_t> fg(w * h, 0), tumor(w * h, 0);
    const double tissue_cap = 0.7 * p.tumor_level;  // never reached in practice; keeps the tumor the unique bright blob
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t i = y * w + x;
            if (!in_brain(double(x), double(y))) continue;
            fg[i] = 1;
            const double u = (double(x) - tcx) / tx, v = (double(y) - tcy) / ty;
            double value;
            if (u * u + v * v <= 1.0) {
                tumor[i] = 1;
                value = p.tumor_level + p.tumor_texture_std * tumor_tex[i];
            } else {
                value = p.tissue_level + p.texture_std * texture[i] + p.shading_std * shading[i];
                value = std::clamp(value, 1.0, tissue_cap);
            }
            img[i] = std::round(value);
        }

    Phantom ph;
    ph.image = Image(Dims::planar(w, h), std::move(img));
    ph.foreground_mask = Mask(Dims::planar(w, h), std::move(fg));
    ph.tumor_mask = Mask(Dims::planar(w, h), std::move(tumor));
    ph.seed = seed;
    ph.tumor_in_lower_half = lower;
    return ph;
}

}  // namespace refmetric
