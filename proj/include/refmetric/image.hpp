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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace refmetric {

/// Every precondition or format violation in the library surfaces as this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Grid extent. Data is stored row-major with x fastest: index = (z*h + y)*w + x.
struct Dims {
    std::size_t width = 1;
    std::size_t height = 1;
    std::size_t depth = 1;
    bool volumetric = false;

    static Dims planar(std::size_t w, std::size_t h) { return {w, h, 1, false}; }
    static Dims volume(std::size_t w, std::size_t h, std::size_t d) { return {w, h, d, true}; }

    std::size_t count() const { return width * height * depth; }
    std::size_t extent(int axis) const { return axis == 0 ? width : axis == 1 ? height : depth; }
    int axes() const { return volumetric ? 3 : 2; }

    friend bool operator==(const Dims&, const Dims&) = default;

    std::string str() const
    {
        std::string s = std::to_string(width) + "x" + std::to_string(height);
        if (volumetric) s += "x" + std::to_string(depth);
        return s;
    }
};

/// Axis-aligned box: origin and extent per axis, in (x, y, z) order.
struct Rect {
    std::size_t x = 0, y = 0, z = 0;
    std::size_t width = 1, height = 1, depth = 1;

    friend bool operator==(const Rect&, const Rect&) = default;

    static Rect full(const Dims& d) { return {0, 0, 0, d.width, d.height, d.depth}; }
};

/// Dense single-channel grid.
template <class T>
class Grid {
public:
    Grid() = default;
    Grid(Dims dims, std::vector<T> values) : dims_(dims), values_(std::move(values))
    {
        if (dims_.width < 1 || dims_.height < 1 || dims_.depth < 1)
            throw Error("grid extent must be at least 1 along every axis");
        if (!dims_.volumetric && dims_.depth != 1)
            throw Error("planar grid must have depth 1");
        if (values_.size() != dims_.count())
            throw Error("grid payload has " + std::to_string(values_.size()) + " elements, dims " +
                        dims_.str() + " require " + std::to_string(dims_.count()));
    }
    Grid(Dims dims, T fill) : Grid(dims, std::vector<T>(dims.count(), fill)) {}

    const Dims& dims() const { return dims_; }
    std::size_t size() const { return values_.size(); }
    std::span<const T> values() const { return values_; }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z = 0) const
    {
        return (z * dims_.height + y) * dims_.width + x;
    }
    const T& operator()(std::size_t x, std::size_t y, std::size_t z = 0) const
    {
        return values_[index(x, y, z)];
    }
    const T& operator[](std::size_t i) const { return values_[i]; }

protected:
    Dims dims_{};
    std::vector<T> values_;
};

/// Real-valued image. Immutable after construction; all values finite.
class Image : public Grid<double> {
public:
    Image() = default;
    Image(Dims dims, std::vector<double> values,
          std::optional<std::pair<double, double>> declared_range = std::nullopt,
          std::vector<std::string> provenance = {})
        : Grid<double>(dims, std::move(values)), declared_range_(declared_range),
          provenance_(std::move(provenance))
    {
        for (double v : values_)
            if (!std::isfinite(v)) throw Error("image contains a non-finite value");
        if (declared_range_) {
            auto [lo, hi] = *declared_range_;
            if (lo > hi) throw Error("declared range has lo > hi");
            auto [mn, mx] = std::minmax_element(values_.begin(), values_.end());
            if (*mn < lo || *mx > hi)
                throw Error("image values fall outside the declared range");
        }
    }

    Image(Dims dims, double fill) : Image(dims, std::vector<double>(dims.count(), fill)) {}

    const std::optional<std::pair<double, double>>& declared_range() const { return declared_range_; }

    /// Applied-distortion trail, one canonical entry per step.
    const std::vector<std::string>& provenance() const { return provenance_; }

    Image with_values(std::vector<double> values,
                      std::optional<std::pair<double, double>> declared = std::nullopt) const
    {
        return Image(dims_, std::move(values), declared, provenance_);
    }
    Image with_provenance(std::string step) const
    {
        auto trail = provenance_;
        trail.push_back(std::move(step));
        Image out = *this;
        out.provenance_ = std::move(trail);
        return out;
    }

private:
    std::optional<std::pair<double, double>> declared_range_;
    std::vector<std::string> provenance_;
};

/// Boolean grid; stored as bytes so spans work.
class Mask : public Grid<std::uint8_t> {
public:
    Mask() = default;
    Mask(Dims dims, std::vector<std::uint8_t> values) : Grid<std::uint8_t>(dims, std::move(values))
    {
        for (auto& v : values_) v = v ? 1 : 0;
    }
    Mask(Dims dims, bool fill) : Mask(dims, std::vector<std::uint8_t>(dims.count(), fill ? 1 : 0)) {}

    std::size_t count() const
    {
        return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
    }
    bool any() const { return count() > 0; }
};

struct IntensityStats {
    double min = 0;
    double max = 0;
    double mean = 0;
    double std = 0;  // population (divisor N)
    double range() const { return max - min; }
};

inline IntensityStats intensity_stats(std::span<const double> v)
{
    if (v.empty()) throw Error("intensity statistics of an empty sample");
    IntensityStats s;
    auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    s.min = *mn;
    s.max = *mx;
    double sum = 0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size()));
    return s;
}

inline IntensityStats intensity_stats(const Image& img) { return intensity_stats(img.values()); }

inline void check_rect(const Dims& d, const Rect& r)
{
    if (r.width < 1 || r.height < 1 || r.depth < 1) throw Error("rect extent must be positive");
    if (r.x + r.width > d.width || r.y + r.height > d.height || r.z + r.depth > d.depth)
        throw Error("rect exceeds image bounds " + d.str());
}

template <class T>
std::vector<T> crop_values(const Grid<T>& g, const Rect& r)
{
    check_rect(g.dims(), r);
    std::vector<T> out;
    out.reserve(r.width * r.height * r.depth);
    for (std::size_t z = r.z; z < r.z + r.depth; ++z)
        for (std::size_t y = r.y; y < r.y + r.height; ++y) {
            auto first = g.values().begin() + static_cast<std::ptrdiff_t>(g.index(r.x, y, z));
            out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(r.width));
        }
    return out;
}

inline Dims rect_dims(const Dims& parent, const Rect& r)
{
    return parent.volumetric ? Dims::volume(r.width, r.height, r.depth) : Dims::planar(r.width, r.height);
}

inline Image crop(const Image& img, const Rect& r)
{
    return Image(rect_dims(img.dims(), r), crop_values(img, r), img.declared_range(), img.provenance());
}

inline Mask crop(const Mask& m, const Rect& r) { return Mask(rect_dims(m.dims(), r), crop_values(m, r)); }

inline Rect bounding_box(const Mask& m)
{
    const Dims& d = m.dims();
    std::size_t x0 = d.width, y0 = d.height, z0 = d.depth, x1 = 0, y1 = 0, z1 = 0;
    bool found = false;
    for (std::size_t z = 0; z < d.depth; ++z)
        for (std::size_t y = 0; y < d.height; ++y)
            for (std::size_t x = 0; x < d.width; ++x)
                if (m(x, y, z)) {
                    found = true;
                    x0 = std::min(x0, x), x1 = std::max(x1, x);
                    y0 = std::min(y0, y), y1 = std::max(y1, y);
                    z0 = std::min(z0, z), z1 = std::max(z1, z);
                }
    if (!found) throw Error("bounding box of an empty mask");
    return {x0, y0, z0, x1 - x0 + 1, y1 - y0 + 1, z1 - z0 + 1};
}

/// True when the mask's true elements exactly fill their bounding box.
inline bool is_filled_rect(const Mask& m)
{
    if (!m.any()) return false;
    Rect r = bounding_box(m);
    return m.count() == r.width * r.height * r.depth;
}

inline void require_same_dims(const Dims& a, const Dims& b)
{
    if (!(a == b)) throw Error("dimension mismatch: " + a.str() + " vs " + b.str());
}

/// Values of img at true mask positions, in storage order.
inline std::vector<double> masked_values(const Image& img, const Mask& m)
{
    require_same_dims(img.dims(), m.dims());
    std::vector<double> out;
    out.reserve(m.count());
    for (std::size_t i = 0; i < img.size(); ++i)
        if (m[i]) out.push_back(img[i]);
    return out;
}

}  // namespace refmetric
