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

// Proxy downstream task: a range-relative threshold followed by a
// connected-component size filter, compared across images with DICE.

#include <array>
#include <string>
#include <vector>

#include "refmetric/image.hpp"
#include "refmetric/metrics/dice.hpp"

namespace refmetric {

enum class Connectivity { face, face_corner };

struct SegmenterParams {
    double threshold_rel = 0.9;
    int min_component_size = 20;
    Connectivity connectivity = Connectivity::face;

    void validate() const
    {
        if (!(threshold_rel > 0 && threshold_rel < 1)) throw Error("segmenter threshold_rel must lie strictly in (0, 1)");
        if (min_component_size < 1) throw Error("segmenter min_component_size must be >= 1");
    }

    static Connectivity parse_connectivity(const std::string& s)
    {
        if (s == "face") return Connectivity::face;
        if (s == "face+corner") return Connectivity::face_corner;
        throw Error("unknown connectivity '" + s + "' (expected face or face+corner)");
    }

    Fingerprint fingerprint() const
    {
        Fingerprint fp;
        fp.set("seg.threshold_rel", threshold_rel)
            .set("seg.min_size", min_component_size)
            .set("seg.connectivity", connectivity == Connectivity::face ? "face" : "face+corner");
        return fp;
    }
};

namespace detail {

inline std::vector<std::array<int, 3>> neighbor_offsets(bool volumetric, Connectivity c)
{
    std::vector<std::array<int, 3>> out;
    const int zr = volumetric ? 1 : 0;
    for (int dz = -zr; dz <= zr; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (manhattan == 0) continue;
                if (c == Connectivity::face && manhattan != 1) continue;
                out.push_back({dx, dy, dz});
            }
    return out;
}

}  // namespace detail

/// Connected components of a mask as lists of storage indices, in scan order of their first element.
inline std::vector<std::vector<std::size_t>> connected_components(const Mask& m, Connectivity c)
{
    const Dims& d = m.dims();
    const auto offsets = detail::neighbor_offsets(d.volumetric, c);
    std::vector<std::uint8_t> seen(m.size(), 0);
    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < m.size(); ++start) {
        if (!m[start] || seen[start]) continue;
        std::vector<std::size_t> comp;
        stack.push_back(start);
        seen[start] = 1;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            comp.push_back(i);
            const auto x = static_cast<long>(i % d.width);
            const auto y = static_cast<long>((i / d.width) % d.height);
            const auto z = static_cast<long>(i / (d.width * d.height));
            for (const auto& o : offsets) {
                const long nx = x + o[0], ny = y + o[1], nz = z + o[2];
                if (nx < 0 || ny < 0 || nz < 0 || nx >= long(d.width) || ny >= long(d.height) || nz >= long(d.depth))
                    continue;
                const std::size_t j = m.index(std::size_t(nx), std::size_t(ny), std::size_t(nz));
                if (m[j] && !seen[j]) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
            }
        }
        comps.push_back(std::move(comp));
    }
    return comps;
}

/// Pixels strictly above I_min + threshold_rel (I_max - I_min), keeping components of at least min_component_size.
inline Mask threshold_segment(const Image& img, const SegmenterParams& p = {})
{
    p.validate();
    const auto s = intensity_stats(img);
    if (!(s.max > s.min)) throw Error("cannot segment a constant image");
    const double t = s.min + p.threshold_rel * (s.max - s.min);
    std::vector<std::uint8_t> raw(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) raw[i] = img[i] > t;
    Mask above(img.dims(), std::move(raw));
    std::vector<std::uint8_t> keep(img.size(), 0);
    for (const auto& comp : connected_components(above, p.connectivity))
        if (comp.size() >= static_cast<std::size_t>(p.min_component_size))
            for (std::size_t i : comp) keep[i] = 1;
    return Mask(img.dims(), std::move(keep));
}

/// DICE between the proxy segmentations of both images.
inline MetricScore task_similarity(const Image& ref, const Image& test, const SegmenterParams& p = {})
{
    require_same_dims(ref.dims(), test.dims());
    auto score = dice(threshold_segment(ref, p), threshold_segment(test, p));
    Fingerprint fp = p.fingerprint();
    fp.set("task", "threshold_cc");
    return make_score(score.value, "dice", fp);
}

}  // namespace refmetric
