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

#include <cmath>
#include <span>
#include <vector>

#include "refmetric/image.hpp"
#include "refmetric/metrics/score.hpp"

namespace refmetric {

struct HistogramParams {
    enum class Edges { per_image, joint };
    int bins = 256;
    Edges edges = Edges::per_image;

    void validate() const
    {
        if (bins < 2) throw Error("histogram requires at least 2 bins");
    }

    Fingerprint fingerprint() const
    {
        Fingerprint fp;
        fp.set("bins", bins).set("edges", edges == Edges::joint ? "joint" : "per_image").set("log", "e");
        return fp;
    }
};

/// Marginal and joint entropies (natural log) of a paired sample.
struct Entropies {
    double ref = 0;
    double test = 0;
    double joint = 0;
};

namespace detail {

/// Bin index with equal-width bins over [lo, hi]; the top edge folds into the last bin.
inline std::vector<int> bin_indices(std::span<const double> v, double lo, double hi, int bins)
{
    std::vector<int> idx(v.size(), 0);
    const double range = hi - lo;
    if (!(range > 0)) return idx;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double b = std::floor((v[i] - lo) / range * bins);
        idx[i] = static_cast<int>(std::clamp(b, 0.0, static_cast<double>(bins - 1)));
    }
    return idx;
}

/// Terms are summed in sorted-count order so the result depends only on the
/// multiset of counts (exact symmetry under swapping or relabeling bins).
inline double entropy_of_counts(std::span<const std::size_t> counts, double n)
{
    std::vector<std::size_t> nz;
    for (std::size_t c : counts)
        if (c) nz.push_back(c);
    std::sort(nz.begin(), nz.end());
    double h = 0;
    for (std::size_t c : nz) {
        double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace detail

inline Entropies histogram_entropies(std::span<const double> ref, std::span<const double> test,
                                     const HistogramParams& h)
{
    h.validate();
    if (ref.size() != test.size()) throw Error("sample count mismatch in histogram metric");
    if (ref.empty()) throw Error("histogram metric over zero samples");
    auto sr = intensity_stats(ref), st = intensity_stats(test);
    double rlo = sr.min, rhi = sr.max, tlo = st.min, thi = st.max;
    if (h.edges == HistogramParams::Edges::joint) {
        rlo = tlo = std::min(sr.min, st.min);
        rhi = thi = std::max(sr.max, st.max);
    }
    auto ri = detail::bin_indices(ref, rlo, rhi, h.bins);
    auto ti = detail::bin_indices(test, tlo, thi, h.bins);
    const auto b = static_cast<std::size_t>(h.bins);
    std::vector<std::size_t> cr(b, 0), ct(b, 0), cj(b * b, 0);
    for (std::size_t i = 0; i < ri.size(); ++i) {
        auto r = static_cast<std::size_t>(ri[i]), t = static_cast<std::size_t>(ti[i]);
        ++cr[r];
        ++ct[t];
        ++cj[r * b + t];
    }
    const auto n = static_cast<double>(ref.size());
    return {detail::entropy_of_counts(cr, n), detail::entropy_of_counts(ct, n), detail::entropy_of_counts(cj, n)};
}

/// H(R) + H(I) - H(R, I).
inline MetricScore mi(std::span<const double> ref, std::span<const double> test, const HistogramParams& h = {})
{
    auto e = histogram_entropies(ref, test, h);
    return make_score(std::max(0.0, e.ref + e.test - e.joint), "mi", h.fingerprint());
}

/// (H(R) + H(I)) / H(R, I), in [1, 2].
inline MetricScore nmi(std::span<const double> ref, std::span<const double> test, const HistogramParams& h = {})
{
    auto e = histogram_entropies(ref, test, h);
    if (!(e.joint > 0)) throw Error("nmi undefined: joint entropy is 0 (both inputs constant)");
    return make_score((e.ref + e.test) / e.joint, "nmi", h.fingerprint());
}

inline MetricScore mi(const Image& ref, const Image& test, const HistogramParams& h = {})
{
    require_same_dims(ref.dims(), test.dims());
    return mi(ref.values(), test.values(), h);
}

inline MetricScore nmi(const Image& ref, const Image& test, const HistogramParams& h = {})
{
    require_same_dims(ref.dims(), test.dims());
    return nmi(ref.values(), test.values(), h);
}

}  // namespace refmetric
