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

// Error metrics and linear correlation. Each has a span overload so masked
// evaluation can reuse it on the gathered foreground samples.

#include <cmath>
#include <span>

#include "refmetric/image.hpp"
#include "refmetric/metrics/score.hpp"
#include "refmetric/normalize.hpp"

namespace refmetric {

namespace detail {

inline void require_pair(std::span<const double> ref, std::span<const double> test)
{
    if (ref.size() != test.size())
        throw Error("sample count mismatch: " + std::to_string(ref.size()) + " vs " + std::to_string(test.size()));
    if (ref.empty()) throw Error("metric over zero samples");
}

inline double mean_squared_error(std::span<const double> ref, std::span<const double> test)
{
    double sum = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        double d = ref[i] - test[i];
        sum += d * d;
    }
    return sum / static_cast<double>(ref.size());
}

}  // namespace detail

inline MetricScore mae(std::span<const double> ref, std::span<const double> test)
{
    detail::require_pair(ref, test);
    double sum = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) sum += std::abs(ref[i] - test[i]);
    return make_score(sum / static_cast<double>(ref.size()), "mae", {});
}

inline MetricScore mse(std::span<const double> ref, std::span<const double> test)
{
    detail::require_pair(ref, test);
    return make_score(detail::mean_squared_error(ref, test), "mse", {});
}

/// 10 log10(L^2 / MSE); +inf for identical samples.
inline MetricScore psnr(std::span<const double> ref, std::span<const double> test, const DataRangePolicy& range)
{
    detail::require_pair(ref, test);
    const double L = range.kind == DataRangePolicy::Kind::fixed
                         ? range.L
                         : resolve_data_range(intensity_stats(ref), intensity_stats(test), range);
    const double err = detail::mean_squared_error(ref, test);
    const double value = err == 0 ? INFINITY : 10.0 * std::log10(L * L / err);
    Fingerprint fp;
    fp.set("L", L).set("range", range.str());
    return make_score(value, "psnr", fp);
}

/// Pearson correlation. Two-pass centered sums in extended precision, so that
/// affine re-normalization of either input moves the score by rounding only.
inline MetricScore pcc(std::span<const double> ref, std::span<const double> test)
{
    detail::require_pair(ref, test);
    using wide = long double;
    const auto n = static_cast<wide>(ref.size());
    wide mr = 0, mt = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) mr += ref[i], mt += test[i];
    mr /= n;
    mt /= n;
    wide srr = 0, stt = 0, srt = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const wide a = ref[i] - mr, b = test[i] - mt;
        srr += a * a;
        stt += b * b;
        srt += a * b;
    }
    if (!(srr > 0) || !(stt > 0)) throw Error("pcc undefined for a constant input (zero variance)");
    const auto r = static_cast<double>(srt / std::sqrt(srr * stt));
    return make_score(std::clamp(r, -1.0, 1.0), "pcc", {});
}

inline MetricScore mae(const Image& ref, const Image& test)
{
    require_same_dims(ref.dims(), test.dims());
    return mae(ref.values(), test.values());
}

inline MetricScore mse(const Image& ref, const Image& test)
{
    require_same_dims(ref.dims(), test.dims());
    return mse(ref.values(), test.values());
}

inline MetricScore psnr(const Image& ref, const Image& test, const DataRangePolicy& range)
{
    require_same_dims(ref.dims(), test.dims());
    return psnr(ref.values(), test.values(), range);
}

inline MetricScore pcc(const Image& ref, const Image& test)
{
    require_same_dims(ref.dims(), test.dims());
    return pcc(ref.values(), test.values());
}

}  // namespace refmetric
