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

// Configuration lints. Lints are data: they never alter scores.
//
//   W01  ranges differ by more than 5% and normalization is "none"
//   W02  a per-image data-range policy while the compared ranges differ
//   W03  non-rectangular mask with a neighborhood metric (error grade)
//   W04  pre-binning bin count differs from a histogram metric's internal bins
//   W05  a blur distortion is configured but the panel holds only error metrics

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "refmetric/distort.hpp"
#include "refmetric/metrics/evaluate.hpp"
#include "refmetric/normalize.hpp"

namespace refmetric {

enum class Severity { warning, error };

inline const char* severity_name(Severity s) { return s == Severity::error ? "error" : "warning"; }

struct Lint {
    Severity severity = Severity::warning;
    std::string code;
    std::string message;

    friend bool operator==(const Lint&, const Lint&) = default;
};

/// The evaluation configuration a lint pass inspects.
struct EvalConfig {
    NormMethod norm = NormMethod::none();
    int prebin = 0;  // 0: no pre-binning
    std::vector<MetricSpec> panel;
    std::optional<Mask> mask;
    DistortionChain chain;
};

/// Two intensity ranges differ when either endpoint moves by more than 5% of their joint span.
inline bool ranges_differ(const IntensityStats& a, const IntensityStats& b, double tolerance = 0.05)
{
    const double span = std::max(a.max, b.max) - std::min(a.min, b.min);
    if (!(span > 0)) return false;
    return std::abs(a.min - b.min) > tolerance * span || std::abs(a.max - b.max) > tolerance * span;
}

inline std::vector<Lint> lint_configuration(const Image& ref, const Image& test, const EvalConfig& cfg,
                                            const MetricRegistry& reg = builtin_registry())
{
    std::vector<Lint> lints;
    auto effective = [&](const Image& img) -> IntensityStats {
        try {
            Image e = normalize(img, cfg.norm);
            if (cfg.prebin > 0) e = bin_quantize(e, cfg.prebin);
            return intensity_stats(e);
        } catch (const Error&) {
            return intensity_stats(img);  // degenerate inputs: judge the raw ranges
        }
    };
    const auto rs = effective(ref), ts = effective(test);
    const bool differ = ranges_differ(rs, ts);

    if (differ && cfg.norm.kind == NormMethod::Kind::none && cfg.prebin == 0)
        lints.push_back({Severity::warning, "W01",
                         "intensity ranges differ by more than 5% (reference [" + format_real(rs.min) + ", " +
                             format_real(rs.max) + "], test [" + format_real(ts.min) + ", " + format_real(ts.max) +
                             "]) and no normalization is applied"});

    std::set<std::string> per_image;
    for (const auto& m : cfg.panel)
        if (m.uses_range() && m.range.per_image()) per_image.insert(m.label());
    if (differ && !per_image.empty()) {
        std::string names;
        for (const auto& n : per_image) names += (names.empty() ? "" : ", ") + n;
        lints.push_back({Severity::warning, "W02",
                         "per-image data range (" + names + ") while the compared intensity ranges differ; "
                         "use the joint range or a documented fixed L"});
    }

    if (cfg.mask && !is_filled_rect(*cfg.mask)) {
        std::set<std::string> windowed;
        for (const auto& m : cfg.panel)
            if (reg.contains(m.id) && reg.at(m.id).windowed()) windowed.insert(m.id);
        if (!windowed.empty()) {
            std::string names;
            for (const auto& n : windowed) names += (names.empty() ? "" : ", ") + n;
            lints.push_back({Severity::error, "W03",
                             "non-rectangular mask with neighborhood metric(s) " + names +
                                 "; only a filled rectangular mask (equivalent to a crop) is valid for them"});
        }
    }

    if (cfg.prebin > 0) {
        std::set<int> mismatched;
        for (const auto& m : cfg.panel)
            if (m.uses_histogram() && m.hist.bins != cfg.prebin) mismatched.insert(m.hist.bins);
        if (!mismatched.empty()) {
            std::string b;
            for (int n : mismatched) b += (b.empty() ? "" : ", ") + std::to_string(n);
            lints.push_back({Severity::warning, "W04",
                             "pre-binning uses " + std::to_string(cfg.prebin) +
                                 " bins but histogram metric internal bins are " + b});
        }
    }

    const bool blurred = std::any_of(cfg.chain.begin(), cfg.chain.end(), [](const DistortionSpec& s) {
        return s.kind == DistortionSpec::Kind::gaussian_blur;
    });
    const bool only_error = !cfg.panel.empty() && std::all_of(cfg.panel.begin(), cfg.panel.end(), [](const MetricSpec& m) {
                                return m.id == "mae" || m.id == "mse" || m.id == "psnr";
                            });
    if (blurred && only_error)
        lints.push_back({Severity::warning, "W05",
                         "blur distortion configured but the panel holds only error metrics (mae/mse/psnr), "
                         "which favor blurred images; add nmi or a structural metric"});
    return lints;
}

inline bool has_error_lint(const std::vector<Lint>& lints)
{
    return std::any_of(lints.begin(), lints.end(), [](const Lint& l) { return l.severity == Severity::error; });
}

}  // namespace refmetric
