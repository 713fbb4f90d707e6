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

// Metric dispatch by identifier, the plugin registry, and masked evaluation.
//
// Pointwise metrics (mae, mse, psnr, pcc, mi, nmi) accept any non-empty mask and
// are evaluated on the masked samples. Metrics that combine neighboring pixels
// (ssim, ms_ssim, cw_ssim, the proxy-task dice) accept only masks that exactly
// fill an axis-aligned rectangle, and are evaluated on the crop.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "refmetric/downstream.hpp"
#include "refmetric/metrics/cw_ssim.hpp"
#include "refmetric/metrics/histogram.hpp"
#include "refmetric/metrics/pointwise.hpp"
#include "refmetric/metrics/ssim.hpp"

namespace refmetric {

inline const std::vector<std::string>& builtin_metric_ids()
{
    static const std::vector<std::string> ids{"mae", "mse",  "psnr", "ssim", "ms_ssim",
                                              "cw_ssim", "pcc", "mi", "nmi", "dice"};
    return ids;
}

/// A metric identifier plus every parameter any built-in metric may read.
struct MetricSpec {
    std::string id;
    DataRangePolicy range = DataRangePolicy::joint();
    SsimParams ssim;
    MsSsimParams ms_ssim;
    CwSsimParams cw_ssim;
    HistogramParams hist;
    SegmenterParams segmenter;

    static MetricSpec of(std::string id, DataRangePolicy range = DataRangePolicy::joint())
    {
        MetricSpec s;
        s.id = std::move(id);
        s.range = range;
        return s;
    }
    static MetricSpec histogram(std::string id, int bins)
    {
        MetricSpec s = of(std::move(id));
        s.hist.bins = bins;
        return s;
    }

    SsimParams resolved_ssim() const
    {
        SsimParams p = ssim;
        p.range = range;
        return p;
    }
    MsSsimParams resolved_ms_ssim() const
    {
        MsSsimParams p = ms_ssim;
        p.base = resolved_ssim();
        return p;
    }

    bool uses_range() const { return id == "psnr" || id == "ssim" || id == "ms_ssim"; }
    bool uses_histogram() const { return id == "mi" || id == "nmi"; }

    /// Short row label that tells apart two panel entries with the same id.
    std::string label() const
    {
        if (uses_range()) {
            std::string r = range.kind == DataRangePolicy::Kind::fixed ? format_real(range.L) : range.str();
            return id + "[L=" + r + "]";
        }
        if (uses_histogram()) return id + "[bins=" + std::to_string(hist.bins) + "]";
        if (id == "dice") return "dice[proxy-task]";
        return id;
    }

    /// Every parameter the metric reads, without data-dependent values such as the resolved L.
    Fingerprint fingerprint() const
    {
        Fingerprint fp;
        fp.set("metric", id);
        if (uses_range()) fp.set("range", range.str());
        if (id == "ssim" || id == "ms_ssim") {
            fp.set("window", ssim.window.str()).set("k1", ssim.k1).set("k2", ssim.k2);
        }
        if (id == "ms_ssim") {
            Fingerprint ms = resolved_ms_ssim().fingerprint(1.0);
            for (const char* k : {"scales", "weights", "downsample", "clamp"}) fp.set(k, ms.get(k));
        }
        if (id == "cw_ssim") fp.merge(cw_ssim.fingerprint());
        if (uses_histogram()) fp.merge(hist.fingerprint());
        if (id == "dice") fp.merge(segmenter.fingerprint()).set("task", "threshold_cc");
        return fp;
    }

    /// Inverse of fingerprint(); unknown keys are ignored so wider row fingerprints parse too.
    static MetricSpec from_fingerprint(const Fingerprint& fp)
    {
        MetricSpec s = of(fp.get("metric"));
        auto num = [&](const char* k) { return parse_real(fp.get(k)); };
        auto integer = [&](const char* k) { return static_cast<int>(num(k)); };
        if (fp.has("range")) s.range = DataRangePolicy::parse(fp.get("range"));
        if (fp.has("window")) {
            const std::string& w = fp.get("window");
            auto colon = w.find(':');
            auto kv = detail::parse_kv_list(std::string_view(w).substr(colon + 1), w);
            if (w.rfind("gaussian:", 0) == 0)
                s.ssim.window = Window::gaussian(kv.at("sigma"), static_cast<int>(kv.at("radius")));
            else if (w.rfind("uniform:", 0) == 0)
                s.ssim.window = Window::uniform(static_cast<int>(kv.at("side")));
            else
                throw Error("unknown window '" + w + "'");
        }
        if (fp.has("k1")) s.ssim.k1 = num("k1");
        if (fp.has("k2")) s.ssim.k2 = num("k2");
        if (fp.has("scales")) {
            s.ms_ssim.scales = integer("scales");
            s.ms_ssim.weights.clear();
            for (const auto& w : split(fp.get("weights"), ',')) s.ms_ssim.weights.push_back(parse_real(w));
        }
        if (fp.has("levels")) s.cw_ssim.levels = integer("levels");
        if (fp.has("orientations")) s.cw_ssim.orientations = integer("orientations");
        if (fp.has("k")) s.cw_ssim.k = num("k");
        if (fp.has("neighborhood")) s.cw_ssim.neighborhood = integer("neighborhood");
        if (fp.has("bins")) s.hist.bins = integer("bins");
        if (fp.has("edges"))
            s.hist.edges = fp.get("edges") == "joint" ? HistogramParams::Edges::joint : HistogramParams::Edges::per_image;
        if (fp.has("seg.threshold_rel")) s.segmenter.threshold_rel = num("seg.threshold_rel");
        if (fp.has("seg.min_size")) s.segmenter.min_component_size = integer("seg.min_size");
        if (fp.has("seg.connectivity"))
            s.segmenter.connectivity = SegmenterParams::parse_connectivity(fp.get("seg.connectivity"));
        return s;
    }
};

using ImageMetricFn = std::function<MetricScore(const MetricSpec&, const Image&, const Image&)>;
using SampleMetricFn =
    std::function<MetricScore(const MetricSpec&, std::span<const double>, std::span<const double>)>;

/// A metric is pointwise when it provides a sample function; otherwise it is windowed.
struct MetricEntry {
    ImageMetricFn image;
    SampleMetricFn samples;  // empty for windowed metrics

    bool windowed() const { return !samples; }
};

/// Identifier -> implementation table. External (e.g. learned) metrics attach via add().
class MetricRegistry {
public:
    static MetricRegistry with_builtins()
    {
        MetricRegistry r;
        auto pointwise = [&r](const std::string& id, SampleMetricFn fn) {
            MetricEntry e;
            e.samples = fn;
            e.image = [fn](const MetricSpec& s, const Image& a, const Image& b) {
                require_same_dims(a.dims(), b.dims());
                return fn(s, a.values(), b.values());
            };
            r.add(id, std::move(e));
        };
        pointwise("mae", [](const MetricSpec&, auto a, auto b) { return mae(a, b); });
        pointwise("mse", [](const MetricSpec&, auto a, auto b) { return mse(a, b); });
        pointwise("psnr", [](const MetricSpec& s, auto a, auto b) { return psnr(a, b, s.range); });
        pointwise("pcc", [](const MetricSpec&, auto a, auto b) { return pcc(a, b); });
        pointwise("mi", [](const MetricSpec& s, auto a, auto b) { return mi(a, b, s.hist); });
        pointwise("nmi", [](const MetricSpec& s, auto a, auto b) { return nmi(a, b, s.hist); });
        r.add("ssim", {[](const MetricSpec& s, const Image& a, const Image& b) { return ssim(a, b, s.resolved_ssim()); }, {}});
        r.add("ms_ssim",
              {[](const MetricSpec& s, const Image& a, const Image& b) { return ms_ssim(a, b, s.resolved_ms_ssim()); }, {}});
        r.add("cw_ssim", {[](const MetricSpec& s, const Image& a, const Image& b) { return cw_ssim(a, b, s.cw_ssim); }, {}});
        r.add("dice",
              {[](const MetricSpec& s, const Image& a, const Image& b) { return task_similarity(a, b, s.segmenter); }, {}});
        return r;
    }

    void add(const std::string& id, MetricEntry entry)
    {
        if (id.empty() || id.find_first_of(";=,") != std::string::npos) throw Error("invalid metric id '" + id + "'");
        if (!entry.image) throw Error("metric '" + id + "' has no image evaluator");
        if (!entries_.emplace(id, std::move(entry)).second) throw Error("metric '" + id + "' already registered");
    }

    bool contains(const std::string& id) const { return entries_.count(id) != 0; }

    const MetricEntry& at(const std::string& id) const
    {
        auto it = entries_.find(id);
        if (it == entries_.end()) throw Error("unknown metric '" + id + "'");
        return it->second;
    }

    std::vector<std::string> ids() const
    {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries_) out.push_back(k);
        return out;
    }

private:
    std::map<std::string, MetricEntry> entries_;
};

inline const MetricRegistry& builtin_registry()
{
    static const MetricRegistry r = MetricRegistry::with_builtins();
    return r;
}

inline bool is_windowed_metric(const std::string& id, const MetricRegistry& reg = builtin_registry())
{
    return reg.at(id).windowed();
}

inline MetricScore evaluate(const MetricSpec& spec, const Image& ref, const Image& test,
                            const MetricRegistry& reg = builtin_registry())
{
    return reg.at(spec.id).image(spec, ref, test);
}

inline MetricScore masked_evaluate(const MetricSpec& spec, const Image& ref, const Image& test, const Mask& mask,
                                   const MetricRegistry& reg = builtin_registry())
{
    require_same_dims(ref.dims(), test.dims());
    require_same_dims(ref.dims(), mask.dims());
    if (!mask.any()) throw Error("evaluation mask is empty");
    const MetricEntry& e = reg.at(spec.id);
    if (e.windowed()) {
        if (!is_filled_rect(mask))
            throw Error("metric '" + spec.id +
                        "' combines neighboring pixels, so its mask must be a filled axis-aligned rectangle "
                        "(evaluated as a crop); non-rectangular masks are only valid for pointwise metrics "
                        "(mae, mse, psnr, pcc, mi, nmi)");
        const Rect r = bounding_box(mask);
        return e.image(spec, crop(ref, r), crop(test, r));
    }
    const auto a = masked_values(ref, mask);
    const auto b = masked_values(test, mask);
    return e.samples(spec, a, b);
}

}  // namespace refmetric
