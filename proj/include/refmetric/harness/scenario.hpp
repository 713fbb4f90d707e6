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

// Scenario pipelines. For each phantom and variant:
//   test = chain(reference)
//   both images: normalize -> optional pre-binning -> mask mode
//   evaluate the metric panel
// Every row's fingerprint carries the phantom seed/knobs, the effective chain,
// normalization, pre-binning and mask mode, so reproduce_row() can recompute
// the score from the fingerprint alone.

#include <algorithm>
#include <thread>
#include <vector>

#include <json.hpp>

#include "refmetric/harness/lint.hpp"
#include "refmetric/harness/phantom.hpp"
#include "refmetric/harness/report.hpp"

namespace refmetric {

struct MaskMode {
    enum class Kind { full, crop_fraction, bbox_foreground, foreground_mask };
    Kind kind = Kind::full;
    double fraction = 0.03;

    static MaskMode full() { return {}; }
    static MaskMode crop(double f) { return {Kind::crop_fraction, f}; }
    static MaskMode bbox() { return {Kind::bbox_foreground}; }
    static MaskMode foreground() { return {Kind::foreground_mask}; }

    std::string str() const
    {
        switch (kind) {
        case Kind::full: return "full";
        case Kind::crop_fraction: return "crop:" + format_real(fraction);
        case Kind::bbox_foreground: return "bbox:foreground";
        case Kind::foreground_mask: return "mask:foreground";
        }
        return "full";
    }

    static MaskMode parse(const std::string& s)
    {
        if (s == "full") return full();
        if (s == "bbox:foreground") return bbox();
        if (s == "mask:foreground") return foreground();
        if (s.rfind("crop:", 0) == 0) return crop(parse_real(s.substr(5)));
        throw Error("unknown mask mode '" + s + "'");
    }
};

struct Variant {
    std::string label;
    DistortionChain chain;
    NormMethod norm = NormMethod::none();
    int prebin = 0;
    std::vector<MetricSpec> panel;
    MaskMode mask;
};

struct Scenario {
    std::string id;
    std::vector<Variant> variants;
    TumorHalf placement = TumorHalf::either;  // phantom requirement
};

struct HarnessConfig {
    int count = 20;
    std::uint64_t seed = 1;
    PhantomParams phantom;
    bool tumor_half_set = false;  // explicit phantom placement overrides the scenario's
    SegmenterParams segmenter;
    std::vector<std::string> scenarios{"all"};
    std::string output_dir = "audit_out";
    std::vector<ReportFormat> formats{ReportFormat::csv, ReportFormat::markdown};
    int threads = 0;  // 0: hardware concurrency
    bool strict = false;

    static HarnessConfig from_json(const nlohmann::json& j)
    {
        HarnessConfig c;
        if (!j.is_object()) throw Error("harness config must be a JSON object");
        auto check_keys = [](const nlohmann::json& o, std::initializer_list<const char*> allowed, const char* where) {
            if (!o.is_object()) throw Error(std::string(where) + " must be an object");
            for (const auto& [k, v] : o.items())
                if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
                    throw Error(std::string("unknown key '") + k + "' in " + where);
        };
        check_keys(j, {"phantoms", "scenarios", "segmenter", "output", "threads", "strict"}, "config");
        if (j.contains("phantoms")) {
            const auto& p = j["phantoms"];
            check_keys(p, {"count", "seed", "dims", "tumor_half"}, "phantoms");
            if (p.contains("count")) c.count = p["count"].get<int>();
            if (p.contains("seed")) c.seed = p["seed"].get<std::uint64_t>();
            if (p.contains("dims")) {
                auto d = p["dims"].get<std::vector<std::size_t>>();
                if (d.size() != 2) throw Error("phantoms.dims must be [h, w]");
                c.phantom.height = d[0];
                c.phantom.width = d[1];
            }
            if (p.contains("tumor_half")) {
                c.phantom.tumor_half = parse_tumor_half(p["tumor_half"].get<std::string>());
                c.tumor_half_set = true;
            }
        }
        if (j.contains("scenarios")) {
            const auto& s = j["scenarios"];
            c.scenarios = s.is_string() ? std::vector<std::string>{s.get<std::string>()} : s.get<std::vector<std::string>>();
        }
        if (j.contains("segmenter")) {
            const auto& s = j["segmenter"];
            check_keys(s, {"threshold_rel", "min_component_size", "connectivity"}, "segmenter");
            if (s.contains("threshold_rel")) c.segmenter.threshold_rel = s["threshold_rel"].get<double>();
            if (s.contains("min_component_size")) c.segmenter.min_component_size = s["min_component_size"].get<int>();
            if (s.contains("connectivity"))
                c.segmenter.connectivity = SegmenterParams::parse_connectivity(s["connectivity"].get<std::string>());
        }
        if (j.contains("output")) {
            const auto& o = j["output"];
            check_keys(o, {"dir", "formats"}, "output");
            if (o.contains("dir")) c.output_dir = o["dir"].get<std::string>();
            if (o.contains("formats")) {
                c.formats.clear();
                for (const auto& f : o["formats"].get<std::vector<std::string>>()) {
                    if (f == "csv") c.formats.push_back(ReportFormat::csv);
                    else if (f == "markdown") c.formats.push_back(ReportFormat::markdown);
                    else throw Error("unknown output format '" + f + "'");
                }
            }
        }
        if (j.contains("threads")) c.threads = j["threads"].get<int>();
        if (j.contains("strict")) c.strict = j["strict"].get<bool>();
        c.validate();
        return c;
    }

    static HarnessConfig parse(const std::string& text)
    {
        try {
            return from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("invalid harness config: ") + e.what());
        }
    }

    void validate() const
    {
        if (count < 1) throw Error("phantoms.count must be >= 1");
        phantom.validate();
        segmenter.validate();
        if (threads < 0) throw Error("threads must be >= 0");
    }
};

inline const std::vector<std::string>& builtin_scenario_ids()
{
    static const std::vector<std::string> ids{"pitfall1", "pitfall2", "pitfall3", "pitfall4", "pitfall5"};
    return ids;
}

namespace detail {

inline std::vector<MetricSpec> panel(std::initializer_list<MetricSpec> specs, const SegmenterParams& seg)
{
    std::vector<MetricSpec> out(specs);
    for (auto& s : out) s.segmenter = seg;
    return out;
}

}  // namespace detail

/// The five built-in pitfall scenarios. Variant labels are a stable contract.
inline Scenario builtin_scenario(const std::string& id, const SegmenterParams& seg = {})
{
    using M = MetricSpec;
    const auto joint = DataRangePolicy::joint();
    Scenario s;
    s.id = id;
    if (id == "pitfall1") {
        // gamma 0.4 followed by linear scaling 1.2, evaluated under several normalizations and L policies
        const DistortionChain chain{DistortionSpec::gamma(0.4), DistortionSpec::linear(1.2)};
        const auto fixed255 = DataRangePolicy::fixed(255);
        s.variants.push_back({"none", chain, NormMethod::none(), 0,
                              detail::panel({M::of("ssim", joint), M::of("ssim", DataRangePolicy::per_reference()),
                                             M::of("ssim", DataRangePolicy::per_test()), M::of("psnr", joint),
                                             M::of("psnr", DataRangePolicy::per_reference()),
                                             M::of("psnr", DataRangePolicy::per_test()), M::of("ms_ssim", joint),
                                             M::of("cw_ssim"), M::of("mae"), M::of("mse"), M::of("pcc"),
                                             M::histogram("nmi", 128), M::histogram("nmi", 256), M::histogram("nmi", 512)},
                                            seg),
                              MaskMode::full()});
        for (auto [label, norm] : {std::pair{"minmax", NormMethod::minmax()}, std::pair{"zscore", NormMethod::zscore()}})
            s.variants.push_back({label, chain, norm, 0,
                                  detail::panel({M::of("ssim", joint), M::of("psnr", joint), M::of("ms_ssim", joint),
                                                 M::of("mae"), M::of("mse")},
                                                seg),
                                  MaskMode::full()});
        s.variants.push_back({"bin256", chain, NormMethod::none(), 256,
                              detail::panel({M::of("ssim", fixed255), M::of("psnr", fixed255), M::of("ms_ssim", fixed255),
                                             M::of("mae"), M::of("mse"), M::histogram("nmi", 128),
                                             M::histogram("nmi", 256), M::histogram("nmi", 512)},
                                            seg),
                              MaskMode::full()});
    } else if (id == "pitfall2") {
        for (long px = 1; px <= 4; ++px)
            s.variants.push_back({"shift_" + std::to_string(px) + "px", {DistortionSpec::shift(px, 0)}, NormMethod::none(), 0,
                                  detail::panel({M::of("ssim", joint), M::of("ms_ssim", joint), M::of("cw_ssim"),
                                                 M::of("psnr", joint), M::of("mae"), M::of("mse"), M::of("pcc"),
                                                 M::histogram("nmi", 256)},
                                                seg),
                                  MaskMode::full()});
    } else if (id == "pitfall3") {
        s.placement = TumorHalf::lower;
        const DistortionChain chain{DistortionSpec::mirror(1)};
        const auto windowed_panel = detail::panel({M::of("ssim", joint), M::of("cw_ssim"), M::of("psnr", joint), M::of("mae"),
                                                   M::of("mse"), M::of("pcc"), M::histogram("nmi", 256)},
                                                  seg);
        const auto pointwise_panel = detail::panel(
            {M::of("psnr", joint), M::of("mae"), M::of("mse"), M::of("pcc"), M::histogram("nmi", 256)}, seg);
        s.variants.push_back({"full", chain, NormMethod::none(), 0, windowed_panel, MaskMode::full()});
        s.variants.push_back({"crop3%", chain, NormMethod::none(), 0, windowed_panel, MaskMode::crop(0.03)});
        s.variants.push_back({"bbox", chain, NormMethod::none(), 0, windowed_panel, MaskMode::bbox()});
        s.variants.push_back({"foreground_mask", chain, NormMethod::none(), 0, pointwise_panel, MaskMode::foreground()});
    } else if (id == "pitfall4") {
        const auto p = detail::panel({M::of("ssim", joint), M::of("ms_ssim", joint), M::of("cw_ssim"), M::of("psnr", joint),
                                      M::of("mae"), M::of("mse"), M::of("pcc"), M::histogram("nmi", 256)},
                                     seg);
        const std::vector<std::pair<std::string, DistortionChain>> bases{{"reference", {}},
                                                                         {"stripes", {DistortionSpec::stripes(8, 0.25, 1)}},
                                                                         {"noise", {DistortionSpec::noise(0.1, 0)}},
                                                                         {"mirror", {DistortionSpec::mirror(1)}}};
        for (const auto& [name, chain] : bases) {
            s.variants.push_back({name, chain, NormMethod::none(), 0, p, MaskMode::full()});
            for (double sigma : {0.5, 1.0, 2.0}) {
                auto blurred = chain;
                blurred.push_back(DistortionSpec::blur(sigma));
                s.variants.push_back({name + "+blur" + format_real(sigma), blurred, NormMethod::none(), 0, p, MaskMode::full()});
            }
        }
    } else if (id == "pitfall5") {
        s.placement = TumorHalf::lower;
        s.variants.push_back({"mirror", {DistortionSpec::mirror(1)}, NormMethod::none(), 0,
                              detail::panel({M::of("ssim", joint), M::of("ms_ssim", joint), M::of("cw_ssim"),
                                             M::of("psnr", joint), M::of("mae"), M::of("mse"), M::of("pcc"),
                                             M::histogram("nmi", 256), M::of("dice")},
                                            seg),
                              MaskMode::full()});
    } else {
        throw Error("unknown scenario '" + id + "' (expected pitfall1..pitfall5 or all)");
    }
    return s;
}

/// Seeds of noise steps are offset by the phantom seed so cases get independent noise.
inline DistortionChain effective_chain(const DistortionChain& chain, std::uint64_t phantom_seed)
{
    DistortionChain out = chain;
    for (auto& s : out)
        if (s.kind == DistortionSpec::Kind::gaussian_noise) s.seed += phantom_seed;
    return out;
}

struct PreparedPair {
    Image ref;
    Image test;
    std::optional<Mask> mask;  // only for mask:foreground
};

/// Distort, normalize, pre-bin and apply the mask mode (crops act on both images).
inline PreparedPair prepare_pair(const Phantom& ph, const Variant& v)
{
    Image ref = ph.image;
    Image test = apply_distortion(effective_chain(v.chain, ph.seed), ph.image);
    require_same_dims(ref.dims(), test.dims());
    ref = normalize(ref, v.norm);
    test = normalize(test, v.norm);
    if (v.prebin > 0) {
        ref = bin_quantize(ref, v.prebin);
        test = bin_quantize(test, v.prebin);
    }
    PreparedPair out{ref, test, std::nullopt};
    switch (v.mask.kind) {
    case MaskMode::Kind::full: break;
    case MaskMode::Kind::crop_fraction:
        out.ref = crop_fraction(ref, v.mask.fraction);
        out.test = crop_fraction(test, v.mask.fraction);
        break;
    case MaskMode::Kind::bbox_foreground: {
        const Rect r = bounding_box(ph.foreground_mask);
        out.ref = crop(ref, r);
        out.test = crop(test, r);
        break;
    }
    case MaskMode::Kind::foreground_mask: out.mask = ph.foreground_mask; break;
    }
    return out;
}

inline Fingerprint case_context(const Phantom& ph, const PhantomParams& pp, const Variant& v)
{
    Fingerprint fp;
    fp.set("case.seed", std::to_string(ph.seed))
        .set("case.width", std::to_string(pp.width))
        .set("case.height", std::to_string(pp.height))
        .set("case.tumor_half", ph.tumor_in_lower_half ? "lower" : "upper")
        .set("chain", chain_canonical(effective_chain(v.chain, ph.seed)))
        .set("norm", v.norm.str())
        .set("prebin", v.prebin)
        .set("mask", v.mask.str());
    return fp;
}

inline MetricScore evaluate_prepared(const MetricSpec& spec, const PreparedPair& pair, const MetricRegistry& reg)
{
    return pair.mask ? masked_evaluate(spec, pair.ref, pair.test, *pair.mask, reg) : evaluate(spec, pair.ref, pair.test, reg);
}

inline std::string case_id_for(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "case%04zu", index);
    return buf;
}

/// Phantoms for a scenario: seeds seed, seed+1, ...; the scenario's tumor placement
/// applies unless the config sets one explicitly.
inline std::vector<Phantom> phantoms_for(const Scenario& s, const HarnessConfig& cfg)
{
    PhantomParams pp = cfg.phantom;
    if (!cfg.tumor_half_set) pp.tumor_half = s.placement;
    std::vector<Phantom> out;
    for (int i = 0; i < cfg.count; ++i) out.push_back(generate_phantom(cfg.seed + static_cast<std::uint64_t>(i), pp));
    return out;
}

inline Report run_scenario(const Scenario& s, const std::vector<Phantom>& phantoms, const HarnessConfig& cfg,
                           const MetricRegistry& reg = builtin_registry())
{
    if (phantoms.empty()) throw Error("scenario '" + s.id + "' needs at least one phantom");
    for (const auto& v : s.variants)
        for (const auto& m : v.panel)
            if (!reg.contains(m.id)) throw Error("variant '" + v.label + "' references unregistered metric '" + m.id + "'");

    PhantomParams pp = cfg.phantom;
    pp.width = phantoms.front().image.dims().width;
    pp.height = phantoms.front().image.dims().height;

    // per-phantom evaluation is independent; results land in fixed slots
    std::vector<std::vector<ReportRow>> per_case(phantoms.size());
    std::vector<std::string> failures(phantoms.size());
    auto work = [&](std::size_t i) {
        const Phantom& ph = phantoms[i];
        const std::string cid = case_id_for(i);
        for (const auto& v : s.variants) {
            try {
                const PreparedPair pair = prepare_pair(ph, v);
                const Fingerprint ctx = case_context(ph, pp, v);
                for (const auto& m : v.panel) {
                    MetricScore sc = evaluate_prepared(m, pair, reg);
                    Fingerprint fp = Fingerprint::parse(sc.params_fingerprint);
                    fp.merge(m.fingerprint()).merge(ctx);
                    per_case[i].push_back({cid, s.id, v.label, sc.metric_id, fp.str(), sc.value});
                }
            } catch (const Error& e) {
                failures[i] = "scenario '" + s.id + "', variant '" + v.label + "', " + cid + ": " + e.what();
                return;
            }
        }
    };
    const std::size_t threads =
        std::min<std::size_t>(phantoms.size(), cfg.threads > 0 ? std::size_t(cfg.threads)
                                                               : std::max(1u, std::thread::hardware_concurrency()));
    if (threads <= 1) {
        for (std::size_t i = 0; i < phantoms.size(); ++i) work(i);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < phantoms.size(); i += threads) work(i);
            });
    }
    for (const auto& f : failures)
        if (!f.empty()) throw Error(f);

    Report report;
    for (auto& rows : per_case) report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tie(a.case_id, a.variant, a.metric_id, a.params_fingerprint) <
               std::tie(b.case_id, b.variant, b.metric_id, b.params_fingerprint);
    });

    // means per (variant, metric panel entry)
    std::vector<ReportRow> means;
    for (const auto& v : s.variants) {
        for (const auto& m : v.panel) {
            double sum = 0;
            std::size_t n = 0;
            const std::string chain = chain_canonical(v.chain);
            const Fingerprint spec_fp = m.fingerprint();
            for (const auto& rows : per_case)
                for (const auto& row : rows) {
                    if (row.variant != v.label) continue;
                    // match the panel entry through its spec fingerprint keys
                    Fingerprint fp = Fingerprint::parse(row.params_fingerprint);
                    bool same = true;
                    for (const auto& [k, val] : spec_fp.entries())
                        if (!fp.has(k) || fp.get(k) != val) same = false;
                    if (!same) continue;
                    sum += row.score;
                    ++n;
                }
            Fingerprint fp = spec_fp;
            fp.set("cases", std::to_string(n))
                .set("case.seed0", std::to_string(phantoms.front().seed))
                .set("case.width", std::to_string(pp.width))
                .set("case.height", std::to_string(pp.height))
                .set("chain", chain)
                .set("norm", v.norm.str())
                .set("prebin", v.prebin)
                .set("mask", v.mask.str());
            means.push_back({"mean", s.id, v.label, m.id, fp.str(), n ? sum / double(n) : NAN});
        }
    }
    std::stable_sort(means.begin(), means.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tie(a.variant, a.metric_id, a.params_fingerprint) < std::tie(b.variant, b.metric_id, b.params_fingerprint);
    });
    report.rows.insert(report.rows.end(), means.begin(), means.end());

    // lints per variant, judged on the first phantom
    for (const auto& v : s.variants) {
        const Phantom& ph = phantoms.front();
        EvalConfig ec;
        ec.norm = v.norm;
        ec.prebin = v.prebin;
        ec.panel = v.panel;
        ec.chain = v.chain;
        if (v.mask.kind == MaskMode::Kind::foreground_mask) ec.mask = ph.foreground_mask;
        for (auto l : lint_configuration(ph.image, apply_distortion(effective_chain(v.chain, ph.seed), ph.image), ec, reg)) {
            l.message = s.id + "/" + v.label + ": " + l.message;
            report.lints.push_back(std::move(l));
        }
    }
    return report;
}

/// Recomputes a per-case row's score from its fingerprint alone.
inline double reproduce_row(const std::string& fingerprint, const MetricRegistry& reg = builtin_registry())
{
    const Fingerprint fp = Fingerprint::parse(fingerprint);
    PhantomParams pp;
    pp.width = std::stoul(fp.get("case.width"));
    pp.height = std::stoul(fp.get("case.height"));
    pp.tumor_half = parse_tumor_half(fp.get("case.tumor_half"));
    const Phantom ph = generate_phantom(std::stoull(fp.get("case.seed")), pp);
    Variant v;
    v.chain = parse_chain(fp.get("chain"));
    v.norm = NormMethod::parse(fp.get("norm"));
    v.prebin = std::stoi(fp.get("prebin"));
    v.mask = MaskMode::parse(fp.get("mask"));
    // the stored chain already carries effective seeds
    Phantom zero_seed = ph;
    zero_seed.seed = 0;
    const PreparedPair pair = prepare_pair(zero_seed, v);
    if (v.mask.kind == MaskMode::Kind::foreground_mask) {
        PreparedPair masked = pair;
        masked.mask = ph.foreground_mask;
        return evaluate_prepared(MetricSpec::from_fingerprint(fp), masked, reg).value;
    }
    return evaluate_prepared(MetricSpec::from_fingerprint(fp), pair, reg).value;
}

inline std::vector<Scenario> resolve_scenarios(const std::vector<std::string>& ids, const SegmenterParams& seg)
{
    std::vector<std::string> wanted;
    for (const auto& id : ids) {
        if (id == "all") wanted.insert(wanted.end(), builtin_scenario_ids().begin(), builtin_scenario_ids().end());
        else wanted.push_back(id);
    }
    std::vector<Scenario> out;
    for (const auto& id : wanted) {
        if (std::any_of(out.begin(), out.end(), [&](const Scenario& s) { return s.id == id; })) continue;
        out.push_back(builtin_scenario(id, seg));
    }
    return out;
}

/// Runs every configured scenario on its own phantom set.
inline Report run_audit(const HarnessConfig& cfg)
{
    cfg.validate();
    Report report;
    for (const auto& s : resolve_scenarios(cfg.scenarios, cfg.segmenter)) report.append(run_scenario(s, phantoms_for(s, cfg), cfg));
    return report;
}

}  // namespace refmetric
