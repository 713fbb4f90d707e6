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

#include <set>

#include <gtest/gtest.h>

#include "refmetric/harness/phantom.hpp"
#include "refmetric/harness/report.hpp"
#include "refmetric/harness/scenario.hpp"
#include "test_util.hpp"

using namespace refmetric;
using refmetric::testing::random_image;

namespace {

bool subset(const Mask& inner, const Mask& outer)
{
    for (std::size_t i = 0; i < inner.size(); ++i)
        if (inner[i] && !outer[i]) return false;
    return true;
}

std::set<std::string> codes(const std::vector<Lint>& lints)
{
    std::set<std::string> out;
    for (const auto& l : lints) out.insert(l.code);
    return out;
}

Mask checkerboard(std::size_t w, std::size_t h)
{
    std::vector<std::uint8_t> v(w * h);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = ((i % w) + (i / w)) % 2;
    return Mask(Dims::planar(w, h), std::move(v));
}

Mask rect_mask(std::size_t w, std::size_t h)
{
    std::vector<std::uint8_t> v(w * h, 0);
    for (std::size_t y = 4; y < h - 4; ++y)
        for (std::size_t x = 4; x < w - 4; ++x) v[y * w + x] = 1;
    return Mask(Dims::planar(w, h), std::move(v));
}

HarnessConfig small_config(int count, std::size_t dims = 192)
{
    HarnessConfig c;
    c.count = count;
    c.phantom.width = c.phantom.height = dims;
    c.threads = 2;
    return c;
}

}  // namespace

// phantoms

TEST(Phantom, DeterministicPerSeed)
{
    const Phantom a = generate_phantom(7), b = generate_phantom(7), c = generate_phantom(8);
    EXPECT_TRUE(std::equal(a.image.values().begin(), a.image.values().end(), b.image.values().begin()));
    EXPECT_FALSE(std::equal(a.image.values().begin(), a.image.values().end(), c.image.values().begin()));
}

TEST(Phantom, MasksAndIntensityLayout)
{
    for (TumorHalf half : {TumorHalf::lower, TumorHalf::upper, TumorHalf::either})
        for (std::uint64_t seed = 1; seed <= 8; ++seed) {
            PhantomParams pp;
            pp.tumor_half = half;
            const Phantom ph = generate_phantom(seed, pp);
            const std::size_t h = ph.image.dims().height, w = ph.image.dims().width;
            ASSERT_TRUE(ph.tumor_mask.any());
            EXPECT_TRUE(subset(ph.tumor_mask, ph.foreground_mask));
            for (std::size_t i = 0; i < ph.image.size(); ++i) {
                EXPECT_EQ(ph.image[i] == 0.0, !ph.foreground_mask[i]);
                EXPECT_EQ(ph.image[i], std::round(ph.image[i]));
            }
            if (half != TumorHalf::either) {
                EXPECT_EQ(ph.tumor_in_lower_half, half == TumorHalf::lower);
            }
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    if (ph.tumor_mask(x, y)) {
                        EXPECT_EQ(y >= h / 2, ph.tumor_in_lower_half);
                    }
            // foreground is symmetric about the horizontal midline
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) EXPECT_EQ(ph.foreground_mask(x, y), ph.foreground_mask(x, h - 1 - y));
            // the tumor is the brightest structure
            double tissue_max = 0, tumor_min = 1e300;
            for (std::size_t i = 0; i < ph.image.size(); ++i) {
                if (ph.tumor_mask[i]) tumor_min = std::min(tumor_min, ph.image[i]);
                else tissue_max = std::max(tissue_max, ph.image[i]);
            }
            EXPECT_LT(tissue_max, tumor_min);
        }
}

TEST(Phantom, EitherPlacementUsesBothHalves)
{
    std::set<bool> seen;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) seen.insert(generate_phantom(seed).tumor_in_lower_half);
    EXPECT_EQ(seen.size(), 2u);
}

TEST(Phantom, RejectsTinyDims)
{
    PhantomParams pp;
    pp.width = 32;
    EXPECT_THROW(generate_phantom(1, pp), Error);
    EXPECT_THROW(parse_tumor_half("middle"), Error);
}

// lints

TEST(Lint, W01RangesDifferWithoutNormalization)
{
    const Image ref = random_image(32, 32, 1, 0, 255), test = linear_scale(ref, 1.2);
    EvalConfig cfg;
    cfg.panel = {MetricSpec::of("mae")};
    EXPECT_TRUE(codes(lint_configuration(ref, test, cfg)).count("W01"));
    cfg.norm = NormMethod::minmax();
    EXPECT_FALSE(codes(lint_configuration(ref, test, cfg)).count("W01"));
}

TEST(Lint, W02PerImageRange)
{
    const Image ref = random_image(32, 32, 2, 0, 255), test = linear_scale(ref, 1.2);
    EvalConfig cfg;
    cfg.panel = {MetricSpec::of("ssim", DataRangePolicy::per_reference())};
    const auto lints = lint_configuration(ref, test, cfg);
    EXPECT_TRUE(codes(lints).count("W02"));
    cfg.panel = {MetricSpec::of("ssim", DataRangePolicy::joint()), MetricSpec::of("psnr", DataRangePolicy::fixed(300))};
    EXPECT_FALSE(codes(lint_configuration(ref, test, cfg)).count("W02"));
    // same ranges: per-image L is harmless
    cfg.panel = {MetricSpec::of("ssim", DataRangePolicy::per_test())};
    EXPECT_FALSE(codes(lint_configuration(ref, ref, cfg)).count("W02"));
}

TEST(Lint, W03NonRectangularMaskWithWindowedMetric)
{
    const Image ref = random_image(32, 32, 3), test = random_image(32, 32, 4);
    EvalConfig cfg;
    cfg.panel = {MetricSpec::of("ssim"), MetricSpec::of("mae")};
    cfg.mask = checkerboard(32, 32);
    const auto lints = lint_configuration(ref, test, cfg);
    ASSERT_TRUE(codes(lints).count("W03"));
    EXPECT_TRUE(has_error_lint(lints));
    cfg.mask = rect_mask(32, 32);
    EXPECT_FALSE(codes(lint_configuration(ref, test, cfg)).count("W03"));
    cfg.mask = checkerboard(32, 32);
    cfg.panel = {MetricSpec::of("mae"), MetricSpec::of("pcc")};
    EXPECT_FALSE(codes(lint_configuration(ref, test, cfg)).count("W03"));
}

TEST(Lint, W04PrebinMismatch)
{
    const Image ref = random_image(32, 32, 5), test = random_image(32, 32, 6);
    EvalConfig cfg;
    cfg.prebin = 256;
    cfg.panel = {MetricSpec::histogram("nmi", 128)};
    EXPECT_TRUE(codes(lint_configuration(ref, test, cfg)).count("W04"));
    cfg.panel = {MetricSpec::histogram("nmi", 256), MetricSpec::of("mae")};
    EXPECT_FALSE(codes(lint_configuration(ref, test, cfg)).count("W04"));
}

TEST(Lint, W05BlurWithErrorOnlyPanel)
{
    const Image ref = random_image(32, 32, 7), test = random_image(32, 32, 8);
    EvalConfig cfg;
    cfg.chain = {DistortionSpec::noise(0.1, 1), DistortionSpec::blur(1)};
    cfg.panel = {MetricSpec::of("mae"), MetricSpec::of("psnr")};
    EXPECT_TRUE(codes(lint_configuration(ref, test, cfg)).count("W05"));
    cfg.panel.push_back(MetricSpec::histogram("nmi", 256));
    EXPECT_FALSE(codes(lint_configuration(ref, test, cfg)).count("W05"));
    cfg.chain = {DistortionSpec::noise(0.1, 1)};
    cfg.panel = {MetricSpec::of("mae")};
    EXPECT_FALSE(codes(lint_configuration(ref, test, cfg)).count("W05"));
}

TEST(Lint, NeverChangesScores)
{
    const Image ref = random_image(32, 32, 9, 0, 255), test = linear_scale(ref, 1.2);
    const MetricSpec m = MetricSpec::of("ssim", DataRangePolicy::per_reference());
    const double before = evaluate(m, ref, test).value;
    EvalConfig cfg;
    cfg.panel = {m};
    ASSERT_FALSE(lint_configuration(ref, test, cfg).empty());
    EXPECT_EQ(evaluate(m, ref, test).value, before);
}

// reports

TEST(Report, EmptyCsvIsHeaderOnly)
{
    EXPECT_EQ(report_csv(Report{}), "case_id,scenario,variant,metric_id,params_fingerprint,score\n");
    EXPECT_TRUE(parse_report_csv(report_csv(Report{})).empty());
}

TEST(Report, CsvRoundTripsAwkwardFields)
{
    Report r;
    r.rows.push_back({"case0000", "pitfall1", "none", "ssim", "L=255;range=joint", 0.8125});
    r.rows.push_back({"mean", "s,\"q\"", "a\nb", "psnr", "chain=[{\"kind\":\"gamma\"}]", INFINITY});
    r.rows.push_back({"case0001", "x", "y", "mae", "", 0.1 + 0.2});
    const std::string csv = report_csv(r);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);  // one embedded newline
    const auto back = parse_report_csv(csv);
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back[i], r.rows[i]);
    EXPECT_EQ(back[2].score, 0.1 + 0.2);
    EXPECT_THROW(parse_report_csv("a,b\n"), Error);
    EXPECT_THROW(parse_report_csv(report_csv(Report{}) + "\"open"), Error);
}

TEST(Report, SingleRowIsTwoLines)
{
    Report r;
    r.rows.push_back({"case0000", "s", "v", "mae", "k=1", 2.5});
    EXPECT_EQ(report_csv(r), "case_id,scenario,variant,metric_id,params_fingerprint,score\ncase0000,s,v,mae,k=1,2.5\n");
}

TEST(Report, MarkdownTablePerScenario)
{
    Report r;
    const MetricSpec mae = MetricSpec::of("mae");
    r.rows.push_back({"case0000", "alpha", "v1", "mae", mae.fingerprint().str(), 1.0});
    r.rows.push_back({"mean", "alpha", "v1", "mae", mae.fingerprint().str(), 1.0});
    r.rows.push_back({"mean", "alpha", "v2", "mae", mae.fingerprint().str(), 2.0});
    r.rows.push_back({"mean", "beta", "v1", "mae", mae.fingerprint().str(), 3.0});
    r.lints.push_back({Severity::warning, "W01", "ranges"});
    const std::string md = report_markdown(r);
    EXPECT_NE(md.find("## alpha"), std::string::npos);
    EXPECT_NE(md.find("## beta"), std::string::npos);
    EXPECT_NE(md.find("| metric | v1 | v2 |"), std::string::npos);
    EXPECT_NE(md.find("| mae | 1.0000 | 2.0000 |"), std::string::npos);
    EXPECT_NE(md.find("- W01 (warning): ranges"), std::string::npos);
}

// configuration and scenarios

TEST(HarnessConfig, ParsesAndRejectsUnknownKeys)
{
    const auto c = HarnessConfig::parse(R"({"phantoms": {"count": 3, "seed": 9, "dims": [96, 128], "tumor_half": "upper"},
                                            "scenarios": ["pitfall2"], "segmenter": {"threshold_rel": 0.8,
                                            "connectivity": "face+corner"}, "output": {"dir": "x", "formats": ["csv"]},
                                            "threads": 1, "strict": true})");
    EXPECT_EQ(c.count, 3);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.phantom.height, 96u);
    EXPECT_EQ(c.phantom.width, 128u);
    EXPECT_TRUE(c.tumor_half_set);
    EXPECT_EQ(c.segmenter.connectivity, Connectivity::face_corner);
    EXPECT_EQ(c.formats.size(), 1u);
    EXPECT_TRUE(c.strict);
    EXPECT_EQ(HarnessConfig::parse(R"({"scenarios": "pitfall3"})").scenarios, std::vector<std::string>{"pitfall3"});
    EXPECT_THROW(HarnessConfig::parse(R"({"phantom": {}})"), Error);
    EXPECT_THROW(HarnessConfig::parse(R"({"phantoms": {"size": 3}})"), Error);
    EXPECT_THROW(HarnessConfig::parse(R"({"phantoms": {"count": 0}})"), Error);
    EXPECT_THROW(HarnessConfig::parse(R"({"output": {"formats": ["pdf"]}})"), Error);
    EXPECT_THROW(HarnessConfig::parse("{"), Error);
}

TEST(Scenarios, BuiltinVariantLabels)
{
    auto labels = [](const Scenario& s) {
        std::vector<std::string> out;
        for (const auto& v : s.variants) out.push_back(v.label);
        return out;
    };
    EXPECT_EQ(labels(builtin_scenario("pitfall1")), (std::vector<std::string>{"none", "minmax", "zscore", "bin256"}));
    EXPECT_EQ(labels(builtin_scenario("pitfall3")),
              (std::vector<std::string>{"full", "crop3%", "bbox", "foreground_mask"}));
    EXPECT_EQ(builtin_scenario("pitfall4").variants.size(), 16u);
    EXPECT_EQ(resolve_scenarios({"all", "pitfall2"}, {}).size(), 5u);
    EXPECT_THROW(builtin_scenario("pitfall6"), Error);
    EXPECT_EQ(MaskMode::parse("crop:0.03").str(), "crop:0.03");
    EXPECT_THROW(MaskMode::parse("ellipse"), Error);
}

TEST(Scenarios, MaskedVariantsAvoidWindowedMetricsOnMasks)
{
    for (const auto& id : builtin_scenario_ids())
        for (const auto& v : builtin_scenario(id).variants)
            if (v.mask.kind == MaskMode::Kind::foreground_mask) {
                for (const auto& m : v.panel) EXPECT_FALSE(is_windowed_metric(m.id)) << id << "/" << v.label;
            }
}

TEST(Scenarios, PrepareCropsAndMasks)
{
    PhantomParams pp;
    pp.tumor_half = TumorHalf::lower;
    const Phantom ph = generate_phantom(3, pp);
    const auto sc = builtin_scenario("pitfall3");
    const auto full = prepare_pair(ph, sc.variants[0]);
    const auto crop = prepare_pair(ph, sc.variants[1]);
    const auto bbox = prepare_pair(ph, sc.variants[2]);
    const auto fg = prepare_pair(ph, sc.variants[3]);
    EXPECT_EQ(full.ref.dims(), ph.image.dims());
    EXPECT_EQ(crop.ref.dims().width, 192u - 2 * 5);
    EXPECT_EQ(bbox.ref.dims(), rect_dims(ph.image.dims(), bounding_box(ph.foreground_mask)));
    ASSERT_TRUE(fg.mask.has_value());
    EXPECT_EQ(fg.mask->count(), ph.foreground_mask.count());
}

TEST(Scenarios, EmptyPhantomListIsAnError)
{
    EXPECT_THROW(run_scenario(builtin_scenario("pitfall5"), {}, small_config(1)), Error);
}

TEST(Scenarios, PitfallOneRecordsThreeRangePolicies)
{
    const auto cfg = small_config(2);
    const auto s = builtin_scenario("pitfall1");
    const Report r = run_scenario(s, phantoms_for(s, cfg), cfg);
    std::set<std::string> fps, policies;
    for (const auto& row : r.rows) {
        if (row.case_id != "case0000" || row.variant != "none" || row.metric_id != "ssim") continue;
        const auto fp = Fingerprint::parse(row.params_fingerprint);
        fps.insert(row.params_fingerprint);
        policies.insert(fp.get("range"));
    }
    EXPECT_EQ(fps.size(), 3u);
    EXPECT_EQ(policies.size(), 3u);
    // the un-normalized variant trips the range lints
    std::set<std::string> lint_codes = codes(r.lints);
    EXPECT_TRUE(lint_codes.count("W01"));
    EXPECT_TRUE(lint_codes.count("W02"));
}

TEST(Scenarios, RunIsDeterministicAndRowsReproduce)
{
    auto cfg = small_config(3);
    const auto s = builtin_scenario("pitfall5");
    const auto phantoms = phantoms_for(s, cfg);
    const Report a = run_scenario(s, phantoms, cfg);
    cfg.threads = 1;
    const Report b = run_scenario(s, phantoms, cfg);
    EXPECT_EQ(report_csv(a), report_csv(b));
    EXPECT_EQ(a.rows.size(), (3u + 1u) * s.variants[0].panel.size());

    for (const auto& row : a.rows) {
        if (row.case_id == "mean") continue;
        const double again = reproduce_row(row.params_fingerprint);
        if (std::isinf(row.score)) EXPECT_EQ(again, row.score);
        else EXPECT_NEAR(again, row.score, 1e-12 * std::max(1.0, std::abs(row.score))) << row.params_fingerprint;
    }
}

TEST(Scenarios, NoiseSeedsDifferPerCaseAndReproduce)
{
    const auto cfg = small_config(2, 96);
    Scenario s;
    s.id = "noise";
    s.variants.push_back({"n", {DistortionSpec::noise(0.1, 5)}, NormMethod::none(), 0,
                          {MetricSpec::of("mae"), MetricSpec::of("pcc")}, MaskMode::full()});
    const Report r = run_scenario(s, phantoms_for(s, cfg), cfg);
    std::set<std::string> chains;
    for (const auto& row : r.rows) {
        if (row.case_id == "mean") continue;
        chains.insert(Fingerprint::parse(row.params_fingerprint).get("chain"));
        EXPECT_EQ(reproduce_row(row.params_fingerprint), row.score);
    }
    EXPECT_EQ(chains.size(), 2u);
}

TEST(Scenarios, MeansAverageTheCases)
{
    const auto cfg = small_config(2, 96);
    Scenario s;
    s.id = "means";
    s.variants.push_back({"m", {DistortionSpec::mirror(1)}, NormMethod::none(), 0,
                          {MetricSpec::of("mae"), MetricSpec::histogram("nmi", 64), MetricSpec::histogram("nmi", 32)},
                          MaskMode::foreground()});
    const Report r = run_scenario(s, phantoms_for(s, cfg), cfg);
    std::map<std::string, std::pair<double, int>> sums;
    std::map<std::string, double> means;
    for (const auto& row : r.rows) {
        const auto fp = Fingerprint::parse(row.params_fingerprint);
        const std::string key = row.metric_id + fp.get(row.metric_id == "mae" ? "mask" : "bins");
        if (row.case_id == "mean") means[key] = row.score;
        else {
            sums[key].first += row.score;
            sums[key].second += 1;
        }
    }
    ASSERT_EQ(means.size(), 3u);
    for (const auto& [k, sum] : sums) {
        EXPECT_EQ(sum.second, 2);
        EXPECT_NEAR(means[k], sum.first / 2, 1e-15) << k;
    }
}
