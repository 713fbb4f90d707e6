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

#include <cmath>

#include <gtest/gtest.h>

#include "refmetric/metrics/evaluate.hpp"
#include "test_util.hpp"

using namespace refmetric;
using refmetric::testing::from_values;
using refmetric::testing::perturbed;
using refmetric::testing::random_image;

TEST(Mae, Examples)
{
    const Image r = random_image(8, 8, 1);
    EXPECT_EQ(mae(r, r).value, 0);
    EXPECT_EQ(mae(Image(Dims::planar(3, 2), 10.0), Image(Dims::planar(3, 2), 13.0)).value, 3);
    EXPECT_EQ(mae(from_values(4, 1, {0, 1, 2, 3}), from_values(4, 1, {1, 1, 2, 7})).value, 1.25);
    EXPECT_EQ(mae(r, r).metric_id, "mae");
}

TEST(Mse, Examples)
{
    const Image r = random_image(8, 8, 1);
    EXPECT_EQ(mse(r, r).value, 0);
    EXPECT_EQ(mse(from_values(2, 1, {0, 0}), from_values(2, 1, {3, 4})).value, 12.5);
    std::vector<double> shifted(r.values().begin(), r.values().end());
    for (auto& x : shifted) x += 2.5;
    EXPECT_NEAR(mse(r, from_values(8, 8, shifted)).value, 6.25, 1e-12);
}

TEST(Pointwise, DimsMismatchThrows)
{
    EXPECT_THROW(mae(random_image(4, 4, 1), random_image(4, 5, 1)), Error);
    EXPECT_THROW(mse(random_image(4, 4, 1), random_image(5, 4, 1)), Error);
    EXPECT_THROW(psnr(random_image(4, 4, 1), random_image(5, 4, 1), DataRangePolicy::joint()), Error);
    EXPECT_THROW(pcc(random_image(4, 4, 1), random_image(5, 4, 1)), Error);
}

TEST(Psnr, IdenticalIsInfinite)
{
    const Image r = random_image(8, 8, 2);
    const auto s = psnr(r, r, DataRangePolicy::joint());
    EXPECT_TRUE(std::isinf(s.value));
    EXPECT_GT(s.value, 0);
    EXPECT_TRUE(s.is_infinite());
}

TEST(Psnr, ClosedForms)
{
    // MSE = L^2 gives 0 dB
    EXPECT_NEAR(psnr(from_values(2, 1, {0, 0}), from_values(2, 1, {10, 10}), DataRangePolicy::fixed(10)).value, 0, 1e-12);
    // 255^2 / 65.025 = 1000
    const double d = std::sqrt(65.025);
    EXPECT_NEAR(psnr(from_values(2, 1, {0, 0}), from_values(2, 1, {d, -d}), DataRangePolicy::fixed(255)).value, 30.0, 1e-9);
}

TEST(Psnr, FingerprintCarriesRange)
{
    const Image r = random_image(8, 8, 2), t = random_image(8, 8, 3);
    const auto s = psnr(r, t, DataRangePolicy::fixed(255));
    EXPECT_NE(s.params_fingerprint.find("range=fixed:L=255"), std::string::npos);
    EXPECT_NE(s.params_fingerprint.find("L=255"), std::string::npos);
}

TEST(Psnr, DoublingRangeAddsSixDecibels)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Image r = random_image(16, 16, seed), t = perturbed(r, 5, seed + 50);
        const double L = 10 + 17.0 * double(seed);
        const double a = psnr(r, t, DataRangePolicy::fixed(L)).value;
        const double b = psnr(r, t, DataRangePolicy::fixed(2 * L)).value;
        EXPECT_NEAR(b - a, 20 * std::log10(2.0), 1e-9);
        const double c = psnr(r, t, DataRangePolicy::fixed(7.5 * L)).value;
        EXPECT_NEAR(c - a, 20 * std::log10(7.5), 1e-9);
    }
}

TEST(Pcc, Examples)
{
    const Image r = random_image(10, 10, 4);
    EXPECT_NEAR(pcc(r, r).value, 1, 1e-15);
    std::vector<double> up(r.values().begin(), r.values().end()), down = up;
    for (auto& x : up) x = 3 * x + 7;
    for (auto& x : down) x = -0.5 * x + 2;
    EXPECT_NEAR(pcc(r, from_values(10, 10, up)).value, 1, 1e-12);
    EXPECT_NEAR(pcc(r, from_values(10, 10, down)).value, -1, 1e-12);
    EXPECT_THROW(pcc(r, Image(Dims::planar(10, 10), 4.0)), Error);
}

TEST(Pcc, InvariantUnderAffineNormalization)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Image r = random_image(24, 24, seed, 0, 1000), t = perturbed(r, 80, seed + 9);
        const double base = pcc(r, t).value;
        for (const auto& m : {NormMethod::minmax(), NormMethod::zscore(), NormMethod::custom(-3, 0.01)}) {
            EXPECT_NEAR(pcc(normalize(r, m), t).value, base, 1e-12);
            EXPECT_NEAR(pcc(r, normalize(t, m)).value, base, 1e-12);
        }
    }
}

TEST(Symmetry, PointwiseMetricsAreExactlySymmetric)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Image a = random_image(12, 9, seed), b = perturbed(a, 30, seed + 1);
        EXPECT_EQ(mae(a, b).value, mae(b, a).value);
        EXPECT_EQ(mse(a, b).value, mse(b, a).value);
        EXPECT_EQ(pcc(a, b).value, pcc(b, a).value);
    }
}

TEST(Dice, Examples)
{
    const Dims d = Dims::planar(4, 4);
    std::vector<std::uint8_t> a(16, 0), b(16, 0);
    for (int i : {0, 1, 2, 3}) a[i] = 1;
    for (int i : {2, 3, 4, 5}) b[i] = 1;
    EXPECT_EQ(dice(Mask(d, a), Mask(d, a)).value, 1);
    EXPECT_EQ(dice(Mask(d, a), Mask(d, b)).value, 0.5);
    std::vector<std::uint8_t> c(16, 0);
    for (int i : {10, 11}) c[i] = 1;
    EXPECT_EQ(dice(Mask(d, a), Mask(d, c)).value, 0);
    EXPECT_EQ(dice(Mask(d, false), Mask(d, false)).value, 1);
    EXPECT_EQ(dice(Mask(d, a), Mask(d, false)).value, 0);
    EXPECT_EQ(dice(Mask(d, a), Mask(d, b)).value, dice(Mask(d, b), Mask(d, a)).value);
    EXPECT_THROW(dice(Mask(d, a), Mask(Dims::planar(2, 8), a)), Error);
}

namespace {

Mask checkerboard(std::size_t w, std::size_t h)
{
    std::vector<std::uint8_t> v(w * h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) v[y * w + x] = (x + y) % 2;
    return Mask(Dims::planar(w, h), v);
}

Mask rect_mask(std::size_t w, std::size_t h, Rect r)
{
    std::vector<std::uint8_t> v(w * h, 0);
    for (std::size_t y = r.y; y < r.y + r.height; ++y)
        for (std::size_t x = r.x; x < r.x + r.width; ++x) v[y * w + x] = 1;
    return Mask(Dims::planar(w, h), v);
}

}  // namespace

TEST(MaskedEvaluate, AllTrueMaskMatchesUnmasked)
{
    const Image r = random_image(180, 180, 11), t = perturbed(r, 20, 12);  // big enough for five MS-SSIM scales
    const Mask all(r.dims(), true);
    for (const auto& id : builtin_metric_ids()) {
        if (id == "dice") continue;
        const MetricSpec s = MetricSpec::of(id);
        const auto a = masked_evaluate(s, r, t, all), b = evaluate(s, r, t);
        EXPECT_EQ(format_real(a.value), format_real(b.value)) << id;
        EXPECT_EQ(a.params_fingerprint, b.params_fingerprint) << id;
    }
}

TEST(MaskedEvaluate, RectangularMaskEqualsCropBitwise)
{
    const Image r = random_image(80, 70, 13), t = perturbed(r, 25, 14);
    const Rect box{5, 7, 0, 60, 56, 1};
    const Mask m = rect_mask(80, 70, box);
    for (const auto& id : builtin_metric_ids()) {
        if (id == "dice" || id == "ms_ssim") continue;
        const MetricSpec s = MetricSpec::of(id);
        EXPECT_EQ(format_real(masked_evaluate(s, r, t, m).value), format_real(evaluate(s, crop(r, box), crop(t, box)).value)) << id;
    }
}

TEST(MaskedEvaluate, PointwiseUsesMaskedSamplesOnly)
{
    const Image r = from_values(2, 2, {0, 5, 9, 1}), t = from_values(2, 2, {1, 5, 100, 3});
    const Mask m(Dims::planar(2, 2), std::vector<std::uint8_t>{1, 1, 0, 1});
    EXPECT_EQ(masked_evaluate(MetricSpec::of("mae"), r, t, m).value, 1);
}

TEST(MaskedEvaluate, NonRectangularMaskWithWindowedMetricThrows)
{
    const Image r = random_image(32, 32, 1), t = random_image(32, 32, 2);
    const Mask cb = checkerboard(32, 32);
    for (const char* id : {"ssim", "ms_ssim", "cw_ssim"}) {
        try {
            masked_evaluate(MetricSpec::of(id), r, t, cb);
            FAIL() << id;
        } catch (const Error& e) {
            EXPECT_NE(std::string(e.what()).find("rectangle"), std::string::npos);
        }
    }
    EXPECT_NO_THROW(masked_evaluate(MetricSpec::of("mse"), r, t, cb));
}

TEST(MaskedEvaluate, EmptyMaskThrows)
{
    const Image r = random_image(8, 8, 1);
    EXPECT_THROW(masked_evaluate(MetricSpec::of("mae"), r, r, Mask(r.dims(), false)), Error);
}

TEST(Registry, BuiltinIdsAreExact)
{
    const std::vector<std::string> want{"mae", "mse", "psnr", "ssim", "ms_ssim", "cw_ssim", "pcc", "mi", "nmi", "dice"};
    EXPECT_EQ(builtin_metric_ids(), want);
    for (const auto& id : want) EXPECT_TRUE(builtin_registry().contains(id)) << id;
    EXPECT_TRUE(is_windowed_metric("ssim"));
    EXPECT_FALSE(is_windowed_metric("nmi"));
}

TEST(Registry, PluginMetricsAttach)
{
    MetricRegistry reg = MetricRegistry::with_builtins();
    MetricEntry e;
    e.image = [](const MetricSpec&, const Image& a, const Image&) { return make_score(double(a.size()), "pixels", {}); };
    reg.add("pixels", e);
    EXPECT_EQ(evaluate(MetricSpec::of("pixels"), random_image(3, 4, 1), random_image(3, 4, 2), reg).value, 12);
    EXPECT_THROW(reg.add("pixels", e), Error);
    EXPECT_THROW(reg.add("bad;id", e), Error);
    EXPECT_THROW(evaluate(MetricSpec::of("lpips"), random_image(3, 4, 1), random_image(3, 4, 2)), Error);
}

TEST(Fingerprint, StableAndRoundTrips)
{
    const Image r = random_image(180, 180, 3), t = perturbed(r, 10, 4);
    for (const auto& id : builtin_metric_ids()) {
        if (id == "dice") continue;
        MetricSpec s = MetricSpec::of(id, DataRangePolicy::fixed(300));
        s.hist.bins = 64;
        const auto a = evaluate(s, r, t), b = evaluate(s, r, t);
        EXPECT_EQ(a.params_fingerprint, b.params_fingerprint) << id;
        const auto fp = Fingerprint::parse(a.params_fingerprint);
        EXPECT_EQ(fp.str(), a.params_fingerprint);
        EXPECT_EQ(fp.get("metric"), id);
        const MetricSpec back = MetricSpec::from_fingerprint(fp);
        EXPECT_EQ(back.fingerprint().str(), s.fingerprint().str()) << id;
        EXPECT_EQ(format_real(evaluate(back, r, t).value), format_real(a.value)) << id;
    }
}

TEST(Fingerprint, KeysAreSorted)
{
    Fingerprint fp;
    fp.set("zeta", 1).set("alpha", "x").set("mid", 2.5);
    EXPECT_EQ(fp.str(), "alpha=x;mid=2.5;zeta=1");
    EXPECT_THROW(fp.set("bad", "a;b"), Error);
    EXPECT_THROW(Fingerprint::parse("novalue"), Error);
}
