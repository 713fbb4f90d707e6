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
#include <complex>
#include <numbers>
#include <thread>

#include <gtest/gtest.h>

#include "refmetric/distort.hpp"
#include "refmetric/harness/phantom.hpp"
#include "refmetric/metrics/cw_ssim.hpp"
#include "refmetric/metrics/ssim.hpp"
#include "test_util.hpp"

using namespace refmetric;
using refmetric::testing::perturbed;
using refmetric::testing::random_image;
using cd = std::complex<double>;

namespace {

// Direct O(N^2) DFT; sign -1 forward, +1 inverse (unnormalized).
std::vector<cd> dft(const std::vector<cd>& in, int w, int h, int sign)
{
    const double pi = std::numbers::pi;
    std::vector<cd> out(in.size());
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            cd s = 0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    s += in[y * w + x] * std::polar(1.0, sign * 2 * pi * (double(u * x) / w + double(v * y) / h));
            out[v * w + u] = s;
        }
    return out;
}

// Oracle band-pass: log-radial raised cosine between pi/2^(s+1) and pi/2^s,
// one-sided angular lobe cos^(K-1) around each orientation.
double oracle_filter(double wx, double wy, int s, int o, int K)
{
    const double pi = std::numbers::pi;
    const double r = std::sqrt(wx * wx + wy * wy);
    if (r == 0) return 0;
    const double hi = pi / std::pow(2.0, s), lo = hi / 2;
    auto rise = [](double r, double c) {
        if (r >= c) return 1.0;
        if (r <= c / 2) return 0.0;
        return std::cos(std::numbers::pi / 2 * std::log2(c / r));
    };
    const double up = rise(r, lo);
    const double hr = rise(r, hi);
    const double radial = up * std::sqrt(std::max(0.0, 1 - hr * hr));
    double d = std::atan2(wy, wx) - pi * o / K;
    while (d > pi) d -= 2 * pi;
    while (d < -pi) d += 2 * pi;
    if (std::abs(d) >= pi / 2) return 0;
    double f1 = 1, f2 = 1;
    for (int i = 2; i <= K - 1; ++i) f1 *= i;
    for (int i = 2; i <= 2 * (K - 1); ++i) f2 *= i;
    const double alpha = std::pow(2.0, K - 1) * f1 / std::sqrt(K * f2);
    return radial * 2 * alpha * std::pow(std::cos(d), K - 1);
}

double oracle_cw_ssim(const Image& a, const Image& b, int levels, int K, double k, int nb)
{
    const int w = int(a.dims().width), h = int(a.dims().height);
    const double pi = std::numbers::pi;
    std::vector<cd> ia(a.values().begin(), a.values().end()), ib(b.values().begin(), b.values().end());
    const auto fa = dft(ia, w, h, -1), fb = dft(ib, w, h, -1);
    double total = 0;
    long count = 0;
    for (int s = 0; s < levels; ++s)
        for (int o = 0; o < K; ++o) {
            std::vector<cd> ga(fa.size()), gb(fb.size());
            for (int v = 0; v < h; ++v)
                for (int u = 0; u < w; ++u) {
                    const double wx = 2 * pi * (u <= (w - 1) / 2 ? u : u - w) / w;
                    const double wy = 2 * pi * (v <= (h - 1) / 2 ? v : v - h) / h;
                    const double f = oracle_filter(wx, wy, s, o, K);
                    ga[v * w + u] = fa[v * w + u] * f;
                    gb[v * w + u] = fb[v * w + u] * f;
                }
            auto ca = dft(ga, w, h, 1), cb = dft(gb, w, h, 1);
            for (auto& c : ca) c /= double(w * h);
            for (auto& c : cb) c /= double(w * h);
            for (int y0 = 0; y0 + nb <= h; ++y0)
                for (int x0 = 0; x0 + nb <= w; ++x0) {
                    cd cross = 0;
                    double e = 0;
                    for (int j = 0; j < nb; ++j)
                        for (int i = 0; i < nb; ++i) {
                            const cd p = ca[(y0 + j) * w + x0 + i], q = cb[(y0 + j) * w + x0 + i];
                            cross += p * std::conj(q);
                            e += std::norm(p) + std::norm(q);
                        }
                    total += (2 * std::abs(cross) + k) / (e + k);
                    ++count;
                }
        }
    return total / double(count);
}

}  // namespace

TEST(CwSsim, MatchesDirectDftOracle)
{
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Image r = random_image(28, 30, seed), t = perturbed(r, 60, seed + 10);
        EXPECT_NEAR(cw_ssim(r, t).value, oracle_cw_ssim(r, t, 2, 6, 0.03, 7), 1e-9) << seed;
    }
    CwSsimParams p;
    p.levels = 1;
    p.orientations = 4;
    p.neighborhood = 5;
    const Image r = random_image(15, 12, 4), t = perturbed(r, 30, 5);
    EXPECT_NEAR(cw_ssim(r, t, p).value, oracle_cw_ssim(r, t, 1, 4, 0.03, 5), 1e-9);
}

TEST(CwSsim, IdenticalIsOne)
{
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Image r = random_image(64, 48, seed);
        EXPECT_NEAR(cw_ssim(r, r).value, 1.0, 1e-9);
    }
}

TEST(CwSsim, PositiveScalingFollowsMagnitudeIdentity)
{
    // each neighborhood scores (2aE + k) / ((1 + a^2) E + k), which lies in [2a / (1 + a^2), 1]
    const auto ph = generate_phantom(3);
    for (double a : {1.05, 1.1, 1.2, 2.0}) {
        const double v = cw_ssim(ph.image, linear_scale(ph.image, a)).value;
        EXPECT_GE(v, 2 * a / (1 + a * a) - 1e-12) << a;
        EXPECT_LE(v, 1.0 + 1e-12) << a;
    }
}

TEST(CwSsim, SmallPositiveScalingStaysAboveThreshold)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ph = generate_phantom(seed);
        EXPECT_GE(cw_ssim(ph.image, linear_scale(ph.image, 1.1)).value, 0.99) << seed;
    }
}

TEST(CwSsim, IgnoresAdditiveOffset)
{
    // band-pass filters have no DC response, so a constant offset leaves every coefficient unchanged
    const Image r = random_image(64, 64, 9);
    std::vector<double> v(r.values().begin(), r.values().end());
    for (auto& x : v) x += 500;
    EXPECT_NEAR(cw_ssim(r, Image(r.dims(), v)).value, 1.0, 1e-9);
}

TEST(CwSsim, Symmetric)
{
    const Image a = random_image(56, 56, 1), b = perturbed(a, 40, 2);
    EXPECT_NEAR(cw_ssim(a, b).value, cw_ssim(b, a).value, 1e-12);
}

TEST(CwSsim, RejectsVolumesAndSmallImages)
{
    const Image v = refmetric::testing::random_volume(32, 32, 4, 1);
    EXPECT_THROW(cw_ssim(v, v), Error);
    EXPECT_THROW(cw_ssim(random_image(27, 40, 1), random_image(27, 40, 1)), Error);
    CwSsimParams p;
    p.orientations = 1;
    EXPECT_THROW(cw_ssim(random_image(40, 40, 1), random_image(40, 40, 1), p), Error);
}

TEST(CwSsim, FingerprintHasNoDataRange)
{
    const auto fp = Fingerprint::parse(cw_ssim(random_image(32, 32, 1), random_image(32, 32, 2)).params_fingerprint);
    EXPECT_FALSE(fp.has("L"));
    EXPECT_FALSE(fp.has("range"));
    EXPECT_EQ(fp.get("levels"), "2");
    EXPECT_EQ(fp.get("orientations"), "6");
    EXPECT_EQ(fp.get("k"), "0.03");
}

TEST(CwSsim, TranslationHurtsLessThanSsim)
{
    int better = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ph = generate_phantom(seed);
        const Image moved = translate(ph.image, {2, 0, 0});
        const double ds = 1 - ssim(ph.image, moved).value, dc = 1 - cw_ssim(ph.image, moved).value;
        better += dc < ds;
    }
    EXPECT_EQ(better, 5);
}

TEST(CwSsim, ConcurrentCallsAgree)
{
    const Image a = random_image(64, 64, 1), b = perturbed(a, 20, 2);
    const double want = cw_ssim(a, b).value;
    std::vector<double> got(4);
    {
        std::vector<std::jthread> ts;
        for (int i = 0; i < 4; ++i) ts.emplace_back([&, i] { got[i] = cw_ssim(a, b).value; });
    }
    for (double g : got) EXPECT_EQ(g, want);
}
