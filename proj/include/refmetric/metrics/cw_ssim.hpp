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

// Complex-wavelet structural similarity.
//
// Both images are decomposed into an undecimated complex steerable pyramid:
// band s (s = 0 .. levels-1) is a log-radial raised-cosine band spanning
// [pi / 2^(s+2), pi / 2^s], multiplied by a one-sided angular lobe
// cos(theta - theta_k)^(K-1) for K orientations, which makes every subband
// analytic (complex-valued in space). For each subband and each position of an
// N x N neighborhood,
//   S = (2 |sum c_R conj(c_I)| + k) / (sum |c_R|^2 + sum |c_I|^2 + k)
// and the score is the mean of S over positions and subbands. No data range
// enters anywhere.

#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "refmetric/image.hpp"
#include "refmetric/metrics/score.hpp"

namespace refmetric {

struct CwSsimParams {
    int levels = 2;
    int orientations = 6;
    double k = 0.03;
    int neighborhood = 7;

    void validate() const
    {
        if (levels < 1) throw Error("cw_ssim requires levels >= 1");
        if (orientations < 2) throw Error("cw_ssim requires orientations >= 2");
        if (!(k > 0)) throw Error("cw_ssim requires k > 0");
        if (neighborhood < 1) throw Error("cw_ssim requires neighborhood >= 1");
    }

    Fingerprint fingerprint() const
    {
        Fingerprint fp;
        fp.set("levels", levels)
            .set("orientations", orientations)
            .set("k", k)
            .set("neighborhood", neighborhood)
            .set("pyramid", "steerable_undecimated");
        return fp;
    }
};

namespace detail {

/// FFTW planning is not thread-safe; execution on distinct buffers is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

/// Forward/inverse 2D complex DFT pair bound to one buffer.
class Fft2 {
public:
    Fft2(std::size_t w, std::size_t h)
        : n_(w * h), buf_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * w * h)))
    {
        if (!buf_) throw std::bad_alloc();
        std::lock_guard lock(fftw_planner_mutex());
        fwd_ = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), buf_.get(), buf_.get(), FFTW_FORWARD,
                                FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), buf_.get(), buf_.get(), FFTW_BACKWARD,
                                FFTW_ESTIMATE);
    }
    ~Fft2()
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }
    Fft2(const Fft2&) = delete;
    Fft2& operator=(const Fft2&) = delete;

    std::vector<std::complex<double>> forward(std::span<const double> real)
    {
        for (std::size_t i = 0; i < n_; ++i) buf_[i][0] = real[i], buf_[i][1] = 0;
        fftw_execute(fwd_);
        return copy_out(1.0);
    }
    std::vector<std::complex<double>> inverse(std::span<const std::complex<double>> spec)
    {
        for (std::size_t i = 0; i < n_; ++i) buf_[i][0] = spec[i].real(), buf_[i][1] = spec[i].imag();
        fftw_execute(inv_);
        return copy_out(1.0 / static_cast<double>(n_));
    }

private:
    std::vector<std::complex<double>> copy_out(double scale) const
    {
        std::vector<std::complex<double>> out(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = {buf_[i][0] * scale, buf_[i][1] * scale};
        return out;
    }
    std::size_t n_;
    FftwBuffer buf_;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

/// 1 above c, 0 below c/2, cos(pi/2 * log2(c / r)) in between.
inline double radial_high(double r, double c)
{
    if (r >= c) return 1.0;
    if (r <= c / 2) return 0.0;
    return std::cos(std::numbers::pi / 2 * std::log2(c / r));
}

inline double radial_low(double r, double c)
{
    const double h = radial_high(r, c);
    return std::sqrt(std::max(0.0, 1.0 - h * h));
}

/// Frequency response of every subband, level-major, in FFTW's storage order.
inline std::vector<std::vector<double>> steerable_filters(std::size_t w, std::size_t h, const CwSsimParams& p)
{
    const double pi = std::numbers::pi;
    const int K = p.orientations;
    // Portilla-Simoncelli angular normalization; scaling is irrelevant to the ratio
    // but keeps coefficient magnitudes comparable to the image contrast.
    double fact_k1 = 1, fact_2k2 = 1;
    for (int i = 2; i <= K - 1; ++i) fact_k1 *= i;
    for (int i = 2; i <= 2 * (K - 1); ++i) fact_2k2 *= i;
    const double alpha = std::pow(2.0, K - 1) * fact_k1 / std::sqrt(K * fact_2k2);

    std::vector<std::vector<double>> filters;
    for (int s = 0; s < p.levels; ++s) {
        const double hi_cut = pi / std::pow(2.0, s);        // low-pass edge of the band
        const double lo_cut = pi / std::pow(2.0, s + 1);    // high-pass edge of the band
        for (int o = 0; o < K; ++o) {
            const double theta_k = pi * o / K;
            std::vector<double> f(w * h, 0.0);
            for (std::size_t v = 0; v < h; ++v) {
                const double wy = 2 * pi * (v <= (h - 1) / 2 ? double(v) : double(v) - double(h)) / double(h);
                for (std::size_t u = 0; u < w; ++u) {
                    const double wx = 2 * pi * (u <= (w - 1) / 2 ? double(u) : double(u) - double(w)) / double(w);
                    const double r = std::hypot(wx, wy);
                    if (r == 0) continue;
                    const double radial = radial_high(r, lo_cut) * radial_low(r, hi_cut);
                    if (radial == 0) continue;
                    double d = std::remainder(std::atan2(wy, wx) - theta_k, 2 * pi);
                    if (std::abs(d) >= pi / 2) continue;
                    f[v * w + u] = radial * 2 * alpha * std::pow(std::cos(d), K - 1);
                }
            }
            filters.push_back(std::move(f));
        }
    }
    return filters;
}

/// Box sums over an n x n neighborhood at valid positions.
template <class T>
std::vector<T> box_sum_valid(std::span<const T> in, std::size_t w, std::size_t h, std::size_t n)
{
    const std::size_t ow = w - n + 1, oh = h - n + 1;
    std::vector<T> rows(ow * h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            T s{};
            for (std::size_t t = 0; t < n; ++t) s += in[y * w + x + t];
            rows[y * ow + x] = s;
        }
    std::vector<T> out(ow * oh);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            T s{};
            for (std::size_t t = 0; t < n; ++t) s += rows[(y + t) * ow + x];
            out[y * ow + x] = s;
        }
    return out;
}

}  // namespace detail

inline MetricScore cw_ssim(const Image& ref, const Image& test, const CwSsimParams& p = {})
{
    p.validate();
    require_same_dims(ref.dims(), test.dims());
    const Dims& d = ref.dims();
    if (d.volumetric) throw Error("cw_ssim is defined for 2D images only");
    const std::size_t need = (std::size_t{1} << p.levels) * static_cast<std::size_t>(p.neighborhood);
    if (d.width < need || d.height < need)
        throw Error("image " + d.str() + " too small for cw_ssim with " + std::to_string(p.levels) +
                    " levels (needs extent >= " + std::to_string(need) + ")");

    const std::size_t w = d.width, h = d.height, n = w * h;
    const auto nb = static_cast<std::size_t>(p.neighborhood);
    detail::Fft2 fft(w, h);
    const auto fr = fft.forward(ref.values());
    const auto ft = fft.forward(test.values());
    const auto filters = detail::steerable_filters(w, h, p);

    std::vector<std::complex<double>> spec(n), cross(n);
    std::vector<double> energy(n);
    double total = 0;
    std::size_t count = 0;
    for (const auto& f : filters) {
        for (std::size_t i = 0; i < n; ++i) spec[i] = fr[i] * f[i];
        const auto cr = fft.inverse(spec);
        for (std::size_t i = 0; i < n; ++i) spec[i] = ft[i] * f[i];
        const auto ct = fft.inverse(spec);
        for (std::size_t i = 0; i < n; ++i) {
            cross[i] = cr[i] * std::conj(ct[i]);
            energy[i] = std::norm(cr[i]) + std::norm(ct[i]);
        }
        const auto sc = detail::box_sum_valid<std::complex<double>>(cross, w, h, nb);
        const auto se = detail::box_sum_valid<double>(energy, w, h, nb);
        for (std::size_t i = 0; i < sc.size(); ++i) total += (2 * std::abs(sc[i]) + p.k) / (se[i] + p.k);
        count += sc.size();
    }
    return make_score(total / static_cast<double>(count), "cw_ssim", p.fingerprint());
}

}  // namespace refmetric
