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

// PGM (P2/P5, 2D only) and rawf32 (little-endian float32 + ".meta" JSON sidecar).

#include <bit>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <json.hpp>

#include "refmetric/image.hpp"

namespace refmetric {

enum class ImageFormat { pgm, rawf32 };

/// ".pgm" selects PGM; anything else is rawf32 with a ".meta" sidecar.
inline ImageFormat format_for_path(const std::filesystem::path& p)
{
    auto ext = p.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext == ".pgm" ? ImageFormat::pgm : ImageFormat::rawf32;
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + p.string());
}

namespace detail {

/// Header token reader that skips whitespace and '#' comments.
class PgmHeader {
public:
    explicit PgmHeader(const std::string& s) : s_(s) {}

    long next_int()
    {
        skip();
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) throw Error("malformed PGM header");
        if (pos_ - start > 9) throw Error("PGM header value out of range");
        return std::stol(s_.substr(start, pos_ - start));
    }
    std::size_t pos() const { return pos_; }

private:
    void skip()
    {
        while (pos_ < s_.size()) {
            if (s_[pos_] == '#') {
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
                ++pos_;
            } else {
                break;
            }
        }
    }
    const std::string& s_;
    std::size_t pos_ = 2;
};

inline Image load_pgm(const std::filesystem::path& path)
{
    const std::string bytes = read_file(path);
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
        throw Error(path.string() + ": not a P2/P5 PGM file");
    const bool binary = bytes[1] == '5';
    PgmHeader hdr(bytes);
    long w = hdr.next_int(), h = hdr.next_int(), maxval = hdr.next_int();
    if (w < 1 || h < 1) throw Error(path.string() + ": PGM dims must be positive");
    if (maxval < 1 || maxval > 65535) throw Error(path.string() + ": PGM maxval must be in [1, 65535]");
    const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    std::vector<double> values;
    values.reserve(n);
    if (binary) {
        std::size_t pos = hdr.pos();
        if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
            throw Error(path.string() + ": malformed PGM header");
        ++pos;  // exactly one whitespace byte before the raster
        const std::size_t bpp = maxval > 255 ? 2 : 1;
        if (bytes.size() - pos != n * bpp)
            throw Error(path.string() + ": PGM payload length does not match dims");
        for (std::size_t i = 0; i < n; ++i) {
            auto b0 = static_cast<unsigned char>(bytes[pos + i * bpp]);
            unsigned v = b0;
            if (bpp == 2) v = (v << 8) | static_cast<unsigned char>(bytes[pos + i * bpp + 1]);
            if (v > static_cast<unsigned>(maxval)) throw Error(path.string() + ": PGM sample exceeds maxval");
            values.push_back(v);
        }
    } else {
        std::istringstream rest(bytes.substr(hdr.pos()));
        std::string tok;
        while (rest >> tok) {
            if (tok[0] == '#') {
                std::getline(rest, tok);
                continue;
            }
            std::size_t used = 0;
            long v = -1;
            try {
                v = std::stol(tok, &used);
            } catch (const std::exception&) {
                throw Error(path.string() + ": non-numeric PGM sample '" + tok + "'");
            }
            if (used != tok.size() || v < 0 || v > maxval)
                throw Error(path.string() + ": invalid PGM sample '" + tok + "'");
            values.push_back(static_cast<double>(v));
        }
        if (values.size() != n) throw Error(path.string() + ": PGM payload length does not match dims");
    }
    return Image(Dims::planar(static_cast<std::size_t>(w), static_cast<std::size_t>(h)), std::move(values),
                 std::pair<double, double>{0.0, static_cast<double>(maxval)});
}

inline std::filesystem::path meta_path(const std::filesystem::path& p) { return p.string() + ".meta"; }

inline Image load_rawf32(const std::filesystem::path& path)
{
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_file(meta_path(path)));
    } catch (const nlohmann::json::exception& e) {
        throw Error(meta_path(path).string() + ": " + e.what());
    }
    if (!meta.is_object() || !meta.contains("dims") || !meta["dims"].is_array())
        throw Error(meta_path(path).string() + ": missing \"dims\" array");
    if (meta.value("dtype", std::string("f32le")) != "f32le")
        throw Error(meta_path(path).string() + ": unsupported dtype");
    const auto& jd = meta["dims"];
    if (jd.size() != 2 && jd.size() != 3) throw Error(meta_path(path).string() + ": dims must have length 2 or 3");
    std::vector<std::size_t> d;
    for (const auto& v : jd) {
        if (!v.is_number_integer() || v.get<long long>() < 1)
            throw Error(meta_path(path).string() + ": dims must be positive integers");
        d.push_back(v.get<std::size_t>());
    }
    Dims dims = d.size() == 2 ? Dims::planar(d[1], d[0]) : Dims::volume(d[2], d[1], d[0]);

    const std::string bytes = read_file(path);
    if (bytes.size() != dims.count() * 4)
        throw Error(path.string() + ": payload has " + std::to_string(bytes.size()) + " bytes, dims require " +
                    std::to_string(dims.count() * 4));
    std::vector<double> values(dims.count());
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t u = 0;
        for (int b = 3; b >= 0; --b) u = (u << 8) | static_cast<unsigned char>(bytes[i * 4 + static_cast<std::size_t>(b)]);
        float f = std::bit_cast<float>(u);
        if (!std::isfinite(f)) throw Error(path.string() + ": non-finite value at element " + std::to_string(i));
        values[i] = f;
    }
    return Image(dims, std::move(values));
}

}  // namespace detail

inline Image load_image(const std::filesystem::path& path, ImageFormat format)
{
    return format == ImageFormat::pgm ? detail::load_pgm(path) : detail::load_rawf32(path);
}

inline Image load_image(const std::filesystem::path& path) { return load_image(path, format_for_path(path)); }

/// PGM picks maxval 255 when every value fits, else 65535 (P5, big-endian 16-bit).
inline void save_image(const Image& img, const std::filesystem::path& path, ImageFormat format)
{
    const Dims& d = img.dims();
    if (format == ImageFormat::pgm) {
        if (d.volumetric) throw Error("PGM cannot store a volumetric image");
        double mx = 0;
        for (double v : img.values()) {
            if (v != std::floor(v)) throw Error("PGM requires integer-valued data");
            if (v < 0 || v > 65535) throw Error("PGM requires values in [0, 65535]");
            mx = std::max(mx, v);
        }
        const unsigned maxval = mx <= 255 ? 255 : 65535;
        std::string out = "P5\n" + std::to_string(d.width) + " " + std::to_string(d.height) + "\n" +
                          std::to_string(maxval) + "\n";
        out.reserve(out.size() + img.size() * 2);
        for (double v : img.values()) {
            auto u = static_cast<unsigned>(v);
            if (maxval > 255) out.push_back(static_cast<char>(u >> 8));
            out.push_back(static_cast<char>(u & 0xff));
        }
        write_file(path, out);
        return;
    }

    std::string out(img.size() * 4, '\0');
    for (std::size_t i = 0; i < img.size(); ++i) {
        auto f = static_cast<float>(img[i]);
        if (!std::isfinite(f)) throw Error("value overflows float32 at element " + std::to_string(i));
        auto u = std::bit_cast<std::uint32_t>(f);
        for (std::size_t b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<char>((u >> (8 * b)) & 0xff);
    }
    nlohmann::json meta;
    meta["dims"] = d.volumetric ? nlohmann::json::array({d.depth, d.height, d.width})
                                : nlohmann::json::array({d.height, d.width});
    meta["dtype"] = "f32le";
    write_file(path, out);
    write_file(detail::meta_path(path), meta.dump() + "\n");
}

inline void save_image(const Image& img, const std::filesystem::path& path)
{
    save_image(img, path, format_for_path(path));
}

/// Any nonzero sample is foreground.
inline Mask load_mask(const std::filesystem::path& path)
{
    Image img = load_image(path);
    std::vector<std::uint8_t> v(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) v[i] = img[i] != 0.0;
    return Mask(img.dims(), std::move(v));
}

inline void save_mask(const Mask& m, const std::filesystem::path& path)
{
    std::vector<double> v(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) v[i] = m[i] ? 255.0 : 0.0;
    save_image(Image(m.dims(), std::move(v)), path);
}

}  // namespace refmetric
