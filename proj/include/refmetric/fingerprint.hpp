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

#include <charconv>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "refmetric/image.hpp"

namespace refmetric {

/// Shortest decimal string that parses back to the same double; "inf"/"-inf"/"nan" for specials.
inline std::string format_real(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("cannot format real");
    return std::string(buf, end);
}

/// format_real with a trailing ".0" on integral values, for human-facing score columns.
inline std::string format_score(double v)
{
    std::string s = format_real(v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

inline double parse_real(std::string_view s)
{
    if (s == "inf" || s == "+inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw Error("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    while (true) {
        auto at = s.find(sep);
        out.emplace_back(s.substr(0, at));
        if (at == std::string_view::npos) break;
        s.remove_prefix(at + 1);
    }
    return out;
}

/// Canonical "key=value" list sorted by key, ';'-separated. Values may not contain ';'.
class Fingerprint {
public:
    Fingerprint& set(const std::string& key, std::string value)
    {
        if (key.empty() || key.find_first_of(";=") != std::string::npos)
            throw Error("invalid fingerprint key '" + key + "'");
        if (value.find(';') != std::string::npos) throw Error("fingerprint value for '" + key + "' contains ';'");
        entries_[key] = std::move(value);
        return *this;
    }
    Fingerprint& set(const std::string& key, double value) { return set(key, format_real(value)); }
    Fingerprint& set(const std::string& key, int value) { return set(key, std::to_string(value)); }
    Fingerprint& set(const std::string& key, long long value) { return set(key, std::to_string(value)); }
    Fingerprint& set(const std::string& key, const char* value) { return set(key, std::string(value)); }

    Fingerprint& merge(const Fingerprint& other)
    {
        for (const auto& [k, v] : other.entries_) entries_[k] = v;
        return *this;
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::string& get(const std::string& key) const
    {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw Error("fingerprint lacks key '" + key + "'");
        return it->second;
    }
    const std::map<std::string, std::string>& entries() const { return entries_; }

    std::string str() const
    {
        std::string out;
        for (const auto& [k, v] : entries_) {
            if (!out.empty()) out += ';';
            out += k + '=' + v;
        }
        return out;
    }

    static Fingerprint parse(std::string_view s)
    {
        Fingerprint fp;
        while (!s.empty()) {
            auto semi = s.find(';');
            auto item = s.substr(0, semi);
            auto eq = item.find('=');
            if (eq == std::string_view::npos) throw Error("malformed fingerprint entry '" + std::string(item) + "'");
            fp.set(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
            if (semi == std::string_view::npos) break;
            s.remove_prefix(semi + 1);
        }
        return fp;
    }

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace refmetric
