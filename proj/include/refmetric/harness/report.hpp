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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "refmetric/harness/lint.hpp"

namespace refmetric {

struct ReportRow {
    std::string case_id;
    std::string scenario;
    std::string variant;
    std::string metric_id;
    std::string params_fingerprint;
    double score = 0;

    friend bool operator==(const ReportRow& a, const ReportRow& b)
    {
        // bitwise score equality, so NaN/inf compare as written
        return a.case_id == b.case_id && a.scenario == b.scenario && a.variant == b.variant &&
               a.metric_id == b.metric_id && a.params_fingerprint == b.params_fingerprint &&
               format_real(a.score) == format_real(b.score);
    }
};

struct Report {
    std::vector<ReportRow> rows;
    std::vector<Lint> lints;

    void append(const Report& other)
    {
        rows.insert(rows.end(), other.rows.begin(), other.rows.end());
        for (const auto& l : other.lints)
            if (std::find(lints.begin(), lints.end(), l) == lints.end()) lints.push_back(l);
    }
};

enum class ReportFormat { csv, markdown };

inline const std::vector<std::string>& csv_columns()
{
    static const std::vector<std::string> c{"case_id", "scenario", "variant", "metric_id", "params_fingerprint", "score"};
    return c;
}

namespace detail {

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// RFC 4180 records; quoted fields may contain separators, quotes and newlines.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            rec.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                rec.push_back(std::move(field));
                records.push_back(std::move(rec));
            }
            rec.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw Error("unterminated quoted CSV field");
    if (any || !field.empty()) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::string metric_label_from_fingerprint(const std::string& fp)
{
    try {
        return MetricSpec::from_fingerprint(Fingerprint::parse(fp)).label();
    } catch (const Error&) {
        return "?";
    }
}

inline std::string table_cell(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace detail

inline std::string report_csv(const Report& r)
{
    std::string out;
    for (std::size_t i = 0; i < csv_columns().size(); ++i) out += (i ? "," : "") + csv_columns()[i];
    out += '\n';
    for (const auto& row : r.rows) {
        out += detail::csv_field(row.case_id) + ',' + detail::csv_field(row.scenario) + ',' +
               detail::csv_field(row.variant) + ',' + detail::csv_field(row.metric_id) + ',' +
               detail::csv_field(row.params_fingerprint) + ',' + format_real(row.score) + '\n';
    }
    return out;
}

inline std::vector<ReportRow> parse_report_csv(const std::string& text)
{
    auto records = detail::parse_csv(text);
    if (records.empty() || records[0] != csv_columns()) throw Error("report CSV header mismatch");
    std::vector<ReportRow> rows;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& f = records[i];
        if (f.size() != 6) throw Error("report CSV row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
        rows.push_back({f[0], f[1], f[2], f[3], f[4], parse_real(f[5])});
    }
    return rows;
}

/// Mean rows (case_id "mean") as one table per scenario: metric labels down, variants across.
inline std::string report_markdown(const Report& r)
{
    std::vector<std::string> scenarios;
    for (const auto& row : r.rows)
        if (std::find(scenarios.begin(), scenarios.end(), row.scenario) == scenarios.end())
            scenarios.push_back(row.scenario);

    std::ostringstream md;
    md << "# Reference metric audit\n";
    for (const auto& sc : scenarios) {
        std::vector<std::string> variants, labels;
        std::map<std::pair<std::string, std::string>, double> cell;
        std::size_t cases = 0;
        std::vector<std::string> case_ids;
        for (const auto& row : r.rows) {
            if (row.scenario != sc) continue;
            if (row.case_id != "mean") {
                if (std::find(case_ids.begin(), case_ids.end(), row.case_id) == case_ids.end()) case_ids.push_back(row.case_id);
                continue;
            }
            const auto label = detail::metric_label_from_fingerprint(row.params_fingerprint);
            if (std::find(variants.begin(), variants.end(), row.variant) == variants.end()) variants.push_back(row.variant);
            if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
            cell[{label, row.variant}] = row.score;
        }
        cases = case_ids.size();
        md << "\n## " << sc << "\n\nMean over " << cases << " case" << (cases == 1 ? "" : "s") << ".\n\n| metric |";
        for (const auto& v : variants) md << ' ' << v << " |";
        md << "\n|---|";
        for (std::size_t i = 0; i < variants.size(); ++i) md << "---:|";
        md << '\n';
        for (const auto& l : labels) {
            md << "| " << l << " |";
            for (const auto& v : variants) {
                auto it = cell.find({l, v});
                md << ' ' << (it == cell.end() ? std::string("-") : detail::table_cell(it->second)) << " |";
            }
            md << '\n';
        }
    }
    if (!r.lints.empty()) {
        md << "\n## Lints\n\n";
        for (const auto& l : r.lints) md << "- " << l.code << " (" << severity_name(l.severity) << "): " << l.message << '\n';
    }
    return md.str();
}

inline void write_report(const Report& r, const std::filesystem::path& path, ReportFormat format)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write report to " + path.string());
    out << (format == ReportFormat::csv ? report_csv(r) : report_markdown(r));
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace refmetric
