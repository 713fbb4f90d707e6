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

// refmetric: compare, distort, phantom, audit and lint from the command line.
// Exit codes: 0 success, 1 hard error, 2 lint failure (compare/audit under --strict, lint always).

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "refmetric/harness/scenario.hpp"
#include "refmetric/io.hpp"

namespace fs = std::filesystem;
using namespace refmetric;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_lint = 2;

// Evaluation options shared by compare and lint. A JSON config supplies defaults;
// flags given on the command line override it key by key.
struct EvalOptions {
    std::string metrics = "mae,mse,psnr,ssim,pcc,nmi";
    std::string norm = "none";
    std::string range = "joint";
    int prebin = 0;
    int bins = 256;
    std::string edges = "per_image";
    std::string mask;
    std::string chain = "[]";

    void load_config(const fs::path& path)
    {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw Error("invalid config " + path.string() + ": " + e.what());
        }
        if (!j.is_object()) throw Error("config must be a JSON object");
        for (const auto& [k, v] : j.items()) {
            if (k == "metrics") metrics = v.is_string() ? v.get<std::string>() : join(v.get<std::vector<std::string>>());
            else if (k == "norm") norm = v.get<std::string>();
            else if (k == "range") range = v.get<std::string>();
            else if (k == "prebin") prebin = v.get<int>();
            else if (k == "bins") bins = v.get<int>();
            else if (k == "edges") edges = v.get<std::string>();
            else if (k == "mask") mask = v.get<std::string>();
            else if (k == "chain") chain = v.dump();
            else throw Error("unknown key '" + k + "' in " + path.string());
        }
    }

    static std::string join(const std::vector<std::string>& v)
    {
        std::string out;
        for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
        return out;
    }

    std::vector<MetricSpec> panel() const
    {
        const auto range_policy = DataRangePolicy::parse(range);
        HistogramParams h;
        h.bins = bins;
        if (edges == "joint") h.edges = HistogramParams::Edges::joint;
        else if (edges != "per_image") throw Error("unknown histogram edges '" + edges + "' (expected per_image or joint)");
        std::vector<MetricSpec> out;
        for (const auto& id : split(metrics, ',')) {
            if (id.empty()) continue;
            if (!builtin_registry().contains(id)) throw Error("unknown metric '" + id + "'");
            MetricSpec m = MetricSpec::of(id, range_policy);
            m.hist = h;
            out.push_back(m);
        }
        if (out.empty()) throw Error("no metrics requested");
        return out;
    }

    EvalConfig eval_config() const
    {
        EvalConfig c;
        c.norm = NormMethod::parse(norm);
        c.prebin = prebin;
        c.panel = panel();
        if (!mask.empty()) c.mask = load_mask(mask);
        c.chain = parse_chain(chain);
        return c;
    }
};

void add_eval_flags(CLI::App* cmd, EvalOptions& o)
{
    cmd->add_option("--metrics", o.metrics, "comma-separated metric ids");
    cmd->add_option("--norm", o.norm, "none | minmax | zscore | custom:a=..,b=..");
    cmd->add_option("--range", o.range, "joint | ref | test | fixed:L=..");
    cmd->add_option("--prebin", o.prebin, "quantize both images into n bins before evaluation (0: off)");
    cmd->add_option("--bins", o.bins, "internal histogram bins for mi/nmi");
    cmd->add_option("--edges", o.edges, "histogram edges: per_image | joint");
    cmd->add_option("--mask", o.mask, "evaluation mask image (nonzero = inside)");
}

// Loads a config file first, then re-parses so explicit flags win.
void apply_config_then_flags(CLI::App* cmd, EvalOptions& o, const std::string& config)
{
    if (config.empty()) return;
    EvalOptions from_file;
    from_file.load_config(config);
    auto pick = [&](const char* flag, auto& dst, const auto& file_value) {
        if (cmd->count(flag) == 0) dst = file_value;
    };
    pick("--metrics", o.metrics, from_file.metrics);
    pick("--norm", o.norm, from_file.norm);
    pick("--range", o.range, from_file.range);
    pick("--prebin", o.prebin, from_file.prebin);
    pick("--bins", o.bins, from_file.bins);
    pick("--edges", o.edges, from_file.edges);
    pick("--mask", o.mask, from_file.mask);
    o.chain = from_file.chain;
}

void print_lints(const std::vector<Lint>& lints, std::ostream& os)
{
    for (const auto& l : lints) os << l.code << '\t' << severity_name(l.severity) << '\t' << l.message << '\n';
}

int cmd_compare(CLI::App* cmd, EvalOptions o, const std::string& config, const std::string& ref_path,
                const std::string& test_path, const std::string& out, bool strict)
{
    apply_config_then_flags(cmd, o, config);
    Image ref = load_image(ref_path), test = load_image(test_path);
    require_same_dims(ref.dims(), test.dims());
    const EvalConfig ec = o.eval_config();

    const auto lints = lint_configuration(ref, test, ec);
    print_lints(lints, std::cerr);
    if (strict && has_error_lint(lints)) return exit_lint;

    ref = normalize(ref, ec.norm);
    test = normalize(test, ec.norm);
    if (ec.prebin > 0) {
        ref = bin_quantize(ref, ec.prebin);
        test = bin_quantize(test, ec.prebin);
    }

    Report report;
    for (const auto& m : ec.panel) {
        const MetricScore s = ec.mask ? masked_evaluate(m, ref, test, *ec.mask) : evaluate(m, ref, test);
        Fingerprint fp = Fingerprint::parse(s.params_fingerprint);
        fp.merge(m.fingerprint()).set("norm", ec.norm.str()).set("prebin", ec.prebin);
        if (ec.mask) fp.set("mask", fs::path(o.mask).filename().string());
        report.rows.push_back({"compare", "compare", "cli", s.metric_id, fp.str(), s.value});
    }
    for (const auto& r : report.rows) std::cout << r.metric_id << '\t' << format_score(r.score) << '\t' << r.params_fingerprint << '\n';
    if (!out.empty()) {
        report.lints = lints;
        write_report(report, out, ReportFormat::csv);
    }
    return exit_ok;
}

std::string read_spec_argument(const std::string& arg)
{
    const auto first = arg.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && (arg[first] == '[' || arg[first] == '{')) return arg;
    return read_file(arg);
}

int cmd_distort(const std::string& in, const std::string& spec, const std::string& out)
{
    const DistortionChain chain = parse_chain(read_spec_argument(spec));
    const Image img = load_image(in);
    save_image(apply_distortion(chain, img), out);
    std::cout << chain_canonical(chain) << '\n';
    return exit_ok;
}

std::pair<std::size_t, std::size_t> parse_dims(const std::string& s)
{
    const auto parts = split(s, ',');
    if (parts.size() != 2) throw Error("--dims must be h,w");
    try {
        return {std::stoul(parts[0]), std::stoul(parts[1])};
    } catch (const std::exception&) {
        throw Error("--dims must be two positive integers, got '" + s + "'");
    }
}

int cmd_phantom(int count, std::uint64_t seed, const std::string& dims, const std::string& half, const std::string& out_dir)
{
    if (count < 1) throw Error("--count must be >= 1");
    PhantomParams pp;
    std::tie(pp.height, pp.width) = parse_dims(dims);
    pp.tumor_half = parse_tumor_half(half);
    pp.validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create " + out_dir + ": " + ec.message());

    nlohmann::json manifest;
    manifest["dims"] = {pp.height, pp.width};
    manifest["seed"] = seed;
    manifest["tumor_half"] = tumor_half_name(pp.tumor_half);
    manifest["cases"] = nlohmann::json::array();
    for (int i = 0; i < count; ++i) {
        const Phantom ph = generate_phantom(seed + std::uint64_t(i), pp);
        const std::string id = case_id_for(std::size_t(i));
        save_image(ph.image, fs::path(out_dir) / (id + ".pgm"));
        save_mask(ph.tumor_mask, fs::path(out_dir) / (id + "_tumor.pgm"));
        save_mask(ph.foreground_mask, fs::path(out_dir) / (id + "_foreground.pgm"));
        manifest["cases"].push_back({{"id", id},
                                     {"seed", ph.seed},
                                     {"image", id + ".pgm"},
                                     {"tumor_mask", id + "_tumor.pgm"},
                                     {"foreground_mask", id + "_foreground.pgm"},
                                     {"tumor_half", ph.tumor_in_lower_half ? "lower" : "upper"}});
        std::cout << id + ".pgm" << '\n';
    }
    write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "manifest.json\n";
    return exit_ok;
}

int cmd_audit(CLI::App* cmd, const std::string& config, const std::vector<std::string>& scenarios, const std::string& out,
              bool strict, int threads)
{
    HarnessConfig cfg = config.empty() ? HarnessConfig{} : HarnessConfig::parse(read_file(config));
    if (cmd->count("--scenario")) cfg.scenarios = scenarios;
    if (cmd->count("--out")) cfg.output_dir = out;
    if (cmd->count("--strict")) cfg.strict = strict;
    if (cmd->count("--threads")) cfg.threads = threads;
    cfg.validate();

    const Report report = run_audit(cfg);
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw Error("cannot create " + cfg.output_dir + ": " + ec.message());
    for (auto f : cfg.formats) {
        const fs::path p = fs::path(cfg.output_dir) / (f == ReportFormat::csv ? "report.csv" : "report.md");
        write_report(report, p, f);
        std::cout << p.string() << '\n';
    }
    print_lints(report.lints, std::cerr);
    return cfg.strict && !report.lints.empty() ? exit_lint : exit_ok;
}

int cmd_lint(CLI::App* cmd, EvalOptions o, const std::string& config, const std::string& ref_path, const std::string& test_path)
{
    apply_config_then_flags(cmd, o, config);
    const Image ref = load_image(ref_path), test = load_image(test_path);
    const auto lints = lint_configuration(ref, test, o.eval_config());
    print_lints(lints, std::cout);
    return lints.empty() ? exit_ok : exit_lint;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"refmetric: full-reference image similarity toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "refmetric 0.1.0");

    EvalOptions compare_opts, lint_opts;
    std::string ref_path, test_path, out, config, in_path, spec, dims = "192,192", half = "either";
    bool strict = false;
    int count = 1, threads = 0;
    std::uint64_t seed = 1;
    std::vector<std::string> scenarios{"all"};

    auto* compare = app.add_subcommand("compare", "score a test image against a reference");
    compare->add_option("ref", ref_path, "reference image")->required();
    compare->add_option("test", test_path, "test image")->required();
    add_eval_flags(compare, compare_opts);
    compare->add_option("--config", config, "JSON with metrics/norm/range/prebin/bins/edges/mask keys");
    compare->add_option("--out", out, "also write a CSV report here");
    compare->add_flag("--strict", strict, "exit 2 when an error-grade lint fires");

    auto* distort = app.add_subcommand("distort", "apply a distortion chain");
    distort->add_option("in", in_path, "input image")->required();
    distort->add_option("spec", spec, "distortion chain: inline JSON or a JSON file path")->required();
    distort->add_option("out", out, "output image")->required();

    auto* phantom = app.add_subcommand("phantom", "write seeded synthetic phantoms");
    phantom->add_option("--count", count, "number of phantoms");
    phantom->add_option("--seed", seed, "seed of the first phantom");
    phantom->add_option("--dims", dims, "h,w");
    phantom->add_option("--tumor-half", half, "lower | upper | either");
    phantom->add_option("out", out, "output directory")->required();

    auto* audit = app.add_subcommand("audit", "run built-in pitfall scenarios");
    audit->add_option("--scenario", scenarios, "pitfall1..pitfall5 or all")->delimiter(',');
    audit->add_option("--config", config, "harness JSON config");
    audit->add_option("--out", out, "output directory");
    audit->add_flag("--strict", strict, "exit 2 when any lint fires");
    audit->add_option("--threads", threads, "worker threads (0: hardware concurrency)");

    auto* lint = app.add_subcommand("lint", "check an evaluation configuration for known pitfalls");
    lint->add_option("ref", ref_path, "reference image")->required();
    lint->add_option("test", test_path, "test image")->required();
    add_eval_flags(lint, lint_opts);
    lint->add_option("--config", config, "JSON with metrics/norm/range/prebin/bins/edges/mask/chain keys");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_error;
    }

    try {
        if (*compare) return cmd_compare(compare, compare_opts, config, ref_path, test_path, out, strict);
        if (*distort) return cmd_distort(in_path, spec, out);
        if (*phantom) return cmd_phantom(count, seed, dims, half, out);
        if (*audit) return cmd_audit(audit, config, scenarios, out, strict, threads);
        if (*lint) return cmd_lint(lint, lint_opts, config, ref_path, test_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_error;
    }
    return exit_error;
}
