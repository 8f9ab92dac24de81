// netobs command-line front end.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "netobs/atomic_file.hpp"
#include "netobs/baseline.hpp"
#include "netobs/classify.hpp"
#include "netobs/compression.hpp"
#include "netobs/config.hpp"
#include "netobs/error.hpp"
#include "netobs/report.hpp"
#include "netobs/run.hpp"
#include "netobs/scale.hpp"
#include "netobs/synth.hpp"
#include "netobs/version.hpp"

using namespace netobs;
namespace fs = std::filesystem;

namespace {

std::string version_text() {
    std::ostringstream s;
    s << "netobs " << kArtifactVersion << "\n"
      << "formats: flow " << kFlowFormatVersion << ", matrix " << kMatrixFormatVersion << ", model "
      << kModelFormatVersion << ", baseline " << kBaselineFormatVersion << ", report " << kReportFormatVersion
      << ", manifest " << kManifestFormatVersion;
    return s.str();
}

// Config file entries (NETOBS_CONFIG or --config) followed by --set overrides.
struct Settings {
    std::string config_path;
    std::vector<std::string> sets;

    std::vector<ConfigEntry> entries() const {
        std::vector<ConfigEntry> out;
        std::string path = config_path;
        if (path.empty())
            if (const char* env = std::getenv("NETOBS_CONFIG"); env && *env) path = env;
        if (!path.empty()) out = read_config_file(path);
        for (const auto& s : sets) out.push_back(parse_assignment(s));
        return out;
    }
    std::vector<ConfigEntry> section(std::string_view name) const {
        std::vector<ConfigEntry> out;
        for (auto& e : entries())
            if (e.section == name) out.push_back(std::move(e));
        return out;
    }
};

template <class F>
void with_origin(const ConfigEntry& e, F&& apply) {
    try {
        apply();
    } catch (const ParseError& err) {
        throw ParseError(e.origin + ": " + err.what());
    }
}

void write_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
    if (path.empty() || path == "-") body(std::cout);
    else write_file_atomic(path, body);
}

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) throw UsageError(std::string(what) + " '" + path + "' does not exist");
}

std::vector<FlowRecord> load_flows(const std::string& path, const std::optional<std::string>& salt,
                                   std::int64_t slack_us) {
    FlowReadOptions opts;
    opts.salt = salt;
    opts.slack_us = slack_us;
    FlowReadDiagnostics diag;
    auto flows = read_flow_file(path, opts, &diag);
    if (diag.rejected_out_of_order > 0)
        std::cerr << "warning: " << diag.rejected_out_of_order << " out-of-order records dropped\n";
    for (const auto& m : diag.messages) std::cerr << "  " << m << '\n';
    return flows;
}

// Degrees pooled over the leading `train` windows (0 = all).
std::vector<std::uint64_t> pooled_degrees(const std::vector<TrafficMatrix>& windows, Direction dir,
                                          std::size_t train) {
    const std::size_t n = train == 0 ? windows.size() : std::min(train, windows.size());
    std::vector<std::uint64_t> out;
    for (std::size_t w = 0; w < n; ++w) {
        auto d = degree_values(windows[w], dir);
        out.insert(out.end(), d.begin(), d.end());
    }
    return out;
}

// --- scale output -------------------------------------------------------------

struct ScaleRow {
    std::string name;
    ScaleParams params;
    ScaleEstimate traffic;
    AdversaryEstimate adversary;
    std::optional<DeanonymizationReduction> reduction;
};

void print_scale_text(std::ostream& out, const std::vector<ScaleRow>& rows) {
    struct Line {
        const char* label;
        double (*get)(const ScaleRow&);
    };
    static const Line lines[] = {
        {"bandwidth B/s", [](const ScaleRow& r) { return r.traffic.bandwidth_Bps; }},
        {"bandwidth B/yr", [](const ScaleRow& r) { return r.traffic.bandwidth_B_per_yr; }},
        {"packets/s", [](const ScaleRow& r) { return r.traffic.packet_rate_per_s; }},
        {"packets/yr", [](const ScaleRow& r) { return r.traffic.packets_per_yr; }},
        {"matrix B/s", [](const ScaleRow& r) { return r.traffic.matrix_Bps; }},
        {"matrix B/yr", [](const ScaleRow& r) { return r.traffic.matrix_B_per_yr; }},
        {"storage $/yr", [](const ScaleRow& r) { return r.traffic.storage_cost_per_yr; }},
        {"botnet packets/s", [](const ScaleRow& r) { return r.adversary.botnet_pkts_per_s; }},
        {"botnet packets/yr", [](const ScaleRow& r) { return r.adversary.botnet_pkts_per_yr; }},
        {"scan packets/yr", [](const ScaleRow& r) { return r.adversary.scan_pkts_per_yr; }},
        {"scan packets/s", [](const ScaleRow& r) { return r.adversary.scan_pkts_per_s; }},
        {"ddos packets/campaign", [](const ScaleRow& r) { return r.adversary.ddos_pkts_per_campaign; }},
        {"ddos packets/yr", [](const ScaleRow& r) { return r.adversary.ddos_pkts_per_yr; }},
        {"ddos packets/s", [](const ScaleRow& r) { return r.adversary.ddos_pkts_per_s; }},
    };
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-24s", "");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%14s", r.name.c_str());
        out << buf;
    }
    out << '\n';
    for (const auto& l : lines) {
        std::snprintf(buf, sizeof buf, "%-24s", l.label);
        out << buf;
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%14.4g", l.get(r));
            out << buf;
        }
        out << '\n';
    }
    std::snprintf(buf, sizeof buf, "%-24s", "deanonymization ratio");
    out << buf;
    for (const auto& r : rows) {
        if (r.reduction) std::snprintf(buf, sizeof buf, "%14.4g", r.reduction->ratio);
        else std::snprintf(buf, sizeof buf, "%14s", "-");
        out << buf;
    }
    out << '\n';
}

nlohmann::json scale_json(const std::vector<ScaleRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        const auto& t = r.traffic;
        const auto& a = r.adversary;
        nlohmann::json e = {
            {"preset", r.name},
            {"non_video", r.params.apply_non_video},
            {"traffic",
             {{"bandwidth_Bps", t.bandwidth_Bps},
              {"bandwidth_B_per_yr", t.bandwidth_B_per_yr},
              {"packet_rate_per_s", t.packet_rate_per_s},
              {"packets_per_yr", t.packets_per_yr},
              {"matrix_Bps", t.matrix_Bps},
              {"matrix_B_per_yr", t.matrix_B_per_yr},
              {"storage_cost_per_yr", t.storage_cost_per_yr}}},
            {"adversary",
             {{"botnet_pkts_per_s", a.botnet_pkts_per_s},
              {"botnet_pkts_per_yr", a.botnet_pkts_per_yr},
              {"scan_pkts_per_yr", a.scan_pkts_per_yr},
              {"scan_pkts_per_s", a.scan_pkts_per_s},
              {"ddos_pkts_per_campaign", a.ddos_pkts_per_campaign},
              {"ddos_pkts_per_yr", a.ddos_pkts_per_yr},
              {"ddos_pkts_per_s", a.ddos_pkts_per_s}}}};
        if (r.reduction)
            e["deanonymization"] = {{"total_pkts_per_yr", r.reduction->total_pkts_per_yr},
                                    {"bot_population", r.reduction->bot_population},
                                    {"ratio", r.reduction->ratio}};
        out.push_back(std::move(e));
    }
    return out;
}

// --- growth settings ------------------------------------------------------------

void set_growth_key(synth::GrowthParams& p, std::string_view key, std::string_view value) {
    const std::string full = "growth." + std::string(key);
    if (key == "initial_infected") p.initial_infected = config_count(full, value);
    else if (key == "population") p.population = config_count(full, value);
    else if (key == "windows") p.windows = config_count(full, value);
    else if (key == "infection_start") p.infection_start = config_count(full, value);
    else if (key == "prevalence_threshold") p.prevalence_threshold = config_count(full, value);
    else if (key == "signature_lag_windows") p.signature_lag_windows = config_count(full, value);
    else if (key == "background_sources") p.background_sources = config_count(full, value);
    else if (key == "n_cc") p.n_cc = config_count(full, value);
    else throw ParseError("unknown config key " + full);
}

double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t m = xs.size() / 2;
    return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"netobs: anonymized traffic-matrix observation, detection and scale estimates"};
    app.set_version_flag("--version", version_text());
    app.require_subcommand(1);
    app.fallthrough();

    Settings settings;
    app.add_option("--config", settings.config_path, "flat section.key=value config file (default $NETOBS_CONFIG)");
    app.add_option("--set", settings.sets, "override one config value, section.key=value (repeatable)")
        ->allow_extra_args(false);

    std::optional<std::string> salt;
    std::optional<std::int64_t> window_len_us, slack_us;
    std::optional<std::size_t> train;
    bool emit_members = false;
    auto pipeline_config = [&] {
        PipelineConfig c;
        c.apply(settings.entries());
        if (salt) c.salt = salt;
        if (window_len_us) c.window_len_us = *window_len_us;
        if (slack_us) c.slack_us = *slack_us;
        if (train) c.analysis.train_windows = *train;
        if (emit_members) c.emit_members = true;
        return c;
    };

    // ingest
    auto* ingest = app.add_subcommand("ingest", "read a flow file and write per-window matrices");
    std::string in_flows, out_path;
    ingest->add_option("--input,-i", in_flows, "flow file")->required();
    ingest->add_option("--out,-o", out_path, "matrix file")->required();
    ingest->add_option("--salt", salt, "anonymization salt for raw-address input");
    ingest->add_option("--window-len-us", window_len_us, "window length in microseconds");
    ingest->add_option("--slack-us", slack_us, "out-of-order tolerance in microseconds");

    // fit
    auto* fit = app.add_subcommand("fit", "fit the power-law background to pooled training windows");
    std::string matrices_path, direction_text = "fan_out";
    fit->add_option("--matrices,-m", matrices_path, "matrix file")->required();
    fit->add_option("--direction", direction_text, "fan_out or fan_in");
    fit->add_option("--train", train, "leading windows to pool (default all)");
    fit->add_option("--out,-o", out_path, "model file (default stdout)");

    // baseline
    auto* base = app.add_subcommand("baseline", "train per-bin variance baselines");
    base->add_option("--matrices,-m", matrices_path, "matrix file")->required();
    base->add_option("--direction", direction_text, "fan_out or fan_in");
    base->add_option("--train", train, "leading windows to train on (default all)");
    base->add_option("--out,-o", out_path, "baseline file (default stdout)");

    // detect
    auto* det = app.add_subcommand("detect", "detect and label anomalies in a matrix file");
    std::string format_text = "text", flows_path;
    det->add_option("--matrices,-m", matrices_path, "matrix file")->required();
    det->add_option("--flows", flows_path, "flow file the matrices came from, for port features");
    det->add_option("--salt", salt, "anonymization salt for raw-address flows");
    det->add_option("--train", train, "training windows");
    det->add_option("--format", format_text, "text or json");
    det->add_option("--out,-o", out_path, "report file (default stdout)");
    det->add_flag("--emit-members", emit_members, "include member node ids");

    // classify
    auto* cls = app.add_subcommand("classify", "relabel a report's anomalies or evaluate the rules");
    std::string report_path;
    bool evaluate_flag = false;
    std::vector<double> fractions{0.001, 0.01, 0.1};
    std::size_t seeds = 30;
    std::uint64_t seed = 1;
    auto* cls_report = cls->add_option("--report,-r", report_path, "json report to relabel");
    auto* cls_eval = cls->add_flag("--evaluate", evaluate_flag, "accuracy versus attack size on labeled synthetic data");
    cls_report->excludes(cls_eval);
    cls->add_option("--fractions", fractions, "attack traffic fractions")->delimiter(',');
    cls->add_option("--seeds", seeds, "samples per fraction");
    cls->add_option("--seed", seed, "first seed");
    cls->add_option("--out,-o", out_path, "output file (default stdout)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate labeled synthetic traffic or run the growth experiment");
    sim->require_subcommand(1);
    auto* traffic = sim->add_subcommand("traffic", "write a scenario's flow and label files");
    std::string scenario_path, preset_name, labels_path;
    std::optional<std::uint64_t> sim_seed;
    auto* scen_opt = traffic->add_option("--scenario", scenario_path, "scenario file");
    traffic->add_option("--preset", preset_name, "built-in scenario: beacon")->excludes(scen_opt);
    traffic->add_option("--seed", sim_seed, "override the scenario seed");
    traffic->add_option("--flows", flows_path, "flow file to write")->required();
    traffic->add_option("--labels", labels_path, "label file to write")->required();
    auto* growth = sim->add_subcommand("growth", "time to detection, endpoint versus network observation");
    double rate = 0.1;
    growth->add_option("--rate", rate, "growth rate per window");
    growth->add_option("--seeds", seeds, "number of seeds");
    growth->add_option("--seed", seed, "first seed");
    growth->add_option("--out,-o", out_path, "result file, one row per (regime, seed) (default stdout)");

    // scale
    auto* scl = app.add_subcommand("scale", "traffic, storage and adversary estimates per deployment scale");
    std::vector<std::string> presets;
    bool non_video = false;
    scl->add_option("--preset", presets, "datacenter, enterprise, na-internet or global (default all)");
    scl->add_flag("--non-video", non_video, "count packets of non-video traffic only");
    scl->add_option("--format", format_text, "text or json");

    // report
    auto* rep = app.add_subcommand("report", "render a pipeline run");
    std::string run_dir;
    rep->add_option("--run", run_dir, "pipeline output directory")->required();
    rep->add_option("--format", format_text, "text, json or plotdata");
    rep->add_option("--out,-o", out_path, "output file, or directory for plotdata");

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "ingest through report in one run");
    std::string input, out_dir;
    std::optional<std::uint64_t> pipe_seed;
    pipe->add_option("--input,-i", input, "flow file");
    pipe->add_option("--out-dir,-o", out_dir, "output directory");
    pipe->add_option("--salt", salt, "anonymization salt for raw-address input");
    pipe->add_option("--window-len-us", window_len_us, "window length in microseconds");
    pipe->add_option("--slack-us", slack_us, "out-of-order tolerance in microseconds");
    pipe->add_option("--train-windows", train, "training windows");
    pipe->add_option("--seed", pipe_seed, "run seed");
    pipe->add_flag("--emit-members", emit_members, "include member node ids in reports");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest) {
            require_file(in_flows, "flow file");
            const auto c = pipeline_config();
            c.validate();
            const auto flows = load_flows(in_flows, c.salt, c.slack_us);
            const auto windows = build_windows(flows, c.window_len_us);
            write_matrix_file(out_path, windows);
            std::uint64_t entries = 0, packets = 0, matrix_bytes = 0, raw_bytes = 0;
            for (const auto& m : windows) {
                entries += m.nnz();
                packets += m.total_packets();
                const auto cs = compression_stats(m);
                matrix_bytes += cs.matrix_bytes;
                raw_bytes += cs.raw_bytes_estimate;
            }
            std::cout << "records " << flows.size() << "\nwindows " << windows.size() << "\nentries " << entries
                      << "\npackets " << packets << "\ncompression "
                      << (matrix_bytes ? static_cast<double>(raw_bytes) / static_cast<double>(matrix_bytes) : 1.0)
                      << '\n';
        } else if (*fit || *base) {
            require_file(matrices_path, "matrix file");
            const auto dir = parse_direction(direction_text);
            const auto windows = read_matrix_file(matrices_path);
            const std::size_t n = train ? std::min(*train, windows.size()) : windows.size();
            if (*fit) {
                const auto degrees = pooled_degrees(windows, dir, n);
                const auto model = fit_power_law(degrees);
                write_output(out_path, [&](std::ostream& out) { write_model(out, model); });
                if (!fit_acceptable(model))
                    std::cerr << "warning: goodness of fit " << model.gof << " is above the rejection threshold\n";
            } else {
                std::vector<DegreeDistribution> series;
                for (std::size_t w = 0; w < n; ++w) series.push_back(degree_distribution(windows[w], dir));
                const auto b = train_variance_baseline(series);
                write_output(out_path, [&](std::ostream& out) { write_baseline(out, b); });
            }
        } else if (*det) {
            require_file(matrices_path, "matrix file");
            const auto fmt = parse_report_format(format_text);
            if (fmt == ReportFormat::plotdata) throw UsageError("detect writes text or json; use report for plotdata");
            const auto c = pipeline_config();
            c.validate();
            const auto windows = read_matrix_file(matrices_path);
            std::optional<WindowedFlows> flows;
            if (!flows_path.empty()) {
                require_file(flows_path, "flow file");
                flows.emplace(load_flows(flows_path, c.salt, c.slack_us), windows);
            }
            const auto result = analyze(windows, c.analysis, flows ? flows->source() : FlowSource{});
            const auto report = make_report(result, c.emit_members);
            write_output(out_path, [&](std::ostream& out) {
                if (fmt == ReportFormat::json) write_json_report(out, report);
                else write_text_report(out, report);
            });
        } else if (*cls) {
            const auto c = pipeline_config();
            c.analysis.rules.validate();
            if (evaluate_flag) {
                std::vector<FractionBucket> buckets;
                for (double f : fractions) {
                    FractionBucket all;
                    all.fraction = f;
                    for (std::size_t s = 0; s < seeds; ++s) {
                        auto b = labeled_suite(f, seed + s);
                        all.samples.insert(all.samples.end(), b.samples.begin(), b.samples.end());
                    }
                    buckets.push_back(std::move(all));
                }
                const auto ev = evaluate(buckets, c.analysis.rules);
                for (const auto& w : ev.warnings) std::cerr << "warning: " << w << '\n';
                write_output(out_path, [&](std::ostream& out) { write_accuracy_curve(out, ev.curve); });
            } else {
                if (report_path.empty()) throw UsageError("classify needs --report or --evaluate");
                require_file(report_path, "report");
                std::ifstream in(report_path);
                auto report = read_json_report(in);
                for (auto& a : report.anomalies) a.label = classify(a.features, c.analysis.rules);
                write_output(out_path, [&](std::ostream& out) { write_json_report(out, report); });
            }
        } else if (*sim) {
            if (*traffic) {
                synth::ScenarioSpec spec;
                if (!scenario_path.empty()) {
                    require_file(scenario_path, "scenario file");
                    spec = synth::read_scenario_file(scenario_path);
                } else if (preset_name == "beacon") {
                    spec = synth::beacon_scenario(1);
                } else {
                    throw UsageError("simulate traffic needs --scenario or --preset beacon");
                }
                for (const auto& e : settings.entries())
                    if (e.section == "scenario" || e.section == "background" || e.section == "injection")
                        with_origin(e, [&] { synth::set_scenario_key(spec, e.section, e.key, e.value); });
                if (sim_seed) spec.seed = *sim_seed;
                const synth::ScenarioGenerator gen(spec);
                synth::WriteStats stats;
                write_file_atomic(flows_path, [&](std::ostream& fo) {
                    write_file_atomic(labels_path,
                                      [&](std::ostream& lo) { stats = synth::write_scenario_outputs(gen, fo, lo); });
                });
                std::cout << "flows " << stats.flows << "\nlabeled " << stats.labeled << "\npackets " << stats.packets
                          << "\ninjected_packets " << stats.injected_packets << '\n';
            } else {
                synth::GrowthParams gp;
                for (const auto& e : settings.entries()) {
                    if (e.section == "growth") with_origin(e, [&] { set_growth_key(gp, e.key, e.value); });
                }
                gp.detect = pipeline_config().analysis.detection;
                const std::vector<synth::Regime> regimes{synth::Regime::endpoint, synth::Regime::network};
                std::vector<synth::GrowthExperimentResult> results;
                for (std::size_t s = 0; s < seeds; ++s) {
                    auto r = synth::run_growth_experiment(gp, rate, regimes, seed + s);
                    results.insert(results.end(), r.begin(), r.end());
                }
                write_output(out_path, [&](std::ostream& out) {
                    out << "regime,seed,growth_rate,t_detect,infected_at_detect\n";
                    for (const auto& r : results) {
                        out << synth::to_string(r.regime) << ',' << r.seed << ',' << r.growth_rate << ',';
                        if (r.t_detect) out << *r.t_detect;
                        else out << "undetected";
                        out << ',' << r.infected_at_detect << '\n';
                    }
                });
                for (auto regime : regimes) {
                    std::vector<double> t;
                    std::size_t missed = 0;
                    for (const auto& r : results) {
                        if (r.regime != regime) continue;
                        if (r.t_detect) t.push_back(static_cast<double>(*r.t_detect));
                        else ++missed;
                    }
                    std::cerr << synth::to_string(regime) << ": median t_detect " << median(t) << ", undetected "
                              << missed << '\n';
                }
            }
        } else if (*scl) {
            const auto fmt = parse_report_format(format_text);
            if (fmt == ReportFormat::plotdata) throw UsageError("scale writes text or json");
            if (presets.empty()) presets = preset_names();
            const auto overrides = settings.section("scale");
            std::vector<ScaleRow> rows;
            for (const auto& name : presets) {
                auto preset = scale_preset(name);
                for (const auto& e : overrides)
                    with_origin(e, [&] { set_scale_param(preset.params, preset.adversary, e.key, e.value); });
                if (non_video) preset.params.apply_non_video = true;
                ScaleRow row{name, preset.params, estimate_traffic(preset.params),
                             estimate_adversary(preset.params, preset.adversary), {}};
                if (preset.bot_population > 0)
                    row.reduction = deanonymization_reduction(row.traffic.packets_per_yr, preset.bot_population);
                rows.push_back(std::move(row));
            }
            if (fmt == ReportFormat::json) std::cout << scale_json(rows).dump(2) << '\n';
            else print_scale_text(std::cout, rows);
        } else if (*rep) {
            const auto fmt = parse_report_format(format_text);
            require_file(run_dir, "run directory");
            if (fmt == ReportFormat::plotdata) {
                const std::string dir = out_path.empty() ? (fs::path(run_dir) / "plot").string() : out_path;
                for (const auto& p : write_plotdata(run_dir, dir)) std::cout << p << '\n';
            } else {
                const auto path = (fs::path(run_dir) / "report.json").string();
                require_file(path, "report");
                std::ifstream in(path);
                const auto report = read_json_report(in);
                write_output(out_path, [&](std::ostream& out) {
                    if (fmt == ReportFormat::json) write_json_report(out, report);
                    else write_text_report(out, report);
                });
            }
        } else if (*pipe) {
            auto c = pipeline_config();
            if (!input.empty()) c.input = input;
            if (!out_dir.empty()) c.out_dir = out_dir;
            if (pipe_seed) c.seed = *pipe_seed;
            if (c.input.empty()) throw UsageError("pipeline needs --input or pipeline.input");
            require_file(c.input, "flow file");
            const auto r = run_pipeline(c);
            if (r.failed_stage) {
                std::cerr << "netobs: stage " << *r.failed_stage << " failed: " << r.error << '\n';
                return r.exit_code;
            }
            std::cout << r.report.anomalies.size() << " anomalies; outputs in " << c.out_dir << '\n';
        }
    } catch (const UsageError& e) {
        std::cerr << "netobs: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "netobs: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "netobs: " << e.what() << '\n';
        return kExitStage;
    }
    return kExitOk;
}
