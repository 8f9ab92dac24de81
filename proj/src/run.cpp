#include "netobs/run.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "netobs/atomic_file.hpp"
#include "netobs/error.hpp"
#include "netobs/version.hpp"

namespace netobs {

namespace fs = std::filesystem;

void PipelineConfig::set(std::string_view section, std::string_view key, std::string_view value) {
    const std::string full = std::string(section) + "." + std::string(key);
    if (section == "pipeline") {
        if (key == "input") input = value;
        else if (key == "out_dir") out_dir = value;
        else if (key == "window_len_us") window_len_us = config_int(full, value);
        else if (key == "salt") salt = std::string(value);
        else if (key == "slack_us") slack_us = config_int(full, value);
        else if (key == "train_windows") analysis.train_windows = config_count(full, value);
        else if (key == "seed") seed = config_count(full, value);
        else if (key == "emit_members") emit_members = config_bool(full, value);
        else throw ParseError("unknown config key " + full);
    } else if (section == "detect") {
        auto& d = analysis.detection;
        if (key == "z_threshold") d.z_threshold = config_double(full, value);
        else if (key == "beacon_min_strength") d.beacon_min_strength = config_double(full, value);
        else if (key == "min_bin_population") d.min_bin_population = config_count(full, value);
        else throw ParseError("unknown config key " + full);
    } else if (section == "classify") {
        analysis.rules.set(key, value);
    } else {
        throw ParseError("unknown config section '" + std::string(section) + "'");
    }
}

void PipelineConfig::apply(const std::vector<ConfigEntry>& entries) {
    static const std::vector<std::string_view> foreign{"scale", "scenario", "background", "injection", "growth"};
    for (const auto& e : entries) {
        if (std::find(foreign.begin(), foreign.end(), e.section) != foreign.end()) continue;
        try {
            set(e.section, e.key, e.value);
        } catch (const ParseError& err) {
            throw ParseError(e.origin + ": " + err.what());
        }
    }
}

void PipelineConfig::validate() const {
    if (window_len_us <= 0) throw ParameterError("pipeline.window_len_us must be > 0");
    if (slack_us < 0) throw ParameterError("pipeline.slack_us must be >= 0");
    if (analysis.train_windows < 2) throw ParameterError("pipeline.train_windows must be >= 2");
    if (salt && salt->empty()) throw ParameterError("pipeline.salt must not be empty");
    if (out_dir.empty()) throw ParameterError("pipeline.out_dir must not be empty");
    analysis.detection.validate();
    analysis.rules.validate();
}

WindowedFlows::WindowedFlows(std::vector<FlowRecord> flows, std::span<const TrafficMatrix> windows)
    : flows_(std::move(flows)), offsets_(windows.size() + 1, 0) {
    if (windows.empty()) return;
    const std::int64_t t0 = windows.front().window_start_us();
    const std::int64_t len = windows.front().window_len_us();
    const std::size_t n = windows.size();
    auto widx = [&](const FlowRecord& f) {
        if (f.ts_us < t0) return n;
        return std::min(n, static_cast<std::size_t>((f.ts_us - t0) / len));
    };
    std::stable_sort(flows_.begin(), flows_.end(),
                     [&](const FlowRecord& a, const FlowRecord& b) { return widx(a) < widx(b); });
    for (const auto& f : flows_)
        if (auto w = widx(f); w < n) ++offsets_[w + 1];
    for (std::size_t w = 0; w < n; ++w) offsets_[w + 1] += offsets_[w];
}

std::vector<FlowRecord> WindowedFlows::window(std::size_t w) const {
    if (w + 1 >= offsets_.size()) return {};
    return {flows_.begin() + static_cast<std::ptrdiff_t>(offsets_[w]),
            flows_.begin() + static_cast<std::ptrdiff_t>(offsets_[w + 1])};
}

FlowSource WindowedFlows::source() const {
    return [this](std::size_t w) { return window(w); };
}

namespace {

struct Manifest {
    std::string path;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::vector<std::string>>> stages;
    std::optional<std::string> failure;

    void write() const {
        write_file_atomic(path, [&](std::ostream& out) {
            out << "netobs-manifest " << kManifestFormatVersion << '\n';
            out << "artifact " << kArtifactVersion << '\n';
            out << "seed " << seed << '\n';
            for (const auto& [stage, files] : stages) {
                out << "completed " << stage;
                for (const auto& f : files) out << ' ' << f;
                out << '\n';
            }
            if (failure) out << "failed " << *failure << '\n';
        });
    }
};

void write_labels(std::ostream& out, const Report& r) {
    out << "index,kind,direction,first_window,last_window,bin_lo,bin_hi,label\n";
    for (std::size_t i = 0; i < r.anomalies.size(); ++i) {
        const auto& a = r.anomalies[i];
        out << i << ',' << to_string(a.kind) << ',' << to_string(a.direction) << ',' << a.first_window << ','
            << a.last_window << ',';
        if (a.bin) out << bins::lo(*a.bin) << ',' << bins::hi(*a.bin);
        else out << ',';
        out << ',' << to_string(a.label) << '\n';
    }
}

const char* kStages[] = {"ingest", "fit", "baseline", "detect", "classify", "report"};

}  // namespace

RunResult run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    const auto at = [&](const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); };

    RunResult res;
    Manifest manifest{at("MANIFEST"), cfg.seed, {}, {}};
    std::size_t next = 0;  // index into kStages
    auto complete = [&](std::vector<std::string> files) {
        res.completed.emplace_back(kStages[next]);
        manifest.stages.emplace_back(kStages[next], std::move(files));
        manifest.write();
        ++next;
    };

    std::vector<std::string> ingest_warnings;
    try {
        // ingest
        FlowReadOptions opts;
        opts.salt = cfg.salt;
        opts.slack_us = cfg.slack_us;
        FlowReadDiagnostics diag;
        std::vector<FlowRecord> flows = read_flow_file(cfg.input, opts, &diag);
        if (diag.rejected_out_of_order > 0)
            ingest_warnings.push_back(std::to_string(diag.rejected_out_of_order) +
                                      " out-of-order records dropped at ingest");
        const auto windows = build_windows(flows, cfg.window_len_us);
        const WindowedFlows by_window(std::move(flows), windows);
        write_matrix_file(at("matrices.txt"), windows);
        complete({"matrices.txt"});

        const auto on_stage = [&](std::string_view stage, const AnalysisResult& partial) {
            std::vector<std::string> files;
            if (stage == "fit") {
                for (const auto& f : partial.fits) {
                    if (!f.model) continue;
                    const std::string name = "model_" + std::string(to_string(f.direction)) + ".txt";
                    write_model_file(at(name), *f.model);
                    files.push_back(name);
                }
            } else if (stage == "baseline") {
                for (const auto& f : partial.fits) {
                    const std::string name = "baseline_" + std::string(to_string(f.direction)) + ".txt";
                    write_baseline_file(at(name), f.baseline);
                    files.push_back(name);
                }
            } else if (stage == "detect") {
                Report r = make_report(partial, cfg.emit_members);
                write_file_atomic(at("anomalies.json"), [&](std::ostream& out) { write_json_report(out, r); });
                files.push_back("anomalies.json");
            } else if (stage == "classify") {
                Report r = make_report(partial, cfg.emit_members);
                write_file_atomic(at("labels.csv"), [&](std::ostream& out) { write_labels(out, r); });
                files.push_back("labels.csv");
            }
            complete(std::move(files));
        };
        const AnalysisResult analysis = analyze(windows, cfg.analysis, by_window.source(), on_stage);
        // Too few windows: analyze warns and stops early; the stages still leave their files.
        while (next < 5) on_stage(kStages[next], analysis);

        // report
        res.report = make_report(analysis, cfg.emit_members);
        res.report.warnings.insert(res.report.warnings.begin(), ingest_warnings.begin(), ingest_warnings.end());
        write_file_atomic(at("report.json"), [&](std::ostream& out) { write_json_report(out, res.report); });
        write_file_atomic(at("report.txt"), [&](std::ostream& out) { write_text_report(out, res.report); });
        complete({"report.json", "report.txt"});
    } catch (const std::exception& e) {
        res.failed_stage = kStages[next];
        res.error = e.what();
        res.exit_code = next == 0 && dynamic_cast<const ParseError*>(&e) ? kExitInput : kExitStage;
        manifest.failure = std::string(kStages[next]) + ": " + e.what();
        try {
            manifest.write();
        } catch (const std::exception&) {
            // the original error is the one worth reporting
        }
    }
    return res;
}

std::vector<std::string> write_plotdata(const std::string& run_dir, const std::string& out_dir) {
    const auto in = [&](const std::string& name) { return (fs::path(run_dir) / name).string(); };
    const auto windows = read_matrix_file(in("matrices.txt"));
    Report report;
    {
        std::ifstream rj(in("report.json"));
        if (!rj) throw ParseError("no report.json in '" + run_dir + "'");
        report = read_json_report(rj);
    }
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    for (auto dir : {Direction::fan_out, Direction::fan_in}) {
        const std::string d(to_string(dir));
        std::optional<PowerLawModel> model;
        if (fs::exists(in("model_" + d + ".txt"))) model = read_model_file(in("model_" + d + ".txt"));

        const std::string degree_path = (fs::path(out_dir) / ("degree_" + d + ".csv")).string();
        write_file_atomic(degree_path, [&](std::ostream& out) {
            if (windows.empty()) {
                out << "d,count,model_p\n";
                return;
            }
            const std::size_t w = std::min(report.train_windows, windows.size() - 1);
            write_degree_plot(out, windows[w], dir, model);
        });
        written.push_back(degree_path);

        std::vector<DegreeDistribution> series;
        series.reserve(windows.size());
        for (const auto& m : windows) series.push_back(degree_distribution(m, dir));
        const std::string bins_path = (fs::path(out_dir) / ("bins_" + d + ".csv")).string();
        write_file_atomic(bins_path, [&](std::ostream& out) { write_bin_series(out, series); });
        written.push_back(bins_path);
    }
    return written;
}

}  // namespace netobs
