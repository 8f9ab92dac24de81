#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netobs/config.hpp"
#include "netobs/flow.hpp"
#include "netobs/pipeline.hpp"
#include "netobs/report.hpp"

namespace netobs {

/// Everything one end-to-end run needs. Config sections: pipeline.*, detect.*, classify.*.
struct PipelineConfig {
    std::string input;                 // flow file
    std::string out_dir = "netobs-out";
    std::int64_t window_len_us = 60'000'000;
    std::optional<std::string> salt;   // needed when the flow file has raw addresses
    std::int64_t slack_us = kDefaultSlackUs;
    AnalysisConfig analysis;
    std::uint64_t seed = 1;
    bool emit_members = false;

    /// Applies one assignment; ParseError for unknown keys or bad values.
    void set(std::string_view section, std::string_view key, std::string_view value);
    /// Applies entries in order, skipping sections that belong to other commands
    /// (scale, scenario, background, injection, growth). Errors carry the origin.
    void apply(const std::vector<ConfigEntry>& entries);
    /// ParameterError on out-of-range values.
    void validate() const;
};

/// Flow records regrouped by the window they fall in, served as a FlowSource.
class WindowedFlows {
public:
    /// `windows` as built from the same flows by build_windows.
    WindowedFlows(std::vector<FlowRecord> flows, std::span<const TrafficMatrix> windows);
    std::vector<FlowRecord> window(std::size_t w) const;
    /// Borrows *this; keep it alive while the source is in use.
    FlowSource source() const;

private:
    std::vector<FlowRecord> flows_;
    std::vector<std::size_t> offsets_;
};

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitInput = 3, kExitStage = 4 };

struct RunResult {
    int exit_code = kExitOk;
    std::vector<std::string> completed;  // stage names, in order
    std::optional<std::string> failed_stage;
    std::string error;
    Report report;
};

/// ingest, fit, baseline, detect, classify, report. Each stage's artifacts are
/// written atomically into out_dir and MANIFEST is rewritten after every stage,
/// so a failed run leaves the completed stages and the failure on disk.
///
/// Files: matrices.txt, model_<dir>.txt, baseline_<dir>.txt, anomalies.json,
/// labels.csv, report.json, report.txt, MANIFEST. Exit code kExitInput when
/// the flow file is malformed, kExitStage for any other stage error.
RunResult run_pipeline(const PipelineConfig& cfg);

/// Plot files for a finished run directory: degree_<dir>.csv for the first
/// window after training (or the last window), and bins_<dir>.csv. Returns the
/// paths written.
std::vector<std::string> write_plotdata(const std::string& run_dir, const std::string& out_dir);

}  // namespace netobs
