#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netobs/baseline.hpp"
#include "netobs/classify.hpp"
#include "netobs/detect.hpp"
#include "netobs/flow.hpp"
#include "netobs/power_law.hpp"
#include "netobs/traffic_matrix.hpp"

namespace netobs {

/// Cuts a flow list into consecutive windows of `len_us`. The first window
/// starts at the earliest timestamp rounded down to a multiple of len_us;
/// windows without traffic are empty, not skipped.
std::vector<TrafficMatrix> build_windows(std::span<const FlowRecord> flows, std::int64_t len_us);

struct AnalysisConfig {
    DetectionConfig detection;
    RuleConfig rules;
    /// Leading windows used for the model fit and variance baseline.
    std::size_t train_windows = 40;
};

/// Anonymized flow records of one window, for port statistics.
using FlowSource = std::function<std::vector<FlowRecord>(std::size_t window)>;

struct AnalysisResult;

/// Called as each stage completes, with the result filled in so far.
using StageCallback = std::function<void(std::string_view stage, const AnalysisResult& partial)>;

struct DirectionFit {
    Direction direction = Direction::fan_out;
    std::optional<PowerLawModel> model;  // unset when too little data to fit
    bool usable = false;                 // fit present and within the gof threshold
    VarianceBaseline baseline;
};

struct ReportedAnomaly {
    Anomaly anomaly;
    FeatureVector features;
    AttackLabel label = AttackLabel::Unknown;
};

struct AnalysisResult {
    std::size_t window_count = 0;
    std::size_t train_windows = 0;
    std::array<DirectionFit, 2> fits;  // fan_out, fan_in
    std::vector<ReportedAnomaly> anomalies;  // anomaly_order
    std::vector<std::string> warnings;
    /// Stages that ran: fit, baseline, detect, classify.
    std::vector<std::string> stages;
};

/// Fit and baseline on the training windows, then distribution, variance and
/// beacon detection on the rest, member extraction and classification.
///
/// Distribution detection runs only in directions whose fit is acceptable.
/// Beacons found from several parent anomalies are reported once per degree
/// bin and once per implicated node set. With fewer than train_windows + 2
/// windows nothing is detected and a warning says so. Stages complete in the
/// order fit, baseline, detect, classify.
AnalysisResult analyze(std::span<const TrafficMatrix> windows, const AnalysisConfig& cfg,
                       const FlowSource& flows = {}, const StageCallback& on_stage = {});

}  // namespace netobs
