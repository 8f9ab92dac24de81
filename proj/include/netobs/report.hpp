#pragma once

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netobs/pipeline.hpp"

namespace netobs {

enum class ReportFormat { text, json, plotdata };

/// UsageError for anything but text, json or plotdata.
ReportFormat parse_report_format(std::string_view text);

/// One reported anomaly. Member lists are present only when members were emitted.
struct AnomalyRecord {
    AnomalyKind kind = AnomalyKind::distribution;
    Direction direction = Direction::fan_out;
    std::size_t first_window = 0;
    std::size_t last_window = 0;
    std::optional<std::size_t> bin;
    double score = 0.0;
    std::optional<std::size_t> period;
    std::size_t source_count = 0;
    std::size_t dest_count = 0;
    double turnover = 0.0;
    AttackLabel label = AttackLabel::Unknown;
    FeatureVector features;
    std::optional<std::vector<NodeId>> sources;
    std::optional<std::vector<NodeId>> destinations;

    friend bool operator==(const AnomalyRecord&, const AnomalyRecord&) = default;
};

struct FitRecord {
    Direction direction = Direction::fan_out;
    std::optional<PowerLawModel> model;
    bool usable = false;

    friend bool operator==(const FitRecord&, const FitRecord&) = default;
};

struct Report {
    std::size_t window_count = 0;
    std::size_t train_windows = 0;
    bool members_emitted = false;
    std::vector<FitRecord> fits;
    std::vector<AnomalyRecord> anomalies;  // (window, bin, kind) order
    std::vector<std::string> warnings;

    friend bool operator==(const Report&, const Report&) = default;
};

Report make_report(const AnalysisResult& r, bool emit_members);

nlohmann::json to_json(const Report& r);
/// ParseError on missing or mistyped fields.
Report report_from_json(const nlohmann::json& j);

/// Human-readable listing, one line per anomaly.
void write_text_report(std::ostream& out, const Report& r);
void write_json_report(std::ostream& out, const Report& r);
Report read_json_report(std::istream& in);

/// `d,count,model_p` for every degree present in the window; counts sum to the
/// active node count. model_p is 0 without a model or beyond its d_max.
void write_degree_plot(std::ostream& out, const TrafficMatrix& m, Direction dir,
                       const std::optional<PowerLawModel>& model);

/// `window,bin_lo,bin_hi,count`, one row per window and bin up to the widest window.
void write_bin_series(std::ostream& out, std::span<const DegreeDistribution> series,
                      std::size_t first_index = 0);

}  // namespace netobs
