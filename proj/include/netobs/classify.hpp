#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netobs/detect.hpp"
#include "netobs/flow.hpp"
#include "netobs/traffic_matrix.hpp"

namespace netobs {

enum class AttackLabel { DDoS, P2P_DoS, PortScan, NetworkScan, BotCC_Beacon, Unknown };

std::string_view to_string(AttackLabel l);
AttackLabel parse_attack_label(std::string_view text);

struct FeatureVector {
    std::uint64_t src_set_size = 0;
    std::uint64_t dst_set_size = 0;
    double mean_packets_per_link = 0.0;
    std::uint64_t unique_dst_ports = 0;
    double periodicity_strength = 0.0;  // [0, 1]
    double traffic_share = 0.0;         // [0, 1]

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Thresholds for the rule cascade; config keys are `classify.<field>`.
struct RuleConfig {
    double beacon_min_periodicity = 0.5;
    /// A periodicity peak must also reach this many standard errors (r * sqrt(n)).
    double periodicity_min_score = 3.0;
    std::uint64_t ddos_min_sources = 100;
    /// "Few" endpoints: at most this many sources or destinations.
    std::uint64_t few_endpoints = 3;
    double high_packets_per_link = 16.0;
    std::uint64_t port_scan_min_ports = 64;
    std::uint64_t network_scan_min_targets = 64;
    double network_scan_max_packets_per_link = 3.0;

    void validate() const;
    /// Sets one field by name; ParseError on an unknown key or bad value.
    void set(std::string_view key, std::string_view value);
    static std::vector<std::string> keys();

    friend bool operator==(const RuleConfig&, const RuleConfig&) = default;
};

/// Features of the anomaly's member traffic.
///
/// Member links join a reported source to a reported destination. Packet and
/// port statistics come from the excess windows (the whole span when none are
/// listed); periodicity is the autocorrelation peak of member packets per
/// window over the span. windows[i] is window index i; flows may be empty, in
/// which case unique_dst_ports is 0. RangeError when the span is not covered.
FeatureVector extract_features(const Anomaly& anomaly, std::span<const TrafficMatrix> windows,
                               std::span<const FlowRecord> flows, const RuleConfig& rules = {});

/// First matching rule: BotCC_Beacon, DDoS, P2P_DoS, PortScan, NetworkScan, else Unknown.
AttackLabel classify(const FeatureVector& f, const RuleConfig& rules = {});

struct LabeledSample {
    FeatureVector features;
    AttackLabel truth = AttackLabel::Unknown;
};

struct FractionBucket {
    double fraction = 0.0;  // attack packets / all packets
    std::vector<LabeledSample> samples;
};

struct AccuracyPoint {
    double fraction = 0.0;
    double accuracy = 0.0;
    std::size_t n = 0;

    friend bool operator==(const AccuracyPoint&, const AccuracyPoint&) = default;
};

struct Evaluation {
    std::vector<AccuracyPoint> curve;  // ascending fraction
    std::vector<std::string> warnings;
};

/// Accuracy per bucket; empty buckets are left out with a warning.
Evaluation evaluate(std::span<const FractionBucket> buckets, const RuleConfig& rules = {});

/// `fraction,accuracy,n` with a header line.
void write_accuracy_curve(std::ostream& out, std::span<const AccuracyPoint> curve);

/// Labeled samples for one attack fraction: one scenario per attack kind
/// (DDoS, P2P DoS, port scan, network scan, beacon) over the default
/// background, each attack sized to `fraction` of the window's packets. The
/// anomaly handed to extract_features is localized from generator ground
/// truth, so the result measures the rules alone.
FractionBucket labeled_suite(double fraction, std::uint64_t seed);

}  // namespace netobs
