#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace netobs {

inline constexpr double kSecondsPerYear = 3.1536e7;  // 365 days

/// Inputs for one deployment scale.
struct ScaleParams {
    std::string name;
    std::optional<double> link_gbps;           // with duty_factor
    double duty_factor = 1.0;
    std::optional<double> total_bandwidth_Bps; // given directly for Internet-wide views
    double n_devices = 0.0;
    double pkt_bytes = 1000.0;
    double matrix_B_per_yr = 0.0;  // anonymized matrix volume, a per-scale input
    double cost_per_TB_yr = 100.0;
    /// Share of traffic that is not video; applied to packet counts when
    /// apply_non_video is set (bandwidth rows stay total).
    double non_video_fraction = 1.0;
    bool apply_non_video = false;

    /// Throws ParameterError unless exactly one bandwidth source is given and
    /// every value is positive (fractions in (0, 1]).
    void validate() const;

    friend bool operator==(const ScaleParams&, const ScaleParams&) = default;
};

struct ScaleEstimate {
    double bandwidth_Bps = 0.0;
    double bandwidth_B_per_yr = 0.0;
    double packet_rate_per_s = 0.0;
    double packets_per_yr = 0.0;
    double matrix_Bps = 0.0;
    double matrix_B_per_yr = 0.0;
    double storage_cost_per_yr = 0.0;

    friend bool operator==(const ScaleEstimate&, const ScaleEstimate&) = default;
};

ScaleEstimate estimate_traffic(const ScaleParams& p);

struct AdversaryParams {
    double botnet_packet_fraction = 0.25;
    double scanner_sources_per_month = 1.1e6;
    double scan_pkts_per_dest_yr = 1.17e5;
    double ddos_campaigns_per_yr = 0.0;
    double ddos_duration_s = 7.8e3;
    /// 175 GB/s: the rate at which a 7.8e3 s campaign of 1 KB packets sends
    /// the 1.4e12 packets and the yearly totals the estimates are built on
    /// (175 MB/s would give a thousandth of that).
    double ddos_bandwidth_Bps = 1.75e11;

    void validate() const;

    friend bool operator==(const AdversaryParams&, const AdversaryParams&) = default;
};

struct AdversaryEstimate {
    double botnet_pkts_per_s = 0.0;
    double botnet_pkts_per_yr = 0.0;
    double scan_pkts_per_yr = 0.0;
    double scan_pkts_per_s = 0.0;
    double ddos_pkts_per_campaign = 0.0;
    double ddos_pkts_per_yr = 0.0;
    double ddos_pkts_per_s = 0.0;

    friend bool operator==(const AdversaryEstimate&, const AdversaryEstimate&) = default;
};

AdversaryEstimate estimate_adversary(const ScaleParams& p, const AdversaryParams& a);

/// duration * bandwidth / packet size.
double ddos_packets_per_campaign(double duration_s, double bandwidth_Bps, double pkt_bytes);

struct DeanonymizationReduction {
    double total_pkts_per_yr = 0.0;
    double bot_population = 0.0;
    double ratio = 0.0;
};

/// total / bots; ParameterError (undefined ratio) when bots is zero or either input negative.
DeanonymizationReduction deanonymization_reduction(double total_pkts_per_yr, double bot_population);

struct ScalePreset {
    ScaleParams params;
    AdversaryParams adversary;
    double bot_population = 0.0;  // 0 where no estimate exists
};

/// datacenter, enterprise, na-internet, global.
const std::vector<std::string>& preset_names();
/// Throws UsageError for unknown names.
ScalePreset scale_preset(std::string_view name);

/// Flat key=value form, one per line; read_scale_params reverses it exactly.
void write_scale_params(std::ostream& out, const ScaleParams& p, const AdversaryParams& a);
void read_scale_params(std::istream& in, ScaleParams& p, AdversaryParams& a);

/// Applies one "key=value" override (same keys as the file form).
void set_scale_param(ScaleParams& p, AdversaryParams& a, std::string_view key, std::string_view value);

}  // namespace netobs
