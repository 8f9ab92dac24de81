#include "netobs/scale.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "netobs/error.hpp"

namespace netobs {

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw ParameterError(std::string("scale: ") + what + " must be positive");
}

void require_fraction(double v, const char* what) {
    if (!(v > 0.0 && v <= 1.0)) throw ParameterError(std::string("scale: ") + what + " must be in (0, 1]");
}

double parse_double(std::string_view key, std::string_view value) {
    const std::string s(value);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used == 0 || used != s.size())
        throw ParseError("scale: bad number for " + std::string(key) + ": '" + s + "'");
    return v;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void ScaleParams::validate() const {
    if (link_gbps.has_value() == total_bandwidth_Bps.has_value())
        throw ParameterError("scale '" + name +
                             "': give exactly one of link_gbps (with duty_factor) or total_bandwidth_Bps");
    if (link_gbps) {
        require_positive(*link_gbps, "link_gbps");
        require_fraction(duty_factor, "duty_factor");
    } else {
        require_positive(*total_bandwidth_Bps, "total_bandwidth_Bps");
    }
    require_positive(n_devices, "n_devices");
    require_positive(pkt_bytes, "pkt_bytes");
    require_positive(matrix_B_per_yr, "matrix_B_per_yr");
    require_positive(cost_per_TB_yr, "cost_per_TB_yr");
    require_fraction(non_video_fraction, "non_video_fraction");
}

ScaleEstimate estimate_traffic(const ScaleParams& p) {
    p.validate();
    ScaleEstimate e;
    e.bandwidth_Bps = p.link_gbps ? *p.link_gbps * p.duty_factor / 8.0 * 1e9 : *p.total_bandwidth_Bps;
    e.bandwidth_B_per_yr = e.bandwidth_Bps * kSecondsPerYear;
    const double share = p.apply_non_video ? p.non_video_fraction : 1.0;
    e.packet_rate_per_s = e.bandwidth_Bps * share / p.pkt_bytes;
    e.packets_per_yr = e.packet_rate_per_s * kSecondsPerYear;
    e.matrix_B_per_yr = p.matrix_B_per_yr;
    e.matrix_Bps = p.matrix_B_per_yr / kSecondsPerYear;
    e.storage_cost_per_yr = p.matrix_B_per_yr / 1e12 * p.cost_per_TB_yr;
    return e;
}

void AdversaryParams::validate() const {
    if (!(botnet_packet_fraction >= 0.0 && botnet_packet_fraction <= 1.0))
        throw ParameterError("scale: botnet_packet_fraction must be in [0, 1]");
    for (double v : {scanner_sources_per_month, scan_pkts_per_dest_yr, ddos_campaigns_per_yr,
                     ddos_duration_s, ddos_bandwidth_Bps})
        if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("scale: adversary rates must be >= 0");
}

double ddos_packets_per_campaign(double duration_s, double bandwidth_Bps, double pkt_bytes) {
    require_positive(pkt_bytes, "pkt_bytes");
    return duration_s * bandwidth_Bps / pkt_bytes;
}

AdversaryEstimate estimate_adversary(const ScaleParams& p, const AdversaryParams& a) {
    a.validate();
    const ScaleEstimate t = estimate_traffic(p);
    AdversaryEstimate e;
    e.botnet_pkts_per_s = t.packet_rate_per_s * a.botnet_packet_fraction;
    e.botnet_pkts_per_yr = t.packets_per_yr * a.botnet_packet_fraction;
    e.scan_pkts_per_yr = a.scan_pkts_per_dest_yr * p.n_devices;
    e.scan_pkts_per_s = e.scan_pkts_per_yr / kSecondsPerYear;
    e.ddos_pkts_per_campaign = ddos_packets_per_campaign(a.ddos_duration_s, a.ddos_bandwidth_Bps, p.pkt_bytes);
    e.ddos_pkts_per_yr = a.ddos_campaigns_per_yr * e.ddos_pkts_per_campaign;
    e.ddos_pkts_per_s = e.ddos_pkts_per_yr / kSecondsPerYear;
    return e;
}

DeanonymizationReduction deanonymization_reduction(double total_pkts_per_yr, double bot_population) {
    if (!(total_pkts_per_yr > 0.0)) throw ParameterError("deanonymization: total packets must be positive");
    if (!(bot_population > 0.0))
        throw ParameterError("deanonymization: ratio undefined for a bot population of " + fmt(bot_population));
    return {total_pkts_per_yr, bot_population, total_pkts_per_yr / bot_population};
}

// Sources: traffic volumes and video shares from the Cisco Visual Networking
// Index 2017-2022 and Annual Internet Report 2018-2023; botnet share of traffic
// from the Imperva Bad Bot Report 2021; scanner activity from Richter & Berger,
// "Scanning the Scanners" (IMC 2019); DDoS campaign size and counts from the
// NexusGuard DDoS Threat Report 2019 Q4; bot counts from Healey & Knake
// (Council on Foreign Relations, 2018). Matrix volumes are the yearly storage
// estimates.
const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"datacenter", "enterprise", "na-internet", "global"};
    return names;
}

ScalePreset scale_preset(std::string_view name) {
    ScalePreset s;
    s.params.name = std::string(name);
    if (name == "datacenter") {
        s.params.link_gbps = 20.0;
        s.params.duty_factor = 0.5;
        s.params.n_devices = 1e6;
        s.params.matrix_B_per_yr = 5e12;
        s.adversary.ddos_campaigns_per_yr = 0.3;
    } else if (name == "enterprise") {
        s.params.link_gbps = 500.0;
        s.params.duty_factor = 0.5;
        s.params.n_devices = 1e7;
        s.params.matrix_B_per_yr = 125e12;
        s.adversary.ddos_campaigns_per_yr = 15.0;
    } else if (name == "na-internet") {
        s.params.total_bandwidth_Bps = 30e12;
        s.params.n_devices = 1e10;
        s.params.matrix_B_per_yr = 30e15;
        s.params.non_video_fraction = 0.2;  // 80% video
        s.adversary.ddos_campaigns_per_yr = 1e4;
        s.bot_population = 2e5;
    } else if (name == "global") {
        s.params.total_bandwidth_Bps = 100e12;
        s.params.n_devices = 2e10;
        s.params.matrix_B_per_yr = 150e15;
        s.params.non_video_fraction = 0.11;  // 89% video
        s.adversary.ddos_campaigns_per_yr = 2e4;
        s.bot_population = 1e7;
    } else {
        throw UsageError("unknown scale preset '" + std::string(name) +
                         "' (expected datacenter|enterprise|na-internet|global)");
    }
    return s;
}

void set_scale_param(ScaleParams& p, AdversaryParams& a, std::string_view key, std::string_view value) {
    auto num = [&] { return parse_double(key, value); };
    if (key == "name") p.name = std::string(value);
    else if (key == "link_gbps") p.link_gbps = num();
    else if (key == "duty_factor") p.duty_factor = num();
    else if (key == "total_bandwidth_Bps") p.total_bandwidth_Bps = num();
    else if (key == "n_devices") p.n_devices = num();
    else if (key == "pkt_bytes") p.pkt_bytes = num();
    else if (key == "matrix_B_per_yr") p.matrix_B_per_yr = num();
    else if (key == "cost_per_TB_yr") p.cost_per_TB_yr = num();
    else if (key == "non_video_fraction") p.non_video_fraction = num();
    else if (key == "apply_non_video") {
        if (value == "true" || value == "1") p.apply_non_video = true;
        else if (value == "false" || value == "0") p.apply_non_video = false;
        else throw ParseError("scale: apply_non_video must be true|false");
    }
    else if (key == "botnet_packet_fraction") a.botnet_packet_fraction = num();
    else if (key == "scanner_sources_per_month") a.scanner_sources_per_month = num();
    else if (key == "scan_pkts_per_dest_yr") a.scan_pkts_per_dest_yr = num();
    else if (key == "ddos_campaigns_per_yr") a.ddos_campaigns_per_yr = num();
    else if (key == "ddos_duration_s") a.ddos_duration_s = num();
    else if (key == "ddos_bandwidth_Bps") a.ddos_bandwidth_Bps = num();
    else throw ParseError("scale: unknown parameter '" + std::string(key) + "'");
}

void write_scale_params(std::ostream& out, const ScaleParams& p, const AdversaryParams& a) {
    out << "name=" << p.name << '\n';
    if (p.link_gbps) out << "link_gbps=" << fmt(*p.link_gbps) << '\n';
    out << "duty_factor=" << fmt(p.duty_factor) << '\n';
    if (p.total_bandwidth_Bps) out << "total_bandwidth_Bps=" << fmt(*p.total_bandwidth_Bps) << '\n';
    out << "n_devices=" << fmt(p.n_devices) << '\n'
        << "pkt_bytes=" << fmt(p.pkt_bytes) << '\n'
        << "matrix_B_per_yr=" << fmt(p.matrix_B_per_yr) << '\n'
        << "cost_per_TB_yr=" << fmt(p.cost_per_TB_yr) << '\n'
        << "non_video_fraction=" << fmt(p.non_video_fraction) << '\n'
        << "apply_non_video=" << (p.apply_non_video ? "true" : "false") << '\n'
        << "botnet_packet_fraction=" << fmt(a.botnet_packet_fraction) << '\n'
        << "scanner_sources_per_month=" << fmt(a.scanner_sources_per_month) << '\n'
        << "scan_pkts_per_dest_yr=" << fmt(a.scan_pkts_per_dest_yr) << '\n'
        << "ddos_campaigns_per_yr=" << fmt(a.ddos_campaigns_per_yr) << '\n'
        << "ddos_duration_s=" << fmt(a.ddos_duration_s) << '\n'
        << "ddos_bandwidth_Bps=" << fmt(a.ddos_bandwidth_Bps) << '\n';
}

void read_scale_params(std::istream& in, ScaleParams& p, AdversaryParams& a) {
    p = ScaleParams{};
    a = AdversaryParams{};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("scale: expected key=value, got '" + line + "'");
        set_scale_param(p, a, std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
    }
}

}  // namespace netobs
