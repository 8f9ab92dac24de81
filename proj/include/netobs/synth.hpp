#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netobs/anonymize.hpp"
#include "netobs/detect.hpp"
#include "netobs/flow.hpp"
#include "netobs/traffic_matrix.hpp"

namespace netobs::synth {

enum class InjectionKind { botcc, ddos, p2p_dos, port_scan, network_scan };

std::string_view to_string(InjectionKind k);
InjectionKind parse_injection_kind(std::string_view text);

struct BackgroundSpec {
    std::uint64_t n_sources = 10'000;
    std::uint64_t n_destinations = 20'000;
    double alpha = 2.0;
    double delta = 1.0;
    /// Largest fan-out; 0 means bounded only by n_destinations (needs alpha > 1).
    std::uint64_t d_max = 0;
    /// Chance that a source is active in a given window.
    double activity = 0.9;
    /// Mean packets per link (1 + geometric).
    double packets_per_link = 4.0;

    friend bool operator==(const BackgroundSpec&, const BackgroundSpec&) = default;
};

struct InjectionSpec {
    InjectionKind kind = InjectionKind::botcc;
    std::string id;
    std::size_t start_window = 0;
    std::size_t duration_windows = 0;

    // botcc
    std::uint64_t n_clients = 75;
    std::uint64_t n_cc = 10;
    std::size_t period_windows = 10;
    std::size_t phase = 0;
    bool rotate_clients = false;

    // ddos
    std::uint64_t n_sources = 1000;
    std::optional<std::uint32_t> target;  // IPv4, host order; fresh address when unset

    /// Packets per active window for ddos and p2p_dos; 0 picks the desk-scaled
    /// default (real-world campaign bandwidth times scale_factor).
    std::uint64_t packets_per_window = 0;
    /// botcc packets per client-controller link per spike.
    std::uint64_t packets_per_link = 2;

    // scans
    std::uint64_t n_targets = 500;
    std::uint64_t n_ports = 200;
    std::uint64_t packets_per_target = 1;

    /// Draw per-link packets from a Poisson around the nominal rate.
    bool jitter = false;

    friend bool operator==(const InjectionSpec&, const InjectionSpec&) = default;
};

struct ScenarioSpec {
    std::uint64_t seed = 1;
    std::size_t windows = 1;
    std::int64_t window_len_us = 60'000'000;
    std::int64_t start_us = 1'700'000'040'000'000;  // a multiple of one minute
    /// Factor applied to real-world adversary rates to get desk-sized defaults.
    double scale_factor = 1e-6;
    /// Largest packets per window any one injection may add. 0 means the
    /// expected background volume, or no limit when there is no background.
    std::uint64_t packet_budget = 0;
    BackgroundSpec background;
    std::vector<InjectionSpec> injections;

    friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

/// Flat sections: [scenario], [background], then one [injection] per injection.
void write_scenario(std::ostream& out, const ScenarioSpec& s);
ScenarioSpec read_scenario(std::istream& in);
ScenarioSpec read_scenario_file(const std::string& path);
/// "section.key=value" override; section "injection" addresses the last one.
void set_scenario_key(ScenarioSpec& s, std::string_view section, std::string_view key,
                      std::string_view value);

/// The stock scenario: 10^4 sources and a 75-client / 10-controller beacon
/// every 10th window for 100 windows after 40 quiet ones.
ScenarioSpec beacon_scenario(std::uint64_t seed);

/// Address plan (IPv4, host order).
inline constexpr std::uint32_t kSourceBase = 0x0A000001;       // 10.0.0.1
inline constexpr std::uint32_t kDestinationBase = 0xAC100001;  // 172.16.0.1
inline constexpr std::uint32_t kActorBase = 0x64400001;        // 100.64.0.1
inline constexpr std::uint32_t kActorPoolSize = (1u << 22) - 2;

std::string ipv4_text(std::uint32_t addr);

/// One generated flow before anonymization.
struct SynthFlow {
    std::int64_t ts_us = 0;
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint64_t packets = 1;
    std::uint64_t bytes = 1;
    int injection = -1;  // index into ScenarioSpec::injections, -1 for background
};

/// What an injection actually did.
struct InjectionTruth {
    std::vector<std::uint32_t> sources;       // sorted
    std::vector<std::uint32_t> destinations;  // sorted
    std::vector<std::size_t> active_windows;
    std::uint64_t packets_per_active_window = 0;  // nominal, before jitter
};

class IdTable;

/// Seeded generator for one scenario.
///
/// The background is a fixed graph: each source keeps a fan-out drawn from the
/// power law and a fixed set of uniformly chosen destinations, and is active in
/// each window with probability `activity`. Every random draw comes from a
/// stream keyed by (seed, window, node), so output does not depend on the order
/// windows or nodes are produced in.
class ScenarioGenerator {
public:
    /// Validates the scenario; ParameterError on bad values, overlapping injections
    /// or budget overruns.
    explicit ScenarioGenerator(ScenarioSpec spec);
    ~ScenarioGenerator();
    ScenarioGenerator(ScenarioGenerator&&) noexcept;
    ScenarioGenerator& operator=(ScenarioGenerator&&) noexcept;

    const ScenarioSpec& spec() const noexcept { return spec_; }
    std::size_t windows() const noexcept { return spec_.windows; }
    std::int64_t window_start_us(std::size_t w) const;

    /// Fan-out of every background source (the sampled degrees).
    std::vector<std::uint64_t> background_fan_out() const;
    /// Expected background packets per window.
    double expected_background_packets() const;

    /// All flows of window w, sorted by (src, dst) with timestamps spread over the window.
    void window_flows(std::size_t w, std::vector<SynthFlow>& out) const;

    /// The same window as a matrix under the table's ids, built without
    /// materializing flows. Equal to build_window over the anonymized flows.
    TrafficMatrix window_matrix(std::size_t w, const IdTable& ids) const;

    const InjectionTruth& truth(std::size_t injection) const;
    /// Sources of a botcc injection in one spike window (differs per spike when rotating).
    std::vector<std::uint32_t> spike_clients(std::size_t injection, std::size_t w) const;

    struct Graph;

private:
    friend class IdTable;
    ScenarioSpec spec_;
    std::unique_ptr<Graph> graph_;
    std::vector<InjectionTruth> truth_;
    std::vector<std::uint32_t> actor_base_;  // first actor offset per injection
    std::vector<std::uint64_t> packets_;     // resolved packets_per_window per injection
    std::uint64_t actor_count_ = 0;

    void injected_flows(std::size_t w, std::vector<SynthFlow>& out) const;
};

/// NodeIds of every generator address under one anonymizer.
class IdTable {
public:
    IdTable(const ScenarioGenerator& gen, const Anonymizer& anon);
    NodeId id(std::uint32_t addr) const;
    FlowRecord record(const SynthFlow& f) const;

private:
    friend class ScenarioGenerator;
    const ScenarioGenerator* gen_;
    const Anonymizer* anon_;
    std::vector<NodeId> sources_, destinations_, actors_;
    std::vector<std::uint32_t> source_order_;  // source indices by id
    /// Parallel to the graph's CSR: positions within each row, ordered by id.
    std::vector<std::uint32_t> row_order_;
    std::vector<NodeId> row_ids_;  // destination ids in that order
};

struct WriteStats {
    std::uint64_t flows = 0;
    std::uint64_t labeled = 0;
    std::uint64_t packets = 0;
    std::uint64_t injected_packets = 0;
};

/// Writes the flow file (dotted-quad addresses) and the label file
/// `flow_index,label,injection_id`, each preceded by a '#' provenance line.
WriteStats write_scenario_outputs(const ScenarioGenerator& gen, std::ostream& flows,
                                  std::ostream& labels);

// --- growth experiment ------------------------------------------------------

enum class Regime { endpoint, network };
std::string_view to_string(Regime r);

struct GrowthParams {
    std::uint64_t initial_infected = 1;
    std::uint64_t population = 1'000'000;
    std::size_t windows = 200;
    /// Window at which the first infection lands (network monitoring trains before it).
    std::size_t infection_start = 20;
    // endpoint scanning
    std::uint64_t prevalence_threshold = 1000;
    std::size_t signature_lag_windows = 20;
    // network observation
    std::uint64_t background_sources = 1000;
    std::uint64_t n_cc = 3;
    DetectionConfig detect;
};

struct GrowthExperimentResult {
    Regime regime = Regime::endpoint;
    std::optional<std::size_t> t_detect;  // windows since infection start; nullopt = undetected
    std::uint64_t infected_at_detect = 0;
    double growth_rate = 0.0;
    std::uint64_t seed = 0;
};

/// Infected count per window: I(t+1) = min(population, I(t) + Poisson(I(t) (e^r - 1))).
std::vector<std::uint64_t> infection_curve(const GrowthParams& p, double growth_rate, std::uint64_t seed);

std::vector<GrowthExperimentResult> run_growth_experiment(const GrowthParams& p, double growth_rate,
                                                          const std::vector<Regime>& regimes,
                                                          std::uint64_t seed);

}  // namespace netobs::synth
