#include "netobs/synth.hpp"

#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <array>
#include <arpa/inet.h>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "netobs/error.hpp"
#include "netobs/power_law.hpp"
#include "netobs/scale.hpp"
#include "netobs/stream_rng.hpp"

namespace netobs::synth {

namespace {

constexpr std::uint64_t kGraphStream = 1;
constexpr std::uint64_t kActivityStream = 2;
constexpr std::uint64_t kPortStream = 3;
constexpr std::uint64_t kInjectionStream = 4;

constexpr std::uint32_t kMaxSources = (1u << 24) - 2;
constexpr std::uint32_t kMaxDestinations = (1u << 20) - 2;

constexpr std::uint16_t kServicePorts[] = {443, 80, 53, 443, 22, 443, 25, 123, 80, 993, 443, 8080};

std::uint16_t ephemeral_port(StreamRng& r) { return static_cast<std::uint16_t>(32768 + r() % 28232); }

/// k distinct values from [lo, lo + n), sorted (Floyd's algorithm).
template <typename Rng>
std::vector<std::uint32_t> sample_distinct(Rng& rng, std::uint32_t lo, std::uint32_t n, std::uint32_t k) {
    absl::flat_hash_set<std::uint32_t> chosen;
    chosen.reserve(k);
    for (std::uint32_t j = n - k; j < n; ++j) {
        std::uniform_int_distribution<std::uint32_t> pick(0, j);
        const std::uint32_t t = pick(rng);
        chosen.insert(chosen.contains(t) ? j : t);
    }
    std::vector<std::uint32_t> out;
    out.reserve(k);
    for (auto v : chosen) out.push_back(lo + v);
    std::sort(out.begin(), out.end());
    return out;
}

/// Geometric count of failures before the first success. Small values come
/// from thresholds over raw 64-bit draws (a lookup on the top bits settles
/// most draws outright), the tail by inversion.
class Geometric {
public:
    explicit Geometric(double mean_packets) {
        if (!(mean_packets > 1.0)) return;
        const double q = 1.0 - 1.0 / mean_packets;
        scale_ = 1.0 / std::log(q);
        double tail = q;  // P(X > k)
        for (auto& t : thresholds_) {
            const double below = 1.0 - tail;
            t = below >= 1.0 ? ~std::uint64_t{0} : static_cast<std::uint64_t>(std::ldexp(below, 64));
            tail *= q;
        }
        for (std::size_t i = 0; i < fast_.size(); ++i) {
            const std::uint64_t lo = static_cast<std::uint64_t>(i) << kShift;
            const std::uint64_t hi = lo | ((std::uint64_t{1} << kShift) - 1);
            const std::size_t k = scan(lo);
            fast_[i] = (k < thresholds_.size() && k == scan(hi)) ? static_cast<std::uint8_t>(k) : kAmbiguous;
        }
    }
    std::uint64_t operator()(StreamRng& r) const {
        if (scale_ == 0.0) return 0;
        const std::uint64_t u = r();
        if (const auto k = fast_[u >> kShift]; k != kAmbiguous) return k;
        if (const auto k = scan(u); k < thresholds_.size()) return k;
        // memoryless: continue past the table
        return thresholds_.size() + static_cast<std::uint64_t>(std::log1p(-unit_draw(r)) * scale_);
    }

private:
    static constexpr int kShift = 54;  // 1024 buckets
    static constexpr std::uint8_t kAmbiguous = 0xff;
    double scale_ = 0.0;
    std::array<std::uint64_t, 24> thresholds_{};
    std::array<std::uint8_t, 1024> fast_{};

    std::size_t scan(std::uint64_t u) const {
        std::size_t k = 0;
        while (k < thresholds_.size() && u >= thresholds_[k]) ++k;
        return k;
    }
};

std::uint64_t jittered(StreamRng& r, std::uint64_t nominal, bool jitter) {
    if (!jitter || nominal == 0) return std::max<std::uint64_t>(1, nominal);
    std::poisson_distribution<std::uint64_t> p(static_cast<double>(nominal));
    return std::max<std::uint64_t>(1, p(r));
}

bool in_range(std::uint32_t addr, std::uint32_t base, std::uint64_t n) {
    return addr >= base && static_cast<std::uint64_t>(addr - base) < n;
}

}  // namespace

std::string_view to_string(InjectionKind k) {
    switch (k) {
        case InjectionKind::botcc: return "botcc";
        case InjectionKind::ddos: return "ddos";
        case InjectionKind::p2p_dos: return "p2p_dos";
        case InjectionKind::port_scan: return "port_scan";
        case InjectionKind::network_scan: return "network_scan";
    }
    return "?";
}

InjectionKind parse_injection_kind(std::string_view text) {
    for (auto k : {InjectionKind::botcc, InjectionKind::ddos, InjectionKind::p2p_dos,
                   InjectionKind::port_scan, InjectionKind::network_scan})
        if (text == to_string(k)) return k;
    throw ParseError("unknown injection kind '" + std::string(text) + "'");
}

std::string ipv4_text(std::uint32_t addr) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", addr >> 24, (addr >> 16) & 255u, (addr >> 8) & 255u,
                  addr & 255u);
    return buf;
}

ScenarioSpec beacon_scenario(std::uint64_t seed) {
    ScenarioSpec s;
    s.seed = seed;
    s.windows = 140;
    InjectionSpec b;
    b.kind = InjectionKind::botcc;
    b.id = "beacon";
    b.start_window = 40;
    b.duration_windows = 100;
    b.n_clients = 75;
    b.n_cc = 10;
    b.period_windows = 10;
    s.injections.push_back(b);
    return s;
}

// --- background graph -------------------------------------------------------

struct ScenarioGenerator::Graph {
    std::vector<std::uint32_t> offsets{0};  // CSR over sources
    std::vector<std::uint32_t> dests;       // destination indices, sorted per row
    std::uint64_t links() const { return dests.size(); }
};

ScenarioGenerator::ScenarioGenerator(ScenarioSpec spec) : spec_(std::move(spec)), graph_(std::make_unique<Graph>()) {
    const auto& bg = spec_.background;
    if (spec_.windows < 1) throw ParameterError("scenario: windows must be >= 1");
    if (spec_.window_len_us <= 0) throw ParameterError("scenario: window_len_us must be > 0");
    if (!(spec_.scale_factor > 0.0)) throw ParameterError("scenario: scale_factor must be > 0");
    if (bg.n_sources > kMaxSources) throw ParameterError("background: n_sources exceeds the 10.0.0.0/8 plan");
    if (bg.n_destinations > kMaxDestinations)
        throw ParameterError("background: n_destinations exceeds the 172.16.0.0/12 plan");
    if (!(bg.alpha > 0.0)) throw ParameterError("background: alpha must be > 0");
    if (!(bg.delta >= 0.0)) throw ParameterError("background: delta must be >= 0");
    if (!(bg.activity > 0.0 && bg.activity <= 1.0)) throw ParameterError("background: activity must be in (0, 1]");
    if (!(bg.packets_per_link >= 1.0)) throw ParameterError("background: packets_per_link must be >= 1");

    if (bg.n_sources > 0) {
        if (bg.n_destinations == 0) throw ParameterError("background: sources need n_destinations > 0");
        if (bg.d_max == 0 && !(bg.alpha > 1.0))
            throw ParameterError("background: alpha <= 1 needs an explicit d_max");
        if (bg.d_max > bg.n_destinations)
            throw ParameterError("background: d_max larger than n_destinations");
        const std::uint64_t d_max = bg.d_max ? bg.d_max : bg.n_destinations;
        const PowerLawModel model = make_power_law(bg.alpha, bg.delta, d_max);
        std::vector<double> cdf(d_max);
        long double acc = 0.0L;
        for (std::uint64_t d = 1; d <= d_max; ++d) {
            acc += model.norm * std::pow(static_cast<long double>(d) + bg.delta, -static_cast<long double>(bg.alpha));
            cdf[d - 1] = static_cast<double>(acc);
        }
        std::mt19937_64 rng(stream_key(spec_.seed, kGraphStream));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        graph_->offsets.reserve(bg.n_sources + 1);
        for (std::uint64_t i = 0; i < bg.n_sources; ++i) {
            const double x = u(rng) * cdf.back();
            auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
            if (it == cdf.end()) --it;
            const auto d = static_cast<std::uint32_t>(it - cdf.begin()) + 1;
            auto row = sample_distinct(rng, 0, static_cast<std::uint32_t>(bg.n_destinations), d);
            graph_->dests.insert(graph_->dests.end(), row.begin(), row.end());
            graph_->offsets.push_back(static_cast<std::uint32_t>(graph_->dests.size()));
        }
    }

    // actors and ground truth
    const double budget = spec_.packet_budget > 0 ? static_cast<double>(spec_.packet_budget)
                          : bg.n_sources > 0    ? expected_background_packets()
                                                : std::numeric_limits<double>::infinity();
    const AdversaryParams adv;
    const double window_s = static_cast<double>(spec_.window_len_us) / 1e6;
    const auto default_rate = static_cast<std::uint64_t>(std::max(
        1.0, std::round(adv.ddos_bandwidth_Bps / 1000.0 * window_s * spec_.scale_factor)));

    std::uint64_t next_actor = 0;
    for (std::size_t k = 0; k < spec_.injections.size(); ++k) {
        const auto& inj = spec_.injections[k];
        const std::string name = "injection '" + (inj.id.empty() ? std::to_string(k) : inj.id) + "'";
        if (inj.start_window + inj.duration_windows > spec_.windows)
            throw ParameterError(name + " runs past the last scenario window");
        if (inj.target) {
            if (in_range(*inj.target, kSourceBase, bg.n_sources) || in_range(*inj.target, kActorBase, kActorPoolSize))
                throw ParameterError(name + ": target " + ipv4_text(*inj.target) +
                                     " overlaps reserved background-source or actor addresses");
        }
        InjectionTruth t;
        std::uint64_t actors = 0;
        const std::uint32_t base = kActorBase + static_cast<std::uint32_t>(std::min<std::uint64_t>(next_actor, kActorPoolSize));
        auto actor = [&](std::uint64_t i) { return base + static_cast<std::uint32_t>(i); };
        auto target = [&](std::uint64_t fresh_index) { return inj.target ? *inj.target : actor(fresh_index); };

        for (std::size_t w = inj.start_window; w < inj.start_window + inj.duration_windows; ++w) {
            if (inj.kind != InjectionKind::botcc) {
                t.active_windows.push_back(w);
                continue;
            }
            if (inj.period_windows == 0) throw ParameterError(name + ": period_windows must be >= 1");
            if ((w - inj.start_window) % inj.period_windows == inj.phase % inj.period_windows)
                t.active_windows.push_back(w);
        }

        switch (inj.kind) {
            case InjectionKind::botcc: {
                if (inj.n_clients == 0 || inj.n_cc == 0) throw ParameterError(name + ": needs clients and controllers");
                const std::uint64_t blocks = inj.rotate_clients ? std::max<std::size_t>(1, t.active_windows.size()) : 1;
                actors = inj.n_cc + inj.n_clients * blocks;
                for (std::uint64_t i = 0; i < inj.n_cc; ++i) t.destinations.push_back(actor(i));
                for (std::uint64_t i = inj.n_cc; i < actors; ++i) t.sources.push_back(actor(i));
                t.packets_per_active_window = inj.n_clients * inj.n_cc * std::max<std::uint64_t>(1, inj.packets_per_link);
                break;
            }
            case InjectionKind::ddos: {
                if (inj.n_sources == 0) throw ParameterError(name + ": n_sources must be >= 1");
                actors = inj.n_sources + (inj.target ? 0 : 1);
                for (std::uint64_t i = 0; i < inj.n_sources; ++i) t.sources.push_back(actor(i));
                t.destinations.push_back(target(inj.n_sources));
                const std::uint64_t p = inj.packets_per_window ? inj.packets_per_window : default_rate;
                t.packets_per_active_window = std::max(p, inj.n_sources);
                packets_.push_back(p);
                break;
            }
            case InjectionKind::p2p_dos: {
                actors = inj.target ? 1 : 2;
                t.sources.push_back(actor(0));
                t.destinations.push_back(target(1));
                const std::uint64_t p = inj.packets_per_window ? inj.packets_per_window : default_rate;
                t.packets_per_active_window = p;
                packets_.push_back(p);
                break;
            }
            case InjectionKind::port_scan: {
                if (inj.n_ports == 0 || inj.n_ports > 65535) throw ParameterError(name + ": n_ports must be in [1, 65535]");
                if (inj.packets_per_target == 0) throw ParameterError(name + ": packets_per_target must be >= 1");
                actors = inj.target ? 1 : 2;
                t.sources.push_back(actor(0));
                t.destinations.push_back(target(1));
                t.packets_per_active_window = inj.n_ports * inj.packets_per_target;
                break;
            }
            case InjectionKind::network_scan: {
                if (inj.n_targets == 0) throw ParameterError(name + ": n_targets must be >= 1");
                if (inj.packets_per_target == 0 || inj.packets_per_target > 3)
                    throw ParameterError(name + ": network scans send 1 to 3 packets per target");
                actors = 1 + inj.n_targets;
                t.sources.push_back(actor(0));
                for (std::uint64_t i = 1; i < actors; ++i) t.destinations.push_back(actor(i));
                t.packets_per_active_window = inj.n_targets * inj.packets_per_target;
                break;
            }
        }
        if (inj.kind != InjectionKind::ddos && inj.kind != InjectionKind::p2p_dos) packets_.push_back(0);
        if (next_actor + actors > kActorPoolSize)
            throw ParameterError(name + ": actor address pool 100.64.0.0/10 exhausted");
        if (!t.active_windows.empty() && static_cast<double>(t.packets_per_active_window) > budget)
            throw ParameterError(name + " adds " + std::to_string(t.packets_per_active_window) +
                                 " packets per window, above the scenario packet budget of " +
                                 std::to_string(static_cast<std::uint64_t>(budget)));
        std::sort(t.sources.begin(), t.sources.end());
        std::sort(t.destinations.begin(), t.destinations.end());
        actor_base_.push_back(static_cast<std::uint32_t>(next_actor));
        next_actor += actors;
        truth_.push_back(std::move(t));
    }
    actor_count_ = next_actor;
}

ScenarioGenerator::~ScenarioGenerator() = default;
ScenarioGenerator::ScenarioGenerator(ScenarioGenerator&&) noexcept = default;
ScenarioGenerator& ScenarioGenerator::operator=(ScenarioGenerator&&) noexcept = default;

std::int64_t ScenarioGenerator::window_start_us(std::size_t w) const {
    return spec_.start_us + static_cast<std::int64_t>(w) * spec_.window_len_us;
}

std::vector<std::uint64_t> ScenarioGenerator::background_fan_out() const {
    std::vector<std::uint64_t> out;
    out.reserve(spec_.background.n_sources);
    for (std::size_t i = 0; i + 1 < graph_->offsets.size(); ++i)
        out.push_back(graph_->offsets[i + 1] - graph_->offsets[i]);
    return out;
}

double ScenarioGenerator::expected_background_packets() const {
    return static_cast<double>(graph_->links()) * spec_.background.activity * spec_.background.packets_per_link;
}

const InjectionTruth& ScenarioGenerator::truth(std::size_t injection) const {
    if (injection >= truth_.size()) throw RangeError("no injection " + std::to_string(injection));
    return truth_[injection];
}

std::vector<std::uint32_t> ScenarioGenerator::spike_clients(std::size_t injection, std::size_t w) const {
    const auto& inj = spec_.injections.at(injection);
    const auto& t = truth(injection);
    if (inj.kind != InjectionKind::botcc) return t.sources;
    auto it = std::lower_bound(t.active_windows.begin(), t.active_windows.end(), w);
    if (it == t.active_windows.end() || *it != w) return {};
    const std::uint64_t block = inj.rotate_clients ? static_cast<std::uint64_t>(it - t.active_windows.begin()) : 0;
    std::vector<std::uint32_t> out;
    const std::uint32_t first = kActorBase + actor_base_[injection] + static_cast<std::uint32_t>(inj.n_cc + block * inj.n_clients);
    for (std::uint64_t i = 0; i < inj.n_clients; ++i) out.push_back(first + static_cast<std::uint32_t>(i));
    return out;
}

void ScenarioGenerator::injected_flows(std::size_t w, std::vector<SynthFlow>& out) const {
    const std::size_t first = out.size();
    for (std::size_t k = 0; k < spec_.injections.size(); ++k) {
        const auto& inj = spec_.injections[k];
        const auto& t = truth_[k];
        if (!std::binary_search(t.active_windows.begin(), t.active_windows.end(), w)) continue;
        StreamRng r(stream_key(spec_.seed, kInjectionStream, k, w));
        const int tag = static_cast<int>(k);
        auto emit = [&](std::uint32_t s, std::uint32_t d, std::uint16_t dport, std::uint64_t pk, std::uint64_t size) {
            SynthFlow f;
            f.src = s;
            f.dst = d;
            f.src_port = ephemeral_port(r);
            f.dst_port = dport;
            f.packets = pk;
            f.bytes = pk * size;
            f.injection = tag;
            out.push_back(f);
        };
        switch (inj.kind) {
            case InjectionKind::botcc:
                for (std::uint32_t c : spike_clients(k, w))
                    for (std::uint32_t cc : t.destinations)
                        emit(c, cc, 443, jittered(r, std::max<std::uint64_t>(1, inj.packets_per_link), inj.jitter), 120);
                break;
            case InjectionKind::ddos: {
                const std::uint64_t n = inj.n_sources, p = packets_[k];
                for (std::uint64_t i = 0; i < n; ++i) {
                    const std::uint64_t share = std::max<std::uint64_t>(1, p / n + (i < p % n ? 1 : 0));
                    emit(t.sources[i], t.destinations[0], 80, jittered(r, share, inj.jitter), 1000);
                }
                break;
            }
            case InjectionKind::p2p_dos:
                emit(t.sources[0], t.destinations[0], 80, jittered(r, packets_[k], inj.jitter), 1000);
                break;
            case InjectionKind::port_scan: {
                const auto ports = sample_distinct(r, 1, 65535, static_cast<std::uint32_t>(inj.n_ports));
                for (std::uint32_t port : ports)
                    emit(t.sources[0], t.destinations[0], static_cast<std::uint16_t>(port), inj.packets_per_target, 60);
                break;
            }
            case InjectionKind::network_scan:
                for (std::uint32_t d : t.destinations) emit(t.sources[0], d, 445, inj.packets_per_target, 60);
                break;
        }
    }
    std::stable_sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(), [](const SynthFlow& a, const SynthFlow& b) {
        return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
}

void ScenarioGenerator::window_flows(std::size_t w, std::vector<SynthFlow>& out) const {
    if (w >= spec_.windows) throw RangeError("window " + std::to_string(w) + " beyond scenario");
    out.clear();
    const auto& bg = spec_.background;
    const Geometric geo(bg.packets_per_link);
    for (std::size_t i = 0; i + 1 < graph_->offsets.size(); ++i) {
        StreamRng r(stream_key(spec_.seed, kActivityStream, w, i));
        if (unit_draw(r) >= bg.activity) continue;
        StreamRng q(stream_key(spec_.seed, kPortStream, w, i));
        const auto src = kSourceBase + static_cast<std::uint32_t>(i);
        for (auto j = graph_->offsets[i]; j < graph_->offsets[i + 1]; ++j) {
            SynthFlow f;
            f.src = src;
            f.dst = kDestinationBase + graph_->dests[j];
            f.packets = 1 + geo(r);
            f.src_port = ephemeral_port(q);
            f.dst_port = kServicePorts[q() % std::size(kServicePorts)];
            f.bytes = f.packets * (40 + q() % 1461);
            out.push_back(f);
        }
    }
    injected_flows(w, out);
    const std::int64_t start = window_start_us(w);
    const auto n = static_cast<std::int64_t>(out.size());
    for (std::int64_t i = 0; i < n; ++i) out[i].ts_us = start + i * spec_.window_len_us / n;
}

TrafficMatrix ScenarioGenerator::window_matrix(std::size_t w, const IdTable& ids) const {
    if (w >= spec_.windows) throw RangeError("window " + std::to_string(w) + " beyond scenario");
    if (ids.gen_ != this) throw ParameterError("id table belongs to another generator");
    const auto& bg = spec_.background;
    const Geometric geo(bg.packets_per_link);
    // sources in id order, each row in id order: entries come out sorted
    std::vector<MatrixEntry> es;
    es.reserve(static_cast<std::size_t>(static_cast<double>(graph_->links()) * bg.activity * 1.05) + 64);
    std::vector<std::uint64_t> pk;
    for (std::uint32_t i : ids.source_order_) {
        StreamRng r(stream_key(spec_.seed, kActivityStream, w, i));
        if (unit_draw(r) >= bg.activity) continue;
        const auto lo = graph_->offsets[i], hi = graph_->offsets[i + 1];
        pk.resize(hi - lo);
        for (auto& p : pk) p = 1 + geo(r);
        const NodeId src = ids.sources_[i];
        for (auto j = lo; j < hi; ++j) es.push_back({src, ids.row_ids_[j], pk[ids.row_order_[j]]});
    }
    const auto n_bg = es.size();
    TrafficMatrix m = TrafficMatrix::from_entries(window_start_us(w), spec_.window_len_us, std::move(es), n_bg);

    std::vector<SynthFlow> inj;
    injected_flows(w, inj);
    if (inj.empty()) return m;
    std::vector<MatrixEntry> extra;
    extra.reserve(inj.size());
    for (const auto& f : inj) extra.push_back({ids.id(f.src), ids.id(f.dst), f.packets});
    return merge(m, TrafficMatrix::from_entries(m.window_start_us(), m.window_len_us(), std::move(extra), inj.size()));
}

// --- ids --------------------------------------------------------------------

IdTable::IdTable(const ScenarioGenerator& gen, const Anonymizer& anon) : gen_(&gen), anon_(&anon) {
    const auto& bg = gen.spec().background;
    sources_.reserve(bg.n_sources);
    for (std::uint64_t i = 0; i < bg.n_sources; ++i) sources_.push_back(anon.ipv4(kSourceBase + static_cast<std::uint32_t>(i)));
    destinations_.reserve(bg.n_destinations);
    for (std::uint64_t i = 0; i < bg.n_destinations; ++i)
        destinations_.push_back(anon.ipv4(kDestinationBase + static_cast<std::uint32_t>(i)));
    actors_.reserve(gen.actor_count_);
    for (std::uint64_t i = 0; i < gen.actor_count_; ++i) actors_.push_back(anon.ipv4(kActorBase + static_cast<std::uint32_t>(i)));

    source_order_.resize(sources_.size());
    for (std::uint32_t i = 0; i < source_order_.size(); ++i) source_order_[i] = i;
    std::sort(source_order_.begin(), source_order_.end(),
              [&](std::uint32_t a, std::uint32_t b) { return sources_[a] < sources_[b]; });

    const auto& g = *gen.graph_;
    row_order_.resize(g.dests.size());
    for (std::size_t i = 0; i + 1 < g.offsets.size(); ++i) {
        const auto lo = g.offsets[i], hi = g.offsets[i + 1];
        for (auto j = lo; j < hi; ++j) row_order_[j] = j - lo;
        std::sort(row_order_.begin() + lo, row_order_.begin() + hi, [&](std::uint32_t a, std::uint32_t b) {
            return destinations_[g.dests[lo + a]] < destinations_[g.dests[lo + b]];
        });
    }
    row_ids_.resize(g.dests.size());
    for (std::size_t i = 0; i + 1 < g.offsets.size(); ++i)
        for (auto j = g.offsets[i]; j < g.offsets[i + 1]; ++j)
            row_ids_[j] = destinations_[g.dests[g.offsets[i] + row_order_[j]]];
}

NodeId IdTable::id(std::uint32_t addr) const {
    if (in_range(addr, kSourceBase, sources_.size())) return sources_[addr - kSourceBase];
    if (in_range(addr, kDestinationBase, destinations_.size())) return destinations_[addr - kDestinationBase];
    if (in_range(addr, kActorBase, actors_.size())) return actors_[addr - kActorBase];
    return anon_->ipv4(addr);
}

FlowRecord IdTable::record(const SynthFlow& f) const {
    FlowRecord r;
    r.ts_us = f.ts_us;
    r.src = id(f.src);
    r.dst = id(f.dst);
    r.src_port = f.src_port;
    r.dst_port = f.dst_port;
    r.packets = f.packets;
    r.bytes = f.bytes;
    return r;
}

// --- output -----------------------------------------------------------------

WriteStats write_scenario_outputs(const ScenarioGenerator& gen, std::ostream& flows, std::ostream& labels) {
    const auto& s = gen.spec();
    std::ostringstream prov;
    prov << "# netobs synth seed=" << s.seed << " windows=" << s.windows << " window_len_us=" << s.window_len_us
         << " scale_factor=" << s.scale_factor << '\n';
    flows << prov.str() << kFlowHeader << '\n';
    labels << prov.str() << "flow_index,label,injection_id\n";

    WriteStats st;
    std::vector<SynthFlow> buf;
    std::string line;
    for (std::size_t w = 0; w < gen.windows(); ++w) {
        gen.window_flows(w, buf);
        for (const auto& f : buf) {
            line.clear();
            line += std::to_string(f.ts_us);
            line += ',';
            line += ipv4_text(f.src);
            line += ',';
            line += ipv4_text(f.dst);
            line += ',';
            line += std::to_string(f.src_port);
            line += ',';
            line += std::to_string(f.dst_port);
            line += ',';
            line += std::to_string(f.packets);
            line += ',';
            line += std::to_string(f.bytes);
            line += '\n';
            flows << line;
            if (f.injection >= 0) {
                const auto& inj = s.injections[static_cast<std::size_t>(f.injection)];
                labels << st.flows << ',' << to_string(inj.kind) << ','
                       << (inj.id.empty() ? "inj" + std::to_string(f.injection) : inj.id) << '\n';
                ++st.labeled;
                st.injected_packets += f.packets;
            }
            st.packets += f.packets;
            ++st.flows;
        }
    }
    return st;
}

// --- scenario file ----------------------------------------------------------

namespace {

template <typename T>
T parse_int(std::string_view key, std::string_view v) {
    T out{};
    const std::string s(v);
    std::size_t used = 0;
    try {
        if constexpr (std::is_signed_v<T>)
            out = static_cast<T>(std::stoll(s, &used));
        else {
            if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
            out = static_cast<T>(std::stoull(s, &used));
        }
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ParseError("scenario: bad integer for " + std::string(key) + ": '" + s + "'");
    return out;
}

double parse_real(std::string_view key, std::string_view v) {
    const std::string s(v);
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(s, &used);
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ParseError("scenario: bad number for " + std::string(key) + ": '" + s + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ParseError("scenario: " + std::string(key) + " must be true or false");
}

std::uint32_t parse_ipv4(std::string_view key, std::string_view v) {
    const std::string s(v);
    in_addr a{};
    if (inet_pton(AF_INET, s.c_str(), &a) != 1)
        throw ParseError("scenario: " + std::string(key) + " must be an IPv4 address, got '" + s + "'");
    return ntohl(a.s_addr);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void set_scenario_key(ScenarioSpec& s, std::string_view section, std::string_view key, std::string_view value) {
    const std::string full = std::string(section) + "." + std::string(key);
    if (section == "scenario") {
        if (key == "seed") s.seed = parse_int<std::uint64_t>(full, value);
        else if (key == "windows") s.windows = parse_int<std::size_t>(full, value);
        else if (key == "window_len_us") s.window_len_us = parse_int<std::int64_t>(full, value);
        else if (key == "start_us") s.start_us = parse_int<std::int64_t>(full, value);
        else if (key == "scale_factor") s.scale_factor = parse_real(full, value);
        else if (key == "packet_budget") s.packet_budget = parse_int<std::uint64_t>(full, value);
        else throw ParseError("scenario: unknown key " + full);
        return;
    }
    if (section == "background") {
        auto& b = s.background;
        if (key == "n_sources") b.n_sources = parse_int<std::uint64_t>(full, value);
        else if (key == "n_destinations") b.n_destinations = parse_int<std::uint64_t>(full, value);
        else if (key == "alpha") b.alpha = parse_real(full, value);
        else if (key == "delta") b.delta = parse_real(full, value);
        else if (key == "d_max") b.d_max = parse_int<std::uint64_t>(full, value);
        else if (key == "activity") b.activity = parse_real(full, value);
        else if (key == "packets_per_link") b.packets_per_link = parse_real(full, value);
        else throw ParseError("scenario: unknown key " + full);
        return;
    }
    if (section == "injection") {
        if (s.injections.empty()) throw ParseError("scenario: injection key before any [injection] section");
        auto& j = s.injections.back();
        if (key == "kind") j.kind = parse_injection_kind(value);
        else if (key == "id") j.id = std::string(value);
        else if (key == "start_window") j.start_window = parse_int<std::size_t>(full, value);
        else if (key == "duration_windows") j.duration_windows = parse_int<std::size_t>(full, value);
        else if (key == "n_clients") j.n_clients = parse_int<std::uint64_t>(full, value);
        else if (key == "n_cc") j.n_cc = parse_int<std::uint64_t>(full, value);
        else if (key == "period_windows") j.period_windows = parse_int<std::size_t>(full, value);
        else if (key == "phase") j.phase = parse_int<std::size_t>(full, value);
        else if (key == "rotate_clients") j.rotate_clients = parse_bool(full, value);
        else if (key == "n_sources") j.n_sources = parse_int<std::uint64_t>(full, value);
        else if (key == "target") j.target = parse_ipv4(full, value);
        else if (key == "packets_per_window") j.packets_per_window = parse_int<std::uint64_t>(full, value);
        else if (key == "packets_per_link") j.packets_per_link = parse_int<std::uint64_t>(full, value);
        else if (key == "n_targets") j.n_targets = parse_int<std::uint64_t>(full, value);
        else if (key == "n_ports") j.n_ports = parse_int<std::uint64_t>(full, value);
        else if (key == "packets_per_target") j.packets_per_target = parse_int<std::uint64_t>(full, value);
        else if (key == "jitter") j.jitter = parse_bool(full, value);
        else throw ParseError("scenario: unknown key " + full);
        return;
    }
    throw ParseError("scenario: unknown section [" + std::string(section) + "]");
}

ScenarioSpec read_scenario(std::istream& in) {
    ScenarioSpec s;
    std::string line, section;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        line = line.substr(first);
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("scenario line " + std::to_string(ln) + ": unterminated section");
            section = line.substr(1, line.size() - 2);
            if (section == "injection") s.injections.emplace_back();
            else if (section != "scenario" && section != "background")
                throw ParseError("scenario line " + std::to_string(ln) + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || section.empty())
            throw ParseError("scenario line " + std::to_string(ln) + ": expected key=value inside a section");
        try {
            set_scenario_key(s, section, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ParseError& e) {
            throw ParseError("scenario line " + std::to_string(ln) + ": " + e.what());
        }
    }
    return s;
}

ScenarioSpec read_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file '" + path + "'");
    return read_scenario(in);
}

void write_scenario(std::ostream& out, const ScenarioSpec& s) {
    out << "[scenario]\nseed=" << s.seed << "\nwindows=" << s.windows << "\nwindow_len_us=" << s.window_len_us
        << "\nstart_us=" << s.start_us << "\nscale_factor=" << fmt(s.scale_factor)
        << "\npacket_budget=" << s.packet_budget << "\n\n";
    const auto& b = s.background;
    out << "[background]\nn_sources=" << b.n_sources << "\nn_destinations=" << b.n_destinations
        << "\nalpha=" << fmt(b.alpha) << "\ndelta=" << fmt(b.delta) << "\nd_max=" << b.d_max
        << "\nactivity=" << fmt(b.activity) << "\npackets_per_link=" << fmt(b.packets_per_link) << '\n';
    for (const auto& j : s.injections) {
        out << "\n[injection]\nkind=" << to_string(j.kind) << "\nid=" << j.id << "\nstart_window=" << j.start_window
            << "\nduration_windows=" << j.duration_windows << "\nn_clients=" << j.n_clients << "\nn_cc=" << j.n_cc
            << "\nperiod_windows=" << j.period_windows << "\nphase=" << j.phase
            << "\nrotate_clients=" << (j.rotate_clients ? "true" : "false") << "\nn_sources=" << j.n_sources;
        if (j.target) out << "\ntarget=" << ipv4_text(*j.target);
        out << "\npackets_per_window=" << j.packets_per_window << "\npackets_per_link=" << j.packets_per_link
            << "\nn_targets=" << j.n_targets << "\nn_ports=" << j.n_ports
            << "\npackets_per_target=" << j.packets_per_target << "\njitter=" << (j.jitter ? "true" : "false")
            << '\n';
    }
}

}  // namespace netobs::synth
