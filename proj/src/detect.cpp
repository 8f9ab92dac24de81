#include "netobs/detect.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "netobs/error.hpp"

namespace netobs {

namespace {

// Normal quantile of p ~ 1e-300; stands in for z when a tail underflows.
constexpr double kMaxZ = 37.0;

constexpr double kRecurringQuorum = 0.8;
constexpr double kReferenceRatio = 0.2;

double z_from_upper_tail(double p) {
    if (!(p > 0.0)) return kMaxZ;
    if (p >= 1.0) return -kMaxZ;
    static const boost::math::normal_distribution<double> n01;
    return std::min(kMaxZ, boost::math::quantile(boost::math::complement(n01, p)));
}

double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    const auto mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    double m = xs[mid];
    if (xs.size() % 2 == 0) {
        m = (m + *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid))) / 2.0;
    }
    return m;
}

/// Windows whose count stands above a robust level: median + 3 * max(1.4826 * MAD, 1).
std::vector<std::size_t> robust_excess(std::span<const double> xs, std::size_t first_index) {
    std::vector<double> v(xs.begin(), xs.end());
    const double med = median(v);
    for (auto& x : v) x = std::abs(x - med);
    const double spread = std::max(1.4826 * median(v), 1.0);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (xs[i] > med + 3.0 * spread) out.push_back(first_index + i);
    return out;
}

void check_series(std::span<const DegreeDistribution> series) {
    for (const auto& d : series) {
        d.validate();
        if (d.direction != series.front().direction)
            throw BinningMismatchError("window series mixes fan_out and fan_in distributions");
        if (d.window_len_us != series.front().window_len_us)
            throw BinningMismatchError("window series mixes window lengths");
    }
}

}  // namespace

std::string_view to_string(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::distribution: return "distribution";
        case AnomalyKind::variance: return "variance";
        case AnomalyKind::beacon: return "beacon";
    }
    return "?";
}

AnomalyKind parse_anomaly_kind(std::string_view text) {
    if (text == "distribution") return AnomalyKind::distribution;
    if (text == "variance") return AnomalyKind::variance;
    if (text == "beacon") return AnomalyKind::beacon;
    throw ParseError("unknown anomaly kind '" + std::string(text) + "'");
}

void DetectionConfig::validate() const {
    if (!(z_threshold > 0.0)) throw ParameterError("detect.z_threshold must be > 0");
    if (!(beacon_min_strength > 0.0 && beacon_min_strength <= 1.0))
        throw ParameterError("detect.beacon_min_strength must be in (0, 1]");
}

bool anomaly_order(const Anomaly& a, const Anomaly& b) {
    const auto bin_key = [](const Anomaly& x) { return x.bin ? *x.bin : bins::kMaxBins; };
    if (a.first_window != b.first_window) return a.first_window < b.first_window;
    if (bin_key(a) != bin_key(b)) return bin_key(a) < bin_key(b);
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.direction != b.direction) return a.direction < b.direction;
    return a.last_window < b.last_window;
}

// --- distribution -----------------------------------------------------------

std::vector<Anomaly> detect_distribution_anomaly(const DegreeDistribution& observed,
                                                 const PowerLawModel& model,
                                                 const DetectionConfig& cfg,
                                                 std::size_t window_index) {
    cfg.validate();
    observed.validate();
    if (!fit_acceptable(model))
        throw ParameterError("background model rejected (gof " + std::to_string(model.gof) +
                             " > " + std::to_string(kGofRejectThreshold) + ")");
    const auto expected = expected_bin_counts(model, observed.active_nodes);
    std::vector<Anomaly> out;
    for (std::size_t k = 0; k < observed.bin_count(); ++k) {
        const double c = static_cast<double>(observed.count(k));
        const double e = k < expected.size() ? expected[k] : 0.0;
        const double z = (c - e) / std::sqrt(std::max(e, 1.0));
        if (z >= cfg.z_threshold && observed.count(k) >= cfg.min_bin_population) {
            Anomaly a;
            a.kind = AnomalyKind::distribution;
            a.direction = observed.direction;
            a.first_window = a.last_window = window_index;
            a.bin = k;
            a.score = z;
            a.strength = e > 0.0 ? c / e : std::numeric_limits<double>::infinity();
            a.excess_windows = {window_index};
            out.push_back(std::move(a));
        }
    }
    return out;
}

std::vector<Anomaly> consolidate(std::vector<Anomaly> per_window) {
    std::sort(per_window.begin(), per_window.end(), [](const Anomaly& a, const Anomaly& b) {
        if (a.direction != b.direction) return a.direction < b.direction;
        if (a.bin != b.bin) return a.bin < b.bin;
        return a.first_window < b.first_window;
    });
    std::vector<Anomaly> out;
    for (auto& a : per_window) {
        if (!out.empty() && out.back().direction == a.direction && out.back().bin == a.bin &&
            out.back().kind == a.kind) {
            auto& acc = out.back();
            acc.first_window = std::min(acc.first_window, a.first_window);
            acc.last_window = std::max(acc.last_window, a.last_window);
            if (a.score > acc.score) {
                acc.score = a.score;
                acc.strength = a.strength;
            }
            acc.excess_windows.insert(acc.excess_windows.end(), a.excess_windows.begin(),
                                      a.excess_windows.end());
        } else {
            out.push_back(std::move(a));
        }
    }
    for (auto& a : out) {
        std::sort(a.excess_windows.begin(), a.excess_windows.end());
        a.excess_windows.erase(std::unique(a.excess_windows.begin(), a.excess_windows.end()),
                               a.excess_windows.end());
    }
    std::sort(out.begin(), out.end(), anomaly_order);
    return out;
}

// --- variance ---------------------------------------------------------------

std::vector<Anomaly> detect_variance_anomaly(std::span<const DegreeDistribution> series,
                                             const VarianceBaseline& baseline,
                                             const DetectionConfig& cfg,
                                             std::size_t first_index) {
    cfg.validate();
    if (series.size() < 2)
        throw InsufficientDataError("variance detection needs at least 2 windows, got " +
                                    std::to_string(series.size()));
    check_series(series);
    if (series.front().direction != baseline.direction)
        throw BinningMismatchError("window series direction " +
                                   std::string(to_string(series.front().direction)) +
                                   " does not match baseline " +
                                   std::string(to_string(baseline.direction)));
    if (series.front().window_len_us != baseline.window_len_us)
        throw BinningMismatchError("window length " + std::to_string(series.front().window_len_us) +
                                   " does not match baseline " +
                                   std::to_string(baseline.window_len_us));
    if (baseline.training_window_count < 2)
        throw InsufficientDataError("baseline trained on fewer than 2 windows");

    std::size_t nb = baseline.bins.size();
    for (const auto& d : series) nb = std::max(nb, d.bin_count());

    const double n = static_cast<double>(series.size());
    const double m = static_cast<double>(baseline.training_window_count);
    const boost::math::fisher_f_distribution<double> f_dist(n - 1.0, m - 1.0);

    std::vector<Anomaly> out;
    std::vector<double> xs(series.size());
    for (std::size_t k = 0; k < nb; ++k) {
        for (std::size_t i = 0; i < series.size(); ++i) xs[i] = static_cast<double>(series[i].count(k));
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double s2 = ss / (n - 1.0);
        const BinStats ref = baseline.at(k);
        if (std::max(ref.mean, mean) < static_cast<double>(cfg.min_bin_population)) continue;
        if (s2 <= 0.0) continue;

        double ratio, z;
        if (ref.var <= 0.0 || ref.mean <= 0.0) {
            // a bin that never moved (or was empty) in training now fluctuates
            ratio = std::numeric_limits<double>::infinity();
            z = kMaxZ;
        } else {
            const double rescale = ref.mean / mean;
            ratio = s2 * rescale * rescale / ref.var;
            z = z_from_upper_tail(boost::math::cdf(boost::math::complement(f_dist, ratio)));
        }
        if (z < cfg.z_threshold) continue;

        Anomaly a;
        a.kind = AnomalyKind::variance;
        a.direction = baseline.direction;
        a.first_window = first_index;
        a.last_window = first_index + series.size() - 1;
        a.bin = k;
        a.score = z;
        a.strength = ratio;
        a.excess_windows = robust_excess(xs, first_index);
        out.push_back(std::move(a));
    }
    return out;
}

// --- beacons ----------------------------------------------------------------

std::optional<Periodicity> autocorrelation_peak(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 6) return std::nullopt;
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
    std::vector<double> c(n);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = xs[i] - mean;
        denom += c[i] * c[i];
    }
    Periodicity best;
    // relative guard: a series that is constant up to rounding has no period
    if (denom <= 1e-12 * std::max(1.0, mean * mean) * static_cast<double>(n)) return best;
    const std::size_t top = n / 3;
    std::vector<double> r(top + 2, 0.0);
    for (std::size_t lag = 1; lag <= top + 1; ++lag) {
        double num = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) num += c[t] * c[t + lag];
        r[lag] = num / denom;
    }
    // Only local maxima count: a level shift or trend decays monotonically
    // and must not read as a period.
    for (std::size_t lag = 2; lag <= top; ++lag)
        if (r[lag] > r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] > best.strength) best = {lag, r[lag]};
    return best;
}

BeaconResult detect_beacons(std::span<const DegreeDistribution> series, const Anomaly& anomaly,
                            const DetectionConfig& cfg, std::size_t first_index) {
    cfg.validate();
    BeaconResult res;
    if (!anomaly.bin) {
        res.reason = "anomaly has no bin";
        return res;
    }
    if (anomaly.first_window < first_index || anomaly.last_window >= first_index + series.size() ||
        anomaly.last_window < anomaly.first_window)
        throw RangeError("anomaly windows [" + std::to_string(anomaly.first_window) + ", " +
                         std::to_string(anomaly.last_window) + "] not inside the series");
    const std::size_t lo = anomaly.first_window - first_index;
    const std::size_t n = anomaly.last_window - anomaly.first_window + 1;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = series[lo + i];
        if (d.direction != anomaly.direction)
            throw BinningMismatchError("beacon series direction does not match the anomaly");
        xs[i] = static_cast<double>(d.count(*anomaly.bin));
    }

    const auto peak = autocorrelation_peak(xs);
    if (!peak) {
        res.reason = "inconclusive: " + std::to_string(n) +
                     " windows cannot hold 3 periods of any lag >= 2";
        return res;
    }
    if (peak->lag == 0) {
        res.reason = "bin count is constant or aperiodic over the span";
        return res;
    }
    const double score = peak->strength * std::sqrt(static_cast<double>(n));
    if (peak->strength < cfg.beacon_min_strength || score < cfg.z_threshold) {
        res.reason = "autocorrelation peak " + std::to_string(peak->strength) + " at lag " +
                     std::to_string(peak->lag) + " below threshold";
        return res;
    }

    const std::size_t L = peak->lag;
    std::size_t phase = 0;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < L; ++p) {
        double s = 0.0;
        std::size_t cnt = 0;
        for (std::size_t t = p; t < n; t += L) {
            s += xs[t];
            ++cnt;
        }
        const double mean = s / static_cast<double>(cnt);
        if (mean > best_mean) {
            best_mean = mean;
            phase = p;
        }
    }

    Anomaly b;
    b.kind = AnomalyKind::beacon;
    b.direction = anomaly.direction;
    b.first_window = anomaly.first_window;
    b.last_window = anomaly.last_window;
    b.bin = anomaly.bin;
    b.score = score;
    b.period_windows = L;
    b.phase = phase;
    b.strength = peak->strength;
    for (std::size_t t = phase; t < n; t += L) b.excess_windows.push_back(anomaly.first_window + t);
    res.beacon = std::move(b);
    return res;
}

// --- implicated nodes -------------------------------------------------------

namespace {

using NodeSet = absl::flat_hash_set<NodeId>;

/// Nodes whose degree in one window falls in bin k, among `only` (all nodes when null).
std::vector<NodeId> bin_members(const TrafficMatrix& m, Direction dir, std::size_t k, const NodeSet* only) {
    std::vector<NodeId> out;
    if (dir == Direction::fan_out) {
        if (only) {
            for (NodeId n : *only)
                if (auto r = m.row(n); !r.empty() && bins::index_of(r.size()) == k) out.push_back(n);
            return out;
        }
        auto es = m.entries();
        for (std::size_t i = 0; i < es.size();) {
            std::size_t j = i;
            while (j < es.size() && es[j].src == es[i].src) ++j;
            if (bins::index_of(j - i) == k) out.push_back(es[i].src);
            i = j;
        }
        return out;
    }
    absl::flat_hash_map<NodeId, std::uint64_t> deg;
    for (const auto& e : m.entries())
        if (!only || only->contains(e.dst)) ++deg[e.dst];
    for (const auto& [n, d] : deg)
        if (bins::index_of(d) == k) out.push_back(n);
    return out;
}

template <typename Fn>
void for_each_link(const TrafficMatrix& m, Direction dir, const NodeSet& members, Fn&& fn) {
    if (dir == Direction::fan_out) {
        for (NodeId n : members)
            for (const auto& e : m.row(n)) fn(e.src, e.dst);
        return;
    }
    for (const auto& e : m.entries())
        if (members.contains(e.dst)) fn(e.dst, e.src);
}

std::vector<NodeId> sorted(const NodeSet& s) {
    std::vector<NodeId> v(s.begin(), s.end());
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

ImplicatedNodes implicated_nodes(std::span<const TrafficMatrix> windows, const Anomaly& anomaly) {
    ImplicatedNodes out;
    if (!anomaly.bin || anomaly.excess_windows.empty()) return out;
    const std::size_t k = *anomaly.bin;
    const Direction dir = anomaly.direction;
    for (auto w : anomaly.excess_windows)
        if (w >= windows.size())
            throw RangeError("anomaly window " + std::to_string(w) + " beyond the " +
                             std::to_string(windows.size()) + " supplied windows");

    absl::flat_hash_set<std::size_t> is_excess(anomaly.excess_windows.begin(),
                                               anomaly.excess_windows.end());
    const double n_ex = static_cast<double>(is_excess.size());

    // bin membership across the excess windows
    absl::flat_hash_map<NodeId, std::uint32_t> ex_hits;
    for (std::size_t w : is_excess)
        for (NodeId node : bin_members(windows[w], dir, k, nullptr)) ++ex_hits[node];
    if (ex_hits.empty()) return out;

    NodeSet union_members;
    for (const auto& [node, _] : ex_hits) union_members.insert(node);

    std::vector<std::size_t> ref_windows;
    for (std::size_t w = 0; w < windows.size(); ++w)
        if (!is_excess.contains(w)) ref_windows.push_back(w);

    NodeSet candidates;
    if (!ref_windows.empty()) {
        absl::flat_hash_map<NodeId, std::uint32_t> ref_hits;
        for (std::size_t w : ref_windows)
            for (NodeId node : bin_members(windows[w], dir, k, &union_members)) ++ref_hits[node];
        const double n_ref = static_cast<double>(ref_windows.size());
        for (const auto& [node, hits] : ex_hits) {
            const auto it = ref_hits.find(node);
            const double ref_rate = it == ref_hits.end() ? 0.0 : it->second / n_ref;
            if (ref_rate <= kReferenceRatio * (hits / n_ex)) candidates.insert(node);
        }
    } else {
        // No quiet windows to contrast with: look for counterparts shared by an
        // unusual number of bin members instead.
        absl::flat_hash_map<NodeId, NodeSet> linked_from;
        for (std::size_t w : is_excess)
            for_each_link(windows[w], dir, union_members,
                          [&](NodeId member, NodeId other) { linked_from[other].insert(member); });
        double s = 0.0, s2 = 0.0;
        for (const auto& [_, who] : linked_from) {
            s += static_cast<double>(who.size());
            s2 += static_cast<double>(who.size()) * static_cast<double>(who.size());
        }
        const double cnt = static_cast<double>(linked_from.size());
        const double mean = cnt > 0 ? s / cnt : 0.0;
        const double sd = cnt > 1 ? std::sqrt(std::max(0.0, (s2 - cnt * mean * mean) / (cnt - 1.0))) : 0.0;
        const double hot = std::max(10.0, mean + 5.0 * sd);
        for (const auto& [_, who] : linked_from)
            if (static_cast<double>(who.size()) >= hot) candidates.insert(who.begin(), who.end());
    }
    out.candidate_count = candidates.size();
    if (candidates.empty()) return out;

    NodeSet recurring;
    for (NodeId c : candidates)
        if (ex_hits[c] >= kRecurringQuorum * n_ex) recurring.insert(c);
    const NodeSet& chosen = recurring.empty() ? candidates : recurring;
    out.turnover = 1.0 - static_cast<double>(recurring.size()) / static_cast<double>(candidates.size());

    absl::flat_hash_map<NodeId, NodeSet> linked_from;
    for (std::size_t w : is_excess)
        for_each_link(windows[w], dir, chosen,
                      [&](NodeId member, NodeId other) { linked_from[other].insert(member); });
    NodeSet counterparts;
    const double need = kRecurringQuorum * static_cast<double>(chosen.size());
    for (const auto& [other, who] : linked_from)
        if (static_cast<double>(who.size()) >= need) counterparts.insert(other);

    auto members = sorted(chosen);
    auto others = sorted(counterparts);
    if (dir == Direction::fan_out) {
        out.sources = std::move(members);
        out.destinations = std::move(others);
    } else {
        out.sources = std::move(others);
        out.destinations = std::move(members);
    }
    return out;
}

}  // namespace netobs
