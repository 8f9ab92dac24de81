#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netobs/baseline.hpp"
#include "netobs/degree.hpp"
#include "netobs/power_law.hpp"
#include "netobs/traffic_matrix.hpp"

namespace netobs {

enum class AnomalyKind { distribution, variance, beacon };

std::string_view to_string(AnomalyKind k);
AnomalyKind parse_anomaly_kind(std::string_view text);

struct DetectionConfig {
    double z_threshold = 3.0;
    double beacon_min_strength = 0.5;
    std::uint64_t min_bin_population = 10;

    /// Throws ParameterError on z_threshold <= 0 or strength outside (0, 1].
    void validate() const;
};

/// A deviation from the background, localized to a degree bin and a window span.
struct Anomaly {
    AnomalyKind kind = AnomalyKind::distribution;
    Direction direction = Direction::fan_out;
    std::size_t first_window = 0;
    std::size_t last_window = 0;
    std::optional<std::size_t> bin;  // log2 bin index
    double score = 0.0;              // z units
    std::optional<std::size_t> period_windows;  // beacons only
    std::size_t phase = 0;                      // first spike offset mod period (beacons)
    double strength = 0.0;  // variance ratio or autocorrelation peak
    /// Windows where the bin sits above its usual level; member extraction uses these.
    std::vector<std::size_t> excess_windows;
    std::vector<NodeId> sources;
    std::vector<NodeId> destinations;
    /// 1 - recurring / candidate members; 0 when the same nodes recur in every spike.
    double turnover = 0.0;

    friend bool operator==(const Anomaly&, const Anomaly&) = default;
};

/// (first_window, bin, kind) ordering used for every anomaly listing.
bool anomaly_order(const Anomaly& a, const Anomaly& b);

/// Per-bin Poisson z-score of one window against the model's expected counts.
/// The model must pass fit_acceptable(); a bad fit raises ParameterError.
std::vector<Anomaly> detect_distribution_anomaly(const DegreeDistribution& observed,
                                                 const PowerLawModel& model,
                                                 const DetectionConfig& cfg,
                                                 std::size_t window_index = 0);

/// Folds per-window distribution anomalies into one anomaly per (direction, bin):
/// span from first to last flagged window, score = max, flagged windows listed.
std::vector<Anomaly> consolidate(std::vector<Anomaly> per_window);

/// Compares each bin's variance over the series with the trained baseline.
///
/// The series variance is first rescaled by (baseline mean / series mean)^2 so a
/// bin that is merely busier (or quieter) at a constant level does not count as
/// more variable; the ratio is referred to F(n-1, m-1) and reported in z units.
/// series[i] is window first_index + i. Throws InsufficientDataError below 2
/// windows and BinningMismatchError when directions or window lengths differ.
std::vector<Anomaly> detect_variance_anomaly(std::span<const DegreeDistribution> series,
                                             const VarianceBaseline& baseline,
                                             const DetectionConfig& cfg,
                                             std::size_t first_index = 0);

struct BeaconResult {
    std::optional<Anomaly> beacon;
    /// Why no beacon was returned ("" when one was).
    std::string reason;
};

/// Autocorrelation of the anomaly bin's count series over the anomaly's window
/// span, lags 2..n/3. series[i] is window first_index + i.
BeaconResult detect_beacons(std::span<const DegreeDistribution> series, const Anomaly& anomaly,
                            const DetectionConfig& cfg, std::size_t first_index = 0);

/// Highest local maximum of the mean-removed autocorrelation over lags 2..n/3.
/// nullopt below 6 points; lag 0 when the series is constant or has no such peak.
struct Periodicity {
    std::size_t lag = 0;
    double strength = 0.0;
};
std::optional<Periodicity> autocorrelation_peak(std::span<const double> xs);

struct ImplicatedNodes {
    std::vector<NodeId> sources;
    std::vector<NodeId> destinations;
    std::size_t candidate_count = 0;
    double turnover = 0.0;
};

/// Nodes responsible for the anomaly's bin excess.
///
/// Bin members in the excess windows that are rarely in the bin elsewhere are
/// candidates; those present in >= 80% of excess windows are reported when any
/// exist, otherwise the union (with turnover 1). Counterparts (destinations for
/// fan_out) are those linked from >= 80% of the reported members. windows[i] is
/// window index i.
ImplicatedNodes implicated_nodes(std::span<const TrafficMatrix> windows, const Anomaly& anomaly);

}  // namespace netobs
