#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "netobs/degree.hpp"

namespace netobs {

/// Discrete background model p(d) = norm / (d + delta)^alpha on [1, d_max].
struct PowerLawModel {
    double alpha = 1.0;
    double delta = 0.0;
    double norm = 1.0;
    std::uint64_t d_max = 1;
    std::uint64_t sample_count = 0;
    /// Kolmogorov-Smirnov distance between the fitted and empirical CDFs.
    double gof = 0.0;

    friend bool operator==(const PowerLawModel&, const PowerLawModel&) = default;
};

/// Fits with a KS distance above this are flagged poor.
inline constexpr double kGofRejectThreshold = 0.05;

inline bool fit_acceptable(const PowerLawModel& m, double threshold = kGofRejectThreshold) {
    return m.gof <= threshold;
}

/// A normalized model with the given shape (sample_count and gof zero).
PowerLawModel make_power_law(double alpha, double delta, std::uint64_t d_max);

struct FitOptions {
    double alpha_lo = 0.5, alpha_hi = 4.0;
    double delta_lo = 0.0, delta_hi = 10.0;
    double step = 0.1;
    std::size_t min_samples = 100;
    std::size_t min_distinct = 3;
};

/// Discrete maximum likelihood over a grid, then golden-section refinement.
/// Throws InsufficientDataError below min_samples and
/// DegenerateDistributionError with fewer than min_distinct degrees.
PowerLawModel fit_power_law(std::span<const std::uint64_t> degrees, const FitOptions& opts = {});

/// Same estimator on binned counts (the likelihood of each bin's mass).
PowerLawModel fit_power_law(const DegreeDistribution& dist, const FitOptions& opts = {});

/// norm / (d + delta)^alpha; RangeError outside [1, d_max].
double model_pdf(const PowerLawModel& m, std::uint64_t d);

/// P(D <= d), clamped to [0, 1] outside the support.
double model_cdf(const PowerLawModel& m, std::uint64_t d);

/// active_nodes times the model mass of each log2 bin, up to the bin of d_max.
std::vector<double> expected_bin_counts(const PowerLawModel& m, std::uint64_t active_nodes);

/// sum_{d=lo}^{hi} (d + delta)^-alpha, exact for short ranges and
/// Euler-Maclaurin for long tails.
double power_sum(double alpha, double delta, std::uint64_t lo, std::uint64_t hi);

void write_model(std::ostream& out, const PowerLawModel& m);
PowerLawModel read_model(std::istream& in);
void write_model_file(const std::string& path, const PowerLawModel& m);
PowerLawModel read_model_file(const std::string& path);

}  // namespace netobs
