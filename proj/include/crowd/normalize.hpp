#pragma once

#include <span>
#include <vector>

namespace crowd {

struct NormParams {
    double median = 0.0;
    double mad = 1.0;

    bool operator==(const NormParams&) const = default;
};

inline constexpr double kOutlierThreshold = 15.0;

// Even counts use the mean of the two middle values.
double median(std::span<const double> xs);

// Throws EmptyInput, or DegenerateDispersion when the MAD is zero.
NormParams fit_params(std::span<const double> responses);

inline double normalize_value(double x, const NormParams& p) { return (x - p.median) / p.mad; }

// Keeps |n| <= threshold (a value exactly at the threshold survives), input order preserved.
std::vector<double> reject_outliers(std::span<const double> responses, const NormParams& p,
                                    double threshold = kOutlierThreshold);

inline bool within_threshold(double x, const NormParams& p, double threshold = kOutlierThreshold) {
    double n = normalize_value(x, p);
    return n <= threshold && n >= -threshold;
}

}  // namespace crowd
