#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "crowd/normalize.hpp"
#include "crowd/parallel.hpp"

namespace crowd {

double mean_of(std::span<const double> xs);
double sem_of(std::span<const double> xs);             // sample sd / sqrt(n); 0 for n < 2
double sample_variance(std::span<const double> xs);    // n - 1 denominator, InsufficientData for n < 2
std::vector<double> average_ranks(std::span<const double> xs);  // 1-based, ties averaged
double normal_cdf(double z);

inline double signed_bias(double estimate, double truth, const NormParams& p) { return (estimate - truth) / p.mad; }
double distance(double a, double b, const NormParams& p);

double variance_within(std::span<const double> normalized);
double variance_between(std::span<const double> group_means);

using PairedSamples = std::vector<std::pair<double, double>>;

enum class WilcoxonMode { Auto, Exact, NormalApprox };

struct WilcoxonResult {
    double statistic = 0.0;  // W+, rank sum of positive a - b
    double z = 0.0;
    double p_two_sided = 1.0;
    double p_less = 1.0;     // alternative: a tends to be smaller than b
    double p_greater = 1.0;
    int n = 0;               // nonzero differences used
    bool exact = false;
};

inline constexpr int kWilcoxonExactMax = 20;

// Zero differences are dropped, tied |d| share averaged ranks. Exact mode
// counts all 2^n signings (n <= 20); the normal approximation applies a tie
// correction to the variance and a 0.5 continuity correction.
WilcoxonResult wilcoxon_signed_rank(const PairedSamples& samples, WilcoxonMode mode = WilcoxonMode::Auto,
                                    bool continuity = true);
WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences, WilcoxonMode mode = WilcoxonMode::Auto,
                                    bool continuity = true);

struct HomogeneityResult {
    double statistic = 0.0;  // sum of squared ranks for sample a
    double expected = 0.0;   // its mean under exchangeability; above it, a is more spread
    double p = 1.0;          // two-sided permutation p-value
    int permutations = 0;
};

inline constexpr int kDefaultPermutations = 10000;

// Conover squared-ranks test on absolute deviations from each sample's mean.
HomogeneityResult squared_rank_homogeneity(std::span<const double> a, std::span<const double> b,
                                           std::uint64_t seed, int permutations = kDefaultPermutations,
                                           const Exec& exec = {});

double error_reduction(double err_before, double err_after);

struct CorrelationResult {
    double rho = 0.0;
    double p_two_sided = 1.0;
    double p_greater = 1.0;
};

// Spearman rank correlation; p from the full permutation distribution for
// n <= 9, else from a seeded Monte Carlo of 100000 permutations.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y, std::uint64_t seed = 0);

struct KsResult {
    double d = 0.0;
    double p = 1.0;
};

// One-sample Kolmogorov-Smirnov test against Uniform(0, 1).
KsResult ks_uniform(std::span<const double> xs);

}  // namespace crowd
