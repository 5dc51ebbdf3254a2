#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crowd/panel.hpp"
#include "crowd/parallel.hpp"
#include "crowd/stats.hpp"

namespace crowd {

enum class SamplingMode { WithinGroups, BetweenGroups };

const char* mode_name(SamplingMode m) noexcept;  // "within", "between"
SamplingMode parse_mode(const std::string& s);

// |mean(estimates) - truth| / mad
double crowd_error(std::span<const double> estimates, double truth, const NormParams& p);

struct CurvePoint {
    int n = 0;
    double mean_error = 0.0;
    double sem = 0.0;
    std::vector<double> samples;  // one error per iteration
};

struct ErrorCurve {
    std::string question;
    Stage stage = Stage::I1;
    SamplingMode mode = SamplingMode::WithinGroups;
    std::vector<CurvePoint> points;
    int iterations = 0;
    std::uint64_t seed = 0;
};

struct CurveOptions {
    int iterations = 1000;
    std::uint64_t seed = 0;
    int combinations = 1000;  // cap on combinations averaged per iteration
    Exec exec{};
};

// Each iteration draws a pool of min(n, G) groups without replacement.
// Within-groups: averages the error over combinations of m = n/5 pool groups
// (every combination when there are at most `combinations`, otherwise
// cyclic windows over random orderings of the pool, which use each pool group
// equally often). Stage C averages the m consensus values instead.
// Between-groups: averages over `combinations` draws of one random member from
// each of the n pool groups.
// The random stream depends on question, mode and n but not on stage, so i1,
// i2 and c curves are computed on identical subsamples.
ErrorCurve error_curve(const QuestionPanel& panel, Stage stage, SamplingMode mode, const std::vector<int>& ns,
                       const CurveOptions& opt);

// Averages curves point by point (and iteration by iteration); the curves must
// share mode, stage, iteration count and number of points.
ErrorCurve pooled_curve(const std::vector<ErrorCurve>& curves);

struct Comparison {
    int m = 0;
    int n_reference = 0;
    double consensus_error = 0.0;
    double crowd_error = 0.0;
    std::vector<double> consensus_samples;
    std::vector<double> crowd_samples;

    PairedSamples pairs() const;
    int consensus_wins() const;  // iterations with strictly lower consensus error
};

struct CompareOptions {
    int iterations = 1000;
    std::uint64_t seed = 0;
    Exec exec{};
};

// Per iteration: error of the mean of m consensus values against the error of
// the mean of n_reference i1 answers that contain the same m groups' members,
// topped up with other individuals drawn at random. n_reference at or above
// the crowd size uses the whole crowd.
Comparison consensus_vs_crowd(const QuestionPanel& panel, int m, int n_reference, const CompareOptions& opt);
Comparison pooled_comparison(const std::vector<Comparison>& parts);

}  // namespace crowd
