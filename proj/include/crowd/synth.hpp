#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowd/dataset.hpp"
#include "crowd/parallel.hpp"

namespace crowd {

// Log-normal answer distribution for one question.
struct QuestionScale {
    double mu = 0.0;     // log of the median
    double sigma = 1.0;  // log-space spread
};

// Chooses sigma so that the MAD of the log-normal equals `mad`: solves
// P(|X - median| <= mad) = 1/2 by bisection.
QuestionScale calibrate(double median, double mad);

struct CrowdModel {
    std::vector<Question> questions;
    std::vector<QuestionScale> scales;  // aligned with questions
    double rho = 0.2;                   // share of log variance common to a group
    int group_size = 5;

    // Calibrates every question from its median_i1 / mad_i1.
    static CrowdModel from_questions(std::vector<Question> qs, double rho);
};

enum class Anchor { Geometric, Arithmetic };

struct DeliberationModel {
    double beta = 0.0;   // pull of the consensus towards the truth
    double gamma = 0.0;  // pull of revised answers towards the consensus
    double delta = 0.0;  // push of the consensus away from the crowd centre
    double noise_c = 0.0;
    double noise_r = 0.0;
    // Centre used by delta: mean log answer, or log of the outlier-filtered arithmetic mean.
    Anchor anchor = Anchor::Geometric;
    // Fraction of s^2/2 subtracted from each log-space deviate: 0 keeps the
    // answer's median, 1 keeps its mean.
    double noise_shift = 0.0;

    bool is_control() const { return beta == 0.0 && gamma == 0.0 && delta == 0.0; }
};

struct SynthConfig {
    double rho = 0.2;
    DeliberationModel deliberation;
};

SynthConfig load_config(const std::string& path);
SynthConfig parse_config(const std::string& json_text);
std::string config_json(const SynthConfig& cfg);

// i1 answers only; ids are g0001, g0001_p1, ...
Dataset generate_crowd(const CrowdModel& model, int n_groups, std::uint64_t seed, const Exec& exec = {});

// consensus = exp(A + beta (log T - A) + delta (A - log grand_mean) + noise), A = log median(x)
double deliberate(const std::vector<double>& initial, double truth, const DeliberationModel& model,
                  double grand_mean, std::uint64_t seed);

// r = exp(log x + gamma (log consensus - log x) + noise)
double revise(double initial, double consensus, const DeliberationModel& model, std::uint64_t seed);

// Full three-stage dataset. Discussed questions get a moderator-recorded
// consensus and revised answers; undiscussed questions get revised answers
// with noise only.
Dataset simulate(const CrowdModel& model, const DeliberationModel& delib, int n_groups, std::uint64_t seed,
                 const Exec& exec = {});

}  // namespace crowd
