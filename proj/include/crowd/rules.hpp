#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowd/panel.hpp"
#include "crowd/parallel.hpp"

namespace crowd {

enum class RuleKind { ResistanceWeighted, ConfidenceWeighted, Expert, Median, SoftMedian, Mean, RobustAverage };

struct AggregationRule {
    RuleKind kind = RuleKind::Mean;
    double epsilon = 1.0;  // ResistanceWeighted
    double k = 4.0;        // RobustAverage, in decades
    // Expert only: break confidence ties at random instead of by lowest index.
    bool random_tiebreak = false;
    std::uint64_t tiebreak_seed = 0;
};

const char* rule_name(RuleKind k) noexcept;
RuleKind parse_rule(const std::string& name);
std::vector<AggregationRule> default_rules();  // the seven, epsilon = 1, k = 4

struct GroupInputs {
    std::vector<double> initial;
    std::vector<double> revised;   // ResistanceWeighted only
    std::vector<int> confidence;   // ConfidenceWeighted and Expert
};

// Weights over members in input order; nonnegative, summing to one.
std::vector<double> rule_weights(const AggregationRule& rule, const GroupInputs& in);
double apply_rule(const AggregationRule& rule, const GroupInputs& in);

GroupInputs group_inputs(const GroupData& g);

struct RuleScore {
    std::string name;
    double mean_error = 0.0;
    double sem = 0.0;
    std::vector<double> samples;  // per-iteration error, averaged over questions
};

struct RuleBenchOptions {
    int sample_size = 100;
    int iterations = 1000;
    std::uint64_t seed = 0;
    std::vector<AggregationRule> rules = default_rules();
    Exec exec{};
};

struct RuleBenchResult {
    RuleScore consensus;
    std::vector<RuleScore> rules;
};

// Each iteration draws sample_size groups with replacement per question and
// compares the error of the mean empirical consensus with the error of the
// mean of each simulated rule's output.
RuleBenchResult rule_benchmark(const std::vector<QuestionPanel>& panels, const RuleBenchOptions& opt);

}  // namespace crowd
