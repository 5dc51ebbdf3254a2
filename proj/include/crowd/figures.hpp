#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowd/panel.hpp"
#include "crowd/resample.hpp"
#include "crowd/stats.hpp"

namespace crowd {

struct BiasRow {
    std::string question;
    int groups = 0;
    double consensus_bias = 0.0;   // mean signed bias of consensus values
    double group_mean_bias = 0.0;  // mean signed bias of group i1 means
    WilcoxonResult test;           // paired, consensus vs group mean
};

struct VarianceComparison {
    double i1 = 0.0;
    double i2 = 0.0;
};

struct Figure2 {
    std::vector<BiasRow> bias;
    // mean distance of revised answers to the consensus and to the group's i1 mean
    double distance_to_consensus = 0.0;
    double distance_to_mean = 0.0;
    WilcoxonResult distance_test;
    VarianceComparison within;  // mean within-group variance of normalized answers
    WilcoxonResult within_test;
    VarianceComparison between;  // variance of mean-centred normalized group means, pooled
    HomogeneityResult between_test;
};

// All statistics over the panels of discussed questions.
Figure2 figure2(const std::vector<QuestionPanel>& panels, std::uint64_t seed,
                int permutations = kDefaultPermutations, const Exec& exec = {});

struct ReductionRow {
    int n = 0;
    double error_i1 = 0.0;
    double error_i2 = 0.0;
    double reduction = 0.0;  // percent
};

// Pooled within-groups i1 and i2 curves on shared subsamples, and their percent reduction.
std::vector<ReductionRow> reduction_table(const std::vector<QuestionPanel>& panels, const std::vector<int>& ns,
                                          const CurveOptions& opt);

}  // namespace crowd
