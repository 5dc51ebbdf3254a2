#include "crowd/figures.hpp"

#include <cmath>

#include "crowd/error.hpp"

namespace crowd {

Figure2 figure2(const std::vector<QuestionPanel>& panels, std::uint64_t seed, int permutations, const Exec& exec) {
    Figure2 fig;
    PairedSamples dist, within;
    std::vector<double> between1, between2;
    double d_c = 0.0, d_m = 0.0;

    for (const auto& p : panels) {
        if (!p.question.discussed) continue;
        if (p.groups.size() < 2) throw Error(Errc::InsufficientData, "too few groups for " + p.question.code);
        const double T = p.question.truth;
        BiasRow row;
        row.question = p.question.code;
        row.groups = static_cast<int>(p.groups.size());
        PairedSamples bias;
        std::vector<double> g1, g2;
        for (const auto& g : p.groups) {
            const double m1 = g.mean(Stage::I1);
            const double bc = signed_bias(g.consensus, T, p.params);
            const double bg = signed_bias(m1, T, p.params);
            bias.emplace_back(bc, bg);
            row.consensus_bias += bc;
            row.group_mean_bias += bg;

            std::vector<double> n1, n2;
            for (std::size_t i = 0; i < 5; ++i) {
                n1.push_back(normalize_value(g.i1[i], p.params));
                n2.push_back(normalize_value(g.i2[i], p.params));
                const double a = distance(g.i2[i], g.consensus, p.params);
                const double b = distance(g.i2[i], m1, p.params);
                dist.emplace_back(a, b);
                d_c += a;
                d_m += b;
            }
            within.emplace_back(variance_within(n2), variance_within(n1));
            g1.push_back(mean_of(n1));
            g2.push_back(mean_of(n2));
        }
        row.consensus_bias /= static_cast<double>(p.groups.size());
        row.group_mean_bias /= static_cast<double>(p.groups.size());
        row.test = wilcoxon_signed_rank(bias);
        fig.bias.push_back(row);

        const double c1 = mean_of(g1), c2 = mean_of(g2);
        for (double v : g1) between1.push_back(v - c1);
        for (double v : g2) between2.push_back(v - c2);
    }
    if (fig.bias.empty()) throw Error(Errc::InsufficientData, "no discussed questions");

    fig.distance_to_consensus = d_c / static_cast<double>(dist.size());
    fig.distance_to_mean = d_m / static_cast<double>(dist.size());
    fig.distance_test = wilcoxon_signed_rank(dist);

    double w2 = 0.0, w1 = 0.0;
    for (const auto& [a, b] : within) w2 += a, w1 += b;
    fig.within = {w1 / static_cast<double>(within.size()), w2 / static_cast<double>(within.size())};
    fig.within_test = wilcoxon_signed_rank(within);

    fig.between = {variance_between(between1), variance_between(between2)};
    fig.between_test = squared_rank_homogeneity(between2, between1, seed, permutations, exec);
    return fig;
}

std::vector<ReductionRow> reduction_table(const std::vector<QuestionPanel>& panels, const std::vector<int>& ns,
                                          const CurveOptions& opt) {
    std::vector<ErrorCurve> c1, c2;
    for (const auto& p : panels) {
        c1.push_back(error_curve(p, Stage::I1, SamplingMode::WithinGroups, ns, opt));
        c2.push_back(error_curve(p, Stage::I2, SamplingMode::WithinGroups, ns, opt));
    }
    const auto a = pooled_curve(c1);
    const auto b = pooled_curve(c2);
    std::vector<ReductionRow> rows;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        ReductionRow r;
        r.n = ns[i];
        r.error_i1 = a.points[i].mean_error;
        r.error_i2 = b.points[i].mean_error;
        r.reduction = error_reduction(r.error_i1, r.error_i2);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace crowd
