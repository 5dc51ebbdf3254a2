#include "crowd/rules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crowd/error.hpp"
#include "crowd/random.hpp"
#include "crowd/stats.hpp"

namespace crowd {

const char* rule_name(RuleKind k) noexcept {
    switch (k) {
        case RuleKind::ResistanceWeighted: return "resistance_weighted";
        case RuleKind::ConfidenceWeighted: return "confidence_weighted";
        case RuleKind::Expert: return "expert";
        case RuleKind::Median: return "median";
        case RuleKind::SoftMedian: return "soft_median";
        case RuleKind::Mean: return "mean";
        case RuleKind::RobustAverage: return "robust_average";
    }
    return "?";
}

RuleKind parse_rule(const std::string& name) {
    for (auto k : {RuleKind::ResistanceWeighted, RuleKind::ConfidenceWeighted, RuleKind::Expert, RuleKind::Median,
                   RuleKind::SoftMedian, RuleKind::Mean, RuleKind::RobustAverage})
        if (name == rule_name(k)) return k;
    throw Error(Errc::InvalidArgument, "unknown rule '" + name + "'");
}

std::vector<AggregationRule> default_rules() {
    std::vector<AggregationRule> r;
    for (auto k : {RuleKind::ResistanceWeighted, RuleKind::ConfidenceWeighted, RuleKind::Expert, RuleKind::Median,
                   RuleKind::SoftMedian, RuleKind::Mean, RuleKind::RobustAverage}) {
        AggregationRule a;
        a.kind = k;
        r.push_back(a);
    }
    return r;
}

namespace {

std::vector<std::size_t> order_by_value(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    return idx;
}

void need_confidence(const GroupInputs& in) {
    if (in.confidence.size() != in.initial.size())
        throw Error(Errc::MissingConfidence, "rule needs one confidence per member");
}

}  // namespace

std::vector<double> rule_weights(const AggregationRule& rule, const GroupInputs& in) {
    const std::size_t n = in.initial.size();
    if (n == 0) throw Error(Errc::EmptyInput, "rule applied to an empty group");
    std::vector<double> w(n, 0.0);

    switch (rule.kind) {
        case RuleKind::ResistanceWeighted: {
            if (in.revised.size() != n) throw Error(Errc::MissingRevised, "resistance weighting needs revised estimates");
            if (!(rule.epsilon > 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be positive");
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                w[i] = 1.0 / (std::fabs(in.revised[i] - in.initial[i]) + rule.epsilon);
                total += w[i];
            }
            for (double& v : w) v /= total;
            break;
        }
        case RuleKind::ConfidenceWeighted: {
            need_confidence(in);
            double total = 0.0;
            for (int c : in.confidence) total += c;
            for (std::size_t i = 0; i < n; ++i)
                w[i] = total > 0.0 ? in.confidence[i] / total : 1.0 / static_cast<double>(n);
            break;
        }
        case RuleKind::Expert: {
            need_confidence(in);
            const int top = *std::max_element(in.confidence.begin(), in.confidence.end());
            std::vector<std::size_t> tied;
            for (std::size_t i = 0; i < n; ++i)
                if (in.confidence[i] == top) tied.push_back(i);
            std::size_t pick = tied.front();
            if (rule.random_tiebreak && tied.size() > 1) {
                Rng rng(rule.tiebreak_seed);
                pick = tied[rng.below(tied.size())];
            }
            w[pick] = 1.0;
            break;
        }
        case RuleKind::Median: {
            auto idx = order_by_value(in.initial);
            if (n % 2 == 1) {
                w[idx[n / 2]] = 1.0;
            } else {
                w[idx[n / 2 - 1]] = 0.5;
                w[idx[n / 2]] = 0.5;
            }
            break;
        }
        case RuleKind::SoftMedian: {
            if (n != 5) throw Error(Errc::InvalidArgument, "soft median is defined for five members only");
            auto idx = order_by_value(in.initial);
            w[idx[1]] = 0.25;
            w[idx[2]] = 0.5;
            w[idx[3]] = 0.25;
            break;
        }
        case RuleKind::Mean:
            std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
            break;
        case RuleKind::RobustAverage: {
            if (!(rule.k >= 1.0)) throw Error(Errc::InvalidArgument, "k must be at least 1");
            double sum = 0.0;
            for (double x : in.initial) {
                if (!(x > 0.0)) throw Error(Errc::NonPositiveEstimate, "robust average needs positive estimates");
                sum += x;
            }
            const double lm = std::log10(sum / static_cast<double>(n));
            std::size_t kept = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (std::fabs(std::log10(in.initial[i]) - lm) <= rule.k) {
                    w[i] = 1.0;
                    ++kept;
                }
            if (kept == 0) throw Error(Errc::AllExcluded, "robust average excluded every member");
            for (double& v : w) v /= static_cast<double>(kept);
            break;
        }
    }
    return w;
}

double apply_rule(const AggregationRule& rule, const GroupInputs& in) {
    if (rule.kind == RuleKind::ConfidenceWeighted) {
        need_confidence(in);
        double cs = 0.0, acc = 0.0;
        for (std::size_t i = 0; i < in.initial.size(); ++i) {
            cs += in.confidence[i];
            acc += in.confidence[i] * in.initial[i];
        }
        if (cs > 0.0) return acc / cs;
    }
    const auto w = rule_weights(rule, in);
    double j = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) j += w[i] * in.initial[i];
    return j;
}

GroupInputs group_inputs(const GroupData& g) {
    GroupInputs in;
    in.initial.assign(g.i1.begin(), g.i1.end());
    in.revised.assign(g.i2.begin(), g.i2.end());
    if (g.has_confidence()) in.confidence.assign(g.confidence.begin(), g.confidence.end());
    return in;
}

RuleBenchResult rule_benchmark(const std::vector<QuestionPanel>& panels, const RuleBenchOptions& opt) {
    if (panels.empty()) throw Error(Errc::EmptyInput, "rule benchmark needs at least one question");
    if (opt.sample_size < 1 || opt.iterations < 1)
        throw Error(Errc::InvalidArgument, "sample size and iterations must be positive");
    const std::size_t nr = opt.rules.size();

    // outputs[q][rule][group]; rule slot nr holds the empirical consensus
    std::vector<std::vector<std::vector<double>>> outputs(panels.size());
    std::vector<std::uint64_t> streams(panels.size());
    for (std::size_t q = 0; q < panels.size(); ++q) {
        const auto& p = panels[q];
        if (p.groups.empty()) throw Error(Errc::InsufficientGroups, "no usable groups for " + p.question.code);
        streams[q] = stream_id(p.question.code, 0x72756c6573ULL);
        outputs[q].assign(nr + 1, std::vector<double>(p.groups.size()));
        for (std::size_t g = 0; g < p.groups.size(); ++g) {
            const auto in = group_inputs(p.groups[g]);
            for (std::size_t r = 0; r < nr; ++r) outputs[q][r][g] = apply_rule(opt.rules[r], in);
            outputs[q][nr][g] = p.groups[g].consensus;
        }
    }

    const auto iters = static_cast<std::size_t>(opt.iterations);
    std::vector<std::vector<double>> err(nr + 1, std::vector<double>(iters, 0.0));
    for_each_index(iters, opt.exec, [&](std::size_t it) {
        std::vector<std::size_t> pick(static_cast<std::size_t>(opt.sample_size));
        std::vector<double> acc(nr + 1);
        for (std::size_t q = 0; q < panels.size(); ++q) {
            const auto& p = panels[q];
            Rng rng(derive_seed(opt.seed, streams[q], it));
            for (auto& s : pick) s = static_cast<std::size_t>(rng.below(p.groups.size()));
            for (std::size_t r = 0; r <= nr; ++r) {
                double sum = 0.0;
                for (auto s : pick) sum += outputs[q][r][s];
                const double mean = sum / static_cast<double>(pick.size());
                acc[r] += std::fabs(mean - p.question.truth) / p.params.mad;
            }
        }
        for (std::size_t r = 0; r <= nr; ++r) err[r][it] = acc[r] / static_cast<double>(panels.size());
    });

    auto score = [&](std::string name, std::vector<double> s) {
        RuleScore rs;
        rs.name = std::move(name);
        rs.mean_error = mean_of(s);
        rs.sem = sem_of(s);
        rs.samples = std::move(s);
        return rs;
    };
    RuleBenchResult res;
    for (std::size_t r = 0; r < nr; ++r) res.rules.push_back(score(rule_name(opt.rules[r].kind), std::move(err[r])));
    res.consensus = score("consensus", std::move(err[nr]));
    return res;
}

}  // namespace crowd
