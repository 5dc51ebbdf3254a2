#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "crowd/error.hpp"
#include "crowd/rules.hpp"

using namespace crowd;

namespace {

AggregationRule rule_of(RuleKind k) {
    AggregationRule r;
    r.kind = k;
    return r;
}

double run(RuleKind k, std::vector<double> x, std::vector<double> r = {}, std::vector<int> c = {}) {
    return apply_rule(rule_of(k), GroupInputs{std::move(x), std::move(r), std::move(c)});
}

// Brute-force oracle: explicit sort, explicit weights, plain sum. Written
// independently of rule_weights.
double oracle(const AggregationRule& rule, const GroupInputs& in) {
    const auto& x = in.initial;
    const std::size_t n = x.size();
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    switch (rule.kind) {
        case RuleKind::ResistanceWeighted: {
            double num = 0, den = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double w = 1.0 / (std::fabs(in.revised[i] - x[i]) + rule.epsilon);
                num += w * x[i];
                den += w;
            }
            return num / den;
        }
        case RuleKind::ConfidenceWeighted: {
            double num = 0, den = 0;
            for (std::size_t i = 0; i < n; ++i) {
                num += in.confidence[i] * x[i];
                den += in.confidence[i];
            }
            if (den == 0) {
                double s = 0;
                for (double v : x) s += v;
                return s / n;
            }
            return num / den;
        }
        case RuleKind::Expert: {
            std::size_t best = 0;
            for (std::size_t i = 1; i < n; ++i)
                if (in.confidence[i] > in.confidence[best]) best = i;
            return x[best];
        }
        case RuleKind::Median: return sorted[2];
        case RuleKind::SoftMedian: return 0.25 * sorted[1] + 0.5 * sorted[2] + 0.25 * sorted[3];
        case RuleKind::Mean: return (x[0] + x[1] + x[2] + x[3] + x[4]) / 5.0;
        case RuleKind::RobustAverage: {
            const double m = (x[0] + x[1] + x[2] + x[3] + x[4]) / 5.0;
            double s = 0;
            int kept = 0;
            for (double v : x)
                if (!(std::fabs(std::log10(v) - std::log10(m)) > rule.k)) {
                    s += v;
                    ++kept;
                }
            return s / kept;
        }
    }
    return NAN;
}

GroupInputs random_group(std::mt19937_64& gen) {
    std::lognormal_distribution<double> est(3.0, 2.0);
    std::uniform_int_distribution<int> conf(0, 10);
    GroupInputs in;
    for (int i = 0; i < 5; ++i) {
        in.initial.push_back(est(gen));
        in.revised.push_back(est(gen));
        in.confidence.push_back(conf(gen));
    }
    return in;
}

}  // namespace

TEST_CASE("rule examples") {
    CHECK(run(RuleKind::Median, {2, 3, 5, 8, 100}) == 5.0);
    CHECK(run(RuleKind::SoftMedian, {1, 2, 3, 4, 5}) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(run(RuleKind::Expert, {10, 20, 30, 40, 50}, {}, {3, 9, 5, 1, 2}) == 20.0);
    CHECK(run(RuleKind::ConfidenceWeighted, {10, 20, 30, 40, 50}, {}, {1, 1, 1, 1, 6}) ==
          doctest::Approx(40.0).epsilon(1e-14));
    CHECK(run(RuleKind::Mean, {1, 2, 3, 4, 5}) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(run(RuleKind::RobustAverage, {100, 120, 130, 110, 90}) == doctest::Approx(110.0).epsilon(1e-14));
}

TEST_CASE("resistance weighted example against hand oracle") {
    // |r - x| + 1 = {1, 6, 6, 1, 1}; inverse weights {1, 1/6, 1/6, 1, 1} over total 10/3
    const double hand = (10 * 1.0 + 20 / 6.0 + 30 / 6.0 + 40 * 1.0 + 50 * 1.0) / (10.0 / 3.0);
    CHECK(hand == doctest::Approx(32.5).epsilon(1e-14));
    GroupInputs in{{10, 20, 30, 40, 50}, {10, 25, 35, 40, 50}, {}};
    CHECK(apply_rule(rule_of(RuleKind::ResistanceWeighted), in) == doctest::Approx(hand).epsilon(1e-14));
    auto w = rule_weights(rule_of(RuleKind::ResistanceWeighted), in);
    CHECK(w[0] == doctest::Approx(0.3));
    CHECK(w[1] == doctest::Approx(0.05));
}

TEST_CASE("robust average lets one huge outlier exclude the rest") {
    GroupInputs in{{100, 120, 130, 110, 2e9}, {}, {}};
    const auto rule = rule_of(RuleKind::RobustAverage);
    CHECK(oracle(rule, in) == 2e9);
    CHECK(apply_rule(rule, in) == 2e9);
}

TEST_CASE("rule errors") {
    CHECK_THROWS_AS(run(RuleKind::ResistanceWeighted, {1, 2, 3, 4, 5}), Error);
    try {
        run(RuleKind::ResistanceWeighted, {1, 2, 3, 4, 5});
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MissingRevised);
    }
    try {
        run(RuleKind::Expert, {1, 2, 3, 4, 5});
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MissingConfidence);
    }
    try {
        run(RuleKind::ConfidenceWeighted, {1, 2, 3, 4, 5}, {}, {1, 2});
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MissingConfidence);
    }
    try {
        run(RuleKind::RobustAverage, {1, 0, 3, 4, 5});
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonPositiveEstimate);
    }
    AggregationRule bad = rule_of(RuleKind::RobustAverage);
    bad.k = 0.5;
    CHECK_THROWS_AS(apply_rule(bad, GroupInputs{{1, 2, 3, 4, 5}, {}, {}}), Error);
    CHECK_THROWS_AS(run(RuleKind::SoftMedian, {1, 2, 3, 4}), Error);
    CHECK_THROWS_AS(run(RuleKind::Mean, {}), Error);
    CHECK_THROWS_AS(parse_rule("mode"), Error);
    CHECK(parse_rule("soft_median") == RuleKind::SoftMedian);
}

TEST_CASE("zero total confidence falls back to the mean") {
    CHECK(run(RuleKind::ConfidenceWeighted, {1, 2, 3, 4, 5}, {}, {0, 0, 0, 0, 0}) ==
          doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("expert ties: lowest index by default, seeded when asked") {
    GroupInputs in{{10, 20, 30, 40, 50}, {}, {9, 1, 9, 9, 0}};
    CHECK(apply_rule(rule_of(RuleKind::Expert), in) == 10.0);
    AggregationRule r = rule_of(RuleKind::Expert);
    r.random_tiebreak = true;
    std::vector<int> seen(3, 0);
    for (std::uint64_t s = 0; s < 60; ++s) {
        r.tiebreak_seed = s;
        const double v = apply_rule(r, in);
        CHECK((v == 10.0 || v == 30.0 || v == 40.0));
        seen[v == 10.0 ? 0 : v == 30.0 ? 1 : 2]++;
        CHECK(apply_rule(r, in) == v);
    }
    for (int c : seen) CHECK(c > 0);
}

TEST_CASE("apply_rule matches the brute-force oracle on 1000 random groups") {
    std::mt19937_64 gen(20240611);
    for (int t = 0; t < 1000; ++t) {
        const auto in = random_group(gen);
        for (auto rule : default_rules()) {
            const double want = oracle(rule, in);
            CHECK(std::fabs(apply_rule(rule, in) - want) <= 1e-9 * std::max(1.0, std::fabs(want)));
        }
    }
}

TEST_CASE("rule properties") {
    std::mt19937_64 gen(99);
    for (int t = 0; t < 300; ++t) {
        auto in = random_group(gen);
        // distinct confidences so permutations cannot move an expert tie
        in.confidence = {1, 7, 3, 9, 5};
        const auto [lo, hi] = std::minmax_element(in.initial.begin(), in.initial.end());
        const double s = 3.7;
        GroupInputs scaled = in;
        for (auto& v : scaled.initial) v *= s;
        for (auto& v : scaled.revised) v *= s;
        GroupInputs perm = in;
        const std::vector<int> p = {3, 0, 4, 1, 2};
        for (int i = 0; i < 5; ++i) {
            perm.initial[i] = in.initial[p[i]];
            perm.revised[i] = in.revised[p[i]];
            perm.confidence[i] = in.confidence[p[i]];
        }
        for (auto rule : default_rules()) {
            const double j = apply_rule(rule, in);
            CHECK(j >= *lo - 1e-9 * std::fabs(*lo));
            CHECK(j <= *hi + 1e-9 * std::fabs(*hi));
            const auto w = rule_weights(rule, in);
            double sum = 0;
            for (double v : w) {
                CHECK(v >= 0.0);
                sum += v;
            }
            CHECK(std::fabs(sum - 1.0) <= 1e-12);

            AggregationRule rs = rule;
            rs.epsilon *= s;
            CHECK(apply_rule(rs, scaled) == doctest::Approx(s * j).epsilon(1e-9));
            CHECK(apply_rule(rule, perm) == doctest::Approx(j).epsilon(1e-12));
        }
    }
}

namespace {

QuestionPanel toy_panel(const std::string& code, double truth, int groups, std::uint64_t seed, bool consensus_is_mean) {
    QuestionPanel p;
    p.question = Question{code, code, truth, true, {}, {}};
    p.params = NormParams{truth * 0.8, truth * 0.3};
    std::mt19937_64 gen(seed);
    std::lognormal_distribution<double> est(std::log(truth * 0.8), 0.4);
    std::uniform_int_distribution<int> conf(0, 10);
    for (int g = 0; g < groups; ++g) {
        GroupData d;
        d.group_id = "g" + std::to_string(g);
        double s = 0;
        for (int i = 0; i < 5; ++i) {
            d.i1[i] = est(gen);
            d.i2[i] = 0.5 * (d.i1[i] + truth);
            d.confidence[i] = conf(gen);
            s += d.i1[i];
        }
        // better than any rule: halfway from the group mean to the truth
        d.consensus = consensus_is_mean ? s / 5.0 : 0.5 * (s / 5.0 + truth);
        p.groups.push_back(d);
    }
    return p;
}

}  // namespace

TEST_CASE("rule benchmark") {
    SUBCASE("consensus equal to the group mean scores exactly like the mean rule") {
        std::vector<QuestionPanel> panels = {toy_panel("A", 100, 40, 1, true), toy_panel("B", 50, 30, 2, true)};
        RuleBenchOptions opt;
        opt.iterations = 200;
        opt.seed = 5;
        auto res = rule_benchmark(panels, opt);
        REQUIRE(res.rules.size() == 7);
        const auto& mean = res.rules[5];
        CHECK(mean.name == "mean");
        CHECK(mean.samples.size() == 200);
        for (std::size_t i = 0; i < mean.samples.size(); ++i)
            CHECK(mean.samples[i] == doctest::Approx(res.consensus.samples[i]).epsilon(1e-12));
    }
    SUBCASE("a consensus pulled toward the truth beats every rule") {
        std::vector<QuestionPanel> panels = {toy_panel("A", 100, 60, 3, false)};
        RuleBenchOptions opt;
        opt.iterations = 300;
        opt.seed = 11;
        auto res = rule_benchmark(panels, opt);
        for (const auto& r : res.rules) CHECK(res.consensus.mean_error < r.mean_error);
    }
    SUBCASE("deterministic and thread-count independent") {
        std::vector<QuestionPanel> panels = {toy_panel("A", 100, 25, 4, false), toy_panel("B", 9, 25, 6, false)};
        RuleBenchOptions opt;
        opt.sample_size = 1;
        opt.iterations = 1;
        opt.seed = 42;
        opt.exec = Exec::serial();
        auto a = rule_benchmark(panels, opt);
        auto b = rule_benchmark(panels, opt);
        CHECK(a.consensus.samples == b.consensus.samples);
        opt.iterations = 257;
        opt.sample_size = 100;
        auto s = rule_benchmark(panels, opt);
        opt.exec = Exec::with_threads(8);
        auto p = rule_benchmark(panels, opt);
        CHECK(s.consensus.samples == p.consensus.samples);
        for (std::size_t r = 0; r < s.rules.size(); ++r) CHECK(s.rules[r].samples == p.rules[r].samples);
    }
    SUBCASE("errors") {
        RuleBenchOptions opt;
        CHECK_THROWS_AS(rule_benchmark({}, opt), Error);
        QuestionPanel empty = toy_panel("A", 1, 0, 1, true);
        CHECK_THROWS_AS(rule_benchmark({empty}, opt), Error);
    }
}
