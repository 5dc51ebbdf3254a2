#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "crowd/error.hpp"
#include "crowd/normalize.hpp"
#include "crowd/panel.hpp"
#include "crowd/stats.hpp"
#include "crowd/synth.hpp"

using namespace crowd;

namespace {

std::vector<Question> bundled() { return load_questions(CROWD_DATA_DIR "/questions.csv"); }

DeliberationModel model(double beta, double gamma, double delta) {
    DeliberationModel m;
    m.beta = beta;
    m.gamma = gamma;
    m.delta = delta;
    return m;
}

}  // namespace

TEST_CASE("calibration reproduces the EIFFEL median and MAD") {
    auto qs = bundled();
    auto cm = CrowdModel::from_questions(qs, 0.2);
    auto ds = generate_crowd(cm, 1036, 3);  // 5180 players
    auto xs = crowd_responses(ds, "EIFFEL", Stage::I1);
    REQUIRE(xs.size() == 5180);
    auto p = fit_params(xs);
    CHECK(std::fabs(p.median / 200 - 1) < 0.10);
    CHECK(std::fabs(p.mad / 110 - 1) < 0.10);

    const auto s = calibrate(200, 110);
    CHECK(std::exp(s.mu) == doctest::Approx(200));
    const double r = 110.0 / 200.0;
    const double mass = normal_cdf(std::log1p(r) / s.sigma) - normal_cdf(std::log1p(-r) / s.sigma);
    CHECK(mass == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("rho = 0 gives no within-group correlation") {
    Question q{"Q", "q", 10, true, 10.0, 4.0};
    auto cm = CrowdModel::from_questions({q}, 0.0);
    auto ds = generate_crowd(cm, 10000, 17);
    // one-way ANOVA estimator of the ICC on log answers
    double grand = 0, msb = 0, msw = 0;
    std::vector<double> means;
    for (const auto& g : ds.groups) {
        double s = 0;
        for (const auto& a : g.i1.at("Q")) s += std::log(*a.estimate);
        means.push_back(s / 5);
        grand += s;
    }
    grand /= 5.0 * ds.groups.size();
    for (std::size_t i = 0; i < ds.groups.size(); ++i) {
        msb += 5 * (means[i] - grand) * (means[i] - grand);
        for (const auto& a : ds.groups[i].i1.at("Q")) {
            const double d = std::log(*a.estimate) - means[i];
            msw += d * d;
        }
    }
    msb /= ds.groups.size() - 1.0;
    msw /= ds.groups.size() * 4.0;
    const double icc = (msb - msw) / (msb + 4 * msw);
    CHECK(std::fabs(icc) < 0.05);
}

TEST_CASE("generation is deterministic and positive") {
    auto cm = CrowdModel::from_questions(bundled(), 0.2);
    auto a = generate_crowd(cm, 30, 9, Exec::serial());
    auto b = generate_crowd(cm, 30, 9, Exec::with_threads(8));
    CHECK(a == b);
    CHECK(a.groups.size() == 30);
    CHECK(a.groups[0].group_id == "g0001");
    CHECK(a.groups[0].members[0] == "g0001_p1");
    for (const auto& r : a.records) {
        CHECK(*r.estimate > 0);
        CHECK(*r.confidence >= 0);
        CHECK(*r.confidence <= 10);
    }
    auto c = generate_crowd(cm, 30, 10);
    CHECK_FALSE(a == c);
}

TEST_CASE("deliberate and revise limits") {
    const std::vector<double> x = {50, 80, 100, 130, 900};
    CHECK(deliberate(x, 145, model(1, 0, 0), 90, 1) == doctest::Approx(145).epsilon(1e-12));
    CHECK(deliberate(x, 145, model(0, 0, 0), 90, 1) == doctest::Approx(100).epsilon(1e-12));
    // log-space arithmetic: A = log 100, pull halfway to log 400, push 0.5 * (log 100 - log 25)
    const double want = std::exp(std::log(100.0) + 0.5 * std::log(4.0) + 0.5 * std::log(4.0));
    CHECK(deliberate(x, 400, model(0.5, 0, 0.5), 25, 1) == doctest::Approx(want).epsilon(1e-12));
    CHECK(revise(80, 140, model(0, 1, 0), 3) == doctest::Approx(140).epsilon(1e-12));
    CHECK(revise(80, 140, model(0, 0, 0), 3) == doctest::Approx(80).epsilon(1e-12));
    auto noisy = model(0.3, 0.5, 0.1);
    noisy.noise_c = 0.2;
    noisy.noise_r = 0.2;
    CHECK(deliberate(x, 145, noisy, 90, 5) == deliberate(x, 145, noisy, 90, 5));
    CHECK(deliberate(x, 145, noisy, 90, 5) != deliberate(x, 145, noisy, 90, 6));
    CHECK(revise(80, 140, noisy, 5) == revise(80, 140, noisy, 5));
}

TEST_CASE("simulated deliberation reproduces the qualitative effects") {
    auto cm = CrowdModel::from_questions(bundled(), 0.2);
    auto ds = simulate(cm, model(0.5, 0.6, 0.0), 280, 4);
    auto panels = build_panels(ds);
    REQUIRE(panels.size() == 4);
    for (const auto& p : panels) {
        CHECK(p.groups.size() > 140);
        PairedSamples bias, var, dist;
        double sb_cons = 0, sb_mean = 0;
        for (const auto& g : p.groups) {
            const double m = g.mean(Stage::I1);
            const double bc = signed_bias(g.consensus, p.question.truth, p.params);
            const double bm = signed_bias(m, p.question.truth, p.params);
            sb_cons += bc;
            sb_mean += bm;
            bias.emplace_back(bc, bm);
            std::vector<double> n1, n2;
            for (int i = 0; i < 5; ++i) {
                n1.push_back(normalize_value(g.i1[i], p.params));
                n2.push_back(normalize_value(g.i2[i], p.params));
            }
            var.emplace_back(variance_within(n2), variance_within(n1));
            double dc = 0, dm = 0;
            for (int i = 0; i < 5; ++i) {
                dc += distance(g.i2[i], g.consensus, p.params);
                dm += distance(g.i2[i], m, p.params);
            }
            dist.emplace_back(dc, dm);
        }
        // On the strongly skewed questions the arithmetic group mean already
        // overshoots the low median, so half a pull is not enough there.
        if (p.question.code == "GOALS" || p.question.code == "ALEGRIA") {
            CHECK(std::fabs(sb_cons) < std::fabs(sb_mean));
            CHECK(wilcoxon_signed_rank(bias).p_two_sided < 0.05);
        }
        CHECK(wilcoxon_signed_rank(var).p_less < 0.01);
        CHECK(wilcoxon_signed_rank(dist).p_less < 0.01);
    }
}

TEST_CASE("simulate layout and determinism") {
    auto cm = CrowdModel::from_questions(bundled(), 0.2);
    auto delib = model(0.4, 0.6, 0.3);
    delib.noise_c = 0.1;
    delib.noise_r = 0.1;
    auto a = simulate(cm, delib, 12, 21, Exec::serial());
    auto b = simulate(cm, delib, 12, 21, Exec::with_threads(8));
    CHECK(a == b);
    CHECK(complete_groups(a).size() == 12);
    CHECK(validate_dataset(a).empty());
    const auto& g = a.groups[0];
    CHECK(g.moderator == "g0001_m");
    CHECK(g.consensus.size() == 4);
    CHECK(g.i2.size() == 8);
    // the i1 layer is the plain generated crowd
    auto crowd = generate_crowd(cm, 12, 21);
    CHECK(crowd.groups[3].i1 == a.groups[3].i1);
}

TEST_CASE("control model leaves undiscussed-style noise only") {
    auto cm = CrowdModel::from_questions(bundled(), 0.2);
    auto ds = simulate(cm, model(0, 0, 0), 5, 2);
    for (const auto& g : ds.groups)
        for (const auto& [q, answers] : g.i2)
            for (std::size_t i = 0; i < answers.size(); ++i)
                CHECK(*answers[i].estimate == doctest::Approx(*g.i1.at(q)[i].estimate).epsilon(1e-12));
}

TEST_CASE("model config parsing") {
    auto cfg = parse_config(R"({"crowd": {"rho": 0.3}, "deliberation": {"beta": 0.5, "gamma": 0.7, "delta": 0.2,
        "noise_c": 0.1, "noise_r": 0.05, "anchor": "arithmetic", "noise_shift": 0.5}})");
    CHECK(cfg.rho == 0.3);
    CHECK(cfg.deliberation.gamma == 0.7);
    CHECK(cfg.deliberation.anchor == Anchor::Arithmetic);
    CHECK(cfg.deliberation.noise_shift == 0.5);
    auto again = parse_config(config_json(cfg));
    CHECK(again.deliberation.noise_r == 0.05);
    CHECK(again.deliberation.noise_shift == 0.5);
    CHECK(again.deliberation.anchor == Anchor::Arithmetic);
    CHECK_THROWS_AS(parse_config(R"({"crowd": {"rho": 1.0}, "deliberation": {}})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"deliberation": {"beta": 1.5}})"), Error);
    CHECK_THROWS_AS(parse_config("{"), Error);
    auto shipped = load_config(CROWD_DATA_DIR "/default_model.json");
    CHECK(shipped.rho > 0.0);
    CHECK(shipped.deliberation.beta > 0.0);
}
