#include "crowd/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crowd/error.hpp"
#include "crowd/normalize.hpp"
#include "crowd/random.hpp"
#include "crowd/stats.hpp"

namespace crowd {

namespace {

constexpr std::uint64_t kSaltInitial = 0x6931;
constexpr std::uint64_t kSaltConsensus = 0x63;
constexpr std::uint64_t kSaltRevised = 0x6932;

std::string group_label(int g) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "g%04d", g + 1);
    return buf;
}

double noise(Rng& rng, double scale, double shift) {
    if (scale == 0.0) return 0.0;
    return scale * rng.normal() - shift * scale * scale / 2.0;
}

}  // namespace

QuestionScale calibrate(double median, double mad) {
    if (!(median > 0.0) || !(mad > 0.0)) throw Error(Errc::InvalidArgument, "calibration needs positive median and MAD");
    const double r = mad / median;
    auto coverage = [&](double s) {
        const double hi = normal_cdf(std::log1p(r) / s);
        const double lo = r < 1.0 ? normal_cdf(std::log1p(-r) / s) : 0.0;
        return hi - lo;
    };
    // coverage falls as s grows
    double lo = 1e-6, hi = 50.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (coverage(mid) > 0.5) lo = mid;
        else hi = mid;
    }
    return {std::log(median), 0.5 * (lo + hi)};
}

CrowdModel CrowdModel::from_questions(std::vector<Question> qs, double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) throw Error(Errc::InvalidArgument, "rho must lie in [0, 1)");
    CrowdModel m;
    m.rho = rho;
    for (const auto& q : qs) {
        if (!q.median_i1 || !q.mad_i1)
            throw Error(Errc::InvalidArgument, "question " + q.code + " lacks median_i1/mad_i1 for calibration");
        m.scales.push_back(calibrate(*q.median_i1, *q.mad_i1));
    }
    m.questions = std::move(qs);
    return m;
}

SynthConfig parse_config(const std::string& json_text) {
    SynthConfig cfg;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("model config: ") + e.what());
    }
    try {
        if (j.contains("crowd")) cfg.rho = j.at("crowd").value("rho", cfg.rho);
        const auto& d = j.at("deliberation");
        auto& m = cfg.deliberation;
        m.beta = d.value("beta", 0.0);
        m.gamma = d.value("gamma", 0.0);
        m.delta = d.value("delta", 0.0);
        m.noise_c = d.value("noise_c", 0.0);
        m.noise_r = d.value("noise_r", 0.0);
        m.noise_shift = d.value("noise_shift", 0.0);
        const std::string anchor = d.value("anchor", std::string("geometric"));
        if (anchor == "geometric") m.anchor = Anchor::Geometric;
        else if (anchor == "arithmetic") m.anchor = Anchor::Arithmetic;
        else throw Error(Errc::InvalidArgument, "model config: anchor must be geometric or arithmetic");
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("model config: ") + e.what());
    }
    const auto& m = cfg.deliberation;
    if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) throw Error(Errc::InvalidArgument, "model config: rho must lie in [0, 1)");
    if (m.beta < 0.0 || m.beta > 1.0 || m.gamma < 0.0 || m.gamma > 1.0 || m.delta < 0.0 || m.noise_c < 0.0 ||
        m.noise_r < 0.0 || m.noise_shift < 0.0 || m.noise_shift > 1.0)
        throw Error(Errc::InvalidArgument, "model config: parameter out of range");
    return cfg;
}

SynthConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_json(const SynthConfig& cfg) {
    const auto& m = cfg.deliberation;
    nlohmann::json j = {
        {"crowd", {{"rho", cfg.rho}}},
        {"deliberation",
         {{"beta", m.beta},
          {"gamma", m.gamma},
          {"delta", m.delta},
          {"noise_c", m.noise_c},
          {"noise_r", m.noise_r},
          {"anchor", m.anchor == Anchor::Geometric ? "geometric" : "arithmetic"},
          {"noise_shift", m.noise_shift}}},
    };
    return j.dump(2);
}

namespace {

struct GroupDraw {
    std::array<double, 5> x{};
    std::array<int, 5> conf{};
};

// draws[q][g]
std::vector<std::vector<GroupDraw>> draw_initial(const CrowdModel& model, int n_groups, std::uint64_t seed,
                                                 const Exec& exec) {
    if (n_groups < 1) throw Error(Errc::InvalidArgument, "need at least one group");
    if (model.group_size != 5) throw Error(Errc::InvalidArgument, "groups have five players");
    const std::size_t nq = model.questions.size();
    const auto ng = static_cast<std::size_t>(n_groups);
    std::vector<std::vector<GroupDraw>> draws(nq, std::vector<GroupDraw>(ng));
    const double a = std::sqrt(model.rho), b = std::sqrt(1.0 - model.rho);
    for_each_index(nq * ng, exec, [&](std::size_t k) {
        const std::size_t q = k / ng, g = k % ng;
        const auto& sc = model.scales[q];
        Rng rng(derive_seed(seed, stream_id(model.questions[q].code, kSaltInitial), g));
        const double u = rng.normal();
        auto& d = draws[q][g];
        for (double& x : d.x) x = std::exp(sc.mu + sc.sigma * (a * u + b * rng.normal()));
        for (int& c : d.conf) c = rng.integer(0, 10);
    });
    return draws;
}

void push_answer(std::vector<EstimateRecord>& out, const std::string& pid, const std::string& gid, const Question& q,
                 Stage s, double est, int conf) {
    EstimateRecord r;
    r.participant_id = pid;
    r.group_id = gid;
    r.question_code = q.code;
    r.stage = s;
    r.estimate = est;
    r.confidence = conf;
    out.push_back(std::move(r));
}

}  // namespace

Dataset generate_crowd(const CrowdModel& model, int n_groups, std::uint64_t seed, const Exec& exec) {
    const auto draws = draw_initial(model, n_groups, seed, exec);
    std::vector<EstimateRecord> records;
    for (int g = 0; g < n_groups; ++g) {
        const std::string gid = group_label(g);
        for (std::size_t q = 0; q < model.questions.size(); ++q) {
            const auto& d = draws[q][static_cast<std::size_t>(g)];
            for (int i = 0; i < 5; ++i)
                push_answer(records, gid + "_p" + std::to_string(i + 1), gid, model.questions[q], Stage::I1,
                            d.x[static_cast<std::size_t>(i)], d.conf[static_cast<std::size_t>(i)]);
        }
    }
    return assemble_dataset(model.questions, std::move(records));
}

double deliberate(const std::vector<double>& initial, double truth, const DeliberationModel& model,
                  double grand_mean, std::uint64_t seed) {
    if (initial.size() != 5) throw Error(Errc::InvalidArgument, "deliberation needs five estimates");
    if (!(truth > 0.0) || !(grand_mean > 0.0)) throw Error(Errc::InvalidArgument, "truth and centre must be positive");
    std::vector<double> logs;
    for (double x : initial) {
        if (!(x > 0.0)) throw Error(Errc::NonPositiveEstimate, "deliberation needs positive estimates");
        logs.push_back(std::log(x));
    }
    const double A = median(logs);
    Rng rng(seed);
    const double lc = A + model.beta * (std::log(truth) - A) + model.delta * (A - std::log(grand_mean)) +
                      noise(rng, model.noise_c, model.noise_shift);
    return std::exp(lc);
}

double revise(double initial, double consensus, const DeliberationModel& model, std::uint64_t seed) {
    if (!(initial > 0.0) || !(consensus > 0.0)) throw Error(Errc::NonPositiveEstimate, "revision needs positive values");
    const double lx = std::log(initial);
    Rng rng(seed);
    return std::exp(lx + model.gamma * (std::log(consensus) - lx) + noise(rng, model.noise_r, model.noise_shift));
}

Dataset simulate(const CrowdModel& model, const DeliberationModel& delib, int n_groups, std::uint64_t seed,
                 const Exec& exec) {
    const auto draws = draw_initial(model, n_groups, seed, exec);
    const std::size_t nq = model.questions.size();
    const auto ng = static_cast<std::size_t>(n_groups);

    std::vector<double> centre(nq);
    for (std::size_t q = 0; q < nq; ++q) {
        std::vector<double> all;
        all.reserve(ng * 5);
        for (const auto& d : draws[q]) all.insert(all.end(), d.x.begin(), d.x.end());
        if (delib.anchor == Anchor::Geometric) {
            double s = 0.0;
            for (double x : all) s += std::log(x);
            centre[q] = std::exp(s / static_cast<double>(all.size()));
        } else {
            const auto kept = reject_outliers(all, fit_params(all));
            centre[q] = mean_of(kept);
        }
    }

    std::vector<std::vector<double>> consensus(nq, std::vector<double>(ng, 0.0));
    std::vector<std::vector<GroupDraw>> revised(nq, std::vector<GroupDraw>(ng));
    for_each_index(nq * ng, exec, [&](std::size_t k) {
        const std::size_t q = k / ng, g = k % ng;
        const auto& question = model.questions[q];
        const auto& d = draws[q][g];
        const std::uint64_t rstream = stream_id(question.code, kSaltRevised);
        double c = 0.0;
        if (question.discussed) {
            c = deliberate(std::vector<double>(d.x.begin(), d.x.end()), question.truth, delib, centre[q],
                           derive_seed(seed, stream_id(question.code, kSaltConsensus), g));
            consensus[q][g] = c;
        }
        Rng crng(derive_seed(seed, rstream, g * 8 + 7));
        for (std::size_t i = 0; i < 5; ++i) {
            const std::uint64_t s = derive_seed(seed, rstream, g * 8 + i);
            revised[q][g].x[i] = question.discussed ? revise(d.x[i], c, delib, s) : revise(d.x[i], d.x[i], delib, s);
            revised[q][g].conf[i] = crng.integer(0, 10);
        }
    });

    std::vector<EstimateRecord> records;
    records.reserve(ng * nq * 11);
    for (std::size_t g = 0; g < ng; ++g) {
        const std::string gid = group_label(static_cast<int>(g));
        for (std::size_t q = 0; q < nq; ++q) {
            const auto& question = model.questions[q];
            for (std::size_t i = 0; i < 5; ++i)
                push_answer(records, gid + "_p" + std::to_string(i + 1), gid, question, Stage::I1, draws[q][g].x[i],
                            draws[q][g].conf[i]);
            if (question.discussed) {
                EstimateRecord r;
                r.participant_id = gid + "_m";
                r.group_id = gid;
                r.role = Role::Moderator;
                r.question_code = question.code;
                r.stage = Stage::C;
                r.estimate = consensus[q][g];
                records.push_back(std::move(r));
            }
            for (std::size_t i = 0; i < 5; ++i)
                push_answer(records, gid + "_p" + std::to_string(i + 1), gid, question, Stage::I2, revised[q][g].x[i],
                            revised[q][g].conf[i]);
        }
    }
    return assemble_dataset(model.questions, std::move(records));
}

}  // namespace crowd
