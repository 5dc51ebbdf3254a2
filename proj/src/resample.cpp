#include "crowd/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crowd/error.hpp"
#include "crowd/random.hpp"

namespace crowd {

const char* mode_name(SamplingMode m) noexcept {
    return m == SamplingMode::WithinGroups ? "within" : "between";
}

SamplingMode parse_mode(const std::string& s) {
    if (s == "within") return SamplingMode::WithinGroups;
    if (s == "between") return SamplingMode::BetweenGroups;
    throw Error(Errc::InvalidArgument, "unknown sampling mode '" + s + "'");
}

double crowd_error(std::span<const double> estimates, double truth, const NormParams& p) {
    if (estimates.empty()) throw Error(Errc::EmptyInput, "crowd error of no estimates");
    double s = 0.0;
    for (double x : estimates) s += x;
    return std::fabs(s / static_cast<double>(estimates.size()) - truth) / p.mad;
}

namespace {

// C(n, k), or cap + 1 once it exceeds cap
std::uint64_t choose_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 c = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i;
        if (c > cap) return cap + 1;
    }
    return static_cast<std::uint64_t>(c);
}

// Hands out base-5 digits, 27 per 64-bit draw.
class MemberPicker {
public:
    explicit MemberPicker(Rng& rng) : rng_(rng) {}
    std::size_t next() {
        if (left_ == 0) {
            word_ = rng_.below(kPow);
            left_ = 27;
        }
        --left_;
        std::size_t d = static_cast<std::size_t>(word_ % 5);
        word_ /= 5;
        return d;
    }

private:
    static constexpr std::uint64_t kPow = 7450580596923828125ULL;  // 5^27
    Rng& rng_;
    std::uint64_t word_ = 0;
    int left_ = 0;
};

struct StageValues {
    std::vector<double> sums;  // per group: member sum, or the consensus
    double per_group = 5.0;    // individuals behind each sum
};

StageValues stage_values(const QuestionPanel& panel, Stage stage) {
    StageValues v;
    v.sums.reserve(panel.groups.size());
    if (stage == Stage::C) {
        if (!panel.question.discussed)
            throw Error(Errc::InvalidArgument, panel.question.code + " has no consensus stage");
        v.per_group = 1.0;
        for (const auto& g : panel.groups) v.sums.push_back(g.consensus);
    } else {
        for (const auto& g : panel.groups) v.sums.push_back(g.mean(stage) * 5.0);
    }
    return v;
}

double within_iteration(const StageValues& v, const QuestionPanel& panel, int n, const CurveOptions& opt,
                        Rng& rng, std::vector<std::size_t>& order) {
    const std::size_t G = order.size();
    const std::size_t m = static_cast<std::size_t>(n / 5);
    const std::size_t P = std::min(static_cast<std::size_t>(n), G);
    partial_shuffle(rng, order, P);
    std::vector<std::size_t> pool(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(P));

    const double truth = panel.question.truth;
    const double mad = panel.params.mad;
    const double denom = v.per_group * static_cast<double>(m);
    const auto cap = static_cast<std::uint64_t>(std::max(opt.combinations, 1));
    double acc = 0.0;
    std::uint64_t count = 0;

    if (choose_capped(P, m, cap) <= cap) {
        std::vector<std::size_t> c(m);
        std::iota(c.begin(), c.end(), std::size_t{0});
        while (true) {
            double s = 0.0;
            for (auto i : c) s += v.sums[pool[i]];
            acc += std::fabs(s / denom - truth) / mad;
            ++count;
            std::size_t k = m;
            while (k > 0 && c[k - 1] == P - m + k - 1) --k;
            if (k == 0) break;
            ++c[k - 1];
            for (std::size_t j = k; j < m; ++j) c[j] = c[j - 1] + 1;
        }
    } else {
        const std::uint64_t blocks = std::max<std::uint64_t>(1, cap / P);
        std::vector<double> prefix(2 * P + 1);
        for (std::uint64_t b = 0; b < blocks; ++b) {
            partial_shuffle(rng, pool, P);
            prefix[0] = 0.0;
            for (std::size_t i = 0; i < 2 * P; ++i) prefix[i + 1] = prefix[i] + v.sums[pool[i % P]];
            for (std::size_t j = 0; j < P; ++j) {
                const double s = prefix[j + m] - prefix[j];
                acc += std::fabs(s / denom - truth) / mad;
                ++count;
            }
        }
    }
    return acc / static_cast<double>(count);
}

double between_iteration(const QuestionPanel& panel, Stage stage, int n, const CurveOptions& opt, Rng& rng,
                         std::vector<std::size_t>& order) {
    const std::size_t P = static_cast<std::size_t>(n);
    partial_shuffle(rng, order, P);
    const double truth = panel.question.truth;
    const double mad = panel.params.mad;
    MemberPicker pick(rng);
    const int combos = std::max(opt.combinations, 1);
    double acc = 0.0;
    for (int c = 0; c < combos; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < P; ++i) {
            const auto& g = panel.groups[order[i]];
            s += (stage == Stage::I1 ? g.i1 : g.i2)[pick.next()];
        }
        acc += std::fabs(s / static_cast<double>(P) - truth) / mad;
    }
    return acc / combos;
}

}  // namespace

ErrorCurve error_curve(const QuestionPanel& panel, Stage stage, SamplingMode mode, const std::vector<int>& ns,
                       const CurveOptions& opt) {
    if (opt.iterations < 1) throw Error(Errc::InvalidArgument, "iterations must be positive");
    if (ns.empty()) throw Error(Errc::InvalidArgument, "no crowd sizes requested");
    const std::size_t G = panel.groups.size();
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const int n = ns[i];
        if (n < 1 || (i > 0 && n <= ns[i - 1])) throw Error(Errc::InvalidArgument, "crowd sizes must increase");
        if (mode == SamplingMode::WithinGroups) {
            if (n % 5 != 0) throw Error(Errc::InvalidArgument, "within-groups sizes must be multiples of 5");
            if (static_cast<std::size_t>(n / 5) > G)
                throw Error(Errc::InsufficientGroups, "n=" + std::to_string(n) + " needs more than the " +
                                                          std::to_string(G) + " groups of " + panel.question.code);
        } else {
            if (stage == Stage::C) throw Error(Errc::InvalidArgument, "consensus curves use within-groups sampling");
            if (static_cast<std::size_t>(n) > G)
                throw Error(Errc::InsufficientGroups, "n=" + std::to_string(n) + " needs more than the " +
                                                          std::to_string(G) + " groups of " + panel.question.code);
        }
    }

    ErrorCurve curve;
    curve.question = panel.question.code;
    curve.stage = stage;
    curve.mode = mode;
    curve.iterations = opt.iterations;
    curve.seed = opt.seed;

    StageValues values;
    if (mode == SamplingMode::WithinGroups) values = stage_values(panel, stage);
    const auto iters = static_cast<std::size_t>(opt.iterations);

    for (int n : ns) {
        CurvePoint pt;
        pt.n = n;
        pt.samples.assign(iters, 0.0);
        const std::uint64_t salt = (static_cast<std::uint64_t>(n) << 1) | (mode == SamplingMode::BetweenGroups);
        const std::uint64_t stream = stream_id(panel.question.code, salt);
        for_each_index(iters, opt.exec, [&](std::size_t it) {
            Rng rng(derive_seed(opt.seed, stream, it));
            std::vector<std::size_t> order(G);
            std::iota(order.begin(), order.end(), std::size_t{0});
            pt.samples[it] = mode == SamplingMode::WithinGroups
                                 ? within_iteration(values, panel, n, opt, rng, order)
                                 : between_iteration(panel, stage, n, opt, rng, order);
        });
        pt.mean_error = mean_of(pt.samples);
        pt.sem = sem_of(pt.samples);
        curve.points.push_back(std::move(pt));
    }
    return curve;
}

ErrorCurve pooled_curve(const std::vector<ErrorCurve>& curves) {
    if (curves.empty()) throw Error(Errc::EmptyInput, "nothing to pool");
    ErrorCurve out = curves.front();
    out.question = "pooled";
    const double k = static_cast<double>(curves.size());
    for (std::size_t p = 0; p < out.points.size(); ++p) {
        auto& pt = out.points[p];
        for (std::size_t c = 1; c < curves.size(); ++c) {
            const auto& other = curves[c];
            if (other.points.size() != out.points.size() || other.iterations != out.iterations ||
                other.mode != out.mode || other.stage != out.stage)
                throw Error(Errc::InvalidArgument, "curves differ in shape and cannot be pooled");
            for (std::size_t i = 0; i < pt.samples.size(); ++i) pt.samples[i] += other.points[p].samples[i];
        }
        for (double& s : pt.samples) s /= k;
        pt.mean_error = mean_of(pt.samples);
        pt.sem = sem_of(pt.samples);
    }
    return out;
}

PairedSamples Comparison::pairs() const {
    PairedSamples p;
    p.reserve(consensus_samples.size());
    for (std::size_t i = 0; i < consensus_samples.size(); ++i) p.emplace_back(consensus_samples[i], crowd_samples[i]);
    return p;
}

int Comparison::consensus_wins() const {
    int w = 0;
    for (std::size_t i = 0; i < consensus_samples.size(); ++i) w += consensus_samples[i] < crowd_samples[i];
    return w;
}

Comparison consensus_vs_crowd(const QuestionPanel& panel, int m, int n_reference, const CompareOptions& opt) {
    if (!panel.question.discussed) throw Error(Errc::InvalidArgument, panel.question.code + " was not discussed");
    if (m < 1 || n_reference < 1 || opt.iterations < 1)
        throw Error(Errc::InvalidArgument, "m, n_reference and iterations must be positive");
    const std::size_t G = panel.groups.size();
    if (static_cast<std::size_t>(m) > G) throw Error(Errc::InsufficientGroups, "not enough groups for m");

    const std::size_t total = 5 * G + panel.others_i1.size();
    const bool whole = static_cast<std::size_t>(n_reference) >= total;
    const auto crowd = panel.crowd(Stage::I1);
    const double whole_error = crowd_error(crowd, panel.question.truth, panel.params);
    const double truth = panel.question.truth;
    const double mad = panel.params.mad;

    Comparison res;
    res.m = m;
    res.n_reference = whole ? static_cast<int>(total) : n_reference;
    const auto iters = static_cast<std::size_t>(opt.iterations);
    res.consensus_samples.assign(iters, 0.0);
    res.crowd_samples.assign(iters, 0.0);
    const std::uint64_t stream = stream_id(panel.question.code, 0x636f6d70ULL ^ static_cast<std::uint64_t>(m));

    for_each_index(iters, opt.exec, [&](std::size_t it) {
        Rng rng(derive_seed(opt.seed, stream, it));
        std::vector<std::size_t> order(G);
        std::iota(order.begin(), order.end(), std::size_t{0});
        partial_shuffle(rng, order, static_cast<std::size_t>(m));

        double cs = 0.0;
        for (int i = 0; i < m; ++i) cs += panel.groups[order[static_cast<std::size_t>(i)]].consensus;
        res.consensus_samples[it] = std::fabs(cs / m - truth) / mad;

        if (whole) {
            res.crowd_samples[it] = whole_error;
            return;
        }
        const auto need = static_cast<std::size_t>(n_reference);
        double rs = 0.0;
        std::size_t taken = 0;
        for (int i = 0; i < m && taken < need; ++i)
            for (double x : panel.groups[order[static_cast<std::size_t>(i)]].i1)
                if (taken < need) rs += x, ++taken;
        if (taken < need) {
            std::vector<double> rest;
            rest.reserve(total);
            for (std::size_t g = static_cast<std::size_t>(m); g < G; ++g)
                for (double x : panel.groups[order[g]].i1) rest.push_back(x);
            rest.insert(rest.end(), panel.others_i1.begin(), panel.others_i1.end());
            const std::size_t extra = need - taken;
            partial_shuffle(rng, rest, extra);
            for (std::size_t i = 0; i < extra; ++i) rs += rest[i];
            taken += extra;
        }
        res.crowd_samples[it] = std::fabs(rs / static_cast<double>(taken) - truth) / mad;
    });
    res.consensus_error = mean_of(res.consensus_samples);
    res.crowd_error = mean_of(res.crowd_samples);
    return res;
}

Comparison pooled_comparison(const std::vector<Comparison>& parts) {
    if (parts.empty()) throw Error(Errc::EmptyInput, "nothing to pool");
    Comparison out = parts.front();
    for (std::size_t p = 1; p < parts.size(); ++p) {
        if (parts[p].consensus_samples.size() != out.consensus_samples.size())
            throw Error(Errc::InvalidArgument, "comparisons differ in iteration count");
        for (std::size_t i = 0; i < out.consensus_samples.size(); ++i) {
            out.consensus_samples[i] += parts[p].consensus_samples[i];
            out.crowd_samples[i] += parts[p].crowd_samples[i];
        }
    }
    const double k = static_cast<double>(parts.size());
    for (double& v : out.consensus_samples) v /= k;
    for (double& v : out.crowd_samples) v /= k;
    out.consensus_error = mean_of(out.consensus_samples);
    out.crowd_error = mean_of(out.crowd_samples);
    return out;
}

}  // namespace crowd
