#include "crowd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crowd/error.hpp"
#include "crowd/random.hpp"

namespace crowd {

double mean_of(std::span<const double> xs) {
    if (xs.empty()) throw Error(Errc::EmptyInput, "mean of empty input");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw Error(Errc::InsufficientData, "variance needs at least two values");
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

double sem_of(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

std::vector<double> average_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double distance(double a, double b, const NormParams& p) { return std::fabs(a - b) / p.mad; }

double variance_within(std::span<const double> normalized) { return sample_variance(normalized); }
double variance_between(std::span<const double> group_means) { return sample_variance(group_means); }

WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences, WilcoxonMode mode, bool continuity) {
    std::vector<double> d;
    for (double x : differences)
        if (x != 0.0) d.push_back(x);
    if (d.empty()) throw Error(Errc::AllZeroDifferences, "every paired difference is zero");
    const int n = static_cast<int>(d.size());

    std::vector<double> absd(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) absd[i] = std::fabs(d[i]);
    const auto ranks = average_ranks(absd);

    WilcoxonResult res;
    res.n = n;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] > 0.0) res.statistic += ranks[i];

    const double nn = n;
    const double mu = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    {
        std::vector<double> sorted = absd;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            var -= (t * t * t - t) / 48.0;
            i = j + 1;
        }
    }
    res.z = var > 0.0 ? (res.statistic - mu) / std::sqrt(var) : 0.0;

    const bool exact = mode == WilcoxonMode::Exact || (mode == WilcoxonMode::Auto && n <= kWilcoxonExactMax);
    if (exact) {
        if (n > kWilcoxonExactMax) throw Error(Errc::InvalidArgument, "exact Wilcoxon is limited to 20 differences");
        // Ranks are multiples of 1/2, so doubled ranks are integers and the
        // 2^n signings collapse into a subset-sum count.
        std::vector<int> r2(d.size());
        int total = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            r2[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
            total += r2[i];
        }
        std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
        count[0] = 1.0;
        for (int r : r2)
            for (int s = total; s >= r; --s) count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
        const int w2 = static_cast<int>(std::lround(2.0 * res.statistic));
        double le = 0.0, ge = 0.0;
        for (int s = 0; s <= total; ++s) {
            if (s <= w2) le += count[static_cast<std::size_t>(s)];
            if (s >= w2) ge += count[static_cast<std::size_t>(s)];
        }
        const double all = std::ldexp(1.0, n);
        res.p_less = le / all;
        res.p_greater = ge / all;
        res.p_two_sided = std::min(1.0, 2.0 * std::min(res.p_less, res.p_greater));
        res.exact = true;
        return res;
    }

    const double sd = std::sqrt(var);
    if (!(sd > 0.0)) {
        res.p_less = res.p_greater = res.p_two_sided = 1.0;
        return res;
    }
    const double cc = continuity ? 0.5 : 0.0;
    const double dev = res.statistic - mu;
    res.p_less = normal_cdf((dev + cc) / sd);
    res.p_greater = 1.0 - normal_cdf((dev - cc) / sd);
    const double zabs = std::max(std::fabs(dev) - cc, 0.0) / sd;
    res.p_two_sided = std::min(1.0, 2.0 * (1.0 - normal_cdf(zabs)));
    return res;
}

WilcoxonResult wilcoxon_signed_rank(const PairedSamples& samples, WilcoxonMode mode, bool continuity) {
    std::vector<double> d;
    d.reserve(samples.size());
    for (const auto& [a, b] : samples) d.push_back(a - b);
    return wilcoxon_signed_rank(d, mode, continuity);
}

HomogeneityResult squared_rank_homogeneity(std::span<const double> a, std::span<const double> b,
                                           std::uint64_t seed, int permutations, const Exec& exec) {
    if (a.size() < 2 || b.size() < 2) throw Error(Errc::InsufficientData, "each sample needs at least two values");
    if (permutations < 1) throw Error(Errc::InvalidArgument, "permutations must be positive");
    const double ma = mean_of(a), mb = mean_of(b);
    std::vector<double> dev;
    dev.reserve(a.size() + b.size());
    for (double x : a) dev.push_back(std::fabs(x - ma));
    for (double x : b) dev.push_back(std::fabs(x - mb));
    auto r = average_ranks(dev);
    for (double& v : r) v *= v;

    const std::size_t na = a.size();
    double total = 0.0, obs = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        total += r[i];
        if (i < na) obs += r[i];
    }
    const double centre = total * static_cast<double>(na) / static_cast<double>(r.size());
    const double gap = std::fabs(obs - centre);
    // small slack so permutations equal to the observed split count as extreme
    const double tol = 1e-9 * total;

    constexpr int kBlock = 250;
    const int blocks = (permutations + kBlock - 1) / kBlock;
    std::vector<int> hits(static_cast<std::size_t>(blocks), 0);
    for_each_index(static_cast<std::size_t>(blocks), exec, [&](std::size_t blk) {
        Rng rng(derive_seed(seed, 0x7371726bULL, blk));
        std::vector<double> pool = r;
        const int lo = static_cast<int>(blk) * kBlock;
        const int hi = std::min(permutations, lo + kBlock);
        int h = 0;
        for (int p = lo; p < hi; ++p) {
            partial_shuffle(rng, pool, na);
            double s = 0.0;
            for (std::size_t i = 0; i < na; ++i) s += pool[i];
            if (std::fabs(s - centre) >= gap - tol) ++h;
        }
        hits[blk] = h;
    });
    int extreme = 0;
    for (int h : hits) extreme += h;

    HomogeneityResult res;
    res.statistic = obs;
    res.expected = centre;
    res.permutations = permutations;
    res.p = (extreme + 1.0) / (permutations + 1.0);
    return res;
}

double error_reduction(double err_before, double err_after) {
    if (err_before == 0.0) throw Error(Errc::DivisionByZero, "error reduction with zero baseline error");
    if (!(err_before > 0.0)) throw Error(Errc::InvalidArgument, "baseline error must be positive");
    return 100.0 * (1.0 - err_after / err_before);
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y, std::uint64_t seed) {
    if (x.size() != y.size()) throw Error(Errc::InvalidArgument, "spearman needs paired samples");
    if (x.size() < 3) throw Error(Errc::InsufficientData, "spearman needs at least three pairs");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const std::size_t n = rx.size();
    auto corr = [&](const std::vector<double>& b) {
        const double mx = mean_of(rx), my = mean_of(b);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sxy += (rx[i] - mx) * (b[i] - my);
            sxx += (rx[i] - mx) * (rx[i] - mx);
            syy += (b[i] - my) * (b[i] - my);
        }
        return (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
    };
    CorrelationResult res;
    res.rho = corr(ry);
    const double tol = 1e-12;
    std::size_t ge = 0, abs_ge = 0, total = 0;
    std::vector<double> perm = ry;
    if (n <= 9) {
        std::sort(perm.begin(), perm.end());
        do {
            const double c = corr(perm);
            ge += c >= res.rho - tol;
            abs_ge += std::fabs(c) >= std::fabs(res.rho) - tol;
            ++total;
        } while (std::next_permutation(perm.begin(), perm.end()));
        res.p_greater = static_cast<double>(ge) / static_cast<double>(total);
        res.p_two_sided = static_cast<double>(abs_ge) / static_cast<double>(total);
    } else {
        Rng rng(seed);
        constexpr std::size_t kDraws = 100000;
        for (std::size_t t = 0; t < kDraws; ++t) {
            partial_shuffle(rng, perm, n);
            const double c = corr(perm);
            ge += c >= res.rho - tol;
            abs_ge += std::fabs(c) >= std::fabs(res.rho) - tol;
        }
        res.p_greater = (ge + 1.0) / (kDraws + 1.0);
        res.p_two_sided = (abs_ge + 1.0) / (kDraws + 1.0);
    }
    return res;
}

KsResult ks_uniform(std::span<const double> xs) {
    if (xs.empty()) throw Error(Errc::EmptyInput, "KS test of empty input");
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = std::clamp(v[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    // Kolmogorov limit with Stephens' small-sample adjustment
    const double sn = std::sqrt(n);
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 0.2) return {d, 1.0};
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        p += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return {d, std::clamp(p, 0.0, 1.0)};
}

}  // namespace crowd
