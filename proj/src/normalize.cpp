#include "crowd/normalize.hpp"

#include <algorithm>
#include <cmath>

#include "crowd/error.hpp"

namespace crowd {

double median(std::span<const double> xs) {
    if (xs.empty()) throw Error(Errc::EmptyInput, "median of empty input");
    std::vector<double> v(xs.begin(), xs.end());
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (n % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return lo + (hi - lo) / 2.0;
}

NormParams fit_params(std::span<const double> responses) {
    if (responses.empty()) throw Error(Errc::EmptyInput, "fit_params: no responses");
    const double med = median(responses);
    std::vector<double> dev;
    dev.reserve(responses.size());
    for (double x : responses) dev.push_back(std::fabs(x - med));
    const double mad = median(dev);
    if (!(mad > 0.0)) throw Error(Errc::DegenerateDispersion, "fit_params: median absolute deviance is zero");
    return {med, mad};
}

std::vector<double> reject_outliers(std::span<const double> responses, const NormParams& p, double threshold) {
    if (!(threshold > 0.0)) throw Error(Errc::InvalidArgument, "reject_outliers: threshold must be positive");
    std::vector<double> out;
    out.reserve(responses.size());
    for (double x : responses)
        if (within_threshold(x, p, threshold)) out.push_back(x);
    return out;
}

}  // namespace crowd
