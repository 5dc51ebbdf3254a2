#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace crowd {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// Counter-based seed for work unit `index` of stream `stream`. Independent of
// scheduling, so parallel and serial runs draw identical numbers.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept;

// FNV-1a, used to turn labels (question codes etc.) into stream ids.
std::uint64_t stream_id(std::string_view label) noexcept;
std::uint64_t stream_id(std::string_view label, std::uint64_t salt) noexcept;

// mt19937_64 with hand-written distributions: the std:: distributions are not
// specified bit-for-bit, so results would differ across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }
    double uniform();                     // [0, 1), 53 bits
    std::uint64_t below(std::uint64_t n);  // [0, n), unbiased
    double normal();                      // Box-Muller
    int integer(int lo, int hi);          // [lo, hi]

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Moves a uniform random k-subset of v into v[0..k) (partial Fisher-Yates).
template <class T>
void partial_shuffle(Rng& rng, std::vector<T>& v, std::size_t k) {
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(v[i], v[j]);
    }
}

}  // namespace crowd
