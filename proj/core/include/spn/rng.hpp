#ifndef SPN_RNG_HPP
#define SPN_RNG_HPP

#include <cstdint>

namespace spn {

// splitmix64: tiny, fast, and identical on every platform, unlike the
// standard <random> distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1]
    double next_positive() { return 1.0 - next_double(); }

    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // derive an independent stream (e.g. per purpose or per task)
    Rng split() { return Rng(next_u64()); }

private:
    std::uint64_t state_;
};

}  // namespace spn

#endif
