#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace arbe {

// mt19937_64 seeded through std::seed_seq from (seed, tag); portable across standard libraries.
class Rng {
public:
    Rng(std::uint64_t seed, std::string_view tag);

    std::uint64_t next() { return engine_(); }
    double uniform();                         // [0,1), 53 bits
    bool bernoulli(double p) { return uniform() < p; }
    std::size_t categorical(std::span<const double> p);
    double normal();                          // Box-Muller, one value per call

private:
    std::mt19937_64 engine_;
};

std::uint64_t tag_hash(std::string_view tag);

}  // namespace arbe
