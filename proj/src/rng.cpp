#include "vtdl/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace vtdl {

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    // Rejection sampling over a multiple of n keeps the draw unbiased.
    std::uint64_t scaling = UINT64_MAX / n;
    std::uint64_t limit = n * scaling;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x / scaling;
}

double Rng::normal() {
    double u1 = 1.0 - uniform(); // (0,1], keeps log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::save_state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

void Rng::restore_state(const std::string& state) {
    std::istringstream in(state);
    in >> engine_;
    if (!in) throw std::runtime_error("Rng: invalid serialized state");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

} // namespace vtdl
