#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace deepfeat {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Derives an independent stream seed from a master seed, a stage name and
/// any number of integer indices (run, tree, column...).
template <typename... Indices>
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                                    Indices... indices) {
    std::uint64_t h = detail::splitmix64(master ^ detail::fnv1a(stage));
    ((h = detail::splitmix64(h ^ static_cast<std::uint64_t>(indices))), ...);
    return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace deepfeat
