#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nanotwin {

/// SplitMix64 finalizer. Used to turn (seed, index) pairs into independent
/// sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Splitting rule: child i of `seed` is mix64(seed ^ mix64(i + 1)).
constexpr std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed ^ mix64(index + 1));
}

/// FNV-1a over a tag, so named streams ("placement", "readout") get distinct seeds.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t split_seed(std::uint64_t seed, std::string_view tag) noexcept {
    return mix64(seed ^ tag_hash(tag));
}

/// A seeded stream of sub-seeds. The cursor is part of session state so a
/// replay reproduces the exact same sequence.
class SeedStream {
public:
    explicit SeedStream(std::uint64_t root = 0, std::uint64_t cursor = 0)
        : root_(root), cursor_(cursor) {}

    std::uint64_t next() noexcept { return split_seed(root_, cursor_++); }

    std::uint64_t root() const noexcept { return root_; }
    std::uint64_t cursor() const noexcept { return cursor_; }

    friend bool operator==(const SeedStream&, const SeedStream&) = default;

private:
    std::uint64_t root_;
    std::uint64_t cursor_;
};

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(mix64(seed)); }

}  // namespace nanotwin
