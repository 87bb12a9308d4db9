#pragma once

// Class-blocked, entropy-gated non-parametric cache.
//
// Each class owns a block of at most K entries. A new entry is appended
// while its block has room; once full, it replaces the block's
// highest-entropy entry only if its own entropy is strictly lower.
// Blocks are kept in insertion order (a replacement moves to the back), so
// among equal-entropy candidates the oldest is evicted first.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "skcache/descriptors.hpp"

namespace skcache {

struct CacheGeometry {
    std::uint32_t classes = 0;   // C
    std::uint32_t capacity = 0;  // K
    std::uint32_t spatial = 0;   // P
    std::uint32_t temporal = 0;  // Z
    std::uint32_t dim = 0;       // N

    std::size_t descriptor_count() const noexcept { return 1u + spatial + temporal; }
    friend bool operator==(const CacheGeometry&, const CacheGeometry&) = default;
};

struct CacheEntry {
    DescriptorSet key;
    std::uint32_t value_class = 0;  // dense form of the one-hot value
    float entropy = 0.0f;

    friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

struct Inserted {
    friend bool operator==(const Inserted&, const Inserted&) = default;
};
struct Replaced {
    float evicted_entropy = 0.0f;
    friend bool operator==(const Replaced&, const Replaced&) = default;
};
struct Rejected {
    friend bool operator==(const Rejected&, const Rejected&) = default;
};
using UpdateOutcome = std::variant<Inserted, Replaced, Rejected>;

class SkeletonCache {
public:
    /// Throws ValidationError if any geometry field is zero.
    explicit SkeletonCache(CacheGeometry geometry);
    SkeletonCache(std::uint32_t classes, std::uint32_t capacity, std::uint32_t spatial,
                  std::uint32_t temporal, std::uint32_t dim)
        : SkeletonCache(CacheGeometry{classes, capacity, spatial, temporal, dim}) {}

    const CacheGeometry& geometry() const noexcept { return geometry_; }

    UpdateOutcome update(CacheEntry entry);

    std::span<const CacheEntry> block(std::size_t cls) const { return blocks_.at(cls); }
    /// Per-entry L2 norms of each key row, parallel to block(cls).
    std::span<const std::vector<double>> block_norms(std::size_t cls) const {
        return norms_.at(cls);
    }

    std::size_t size() const noexcept;
    std::size_t key_bytes() const noexcept;

    /// Throws GeometryError when `key` does not match (P+Z+1) x N.
    void check_key(const DescriptorSet& key) const;

    std::vector<std::uint8_t> snapshot() const;
    static SkeletonCache restore(std::span<const std::uint8_t> bytes);
    /// Like restore(bytes) but also requires the stored geometry to equal `expected`.
    static SkeletonCache restore(std::span<const std::uint8_t> bytes, const CacheGeometry& expected);

    void save(const std::filesystem::path& path) const;
    static SkeletonCache load(const std::filesystem::path& path);

    friend bool operator==(const SkeletonCache& a, const SkeletonCache& b) {
        return a.geometry_ == b.geometry_ && a.blocks_ == b.blocks_;
    }

private:
    void append(std::size_t cls, CacheEntry entry);

    CacheGeometry geometry_;
    std::vector<std::vector<CacheEntry>> blocks_;
    std::vector<std::vector<std::vector<double>>> norms_;
};

inline constexpr std::uint32_t kCacheSnapshotVersion = 1;

std::size_t key_bytes(const SkeletonCache& cache);

}  // namespace skcache
