#include "skcache/cache.hpp"

#include <cmath>
#include <string>

#include "byte_io.hpp"
#include "skcache/errors.hpp"

namespace skcache {

namespace {

constexpr std::string_view kSnapshotMagic = "SKCC";

std::vector<double> row_norms(const DescriptorSet& key) {
    std::vector<double> norms(key.rows());
    for (std::size_t d = 0; d < key.rows(); ++d) {
        double sq = 0.0;
        for (float v : key.row(d)) sq += static_cast<double>(v) * v;
        norms[d] = std::sqrt(sq);
    }
    return norms;
}

}  // namespace

SkeletonCache::SkeletonCache(CacheGeometry geometry) : geometry_(geometry) {
    if (geometry_.classes == 0 || geometry_.capacity == 0 || geometry_.spatial == 0 ||
        geometry_.temporal == 0 || geometry_.dim == 0) {
        throw ValidationError("cache geometry fields C, K, P, Z, N must all be >= 1");
    }
    blocks_.resize(geometry_.classes);
    norms_.resize(geometry_.classes);
}

void SkeletonCache::check_key(const DescriptorSet& key) const {
    if (key.rows() != geometry_.descriptor_count() || key.dim() != geometry_.dim) {
        throw GeometryError("descriptor set is " + std::to_string(key.rows()) + "x" +
                            std::to_string(key.dim()) + ", cache expects " +
                            std::to_string(geometry_.descriptor_count()) + "x" +
                            std::to_string(geometry_.dim));
    }
}

void SkeletonCache::append(std::size_t cls, CacheEntry entry) {
    norms_[cls].push_back(row_norms(entry.key));
    blocks_[cls].push_back(std::move(entry));
}

UpdateOutcome SkeletonCache::update(CacheEntry entry) {
    check_key(entry.key);
    if (entry.value_class >= geometry_.classes) {
        throw GeometryError("entry class " + std::to_string(entry.value_class) +
                            " out of range for C=" + std::to_string(geometry_.classes));
    }
    if (!(entry.entropy >= 0.0f) || !std::isfinite(entry.entropy)) {
        throw ValidationError("entry entropy must be finite and >= 0");
    }
    if (entry.entropy > std::log(static_cast<double>(geometry_.classes)) + 1e-5) {
        throw ValidationError("entry entropy exceeds ln C");
    }
    const std::size_t cls = entry.value_class;
    auto& block = blocks_[cls];
    if (block.size() < geometry_.capacity) {
        append(cls, std::move(entry));
        return Inserted{};
    }

    // Strict '>' keeps the earliest (oldest) of several equal maxima.
    std::size_t worst = 0;
    for (std::size_t i = 1; i < block.size(); ++i) {
        if (block[i].entropy > block[worst].entropy) worst = i;
    }
    const float evicted = block[worst].entropy;
    if (!(entry.entropy < evicted)) return Rejected{};

    block.erase(block.begin() + static_cast<std::ptrdiff_t>(worst));
    norms_[cls].erase(norms_[cls].begin() + static_cast<std::ptrdiff_t>(worst));
    append(cls, std::move(entry));
    return Replaced{evicted};
}

std::size_t SkeletonCache::size() const noexcept {
    std::size_t n = 0;
    for (const auto& b : blocks_) n += b.size();
    return n;
}

std::size_t SkeletonCache::key_bytes() const noexcept {
    return size() * geometry_.descriptor_count() * geometry_.dim * sizeof(float);
}

std::size_t key_bytes(const SkeletonCache& cache) { return cache.key_bytes(); }

// SKCC: magic, u32 version, u32 C/K/P/Z/N, then per block
// u32 count and entries (u32 value_class, f32 entropy, descriptor floats).
std::vector<std::uint8_t> SkeletonCache::snapshot() const {
    detail::ByteWriter w;
    w.bytes(kSnapshotMagic);
    w.u32(kCacheSnapshotVersion);
    w.u32(geometry_.classes);
    w.u32(geometry_.capacity);
    w.u32(geometry_.spatial);
    w.u32(geometry_.temporal);
    w.u32(geometry_.dim);
    for (const auto& block : blocks_) {
        w.u32(static_cast<std::uint32_t>(block.size()));
        for (const auto& e : block) {
            w.u32(e.value_class);
            w.f32(e.entropy);
            w.f32s(e.key.values());
        }
    }
    return w.take();
}

SkeletonCache SkeletonCache::restore(std::span<const std::uint8_t> bytes) {
    using Kind = ParseError::Kind;
    detail::ByteReader r(bytes);
    if (r.remaining() < kSnapshotMagic.size() ||
        r.bytes(kSnapshotMagic.size(), "magic") != kSnapshotMagic) {
        throw ParseError(Kind::BadMagic, "not an SKCC snapshot (bad magic)");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kCacheSnapshotVersion) {
        throw ParseError(Kind::BadVersion, "unsupported SKCC version " + std::to_string(version));
    }
    CacheGeometry g;
    g.classes = r.u32("C");
    g.capacity = r.u32("K");
    g.spatial = r.u32("P");
    g.temporal = r.u32("Z");
    g.dim = r.u32("N");
    SkeletonCache cache(g);
    const std::size_t rows = g.descriptor_count();
    for (std::uint32_t c = 0; c < g.classes; ++c) {
        const std::string what = "block " + std::to_string(c);
        const std::uint32_t count = r.u32(what);
        if (count > g.capacity) {
            throw ParseError(Kind::InvalidField, what + " holds more than K entries");
        }
        for (std::uint32_t i = 0; i < count; ++i) {
            CacheEntry e;
            e.value_class = r.u32(what);
            e.entropy = r.f32(what);
            if (e.value_class != c) {
                throw ParseError(Kind::InvalidField, what + " contains an entry of another class");
            }
            if (!std::isfinite(e.entropy) || e.entropy < 0.0f) {
                throw ParseError(Kind::NonFinite, what + ": invalid entropy");
            }
            std::vector<float> values(rows * g.dim);
            r.f32s(values, what);
            for (float v : values) {
                if (!std::isfinite(v)) throw ParseError(Kind::NonFinite, what + ": NaN/Inf key");
            }
            e.key = DescriptorSet(rows, g.dim, std::move(values));
            cache.append(c, std::move(e));
        }
    }
    if (r.remaining() != 0) {
        throw ParseError(Kind::InvalidField, "trailing bytes after last cache block");
    }
    return cache;
}

SkeletonCache SkeletonCache::restore(std::span<const std::uint8_t> bytes,
                                     const CacheGeometry& expected) {
    auto cache = restore(bytes);
    if (!(cache.geometry() == expected)) {
        const auto& g = cache.geometry();
        throw GeometryError("snapshot geometry C=" + std::to_string(g.classes) +
                            " K=" + std::to_string(g.capacity) + " P=" + std::to_string(g.spatial) +
                            " Z=" + std::to_string(g.temporal) + " N=" + std::to_string(g.dim) +
                            " does not match the expected geometry");
    }
    return cache;
}

void SkeletonCache::save(const std::filesystem::path& path) const {
    detail::write_file_bytes(path.string(), snapshot());
}

SkeletonCache SkeletonCache::load(const std::filesystem::path& path) {
    return restore(detail::read_file_bytes(path.string()));
}

}  // namespace skcache
