#pragma once

// Spatial/temporal partitioning and descriptor pooling. A feature tensor
// F (N x T x V) collapses into P + Z + 1 pooled N-vectors ordered
// [global, spatial_1..spatial_P, temporal_1..temporal_Z]; that matrix is
// both the cache key and the retrieval query.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "skcache/tensorio.hpp"

namespace skcache {

struct SpatialGroup {
    std::string name;
    std::vector<std::uint32_t> joints;  // 0-based joint indices; groups may overlap
};

/// Half-open fraction range [start, end) of the sequence. Resolved against
/// a concrete T as 1-based frames floor(start*T)+1 .. floor(end*T).
struct TemporalSegment {
    std::string name;
    double start = 0.0;
    double end = 1.0;
};

/// 0-based frame range [begin, end).
struct FrameRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const noexcept { return end - begin; }
    friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

class PartitionScheme {
public:
    /// Throws ValidationError when a group is empty or the segments do not
    /// tile [0, 1] contiguously in order.
    PartitionScheme(std::vector<SpatialGroup> spatial, std::vector<TemporalSegment> temporal);

    std::size_t spatial_count() const noexcept { return spatial_.size(); }   // P
    std::size_t temporal_count() const noexcept { return temporal_.size(); } // Z
    std::size_t descriptor_count() const noexcept { return 1 + spatial_.size() + temporal_.size(); }

    const std::vector<SpatialGroup>& spatial() const noexcept { return spatial_; }
    const std::vector<TemporalSegment>& temporal() const noexcept { return temporal_; }

    /// Frame ranges for a sequence of `frames` frames. Throws when any
    /// segment would be empty (in particular when T < Z).
    std::vector<FrameRange> resolve_segments(std::size_t frames) const;

    /// Throws ValidationError when a joint index is >= `joints`.
    void check_joints(std::size_t joints) const;

    /// Document shape: {"spatial_groups": {name: [joints...]},
    ///                  "temporal_segments": {name: [start, end]}}
    std::string to_json() const;
    static PartitionScheme from_json(const std::string& text);
    static PartitionScheme load(const std::filesystem::path& path);

private:
    std::vector<SpatialGroup> spatial_;
    std::vector<TemporalSegment> temporal_;
};

/// Kinect v2 25-joint scheme: head, torso, arms, feet; beginning, middle
/// and end thirds of the sequence.
PartitionScheme default_scheme();

/// (P+Z+1) x N descriptor matrix, row-major, 32-bit storage.
class DescriptorSet {
public:
    DescriptorSet() = default;
    DescriptorSet(std::size_t rows, std::size_t dim);
    DescriptorSet(std::size_t rows, std::size_t dim, std::vector<float> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const float> row(std::size_t d) const noexcept {
        return {values_.data() + d * dim_, dim_};
    }
    std::span<float> row(std::size_t d) noexcept { return {values_.data() + d * dim_, dim_}; }

    std::span<const float> values() const noexcept { return values_; }
    std::span<float> values() noexcept { return values_; }

    friend bool operator==(const DescriptorSet&, const DescriptorSet&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> values_;
};

DescriptorSet extract_descriptors(const FeatureTensor& features, const PartitionScheme& scheme);

}  // namespace skcache
