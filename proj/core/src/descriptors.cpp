#include "skcache/descriptors.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "byte_io.hpp"
#include "skcache/errors.hpp"

namespace skcache {

namespace {

// Guards floor(fraction * T) against 1/3-style fractions landing just
// below an integer.
constexpr double kFractionSlack = 1e-9;

std::size_t resolve_boundary(double fraction, std::size_t frames) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(frames) + kFractionSlack));
}

}  // namespace

PartitionScheme::PartitionScheme(std::vector<SpatialGroup> spatial,
                                 std::vector<TemporalSegment> temporal)
    : spatial_(std::move(spatial)), temporal_(std::move(temporal)) {
    for (const auto& g : spatial_) {
        if (g.joints.empty()) throw ValidationError("spatial group '" + g.name + "' is empty");
    }
    if (temporal_.empty()) throw ValidationError("partition scheme needs >= 1 temporal segment");
    double expected_start = 0.0;
    for (const auto& s : temporal_) {
        if (std::abs(s.start - expected_start) > kFractionSlack || !(s.end > s.start)) {
            throw ValidationError("temporal segment '" + s.name +
                                  "' breaks the contiguous [0,1] tiling");
        }
        expected_start = s.end;
    }
    if (std::abs(expected_start - 1.0) > kFractionSlack) {
        throw ValidationError("temporal segments do not end at 1.0");
    }
}

std::vector<FrameRange> PartitionScheme::resolve_segments(std::size_t frames) const {
    if (frames < temporal_.size()) {
        throw ValidationError("sequence has " + std::to_string(frames) + " frames, fewer than " +
                              std::to_string(temporal_.size()) + " temporal segments");
    }
    std::vector<FrameRange> out;
    out.reserve(temporal_.size());
    std::size_t begin = 0;
    for (std::size_t z = 0; z < temporal_.size(); ++z) {
        // 1-based [floor(start*T)+1, floor(end*T)] == 0-based [floor(start*T), floor(end*T)).
        const std::size_t end =
            z + 1 == temporal_.size() ? frames : resolve_boundary(temporal_[z].end, frames);
        if (end <= begin) {
            throw ValidationError("temporal segment '" + temporal_[z].name + "' is empty for T=" +
                                  std::to_string(frames));
        }
        out.push_back({begin, end});
        begin = end;
    }
    return out;
}

void PartitionScheme::check_joints(std::size_t joints) const {
    for (const auto& g : spatial_) {
        for (auto v : g.joints) {
            if (v >= joints) {
                throw ValidationError("group '" + g.name + "' references joint " +
                                      std::to_string(v) + " but V=" + std::to_string(joints));
            }
        }
    }
}

std::string PartitionScheme::to_json() const {
    nlohmann::ordered_json j;
    j["spatial_groups"] = nlohmann::ordered_json::object();
    for (const auto& g : spatial_) j["spatial_groups"][g.name] = g.joints;
    j["temporal_segments"] = nlohmann::ordered_json::object();
    for (const auto& s : temporal_) j["temporal_segments"][s.name] = {s.start, s.end};
    return j.dump(2);
}

PartitionScheme PartitionScheme::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::ordered_json::parse(text);
        std::vector<SpatialGroup> spatial;
        for (const auto& [name, joints] : j.at("spatial_groups").items()) {
            spatial.push_back({name, joints.get<std::vector<std::uint32_t>>()});
        }
        std::vector<TemporalSegment> temporal;
        for (const auto& [name, range] : j.at("temporal_segments").items()) {
            if (!range.is_array() || range.size() != 2) {
                throw ValidationError("segment '" + name + "' must be [start, end]");
            }
            temporal.push_back({name, range[0].get<double>(), range[1].get<double>()});
        }
        return PartitionScheme(std::move(spatial), std::move(temporal));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("partition scheme: ") + e.what());
    }
}

PartitionScheme PartitionScheme::load(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path.string());
    return from_json(std::string(bytes.begin(), bytes.end()));
}

PartitionScheme default_scheme() {
    return PartitionScheme(
        {
            {"head", {2, 3, 4, 8, 20}},
            {"torso", {0, 1, 4, 8, 12, 16, 20}},
            {"arms", {4, 5, 6, 7, 8, 9, 10, 11, 21, 22, 23, 24}},
            {"feet", {0, 12, 13, 14, 15, 16, 17, 18, 19}},
        },
        {
            {"begin", 0.0, 1.0 / 3.0},
            {"middle", 1.0 / 3.0, 2.0 / 3.0},
            {"end", 2.0 / 3.0, 1.0},
        });
}

DescriptorSet::DescriptorSet(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), values_(rows * dim, 0.0f) {}

DescriptorSet::DescriptorSet(std::size_t rows, std::size_t dim, std::vector<float> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
    if (values_.size() != rows * dim) {
        throw GeometryError("descriptor values do not match " + std::to_string(rows) + "x" +
                            std::to_string(dim));
    }
}

DescriptorSet extract_descriptors(const FeatureTensor& features, const PartitionScheme& scheme) {
    const auto& dims = features.dims();
    const std::size_t N = dims.channels;
    const std::size_t T = dims.frames;
    const std::size_t V = dims.joints;
    scheme.check_joints(V);
    const auto segments = scheme.resolve_segments(T);
    const std::size_t P = scheme.spatial_count();
    const std::size_t Z = scheme.temporal_count();

    DescriptorSet out(scheme.descriptor_count(), N);
    const auto data = features.data();

    std::vector<double> frame_sums(T);
    std::vector<double> joint_sums(V);
    for (std::size_t n = 0; n < N; ++n) {
        // One pass over the N-th channel gives per-frame and per-joint sums;
        // every descriptor is a mean over a union of those.
        std::fill(frame_sums.begin(), frame_sums.end(), 0.0);
        std::fill(joint_sums.begin(), joint_sums.end(), 0.0);
        const float* channel = data.data() + n * T * V;
        for (std::size_t t = 0; t < T; ++t) {
            const float* frame = channel + t * V;
            double acc = 0.0;
            for (std::size_t v = 0; v < V; ++v) {
                acc += frame[v];
                joint_sums[v] += frame[v];
            }
            frame_sums[t] = acc;
        }

        double total = 0.0;
        for (double s : frame_sums) total += s;
        out.row(0)[n] = static_cast<float>(total / static_cast<double>(T * V));

        for (std::size_t p = 0; p < P; ++p) {
            const auto& joints = scheme.spatial()[p].joints;
            double acc = 0.0;
            for (auto v : joints) acc += joint_sums[v];
            out.row(1 + p)[n] = static_cast<float>(acc / static_cast<double>(joints.size() * T));
        }

        for (std::size_t z = 0; z < Z; ++z) {
            double acc = 0.0;
            for (std::size_t t = segments[z].begin; t < segments[z].end; ++t) acc += frame_sums[t];
            out.row(1 + P + z)[n] =
                static_cast<float>(acc / static_cast<double>(segments[z].size() * V));
        }
    }
    return out;
}

}  // namespace skcache
