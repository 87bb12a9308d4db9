#pragma once

// Feature/sample data model, the SKC1 stream container, and a seeded
// synthetic stream generator.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace skcache {

struct TensorDims {
    std::uint32_t channels = 0;  // N
    std::uint32_t frames = 0;    // T
    std::uint32_t joints = 0;    // V

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(channels) * frames * joints;
    }
    bool valid() const noexcept { return channels >= 1 && frames >= 1 && joints >= 1; }

    friend bool operator==(const TensorDims&, const TensorDims&) = default;
};

/// Person-averaged backbone features F, shape N x T x V, row-major.
class FeatureTensor {
public:
    FeatureTensor() = default;
    /// Zero-filled tensor.
    explicit FeatureTensor(TensorDims dims);
    FeatureTensor(TensorDims dims, std::vector<float> data);

    const TensorDims& dims() const noexcept { return dims_; }
    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    float at(std::size_t n, std::size_t t, std::size_t v) const noexcept {
        return data_[(n * dims_.frames + t) * dims_.joints + v];
    }
    float& at(std::size_t n, std::size_t t, std::size_t v) noexcept {
        return data_[(n * dims_.frames + t) * dims_.joints + v];
    }

    /// Throws ValidationError on a size mismatch or a non-finite value.
    void validate() const;

    friend bool operator==(const FeatureTensor&, const FeatureTensor&) = default;

private:
    TensorDims dims_{};
    std::vector<float> data_;
};

struct SampleRecord {
    FeatureTensor features;
    std::vector<float> zero_shot_logits;
    std::uint32_t true_label = 0;
    bool seen = false;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct StreamContainer {
    std::vector<std::string> class_names;
    TensorDims dims{};
    std::vector<SampleRecord> samples;

    std::size_t class_count() const noexcept { return class_names.size(); }

    /// Checks unique class names, homogeneous dims, logit arity and label range.
    void validate() const;

    friend bool operator==(const StreamContainer&, const StreamContainer&) = default;
};

inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 28;

std::vector<std::uint8_t> encode_container(const StreamContainer& container);
StreamContainer decode_container(std::span<const std::uint8_t> bytes);

void write_container(const std::filesystem::path& path, const StreamContainer& container);
StreamContainer read_container(const std::filesystem::path& path);

struct SyntheticConfig {
    std::uint32_t classes = 10;
    TensorDims dims{64, 60, 25};
    double proto_sigma = 1.0;
    double noise_sigma = 0.5;
    double logit_sigma = 0.5;
    std::uint64_t seed = 0;
    std::uint32_t samples_per_class = 30;
    /// Classes [0, seen_classes) are flagged as seen (GZSL bookkeeping).
    std::uint32_t seen_classes = 0;

    void validate() const;
};

SyntheticConfig load_synthetic_config(const std::filesystem::path& path);
SyntheticConfig parse_synthetic_config(const std::string& json_text);
std::string synthetic_config_to_json(const SyntheticConfig& config);

/// Draws samples one at a time in a seed-determined shuffled class order.
/// Each sample is its class prototype plus isotropic Gaussian noise; the
/// zero-shot logits are the negative RMS distance to every prototype plus
/// Gaussian logit noise.
class SyntheticStream {
public:
    explicit SyntheticStream(const SyntheticConfig& config);

    std::size_t total() const noexcept { return order_.size(); }
    std::size_t position() const noexcept { return cursor_; }
    std::optional<SampleRecord> next();

    const std::vector<std::string>& class_names() const noexcept { return names_; }
    const FeatureTensor& prototype(std::size_t cls) const { return prototypes_.at(cls); }

private:
    SyntheticConfig config_;
    std::mt19937_64 rng_;
    std::vector<std::string> names_;
    std::vector<FeatureTensor> prototypes_;
    std::vector<std::uint32_t> order_;
    std::size_t cursor_ = 0;
};

StreamContainer generate_synthetic(const SyntheticConfig& config);

}  // namespace skcache
