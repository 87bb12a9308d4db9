#include "skcache/tensorio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "byte_io.hpp"
#include "skcache/errors.hpp"

namespace skcache {

namespace detail {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on '" + path + "'");
    return bytes;
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace detail

namespace {

constexpr std::string_view kMagic = "SKC1";

bool all_finite(std::span<const float> values) {
    return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace

FeatureTensor::FeatureTensor(TensorDims dims) : dims_(dims), data_(dims.size(), 0.0f) {}

FeatureTensor::FeatureTensor(TensorDims dims, std::vector<float> data)
    : dims_(dims), data_(std::move(data)) {}

void FeatureTensor::validate() const {
    if (!dims_.valid()) {
        throw ValidationError("feature tensor dims must all be >= 1");
    }
    if (data_.size() != dims_.size()) {
        throw ValidationError("feature tensor holds " + std::to_string(data_.size()) +
                              " values, dims require " + std::to_string(dims_.size()));
    }
    if (!all_finite(data_)) throw ValidationError("feature tensor contains NaN/Inf");
}

void StreamContainer::validate() const {
    if (class_names.empty()) throw ValidationError("container declares no classes");
    std::set<std::string> unique(class_names.begin(), class_names.end());
    if (unique.size() != class_names.size()) {
        throw ValidationError("container class names are not unique");
    }
    for (const auto& name : class_names) {
        if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw ValidationError("class name longer than 65535 bytes");
        }
    }
    if (!dims.valid()) throw ValidationError("container dims must all be >= 1");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const std::string where = "sample " + std::to_string(i) + ": ";
        if (s.features.dims() != dims) throw ValidationError(where + "dims differ from container");
        s.features.validate();
        if (s.zero_shot_logits.size() != class_names.size()) {
            throw ValidationError(where + "logit count " +
                                  std::to_string(s.zero_shot_logits.size()) +
                                  " != class count " + std::to_string(class_names.size()));
        }
        if (!all_finite(s.zero_shot_logits)) throw ValidationError(where + "non-finite logit");
        if (s.true_label >= class_names.size()) {
            throw ValidationError(where + "label " + std::to_string(s.true_label) +
                                  " out of range");
        }
    }
}

std::vector<std::uint8_t> encode_container(const StreamContainer& container) {
    container.validate();
    detail::ByteWriter w;
    w.bytes(kMagic);
    w.u32(kContainerVersion);
    w.u32(static_cast<std::uint32_t>(container.class_count()));
    w.u32(static_cast<std::uint32_t>(container.samples.size()));
    w.u32(container.dims.channels);
    w.u32(container.dims.frames);
    w.u32(container.dims.joints);
    for (const auto& name : container.class_names) {
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.bytes(name);
    }
    for (const auto& s : container.samples) {
        w.u32(s.true_label);
        w.u8(s.seen ? 1 : 0);
        w.f32s(s.zero_shot_logits);
        w.f32s(s.features.data());
    }
    return w.take();
}

StreamContainer decode_container(std::span<const std::uint8_t> bytes) {
    using Kind = ParseError::Kind;
    detail::ByteReader r(bytes);

    if (r.remaining() < kMagic.size() || r.bytes(kMagic.size(), "magic") != kMagic) {
        throw ParseError(Kind::BadMagic, "not an SKC1 container (bad magic)");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kContainerVersion) {
        throw ParseError(Kind::BadVersion,
                         "unsupported SKC1 version " + std::to_string(version));
    }
    StreamContainer c;
    const std::uint32_t class_count = r.u32("class count");
    const std::uint32_t sample_count = r.u32("sample count");
    c.dims.channels = r.u32("N");
    c.dims.frames = r.u32("T");
    c.dims.joints = r.u32("V");
    if (class_count == 0) throw ParseError(Kind::InvalidField, "class count is zero");
    if (!c.dims.valid()) throw ParseError(Kind::InvalidField, "zero-sized feature dims");

    c.class_names.reserve(class_count);
    for (std::uint32_t i = 0; i < class_count; ++i) {
        const std::string what = "class name " + std::to_string(i);
        const std::uint16_t len = r.u16(what);
        c.class_names.emplace_back(r.bytes(len, what));
    }
    if (std::set<std::string>(c.class_names.begin(), c.class_names.end()).size() != class_count) {
        throw ParseError(Kind::InvalidField, "duplicate class names");
    }

    const std::size_t feature_count = c.dims.size();
    const std::size_t record_bytes = 5 + 4 * (static_cast<std::size_t>(class_count) + feature_count);
    if (r.remaining() / record_bytes < sample_count) {
        // Report the first record that cannot be complete.
        const std::size_t full = r.remaining() / record_bytes;
        throw ParseError(Kind::Truncated,
                         "truncated at record " + std::to_string(full) + " of " +
                             std::to_string(sample_count));
    }
    c.samples.reserve(sample_count);
    for (std::uint32_t i = 0; i < sample_count; ++i) {
        const std::string what = "record " + std::to_string(i);
        SampleRecord s;
        s.true_label = r.u32(what);
        const std::uint8_t seen = r.u8(what);
        if (seen > 1) throw ParseError(Kind::InvalidField, what + ": seen flag not 0/1");
        s.seen = seen == 1;
        if (s.true_label >= class_count) {
            throw ParseError(Kind::InvalidField,
                             what + ": label " + std::to_string(s.true_label) + " out of range");
        }
        s.zero_shot_logits.resize(class_count);
        r.f32s(s.zero_shot_logits, what);
        std::vector<float> data(feature_count);
        r.f32s(data, what);
        if (!all_finite(s.zero_shot_logits) || !all_finite(data)) {
            throw ParseError(Kind::NonFinite, what + ": NaN/Inf payload");
        }
        s.features = FeatureTensor(c.dims, std::move(data));
        c.samples.push_back(std::move(s));
    }
    if (r.remaining() != 0) {
        throw ParseError(Kind::InvalidField,
                         std::to_string(r.remaining()) + " trailing bytes after last record");
    }
    return c;
}

void write_container(const std::filesystem::path& path, const StreamContainer& container) {
    const auto bytes = encode_container(container);
    detail::write_file_bytes(path.string(), bytes);
}

StreamContainer read_container(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path.string());
    return decode_container(bytes);
}

// ---------------------------------------------------------------------------
// Synthetic streams

void SyntheticConfig::validate() const {
    if (classes < 1) throw ValidationError("synthetic: classes must be >= 1");
    if (!dims.valid()) throw ValidationError("synthetic: N, T, V must be >= 1");
    if (!(proto_sigma >= 0) || !(noise_sigma >= 0) || !(logit_sigma >= 0)) {
        throw ValidationError("synthetic: sigmas must be >= 0");
    }
    if (seen_classes > classes) throw ValidationError("synthetic: seen_classes > classes");
}

SyntheticConfig parse_synthetic_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("synthetic config: ") + e.what());
    }
    SyntheticConfig c;
    try {
        c.classes = j.value("classes", c.classes);
        c.dims.channels = j.value("N", c.dims.channels);
        c.dims.frames = j.value("T", c.dims.frames);
        c.dims.joints = j.value("V", c.dims.joints);
        c.proto_sigma = j.value("proto_sigma", c.proto_sigma);
        c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
        c.logit_sigma = j.value("logit_sigma", c.logit_sigma);
        c.seed = j.value("seed", c.seed);
        c.samples_per_class = j.value("samples_per_class", c.samples_per_class);
        c.seen_classes = j.value("seen_classes", c.seen_classes);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("synthetic config: ") + e.what());
    }
    c.validate();
    return c;
}

SyntheticConfig load_synthetic_config(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path.string());
    return parse_synthetic_config(std::string(bytes.begin(), bytes.end()));
}

std::string synthetic_config_to_json(const SyntheticConfig& c) {
    nlohmann::ordered_json j;
    j["classes"] = c.classes;
    j["N"] = c.dims.channels;
    j["T"] = c.dims.frames;
    j["V"] = c.dims.joints;
    j["proto_sigma"] = c.proto_sigma;
    j["noise_sigma"] = c.noise_sigma;
    j["logit_sigma"] = c.logit_sigma;
    j["seed"] = c.seed;
    j["samples_per_class"] = c.samples_per_class;
    j["seen_classes"] = c.seen_classes;
    return j.dump(2);
}

SyntheticStream::SyntheticStream(const SyntheticConfig& config)
    : config_(config), rng_(config.seed) {
    config_.validate();
    std::normal_distribution<double> proto(0.0, 1.0);
    names_.reserve(config_.classes);
    prototypes_.reserve(config_.classes);
    for (std::uint32_t c = 0; c < config_.classes; ++c) {
        names_.push_back("class_" + std::to_string(c));
        FeatureTensor p(config_.dims);
        for (float& v : p.data()) v = static_cast<float>(config_.proto_sigma * proto(rng_));
        prototypes_.push_back(std::move(p));
    }
    order_.reserve(static_cast<std::size_t>(config_.classes) * config_.samples_per_class);
    for (std::uint32_t c = 0; c < config_.classes; ++c) {
        order_.insert(order_.end(), config_.samples_per_class, c);
    }
    std::shuffle(order_.begin(), order_.end(), rng_);
}

std::optional<SampleRecord> SyntheticStream::next() {
    if (cursor_ >= order_.size()) return std::nullopt;
    const std::uint32_t label = order_[cursor_++];
    std::normal_distribution<double> unit(0.0, 1.0);

    SampleRecord s;
    s.true_label = label;
    s.seen = label < config_.seen_classes;
    s.features = prototypes_[label];
    if (config_.noise_sigma > 0) {
        for (float& v : s.features.data()) {
            v = static_cast<float>(v + config_.noise_sigma * unit(rng_));
        }
    }
    const auto x = s.features.data();
    const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
    s.zero_shot_logits.resize(config_.classes);
    for (std::uint32_t c = 0; c < config_.classes; ++c) {
        const auto p = prototypes_[c].data();
        double sq = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = static_cast<double>(x[i]) - p[i];
            sq += d * d;
        }
        double logit = -std::sqrt(sq) * scale;
        if (config_.logit_sigma > 0) logit += config_.logit_sigma * unit(rng_);
        s.zero_shot_logits[c] = static_cast<float>(logit);
    }
    return s;
}

StreamContainer generate_synthetic(const SyntheticConfig& config) {
    SyntheticStream stream(config);
    StreamContainer c;
    c.class_names = stream.class_names();
    c.dims = config.dims;
    c.samples.reserve(stream.total());
    while (auto s = stream.next()) c.samples.push_back(std::move(*s));
    return c;
}

}  // namespace skcache
