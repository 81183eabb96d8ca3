#include "holescope/dataset_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace holescope {
namespace {

constexpr char kMagic[4] = {'C', 'H', 'D', 'S'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kFlagLocations = 1u << 0;
constexpr std::uint16_t kFlagLabels = 1u << 1;

// The container is little-endian by definition; this implementation targets
// little-endian hosts.
static_assert(std::endian::native == std::endian::little,
              "CHDS serialization assumes a little-endian host");

class Writer {
public:
    explicit Writer(std::ofstream& out) : out_(out) {}

    template <typename T>
    void put(T value) {
        out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }

private:
    std::ofstream& out_;
};

class Reader {
public:
    Reader(const char* data, std::size_t size) : data_(data), size_(size) {}

    template <typename T>
    T get() {
        require(sizeof(T));
        T value;
        std::memcpy(&value, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    void read_block(void* dst, std::size_t bytes) {
        require(bytes);
        std::memcpy(dst, data_ + pos_, bytes);
        pos_ += bytes;
    }

    std::size_t remaining() const { return size_ - pos_; }

private:
    void require(std::size_t bytes) const {
        if (pos_ + bytes > size_)
            throw DatasetTruncatedError("CHDS: file ends inside a declared block");
    }

    const char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path.string());

    const std::uint32_t m = static_cast<std::uint32_t>(ds.num_samples());
    const std::uint32_t n = static_cast<std::uint32_t>(ds.array.num_antennas);
    const std::uint32_t f = static_cast<std::uint32_t>(ds.array.num_subcarriers);

    std::uint16_t flags = 0;
    if (ds.hidden_locations) flags |= kFlagLocations;
    if (ds.ch_labels) flags |= kFlagLabels;

    Writer w(out);
    out.write(kMagic, 4);
    w.put(kVersion);
    w.put(flags);
    w.put(m);
    w.put(n);
    w.put(f);
    w.put(ds.array.carrier_frequency_hz);
    w.put(ds.array.bandwidth_hz);
    w.put(static_cast<std::uint32_t>(ds.grid.rows));
    w.put(static_cast<std::uint32_t>(ds.grid.cols));
    w.put(ds.grid.spacing);
    w.put(ds.grid.origin.x);
    w.put(ds.grid.origin.y);
    w.put(ds.grid.origin.z);
    w.put(ds.grid.ue_height);

    for (const ChannelSample& sample : ds.samples) {
        if (sample.H.rows() != static_cast<Eigen::Index>(n) ||
            sample.H.cols() != static_cast<Eigen::Index>(f))
            throw std::runtime_error("save_dataset: channel dimensions disagree with config");
        for (Eigen::Index p = 0; p < sample.H.rows(); ++p) {
            for (Eigen::Index q = 0; q < sample.H.cols(); ++q) {
                w.put(static_cast<float>(sample.H(p, q).real()));
                w.put(static_cast<float>(sample.H(p, q).imag()));
            }
        }
    }

    if (ds.hidden_locations) {
        for (const Location& loc : *ds.hidden_locations) {
            w.put(loc.x);
            w.put(loc.y);
            w.put(loc.z);
        }
    }
    if (ds.ch_labels) {
        for (std::uint8_t label : *ds.ch_labels) w.put(label);
    }

    if (!out) throw std::runtime_error("save_dataset: write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path.string());
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<char> bytes(static_cast<std::size_t>(size));
    in.read(bytes.data(), size);
    if (!in) throw std::runtime_error("load_dataset: read failed for " + path.string());

    Reader r(bytes.data(), bytes.size());

    char magic[4];
    r.read_block(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw DatasetFormatError("CHDS: bad magic bytes");

    const std::uint16_t version = r.get<std::uint16_t>();
    if (version != kVersion)
        throw DatasetVersionError("CHDS: unsupported version " + std::to_string(version));

    const std::uint16_t flags = r.get<std::uint16_t>();
    const std::uint32_t m = r.get<std::uint32_t>();
    const std::uint32_t n = r.get<std::uint32_t>();
    const std::uint32_t f = r.get<std::uint32_t>();

    Dataset ds;
    ds.array.num_antennas = static_cast<int>(n);
    ds.array.carrier_frequency_hz = r.get<double>();
    ds.array.bandwidth_hz = r.get<double>();
    ds.array.num_subcarriers = static_cast<int>(f);
    ds.grid.rows = static_cast<int>(r.get<std::uint32_t>());
    ds.grid.cols = static_cast<int>(r.get<std::uint32_t>());
    ds.grid.spacing = r.get<double>();
    ds.grid.origin.x = r.get<double>();
    ds.grid.origin.y = r.get<double>();
    ds.grid.origin.z = r.get<double>();
    ds.grid.ue_height = r.get<double>();

    if (n == 0 || f == 0) throw DatasetFormatError("CHDS: zero channel dimensions");
    if (static_cast<std::uint64_t>(ds.grid.rows) * static_cast<std::uint64_t>(ds.grid.cols) != m)
        throw DatasetFormatError("CHDS: sample count disagrees with grid dimensions");

    ds.samples.resize(m);
    for (std::uint32_t i = 0; i < m; ++i) {
        ChannelSample& sample = ds.samples[i];
        sample.sample_id = static_cast<int>(i);
        sample.H.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
        for (std::uint32_t p = 0; p < n; ++p) {
            for (std::uint32_t q = 0; q < f; ++q) {
                const double re = r.get<float>();
                const double im = r.get<float>();
                sample.H(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = {re, im};
            }
        }
    }

    if (flags & kFlagLocations) {
        std::vector<Location> locations(m);
        for (std::uint32_t i = 0; i < m; ++i) {
            locations[i].x = r.get<double>();
            locations[i].y = r.get<double>();
            locations[i].z = r.get<double>();
        }
        ds.hidden_locations = std::move(locations);
    }
    if (flags & kFlagLabels) {
        std::vector<std::uint8_t> labels(m);
        if (m > 0) r.read_block(labels.data(), labels.size());
        ds.ch_labels = std::move(labels);
    }

    if (r.remaining() != 0)
        throw DatasetFormatError("CHDS: trailing bytes after the declared blocks");

    return ds;
}

}  // namespace holescope
