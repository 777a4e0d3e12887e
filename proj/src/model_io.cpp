#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tslab/denoiser.hpp"
#include "tslab/errors.hpp"

namespace tslab {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'D', 'N'};
constexpr std::uint32_t kMaxLayers = 1024;
constexpr std::uint32_t kMaxChannels = 4096;


class Writer {
 public:
  template <typename T>
  void put(T value) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    bytes.insert(bytes.end(), raw, raw + sizeof(T));
  }

  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  Reader(std::span<const unsigned char> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T))
      throw FormatError(std::string("truncated model file while reading ") + what, pos_);
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    T value;
    std::memcpy(&value, raw, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_;
};

}  // namespace

std::vector<unsigned char> serialize_model(const DenoiserModel& model) {
  model.validate();
  Writer w;
  w.bytes.insert(w.bytes.end(), kMagic, kMagic + 4);
  w.put<std::uint32_t>(kModelFormatVersion);
  w.put<std::uint32_t>(model.residual ? 1u : 0u);
  w.put<double>(model.sigma_trained);
  w.put<std::uint64_t>(model.seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& l : model.layers) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.in_channels));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.out_channels));
  }
  for (const auto& l : model.layers) {
    for (double v : l.weights) w.put<double>(v);
    for (double v : l.bias) w.put<double>(v);
  }
  return std::move(w.bytes);
}

DenoiserModel deserialize_model(std::span<const unsigned char> bytes) {
  if (bytes.size() < 4) throw FormatError("truncated model file while reading magic", 0);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic, expected TSDN", 0);
  Reader r(bytes, 4);
  const auto offset = [&r] { return r.pos(); };

  const auto version = r.get<std::uint32_t>("version");
  if (version != kModelFormatVersion)
    throw UnsupportedVersionError("unsupported model format version " + std::to_string(version) +
                                  " (expected " + std::to_string(kModelFormatVersion) + ")");
  const std::size_t flag_at = offset();
  const auto flag = r.get<std::uint32_t>("residual flag");
  if (flag > 1) throw FormatError("residual flag must be 0 or 1", flag_at);

  DenoiserModel model;
  model.residual = flag == 1;
  model.sigma_trained = r.get<double>("sigma");
  model.seed = r.get<std::uint64_t>("seed");
  const std::size_t count_at = offset();
  const auto layer_count = r.get<std::uint32_t>("layer count");
  if (layer_count < 2 || layer_count > kMaxLayers) throw FormatError("implausible layer count", count_at);

  std::uint64_t expected_doubles = 0;
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    const std::size_t dims_at = offset();
    ConvLayer l;
    l.in_channels = static_cast<int>(r.get<std::uint32_t>("layer dims"));
    l.out_channels = static_cast<int>(r.get<std::uint32_t>("layer dims"));
    if (l.in_channels < 1 || l.out_channels < 1 || static_cast<std::uint32_t>(l.in_channels) > kMaxChannels ||
        static_cast<std::uint32_t>(l.out_channels) > kMaxChannels)
      throw FormatError("implausible channel count", dims_at);
    if (i == 0 && l.in_channels != 1) throw FormatError("first layer must take 1 channel", dims_at);
    if (i > 0 && model.layers.back().out_channels != l.in_channels)
      throw FormatError("layer channel counts do not chain", dims_at);
    if (i + 1 == layer_count && l.out_channels != 1) throw FormatError("last layer must emit 1 channel", dims_at);
    expected_doubles += l.weight_count() + static_cast<std::size_t>(l.out_channels);
    model.layers.push_back(std::move(l));
  }
  if (r.remaining() < expected_doubles * sizeof(double))
    throw FormatError("truncated weight payload", offset() + r.remaining());
  for (auto& l : model.layers) {
    l.weights.resize(l.weight_count());
    for (double& v : l.weights) v = r.get<double>("weights");
    l.bias.resize(static_cast<std::size_t>(l.out_channels));
    for (double& v : l.bias) v = r.get<double>("bias");
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after weight payload", offset());
  if (!model.all_finite()) throw FormatError("non-finite weight in payload", 4);
  return model;
}

void save_model(const DenoiserModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot open model file for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileError("failed writing model file: " + path.string());
}

DenoiserModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open model file: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace tslab
