#include "stdsh/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>

namespace stdsh {
namespace {

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value & 0xFF));
    value = static_cast<T>(value >> 8);
  }
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw std::runtime_error("checkpoint: truncated record");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(in[pos + i]) << (8 * i);
  pos += sizeof(T);
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + kMagicLen);
  for (const auto& [name, t] : tensors) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw std::invalid_argument("checkpoint: name too long");
    if (t.rank() > std::numeric_limits<std::uint8_t>::max()) throw std::invalid_argument("checkpoint: rank too large");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) {
      if (d > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("checkpoint: dim too large");
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (double v : t.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagicLen || std::memcmp(bytes.data(), kCheckpointMagic, kMagicLen) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  std::vector<NamedTensor> out;
  std::size_t pos = kMagicLen;
  while (pos < bytes.size()) {
    const auto len = get_le<std::uint16_t>(bytes, pos);
    if (pos + len > bytes.size()) throw std::runtime_error("checkpoint: truncated name");
    std::string name(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
    const auto rank = get_le<std::uint8_t>(bytes, pos);
    if (rank == 0) throw std::runtime_error("checkpoint: tensor '" + name + "' has rank 0");
    Shape shape(rank);
    for (auto& d : shape) d = get_le<std::uint32_t>(bytes, pos);
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
    out.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void assign_checkpoint(const std::vector<NamedTensor>& source, std::vector<NamedTensor>& target) {
  for (auto& [name, t] : target) {
    auto it = std::find_if(source.begin(), source.end(),
                           [&](const NamedTensor& s) { return s.name == name; });
    if (it == source.end()) throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
    if (it->value.shape() != t.shape()) {
      throw std::runtime_error("checkpoint: tensor '" + name + "' has shape " +
                               shape_to_string(it->value.shape()) + ", expected " +
                               shape_to_string(t.shape()));
    }
    std::copy(it->value.data().begin(), it->value.data().end(), t.data().begin());
  }
}

}  // namespace stdsh
