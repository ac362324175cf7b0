#include "vmflow/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vmflow/error.hpp"

namespace vmflow {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::kFormat, "checkpoint: truncated data");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    if (name.size() > 0xFFFF) throw Error(ErrorCode::kInvalidArgument, "checkpoint: name too long");
    if (tensor.rank() > 0xFF) throw Error(ErrorCode::kInvalidArgument, "checkpoint: rank too large for " + name);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.rank()));
    for (auto d : tensor.shape()) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    for (float v : tensor.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      !std::equal(std::begin(kCheckpointMagic), std::end(kCheckpointMagic), bytes.begin(),
                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    throw Error(ErrorCode::kFormat, "checkpoint: bad magic");
  }
  Reader in(bytes);
  in.get_string(sizeof(kCheckpointMagic));
  const auto count = in.get_le<std::uint32_t>();
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = in.get_le<std::uint16_t>();
    std::string name = in.get_string(name_len);
    const auto rank = in.get_le<std::uint8_t>();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(in.get_le<std::uint64_t>());
    std::vector<float> data(shape_numel(shape));
    for (auto& v : data) v = std::bit_cast<float>(in.get_le<std::uint32_t>());
    tensors.push_back({std::move(name), Tensor::from_data(std::move(shape), std::move(data))});
  }
  if (!in.at_end()) throw Error(ErrorCode::kFormat, "checkpoint: trailing bytes");
  return tensors;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "checkpoint: cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "checkpoint: write failed for '" + path.string() + "'");
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "checkpoint: cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void assign_params(ParamStore& params, const std::vector<NamedTensor>& tensors) {
  for (auto& entry : params.entries()) {
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const NamedTensor& t) { return t.name == entry.name; });
    if (it == tensors.end()) throw Error(ErrorCode::kFormat, "checkpoint: missing parameter '" + entry.name + "'");
    if (it->tensor.shape() != entry.tensor.shape()) {
      throw Error(ErrorCode::kShapeMismatch, "checkpoint: parameter '" + entry.name + "' has shape " +
                                                 shape_str(it->tensor.shape()) + ", expected " +
                                                 shape_str(entry.tensor.shape()));
    }
    auto dst = entry.tensor.mutable_data();
    auto src = it->tensor.data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace vmflow
