#include "vquant/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace vquant {

Var<double> ParameterSet::add(std::string name, Tensor<double> init) {
  for (const auto& e : entries_) {
    if (e.name == name) throw std::invalid_argument("duplicate parameter name: " + name);
  }
  auto v = Var<double>::parameter(std::move(init));
  entries_.push_back({std::move(name), v});
  return v;
}

std::vector<Var<double>> ParameterSet::vars() const {
  std::vector<Var<double>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.var);
  return out;
}

const Var<double>& ParameterSet::at(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.var;
  }
  throw std::out_of_range("no parameter named " + name);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.var.value().size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.var.zero_grad();
}

Checkpoint Checkpoint::capture(const ParameterSet& params, std::string metadata) {
  Checkpoint c;
  c.metadata = std::move(metadata);
  for (const auto& e : params.entries()) c.tensors.push_back({e.name, e.var.value()});
  return c;
}

void Checkpoint::restore(ParameterSet& params) const {
  if (tensors.size() != params.entries().size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(tensors.size()) +
                          " tensors, model expects " + std::to_string(params.entries().size()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& entry = params.entries()[i];
    if (entry.name != tensors[i].name || !entry.var.value().same_shape(tensors[i].tensor)) {
      throw CheckpointError("checkpoint tensor '" + tensors[i].name + "' " +
                            shape_string(tensors[i].tensor.shape()) + " does not match parameter '" +
                            entry.name + "' " + shape_string(entry.var.value().shape()));
    }
    entry.var.mutable_value() = tensors[i].tensor;
  }
}

namespace {

constexpr char kMagic[4] = {'V', 'Q', 'C', 'K'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(bits);
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw CheckpointError("truncated checkpoint");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, Checkpoint::kVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  put_u32(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  out.insert(out.end(), ckpt.metadata.begin(), ckpt.metadata.end());
  for (const auto& [name, t] : ckpt.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (Eigen::Index i = 0; i < t.size(); ++i) put_f64(out, t[i]);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  if (in.str(4) != std::string(kMagic, 4)) throw CheckpointError("bad checkpoint magic");
  const auto version = in.u32();
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  const auto count = in.u32();
  c.metadata = in.str(in.u32());
  for (std::uint32_t n = 0; n < count; ++n) {
    NamedTensor nt;
    nt.name = in.str(in.u32());
    const auto rank = in.u32();
    if (rank == 0 || rank > 3) throw CheckpointError("bad tensor rank in checkpoint");
    Shape shape(rank);
    for (auto& d : shape) d = in.u32();
    Vector<double> values(shape_size(shape));
    for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = in.f64();
    nt.tensor = Tensor<double>(std::move(shape), std::move(values));
    c.tensors.push_back(std::move(nt));
  }
  if (!in.done()) throw CheckpointError("trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace vquant
