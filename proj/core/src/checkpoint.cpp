#include "predgame/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "predgame/errors.hpp"

namespace predgame::nn {

namespace {

constexpr char kMagic[4] = {'C', 'P', 'R', 'B'};

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::uint64_t v = 0;
  std::memcpy(&v, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  T out;
  std::memcpy(&out, &v, sizeof(T));
  return out;
}

void write_f64_le(std::ostream& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  write_le<std::uint64_t>(out, bits);
}

double read_f64_le(std::istream& in) {
  const std::uint64_t bits = read_le<std::uint64_t>(in);
  double value;
  std::memcpy(&value, &bits, sizeof(value));
  return value;
}

}  // namespace

void save_tensors(const std::string& path, const std::vector<ConstNamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactNotFoundError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  write_le<std::uint16_t>(out, kCheckpointVersion);
  for (const auto& nt : tensors) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(nt.name.size()));
    out.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(nt.tensor->shape.size()));
    for (std::size_t d : nt.tensor->shape) write_le<std::uint64_t>(out, d);
    for (double x : nt.tensor->data) write_f64_le(out, x);
  }
  if (!out) throw NumericalError("checkpoint write failed: " + path);
}

std::vector<std::pair<std::string, Tensor>> load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactNotFoundError("checkpoint not found: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ValidationError("bad checkpoint magic in " + path);
  const auto version = read_le<std::uint16_t>(in);
  if (version != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));

  std::vector<std::pair<std::string, Tensor>> tensors;
  while (in.peek() != std::ifstream::traits_type::eof()) {
    const auto name_len = read_le<std::uint32_t>(in);
    if (!in) throw ValidationError("truncated checkpoint: " + path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = read_le<std::uint32_t>(in);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(read_le<std::uint64_t>(in));
    Tensor t = Tensor::zeros(shape);
    for (double& x : t.data) x = read_f64_le(in);
    if (!in) throw ValidationError("truncated checkpoint: " + path);
    tensors.emplace_back(std::move(name), std::move(t));
  }
  return tensors;
}

namespace {

Tensor make_meta(const Policy& policy) {
  Tensor meta = Tensor::zeros({6});
  meta.data[0] = is_recurrent(policy) ? 1.0 : 0.0;
  meta.data[1] = policy_obs_dim(policy);
  meta.data[2] = policy_n_heads(policy);
  meta.data[3] = policy_n_actions(policy);
  meta.data[4] = policy_hidden_dim(policy);
  const auto activation =
      std::visit([](const auto& p) { return p.activation; }, policy);
  meta.data[5] = activation == Activation::Tanh ? 1.0 : 0.0;
  return meta;
}

}  // namespace

void save_policy(const std::string& path, const Policy& policy) {
  const Tensor meta = make_meta(policy);
  std::vector<ConstNamedTensor> tensors;
  tensors.push_back({"__meta", &meta});
  for (const auto& nt : policy_tensors(policy)) tensors.push_back(nt);
  save_tensors(path, tensors);
}

Policy load_policy(const std::string& path) {
  auto tensors = load_tensors(path);
  if (tensors.empty() || tensors.front().first != "__meta")
    throw ValidationError("policy checkpoint missing __meta: " + path);
  const Tensor& meta = tensors.front().second;
  if (meta.size() != 6) throw ValidationError("bad __meta tensor in " + path);
  const bool recurrent = meta.data[0] != 0.0;
  const int obs_dim = static_cast<int>(meta.data[1]);
  const int n_heads = static_cast<int>(meta.data[2]);
  const int n_actions = static_cast<int>(meta.data[3]);
  const int hidden = static_cast<int>(meta.data[4]);
  const Activation activation = meta.data[5] != 0.0 ? Activation::Tanh : Activation::Relu;

  Policy policy = recurrent
      ? Policy(RNNPolicy::create(obs_dim, n_heads, n_actions, hidden, activation))
      : Policy(FFPolicy::create(obs_dim, n_heads, n_actions, hidden, activation));

  auto named = policy_tensors(policy);
  if (named.size() != tensors.size() - 1)
    throw ValidationError("tensor count mismatch in " + path);
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& [name, tensor] = tensors[i + 1];
    if (name != named[i].name)
      throw ValidationError("tensor name mismatch in " + path + ": expected " + named[i].name +
                            ", got " + name);
    if (tensor.size() != named[i].tensor->size())
      throw ValidationError("tensor size mismatch for " + name + " in " + path);
    named[i].tensor->shape = tensor.shape;
    named[i].tensor->data = tensor.data;
  }
  return policy;
}

}  // namespace predgame::nn
