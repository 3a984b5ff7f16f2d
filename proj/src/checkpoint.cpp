// Copyright 2026 The NDLP Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ndlp/training.hpp"

namespace ndlp {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(sizeof(float) == 4);

namespace {

constexpr char kMagic[4] = {'N', 'D', 'L', 'P'};
constexpr const char* kMomentM = "adam.m/";
constexpr const char* kMomentV = "adam.v/";

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  template <typename U>
  void uint(U v) {
    unsigned char b[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os_.write(reinterpret_cast<const char*>(b), sizeof(U));
  }
  void bytes(const std::string& s) {
    uint<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void f32(float v) { uint<std::uint32_t>(std::bit_cast<std::uint32_t>(v)); }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  Reader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  template <typename U>
  U uint() {
    unsigned char b[sizeof(U)];
    read(reinterpret_cast<char*>(b), sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }
  std::string bytes(std::size_t limit) {
    const auto n = uint<std::uint32_t>();
    if (n > limit) fail("string field too long");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  void read(char* dst, std::size_t n) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) fail("truncated file");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw IoError("corrupt checkpoint " + source_ + ": " + what);
  }
  bool at_end() { return is_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& is_;
  std::string source_;
};

json config_snapshot(const RunConfig& config) {
  const json full = config.to_json();
  json j = json::object();
  for (const auto& [k, v] : full.items())
    if (k.rfind("paths.", 0) != 0) j[k] = v;
  return j;
}

}  // namespace

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    Writer w(os);
    os.write(kMagic, 4);
    w.uint<std::uint32_t>(kCheckpointVersion);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& nt : ckpt.tensors) {
      w.bytes(nt.name);
      w.uint<std::uint32_t>(static_cast<std::uint32_t>(nt.tensor.rank()));
      for (Index e : nt.tensor.shape()) w.uint<std::uint64_t>(static_cast<std::uint64_t>(e));
      for (Index i = 0; i < nt.tensor.size(); ++i) w.f32(nt.tensor.values()[i]);
    }
    w.uint<std::uint64_t>(static_cast<std::uint64_t>(ckpt.t));
    w.uint<std::uint64_t>(static_cast<std::uint64_t>(ckpt.total));
    w.bytes(ckpt.rng_state);
    w.bytes(ckpt.config_json);
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint read_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  Reader r(is, path.string());
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) r.fail("bad magic");
  const auto version = r.uint<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));

  Checkpoint ckpt;
  const auto count = r.uint<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor nt;
    nt.name = r.bytes(4096);
    const auto rank = r.uint<std::uint32_t>();
    if (rank == 0 || rank > 8) r.fail("bad rank for '" + nt.name + "'");
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const auto e = r.uint<std::uint64_t>();
      if (e == 0 || e > (1ull << 32)) r.fail("bad extent for '" + nt.name + "'");
      shape.push_back(static_cast<Index>(e));
    }
    const Index n = numel(shape);
    if (n > (Index{1} << 31)) r.fail("tensor '" + nt.name + "' too large");
    Tensor<float>::Array values(n);
    for (Index i = 0; i < n; ++i) values[i] = r.f32();
    nt.tensor = Tensor<float>(std::move(shape), std::move(values));
    ckpt.tensors.push_back(std::move(nt));
  }
  ckpt.t = static_cast<std::int64_t>(r.uint<std::uint64_t>());
  ckpt.total = static_cast<std::int64_t>(r.uint<std::uint64_t>());
  ckpt.rng_state = r.bytes(1 << 20);
  ckpt.config_json = r.bytes(1 << 20);
  if (!r.at_end()) r.fail("trailing bytes");
  if (ckpt.t < 0 || ckpt.t > ckpt.total) r.fail("iteration counter outside [0, T]");
  return ckpt;
}

Checkpoint snapshot(const TrainState& state) {
  Checkpoint ckpt;
  const auto& entries = state.net.parameters().entries();
  for (const auto& e : entries) ckpt.tensors.push_back({e.name, e.tensor.detach()});
  for (std::size_t k = 0; k < entries.size(); ++k)
    ckpt.tensors.push_back({kMomentM + entries[k].name,
                            Tensor<float>(entries[k].tensor.shape(), state.moments.m[k])});
  for (std::size_t k = 0; k < entries.size(); ++k)
    ckpt.tensors.push_back({kMomentV + entries[k].name,
                            Tensor<float>(entries[k].tensor.shape(), state.moments.v[k])});
  ckpt.t = state.t;
  ckpt.total = state.total;
  std::ostringstream rng;
  rng << state.rng;
  ckpt.rng_state = rng.str();
  ckpt.config_json = config_snapshot(state.config).dump();
  return ckpt;
}

TrainState restore(const Checkpoint& ckpt) {
  RunConfig config;
  try {
    config.merge(json::parse(ckpt.config_json));
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  TrainState state = TrainState::create(config);
  state.t = ckpt.t;
  state.total = ckpt.total;
  if (!ckpt.rng_state.empty()) {
    std::istringstream is(ckpt.rng_state);
    is >> state.rng;
    if (!is) throw IoError("checkpoint PRNG state is unreadable");
  }

  auto lookup = [&](const std::string& name) -> const Tensor<float>* {
    for (const auto& nt : ckpt.tensors)
      if (nt.name == name) return &nt.tensor;
    return nullptr;
  };
  auto& params = state.net.parameters();
  std::size_t expected = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& e = params.entries()[k];
    const Tensor<float>* src = lookup(e.name);
    if (src == nullptr) throw IoError("checkpoint lacks parameter '" + e.name + "'");
    if (src->shape() != e.tensor.shape())
      throw IoError("checkpoint parameter '" + e.name + "' has shape " + to_string(src->shape()) +
                    ", network expects " + to_string(e.tensor.shape()));
    Tensor<float> dst = e.tensor;
    dst.mutable_values() = src->values();
    ++expected;
    for (auto [prefix, store] : {std::pair{kMomentM, &state.moments.m[k]},
                                 std::pair{kMomentV, &state.moments.v[k]}}) {
      const Tensor<float>* mom = lookup(prefix + e.name);
      if (mom == nullptr) continue;
      if (mom->shape() != e.tensor.shape())
        throw IoError("checkpoint moment '" + std::string(prefix) + e.name + "' has wrong shape");
      *store = mom->values();
      ++expected;
    }
  }
  if (expected != ckpt.tensors.size())
    throw IoError("checkpoint holds tensors the network does not know");
  return state;
}

void save_state(const TrainState& state, const fs::path& path) {
  write_checkpoint(path, snapshot(state));
}

TrainState load_state(const fs::path& path) {
  return restore(read_checkpoint(path));
}

}  // namespace ndlp
