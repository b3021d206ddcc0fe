// Copyright (c) 2026 The fsbsed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fsbsed/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fsbsed/error.h"

namespace fsbsed::nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'F', 'S', 'B', 'S', 'E', 'D', 'C', 'K'};

class Writer {
 public:
  template <typename T>
  void Pod(T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void Bytes(std::string_view s) { out_.append(s.data(), s.size()); }
  void String(std::string_view s) {
    Pod<uint32_t>(static_cast<uint32_t>(s.size()));
    Bytes(s);
  }
  void Floats(const Mat<float>& m) {
    Bytes(std::string_view(reinterpret_cast<const char*>(m.data()),
                           sizeof(float) * static_cast<size_t>(m.size())));
  }
  std::string Take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  template <typename T>
  T Pod(const char* what) {
    Need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string_view Bytes(size_t n, const char* what) {
    Need(n, what);
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string String(const char* what) {
    const uint32_t n = Pod<uint32_t>(what);
    return std::string(Bytes(n, what));
  }
  void Floats(Mat<float>& m, const char* what) {
    const size_t n = sizeof(float) * static_cast<size_t>(m.size());
    std::memcpy(m.data(), Bytes(n, what).data(), n);
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }
  [[noreturn]] void Fail(const std::string& detail) const {
    throw DataError(fmt::format("{}: invalid checkpoint: {}", source_, detail));
  }

 private:
  void Need(size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) Fail(fmt::format("truncated in {}", what));
  }

  std::string_view bytes_;
  const std::string& source_;
  size_t pos_ = 0;
};

struct TensorRef {
  std::string name;
  uint8_t kind;
  Mat<float>* tensor;
};

std::vector<TensorRef> Tensors(EmbeddingNetwork<float>& net) {
  std::vector<TensorRef> out;
  for (Param<float>* p : net.Parameters()) out.push_back({p->name, 0, &p->value});
  for (auto& [name, m] : net.Buffers()) out.push_back({name, 1, m});
  return out;
}

}  // namespace

std::string EncodeCheckpoint(const EmbeddingNetwork<float>& network,
                             std::string_view metadata,
                             const Adam<float>* optimizer) {
  Writer w;
  w.Bytes(std::string_view(kMagic, sizeof(kMagic)));
  w.Pod<uint32_t>(kCheckpointVersion);
  const NetworkConfig& cfg = network.config();
  w.Pod<uint32_t>(cfg.input_height);
  w.Pod<uint32_t>(cfg.input_width);
  for (int c : cfg.channels) w.Pod<uint32_t>(c);
  w.Pod<double>(cfg.leaky_slope);
  w.Pod<double>(cfg.bn_eps);
  w.Pod<double>(cfg.bn_momentum);
  w.String(metadata);

  auto tensors = Tensors(const_cast<EmbeddingNetwork<float>&>(network));
  w.Pod<uint32_t>(static_cast<uint32_t>(tensors.size()));
  for (const TensorRef& t : tensors) {
    w.String(t.name);
    w.Pod<uint8_t>(t.kind);
    w.Pod<uint32_t>(static_cast<uint32_t>(t.tensor->rows()));
    w.Pod<uint32_t>(static_cast<uint32_t>(t.tensor->cols()));
  }
  for (const TensorRef& t : tensors) w.Floats(*t.tensor);

  const bool with_opt = optimizer != nullptr && !optimizer->state().m.empty();
  w.Pod<uint8_t>(with_opt ? 1 : 0);
  if (with_opt) {
    const AdamConfig& a = optimizer->config();
    const AdamState<float>& s = optimizer->state();
    w.Pod<uint64_t>(static_cast<uint64_t>(s.step));
    w.Pod<double>(a.base_lr);
    w.Pod<double>(a.beta1);
    w.Pod<double>(a.beta2);
    w.Pod<double>(a.eps);
    w.Pod<double>(a.decay_gamma);
    w.Pod<double>(static_cast<double>(a.decay_interval));
    for (size_t i = 0; i < s.m.size(); ++i) {
      w.Floats(s.m[i]);
      w.Floats(s.v[i]);
    }
  }
  return w.Take();
}

Checkpoint DecodeCheckpoint(std::string_view bytes, const std::string& source) {
  Reader r(bytes, source);
  if (r.Bytes(sizeof(kMagic), "magic") != std::string_view(kMagic, sizeof(kMagic))) {
    r.Fail("bad magic");
  }
  const uint32_t version = r.Pod<uint32_t>("version");
  if (version != kCheckpointVersion) {
    r.Fail(fmt::format("unsupported version {}", version));
  }
  NetworkConfig cfg;
  cfg.input_height = static_cast<int>(r.Pod<uint32_t>("config"));
  cfg.input_width = static_cast<int>(r.Pod<uint32_t>("config"));
  for (int& c : cfg.channels) c = static_cast<int>(r.Pod<uint32_t>("config"));
  cfg.leaky_slope = r.Pod<double>("config");
  cfg.bn_eps = r.Pod<double>("config");
  cfg.bn_momentum = r.Pod<double>("config");
  try {
    cfg.Validate();
  } catch (const Error& e) {
    r.Fail(e.what());
  }

  Checkpoint ck;
  ck.metadata = r.String("metadata");
  ck.network = EmbeddingNetwork<float>(cfg, 0);
  auto tensors = Tensors(ck.network);
  const uint32_t count = r.Pod<uint32_t>("shape table");
  if (count != tensors.size()) {
    r.Fail(fmt::format("{} tensors, architecture needs {}", count, tensors.size()));
  }
  for (const TensorRef& t : tensors) {
    const std::string name = r.String("shape table");
    const uint8_t kind = r.Pod<uint8_t>("shape table");
    const uint32_t rows = r.Pod<uint32_t>("shape table");
    const uint32_t cols = r.Pod<uint32_t>("shape table");
    if (name != t.name || kind != t.kind || rows != t.tensor->rows() ||
        cols != t.tensor->cols()) {
      r.Fail(fmt::format("tensor '{}' {}x{} does not match expected '{}' {}x{}",
                         name, rows, cols, t.name, t.tensor->rows(),
                         t.tensor->cols()));
    }
  }
  for (const TensorRef& t : tensors) r.Floats(*t.tensor, t.name.c_str());

  if (r.Pod<uint8_t>("optimizer flag") != 0) {
    AdamState<float> s;
    s.step = static_cast<int64_t>(r.Pod<uint64_t>("optimizer"));
    AdamConfig a;
    a.base_lr = r.Pod<double>("optimizer");
    a.beta1 = r.Pod<double>("optimizer");
    a.beta2 = r.Pod<double>("optimizer");
    a.eps = r.Pod<double>("optimizer");
    a.decay_gamma = r.Pod<double>("optimizer");
    a.decay_interval = static_cast<int>(r.Pod<double>("optimizer"));
    for (Param<float>* p : ck.network.Parameters()) {
      s.m.emplace_back(p->value.rows(), p->value.cols());
      s.v.emplace_back(p->value.rows(), p->value.cols());
      r.Floats(s.m.back(), "optimizer moments");
      r.Floats(s.v.back(), "optimizer moments");
    }
    ck.optimizer_config = a;
    ck.optimizer_state = std::move(s);
  }
  if (!r.AtEnd()) r.Fail("trailing bytes");
  if (!ck.network.AllFinite()) r.Fail("non-finite parameter values");
  return ck;
}

void SaveCheckpoint(const std::filesystem::path& path,
                    const EmbeddingNetwork<float>& network,
                    std::string_view metadata, const Adam<float>* optimizer) {
  const std::string bytes = EncodeCheckpoint(network, metadata, optimizer);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError(fmt::format("{}: cannot write checkpoint", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("{}: cannot open checkpoint", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return DecodeCheckpoint(ss.str(), path.string());
}

}  // namespace fsbsed::nn
