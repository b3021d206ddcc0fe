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

#include "fsbsed/features.h"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace fsbsed::dsp {
namespace {

constexpr std::array<std::pair<FeatureSet, std::string_view>, 7> kSetNames = {{
    {FeatureSet::kMel, "mel"},
    {FeatureSet::kLogMel, "log_mel"},
    {FeatureSet::kLogMelMfcc, "log_mel+mfcc"},
    {FeatureSet::kLogMelDeltaMfcc, "log_mel+delta_mfcc"},
    {FeatureSet::kPcen, "pcen"},
    {FeatureSet::kPcenMfcc, "pcen+mfcc"},
    {FeatureSet::kPcenDeltaMfcc, "pcen+delta_mfcc"},
}};

// FFTW planning is not thread safe; executing an existing plan on new arrays
// is. Plans are created once per size and live for the process.
class RealFftPlans {
 public:
  static fftw_plan Get(int n) {
    static RealFftPlans instance;
    std::lock_guard<std::mutex> lock(instance.mu_);
    auto it = instance.plans_.find(n);
    if (it != instance.plans_.end()) return it->second;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    instance.plans_.emplace(n, plan);
    return plan;
  }

 private:
  std::mutex mu_;
  std::map<int, fftw_plan> plans_;
};

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

// numpy-style "reflect" (edge sample not repeated), applied repeatedly.
int64_t ReflectIndex(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

void CheckFinite(const Matrix& m, const char* stage) {
  if (!m.allFinite()) {
    throw InternalError(fmt::format("{}: produced non-finite values", stage));
  }
}

FeatureMatrix WithValues(const FeatureMatrix& like, Matrix values) {
  FeatureMatrix out;
  out.values = std::move(values);
  out.frame_hop_seconds = like.frame_hop_seconds;
  return out;
}

FeatureMatrix Concat(const FeatureMatrix& a, const FeatureMatrix& b) {
  Matrix values(a.frames(), a.dim() + b.dim());
  values.leftCols(a.dim()) = a.values;
  values.rightCols(b.dim()) = b.values;
  return WithValues(a, std::move(values));
}

}  // namespace

std::string_view FeatureSetName(FeatureSet set) {
  for (const auto& [s, name] : kSetNames) {
    if (s == set) return name;
  }
  return "unknown";
}

FeatureSet ParseFeatureSet(std::string_view name) {
  for (const auto& [s, n] : kSetNames) {
    if (n == name) return s;
  }
  std::string known;
  for (const auto& [s, n] : kSetNames) {
    if (!known.empty()) known += ", ";
    known += n;
  }
  throw UsageError(
      fmt::format("unknown feature set '{}' (expected one of {})", name, known));
}

void FeatureConfig::Validate() const {
  if (sample_rate <= 0) throw UsageError("features: sample_rate must be > 0");
  if (hop_len <= 0) throw UsageError("features: hop_len must be > 0");
  if (window_len < hop_len) {
    throw UsageError(fmt::format(
        "features: window_len ({}) must be >= hop_len ({})", window_len,
        hop_len));
  }
  if (n_mels <= 0) throw UsageError("features: n_mels must be > 0");
  if (n_mfcc <= 0 || n_mfcc > n_mels) {
    throw UsageError(fmt::format(
        "features: n_mfcc ({}) must be in [1, n_mels={}]", n_mfcc, n_mels));
  }
  if (delta_width < 3 || delta_width % 2 == 0) {
    throw UsageError(fmt::format(
        "features: delta_width ({}) must be odd and >= 3", delta_width));
  }
  if (!(log_floor > 0.0)) throw UsageError("features: log_floor must be > 0");
  if (!(pcen.epsilon > 0.0) || !(pcen.smoothing > 0.0) ||
      pcen.smoothing > 1.0 || !(pcen.r > 0.0) || pcen.delta < 0.0) {
    throw UsageError("features: invalid PCEN parameters");
  }
}

int FeatureConfig::feature_dim() const {
  switch (feature_set) {
    case FeatureSet::kMel:
    case FeatureSet::kLogMel:
    case FeatureSet::kPcen:
      return n_mels;
    case FeatureSet::kLogMelMfcc:
    case FeatureSet::kLogMelDeltaMfcc:
    case FeatureSet::kPcenMfcc:
    case FeatureSet::kPcenDeltaMfcc:
      return n_mels + n_mfcc;
  }
  return n_mels;
}

FeatureMatrix StftPower(const audio::AudioClip& clip,
                        const FeatureConfig& cfg) {
  cfg.Validate();
  const int64_t len = static_cast<int64_t>(clip.samples.size());
  if (len < 1) throw UsageError("stft: clip has no samples");
  const int n_fft = cfg.window_len;
  const int hop = cfg.hop_len;
  const int n_bins = cfg.n_bins();
  const int64_t pad = n_fft / 2;
  const int64_t frames = 1 + len / hop;

  std::vector<double> window(n_fft);
  for (int n = 0; n < n_fft; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / n_fft);
  }

  fftw_plan plan = RealFftPlans::Get(n_fft);
  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(n_fft));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(n_bins));

  FeatureMatrix result;
  result.values.resize(frames, n_bins);
  result.frame_hop_seconds = static_cast<double>(hop) / clip.sample_rate;
  const float* x = clip.samples.data();
  for (int64_t t = 0; t < frames; ++t) {
    const int64_t start = t * hop - pad;
    double* buf = in.get();
    if (start >= 0 && start + n_fft <= len) {
      for (int n = 0; n < n_fft; ++n) buf[n] = x[start + n] * window[n];
    } else {
      for (int n = 0; n < n_fft; ++n) {
        buf[n] = x[ReflectIndex(start + n, len)] * window[n];
      }
    }
    fftw_execute_dft_r2c(plan, buf, out.get());
    const fftw_complex* spec = out.get();
    for (int k = 0; k < n_bins; ++k) {
      result.values(t, k) = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    }
  }
  return result;
}

double HzToMel(double hz) {
  constexpr double kFSp = 200.0 / 3.0;
  constexpr double kMinLogHz = 1000.0;
  constexpr double kMinLogMel = kMinLogHz / kFSp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < kMinLogHz) return hz / kFSp;
  return kMinLogMel + std::log(hz / kMinLogHz) / logstep;
}

double MelToHz(double mel) {
  constexpr double kFSp = 200.0 / 3.0;
  constexpr double kMinLogHz = 1000.0;
  constexpr double kMinLogMel = kMinLogHz / kFSp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < kMinLogMel) return mel * kFSp;
  return kMinLogHz * std::exp(logstep * (mel - kMinLogMel));
}

Matrix MelFilterbank(int sample_rate, int window_len, int n_mels, double fmin,
                     double fmax) {
  if (fmax < 0.0) fmax = sample_rate / 2.0;
  const int n_bins = window_len / 2 + 1;
  const double mel_lo = HzToMel(fmin);
  const double mel_hi = HzToMel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }
  Matrix fb = Matrix::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m];
    const double centre = edges[m + 1];
    const double hi = edges[m + 2];
    const double norm = 2.0 / (hi - lo);
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / window_len;
      const double rising = (f - lo) / (centre - lo);
      const double falling = (hi - f) / (hi - centre);
      fb(m, k) = std::max(0.0, std::min(rising, falling)) * norm;
    }
  }
  return fb;
}

FeatureMatrix MelSpectrogram(const FeatureMatrix& power,
                             const FeatureConfig& cfg) {
  if (power.dim() != cfg.n_bins()) {
    throw UsageError(fmt::format("mel: spectrum has {} bins, config expects {}",
                                 power.dim(), cfg.n_bins()));
  }
  const Matrix fb = MelFilterbank(cfg.sample_rate, cfg.window_len, cfg.n_mels);
  return WithValues(power, power.values * fb.transpose());
}

FeatureMatrix LogMel(const FeatureMatrix& mel, const FeatureConfig& cfg) {
  Matrix values = (mel.values.array() + cfg.log_floor).log().matrix();
  CheckFinite(values, "log_mel");
  return WithValues(mel, std::move(values));
}

Matrix DctMatrix(int n_out, int n_in) {
  Matrix d(n_out, n_in);
  const double s0 = std::sqrt(1.0 / n_in);
  const double sk = std::sqrt(2.0 / n_in);
  for (int k = 0; k < n_out; ++k) {
    for (int n = 0; n < n_in; ++n) {
      d(k, n) = (k == 0 ? s0 : sk) *
                std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * n_in));
    }
  }
  return d;
}

FeatureMatrix Mfcc(const FeatureMatrix& log_mel, const FeatureConfig& cfg) {
  if (cfg.n_mfcc > log_mel.dim()) {
    throw UsageError(fmt::format("mfcc: n_mfcc {} exceeds input dim {}",
                                 cfg.n_mfcc, log_mel.dim()));
  }
  const Matrix dct = DctMatrix(cfg.n_mfcc, log_mel.dim());
  return WithValues(log_mel, log_mel.values * dct.transpose());
}

FeatureMatrix Delta(const FeatureMatrix& features, int width) {
  if (width < 3 || width % 2 == 0) {
    throw UsageError(
        fmt::format("delta: width {} must be odd and >= 3", width));
  }
  const int half = width / 2;
  double denom = 0.0;
  for (int n = 1; n <= half; ++n) denom += 2.0 * n * n;
  const int frames = features.frames();
  Matrix out = Matrix::Zero(frames, features.dim());
  for (int t = 0; t < frames; ++t) {
    for (int n = 1; n <= half; ++n) {
      const int ahead = std::min(t + n, frames - 1);
      const int behind = std::max(t - n, 0);
      out.row(t) +=
          n * (features.values.row(ahead) - features.values.row(behind));
    }
  }
  out /= denom;
  return WithValues(features, std::move(out));
}

FeatureMatrix Pcen(const FeatureMatrix& mel, const FeatureConfig& cfg) {
  if ((mel.values.array() < 0.0).any()) {
    throw UsageError("pcen: input energies must be non-negative");
  }
  const PcenParams& p = cfg.pcen;
  const double offset = std::pow(p.delta, p.r);
  const int frames = mel.frames();
  Matrix out(frames, mel.dim());
  Eigen::RowVectorXd smooth;
  for (int t = 0; t < frames; ++t) {
    const auto energy = mel.values.row(t).array();
    if (t == 0) {
      smooth = mel.values.row(0);
    } else {
      smooth = (1.0 - p.smoothing) * smooth + p.smoothing * mel.values.row(t);
    }
    const auto gain = (p.epsilon + smooth.array()).pow(p.alpha);
    out.row(t) = ((energy / gain + p.delta).pow(p.r) - offset).matrix();
  }
  CheckFinite(out, "pcen");
  return WithValues(mel, std::move(out));
}

FeatureMatrix BuildFeatures(const audio::AudioClip& clip,
                            const FeatureConfig& cfg) {
  cfg.Validate();
  if (clip.sample_rate != cfg.sample_rate) {
    throw UsageError(fmt::format(
        "features: clip '{}' is at {} Hz but the pipeline expects {} Hz",
        clip.source_path, clip.sample_rate, cfg.sample_rate));
  }
  const FeatureMatrix mel = MelSpectrogram(StftPower(clip, cfg), cfg);
  auto log_mel = [&] { return LogMel(mel, cfg); };
  auto mfcc = [&] { return Mfcc(log_mel(), cfg); };
  switch (cfg.feature_set) {
    case FeatureSet::kMel:
      return mel;
    case FeatureSet::kLogMel:
      return log_mel();
    case FeatureSet::kLogMelMfcc: {
      const FeatureMatrix lm = log_mel();
      return Concat(lm, Mfcc(lm, cfg));
    }
    case FeatureSet::kLogMelDeltaMfcc: {
      const FeatureMatrix lm = log_mel();
      return Concat(lm, Delta(Mfcc(lm, cfg), cfg.delta_width));
    }
    case FeatureSet::kPcen:
      return Pcen(mel, cfg);
    case FeatureSet::kPcenMfcc:
      return Concat(Pcen(mel, cfg), mfcc());
    case FeatureSet::kPcenDeltaMfcc:
      return Concat(Pcen(mel, cfg), Delta(mfcc(), cfg.delta_width));
  }
  throw InternalError("features: unhandled feature set");
}

void StandardizeColumns(FeatureMatrix& features) {
  const int frames = features.frames();
  if (frames == 0) return;
  const Eigen::RowVectorXd mean = features.values.colwise().mean();
  features.values.rowwise() -= mean;
  const Eigen::RowVectorXd var =
      features.values.array().square().colwise().sum() / frames;
  for (int c = 0; c < features.dim(); ++c) {
    const double sd = std::sqrt(var(c));
    if (sd > 1e-12) features.values.col(c) /= sd;
  }
}

void WriteFeatureMatrix(const std::filesystem::path& path,
                        const FeatureMatrix& features, DumpFormat format) {
  std::ofstream out(path, format == DumpFormat::kBinary
                              ? std::ios::binary | std::ios::out
                              : std::ios::out);
  if (!out) {
    throw DataError(fmt::format("{}: cannot open for writing", path.string()));
  }
  if (format == DumpFormat::kBinary) {
    const uint32_t frames = static_cast<uint32_t>(features.frames());
    const uint32_t dim = static_cast<uint32_t>(features.dim());
    out.write("FSBFEAT1", 8);
    out.write(reinterpret_cast<const char*>(&frames), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&features.frame_hop_seconds), 8);
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
        f = features.values.cast<float>();
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(float)));
  } else {
    out << fmt::format("# frames={} dim={} hop_seconds={:.17g}\n",
                       features.frames(), features.dim(),
                       features.frame_hop_seconds);
    for (int t = 0; t < features.frames(); ++t) {
      for (int c = 0; c < features.dim(); ++c) {
        if (c) out << ',';
        out << fmt::format("{:.9g}", features.values(t, c));
      }
      out << '\n';
    }
  }
  if (!out) throw DataError(fmt::format("{}: write failed", path.string()));
}

FeatureMatrix ReadFeatureMatrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(fmt::format("{}: cannot open feature dump", path.string()));
  }
  char magic[8] = {};
  in.read(magic, 8);
  FeatureMatrix fm;
  if (in && std::memcmp(magic, "FSBFEAT1", 8) == 0) {
    uint32_t frames = 0;
    uint32_t dim = 0;
    in.read(reinterpret_cast<char*>(&frames), 4);
    in.read(reinterpret_cast<char*>(&dim), 4);
    in.read(reinterpret_cast<char*>(&fm.frame_hop_seconds), 8);
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f(
        frames, dim);
    in.read(reinterpret_cast<char*>(f.data()),
            static_cast<std::streamsize>(f.size() * sizeof(float)));
    if (!in) {
      throw DataError(fmt::format("{}: truncated feature dump", path.string()));
    }
    fm.values = f.cast<double>();
    return fm;
  }

  in.clear();
  in.seekg(0);
  std::string line;
  std::getline(in, line);
  int frames = 0;
  int dim = 0;
  if (std::sscanf(line.c_str(), "# frames=%d dim=%d hop_seconds=%lf", &frames,
                  &dim, &fm.frame_hop_seconds) != 3) {
    throw DataError(
        fmt::format("{}: not a feature dump (bad header)", path.string()));
  }
  fm.values.resize(frames, dim);
  for (int t = 0; t < frames; ++t) {
    if (!std::getline(in, line)) {
      throw DataError(fmt::format("{}: expected {} rows, found {}",
                                  path.string(), frames, t));
    }
    std::stringstream row(line);
    std::string cell;
    for (int c = 0; c < dim; ++c) {
      if (!std::getline(row, cell, ',')) {
        throw DataError(
            fmt::format("{}: row {} has fewer than {} columns", path.string(),
                        t, dim));
      }
      fm.values(t, c) = std::stod(cell);
    }
  }
  return fm;
}

}  // namespace fsbsed::dsp
