// Dual-input convolutional policy: one-hot tile map + orientation -> action.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinsky/game.hpp"
#include "pinsky/random.hpp"

namespace pinsky {

/// Layer sizes of the policy network. Both convolutions are 3x3, stride 1,
/// zero-padded ("same"), with ReLU; the hidden dense layer is ReLU too and
/// the output layer is linear.
struct Architecture {
  int height = 9;
  int width = 13;
  int channels = kTileKinds;
  int conv1_filters = 8;
  int conv2_filters = 16;
  int hidden = 64;
  int outputs = kActionCount;

  static constexpr int kKernel = 3;

  static Architecture for_level(const Level& level) {
    Architecture a;
    a.height = level.height();
    a.width = level.width();
    return a;
  }

  int cells() const { return height * width; }
  std::size_t conv1_weights() const { return static_cast<std::size_t>(conv1_filters * channels * kKernel * kKernel); }
  std::size_t conv2_weights() const { return static_cast<std::size_t>(conv2_filters * conv1_filters * kKernel * kKernel); }
  std::size_t flat_inputs() const { return static_cast<std::size_t>(conv2_filters * cells() + kOrientationCount); }
  std::size_t dense_weights() const { return flat_inputs() * static_cast<std::size_t>(hidden); }
  std::size_t out_weights() const { return static_cast<std::size_t>(hidden * outputs); }

  // Flat parameter layout, in order:
  //   conv1 W [filter][channel][kr][kc], conv1 b [filter]
  //   conv2 W [filter][in][kr][kc],      conv2 b [filter]
  //   dense W [input][hidden],           dense b [hidden]
  //   out   W [hidden][action],          out b   [action]
  // Dense inputs are the conv2 maps flattened [filter][row][col] followed by
  // the orientation one-hot (N, S, E, W).
  std::size_t param_count() const {
    return conv1_weights() + static_cast<std::size_t>(conv1_filters) + conv2_weights() +
           static_cast<std::size_t>(conv2_filters) + dense_weights() + static_cast<std::size_t>(hidden) +
           out_weights() + static_cast<std::size_t>(outputs);
  }

  std::string descriptor() const {
    std::ostringstream os;
    os << "pinsky-policy/v1 h=" << height << " w=" << width << " c=" << channels << " k=" << kKernel
       << " conv=" << conv1_filters << "," << conv2_filters << " hidden=" << hidden << " out=" << outputs;
    return os.str();
  }

  /// FNV-1a over the descriptor; identifies the parameter layout in files.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : descriptor()) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct PolicyParams {
  std::vector<float> weights;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

/// Fan-in scaled Gaussian initialization, biases zero.
inline PolicyParams init_params(const Architecture& arch, std::uint64_t seed) {
  PolicyParams p;
  p.weights.assign(arch.param_count(), 0.0f);
  Rng rng(seed);
  std::size_t at = 0;
  auto fill = [&](std::size_t n, double fan_in) {
    std::normal_distribution<float> dist(0.0f, static_cast<float>(1.0 / std::sqrt(fan_in)));
    for (std::size_t i = 0; i < n; ++i) p.weights[at++] = dist(rng);
  };
  const int k2 = Architecture::kKernel * Architecture::kKernel;
  fill(arch.conv1_weights(), k2);  // one-hot input: one active channel per cell
  at += static_cast<std::size_t>(arch.conv1_filters);
  fill(arch.conv2_weights(), static_cast<double>(arch.conv1_filters * k2));
  at += static_cast<std::size_t>(arch.conv2_filters);
  fill(arch.dense_weights(), static_cast<double>(arch.flat_inputs()));
  at += static_cast<std::size_t>(arch.hidden);
  fill(arch.out_weights(), static_cast<double>(arch.hidden));
  return p;
}

struct ObservationTensor {
  int channels = kTileKinds;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> planes;  // [channel][row][col], 0/1
  std::array<std::uint8_t, kOrientationCount> orientation{};

  std::uint8_t at(int channel, Cell p) const {
    return planes[(static_cast<std::size_t>(channel) * static_cast<std::size_t>(height) +
                   static_cast<std::size_t>(p.row)) *
                      static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(p.col)];
  }

  /// The active channel at a cell, i.e. the tile shown there.
  Tile tile(Cell p) const {
    for (int ch = 0; ch < channels; ++ch)
      if (at(ch, p)) return static_cast<Tile>(ch);
    throw ContractViolation("observation cell with no active channel");
  }
};

inline ObservationTensor encode_observation(const GameState& s) {
  const Level& lv = s.level();
  ObservationTensor obs;
  obs.height = lv.height();
  obs.width = lv.width();
  const std::size_t plane = static_cast<std::size_t>(obs.height) * static_cast<std::size_t>(obs.width);
  obs.planes.assign(plane * kTileKinds, 0);
  for (int r = 0; r < obs.height; ++r)
    for (int c = 0; c < obs.width; ++c) {
      const auto ch = static_cast<std::size_t>(s.tile_at({r, c}));
      obs.planes[ch * plane + lv.index({r, c})] = 1;
    }
  obs.orientation[static_cast<std::size_t>(s.orientation)] = 1;
  return obs;
}

/// Forward pass with reusable scratch buffers. Not thread-safe; give each
/// thread its own instance.
class PolicyNet {
 public:
  PolicyNet(Architecture arch, std::shared_ptr<const PolicyParams> params)
      : arch_(arch), params_(std::move(params)) {
    if (!params_ || params_->weights.size() != arch_.param_count())
      throw ContractViolation("policy parameter count " +
                              std::to_string(params_ ? params_->weights.size() : 0) +
                              " does not match architecture (" + std::to_string(arch_.param_count()) + ")");
    const int C = arch_.channels, F1 = arch_.conv1_filters, F2 = arch_.conv2_filters, K = Architecture::kKernel;
    const float* w1 = params_->weights.data();
    const float* w2 = w1 + arch_.conv1_weights() + F1;
    // Filter-innermost copies of the conv kernels: [ch][kr][kc][f] and [kr][kc][g][f].
    w1t_.resize(arch_.conv1_weights());
    for (int f = 0; f < F1; ++f)
      for (int ch = 0; ch < C; ++ch)
        for (int k = 0; k < K * K; ++k)
          w1t_[static_cast<std::size_t>((ch * K * K + k) * F1 + f)] = w1[(f * C + ch) * K * K + k];
    w2t_.resize(arch_.conv2_weights());
    for (int f = 0; f < F2; ++f)
      for (int g = 0; g < F1; ++g)
        for (int k = 0; k < K * K; ++k)
          w2t_[static_cast<std::size_t>((k * F1 + g) * F2 + f)] = w2[(f * F1 + g) * K * K + k];
    const std::size_t padded = static_cast<std::size_t>((arch_.height + 2) * (arch_.width + 2));
    h1_.assign(padded * static_cast<std::size_t>(F1), 0.0f);
    h2_.assign(static_cast<std::size_t>(arch_.cells() * F2), 0.0f);
    hidden_.assign(static_cast<std::size_t>(arch_.hidden), 0.0f);
    tiles_.assign(static_cast<std::size_t>(arch_.cells()), 0);
  }

  const Architecture& architecture() const { return arch_; }
  const PolicyParams& params() const { return *params_; }

  std::array<float, kActionCount> scores(const ObservationTensor& obs) {
    if (obs.height != arch_.height || obs.width != arch_.width || obs.channels != arch_.channels)
      throw ContractViolation("observation shape does not match policy architecture");
    for (int r = 0; r < arch_.height; ++r)
      for (int c = 0; c < arch_.width; ++c)
        tiles_[static_cast<std::size_t>(r * arch_.width + c)] = static_cast<std::uint8_t>(obs.tile({r, c}));
    return forward(obs.orientation);
  }

  /// Same as scores(encode_observation(s)) without materializing the tensor.
  std::array<float, kActionCount> scores(const GameState& s) {
    if (s.level().height() != arch_.height || s.level().width() != arch_.width)
      throw ContractViolation("level shape does not match policy architecture");
    for (int r = 0; r < arch_.height; ++r)
      for (int c = 0; c < arch_.width; ++c)
        tiles_[static_cast<std::size_t>(r * arch_.width + c)] = static_cast<std::uint8_t>(s.tile_at({r, c}));
    std::array<std::uint8_t, kOrientationCount> orient{};
    orient[static_cast<std::size_t>(s.orientation)] = 1;
    return forward(orient);
  }

  /// Greedy argmax; ties go to the earliest action in enum order.
  static Action argmax(const std::array<float, kActionCount>& s) {
    int best = 0;
    for (int a = 1; a < kActionCount; ++a)
      if (s[static_cast<std::size_t>(a)] > s[static_cast<std::size_t>(best)]) best = a;
    return static_cast<Action>(best);
  }

  Action act(const ObservationTensor& obs) { return argmax(scores(obs)); }
  Action act(const GameState& s) { return argmax(scores(s)); }

 private:
  // Activations are kept cell-major with the filter index innermost so every
  // inner loop runs over a contiguous filter vector.
  std::array<float, kActionCount> forward(const std::array<std::uint8_t, kOrientationCount>& orientation) {
    const float* w = params_->weights.data();
    const int H = arch_.height, W = arch_.width;
    const int F1 = arch_.conv1_filters, F2 = arch_.conv2_filters, K = Architecture::kKernel;
    const int PW = W + 2;
    const std::size_t f1 = static_cast<std::size_t>(F1), f2 = static_cast<std::size_t>(F2);

    // conv1: the input is one-hot, so each tap selects one weight vector.
    const float* b1 = w + arch_.conv1_weights();
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        float* out = h1_.data() + static_cast<std::size_t>((r + 1) * PW + (c + 1)) * f1;
        std::copy(b1, b1 + F1, out);
        for (int kr = 0; kr < K; ++kr) {
          const int rr = r + kr - 1;
          if (rr < 0 || rr >= H) continue;
          for (int kc = 0; kc < K; ++kc) {
            const int cc = c + kc - 1;
            if (cc < 0 || cc >= W) continue;
            const int ch = tiles_[static_cast<std::size_t>(rr * W + cc)];
            const float* wv = w1t_.data() + static_cast<std::size_t>(ch * K * K + kr * K + kc) * f1;
            for (std::size_t f = 0; f < f1; ++f) out[f] += wv[f];
          }
        }
        for (std::size_t f = 0; f < f1; ++f) out[f] = out[f] > 0.0f ? out[f] : 0.0f;
      }

    // conv2 over the zero-padded conv1 maps.
    const float* b2 = b1 + F1 + arch_.conv2_weights();
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        float* out = h2_.data() + static_cast<std::size_t>(r * W + c) * f2;
        std::copy(b2, b2 + F2, out);
        for (int kr = 0; kr < K; ++kr)
          for (int kc = 0; kc < K; ++kc) {
            const float* in = h1_.data() + static_cast<std::size_t>((r + kr) * PW + (c + kc)) * f1;
            const float* wk = w2t_.data() + static_cast<std::size_t>(kr * K + kc) * f1 * f2;
            for (std::size_t g = 0; g < f1; ++g) {
              const float x = in[g];
              if (x == 0.0f) continue;
              const float* wv = wk + g * f2;
              for (std::size_t f = 0; f < f2; ++f) out[f] += x * wv[f];
            }
          }
        for (std::size_t f = 0; f < f2; ++f) out[f] = out[f] > 0.0f ? out[f] : 0.0f;
      }

    // dense hidden layer over the [filter][row][col] flattening plus the
    // orientation one-hot; weights are input-major so zero inputs are skipped.
    const float* wd = b2 + F2;
    const float* bd = wd + arch_.dense_weights();
    const std::size_t Hd = static_cast<std::size_t>(arch_.hidden);
    const std::size_t cells = static_cast<std::size_t>(H * W);
    std::copy(bd, bd + Hd, hidden_.begin());
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const float* in = h2_.data() + cell * f2;
      for (std::size_t f = 0; f < f2; ++f) {
        const float x = in[f];
        if (x == 0.0f) continue;
        const float* row = wd + (f * cells + cell) * Hd;
        for (std::size_t h = 0; h < Hd; ++h) hidden_[h] += x * row[h];
      }
    }
    for (std::size_t o = 0; o < kOrientationCount; ++o) {
      if (!orientation[o]) continue;
      const float* row = wd + (f2 * cells + o) * Hd;
      for (std::size_t h = 0; h < Hd; ++h) hidden_[h] += row[h];
    }
    for (auto& v : hidden_) v = v > 0.0f ? v : 0.0f;

    const float* wo = bd + Hd;
    const float* bo = wo + arch_.out_weights();
    std::array<float, kActionCount> out{};
    for (int a = 0; a < kActionCount; ++a) out[static_cast<std::size_t>(a)] = bo[a];
    for (std::size_t h = 0; h < Hd; ++h) {
      const float x = hidden_[h];
      if (x == 0.0f) continue;
      for (int a = 0; a < kActionCount; ++a) out[static_cast<std::size_t>(a)] += x * wo[h * kActionCount + static_cast<std::size_t>(a)];
    }
    return out;
  }

  Architecture arch_;
  std::shared_ptr<const PolicyParams> params_;
  std::vector<float> w1t_;
  std::vector<float> w2t_;
  std::vector<float> h1_;      // padded (H+2)x(W+2) cells x conv1 filters
  std::vector<float> h2_;      // HxW cells x conv2 filters
  std::vector<float> hidden_;
  std::vector<std::uint8_t> tiles_;
};

inline Action policy_act(const Architecture& arch, const PolicyParams& params, const ObservationTensor& obs) {
  PolicyNet net(arch, std::make_shared<const PolicyParams>(params));
  return net.act(obs);
}

/// Game agent backed by a fixed policy. Stateless between calls apart from scratch space.
class PolicyAgent {
 public:
  static constexpr bool memoryless = true;

  PolicyAgent(Architecture arch, std::shared_ptr<const PolicyParams> params) : net_(arch, std::move(params)) {}
  PolicyAgent(Architecture arch, const PolicyParams& params)
      : net_(arch, std::make_shared<const PolicyParams>(params)) {}

  Action operator()(const GameState& s) { return net_.act(s); }

 private:
  PolicyNet net_;
};

// Parameter file format (all integers and floats little-endian):
//   bytes 0..7   magic "PNSKPOL1"
//   bytes 8..15  uint64 architecture hash (Architecture::hash)
//   bytes 16..23 uint64 parameter count N
//   then N IEEE-754 binary32 values in the flat layout order.

class ParamsFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kParamsMagic[8] = {'P', 'N', 'S', 'K', 'P', 'O', 'L', '1'};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

}  // namespace detail

inline std::string encode_params(const Architecture& arch, const PolicyParams& p) {
  std::string out(kParamsMagic, sizeof(kParamsMagic));
  detail::put_u64(out, arch.hash());
  detail::put_u64(out, p.weights.size());
  out.reserve(out.size() + 4 * p.weights.size());
  for (float f : p.weights) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  return out;
}

struct DecodedParams {
  std::uint64_t arch_hash = 0;
  PolicyParams params;
};

inline DecodedParams decode_params(const std::string& bytes) {
  if (bytes.size() < 24 || std::memcmp(bytes.data(), kParamsMagic, 8) != 0)
    throw ParamsFormatError("not a policy parameter file (bad magic)");
  DecodedParams d;
  d.arch_hash = detail::get_u64(bytes, 8);
  const std::uint64_t n = detail::get_u64(bytes, 16);
  if (bytes.size() != 24 + 4 * n) throw ParamsFormatError("policy parameter file has wrong length");
  d.params.weights.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[24 + 4 * i + static_cast<std::size_t>(b)])) << (8 * b);
    d.params.weights[i] = std::bit_cast<float>(bits);
  }
  return d;
}

inline void save_params(const std::string& path, const Architecture& arch, const PolicyParams& p) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  const std::string bytes = encode_params(arch, p);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Loads a parameter file and refuses it unless it was written for `arch`.
inline PolicyParams load_params(const std::string& path, const Architecture& arch) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  auto d = decode_params(bytes);
  if (d.arch_hash != arch.hash())
    throw ParamsFormatError("architecture hash mismatch: file has " + std::to_string(d.arch_hash) +
                            ", expected " + std::to_string(arch.hash()) + " (" + arch.descriptor() + ")");
  if (d.params.weights.size() != arch.param_count())
    throw ParamsFormatError("parameter count mismatch for " + arch.descriptor());
  return std::move(d.params);
}

}  // namespace pinsky
