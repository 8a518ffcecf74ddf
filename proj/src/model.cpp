#include "lmkd/model.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace lmkd {
namespace {

// Shape-level view of a single convolution inside a block. Parameter
// counting, FLOP counting and tensor construction all walk this list.
struct UnitShape {
  enum class Op { Dense, Depthwise, Transposed } op = Op::Dense;
  std::size_t cin = 0, cout = 0, kernel = 1, stride = 1, padding = 0;
  bool bias = false;
  bool norm = false;
  Activation act = Activation::None;
};

struct BlockUnits {
  std::vector<UnitShape> units;
  bool projection = false;
};

BlockUnits expand_block(const BlockSpec& b) {
  using Op = UnitShape::Op;
  BlockUnits bu;
  switch (b.kind) {
    case BlockKind::Conv:
      bu.units.push_back({Op::Dense, b.in, b.out, b.kernel, b.stride, b.padding, !b.norm, b.norm, b.act});
      break;
    case BlockKind::InvertedResidual: {
      const std::size_t hidden = b.in * b.expand;
      if (b.expand != 1) {
        bu.units.push_back({Op::Dense, b.in, hidden, 1, 1, 0, false, true, Activation::ReLU6});
      }
      bu.units.push_back({Op::Depthwise, hidden, hidden, b.kernel, b.stride, b.kernel / 2, false, true,
                          Activation::ReLU6});
      bu.units.push_back({Op::Dense, hidden, b.out, 1, 1, 0, false, true, Activation::None});
      break;
    }
    case BlockKind::Bottleneck:
      bu.units.push_back({Op::Dense, b.in, b.mid, 1, 1, 0, false, true, Activation::ReLU});
      bu.units.push_back({Op::Dense, b.mid, b.mid, 3, b.stride, 1, false, true, Activation::ReLU});
      bu.units.push_back({Op::Dense, b.mid, b.out, 1, 1, 0, false, true, Activation::None});
      if (b.stride != 1 || b.in != b.out) {
        bu.units.push_back({Op::Dense, b.in, b.out, 1, b.stride, 0, false, true, Activation::None});
        bu.projection = true;
      }
      break;
    case BlockKind::MaxPool:
      break;
    case BlockKind::Deconv:
      bu.units.push_back({Op::Transposed, b.in, b.out, b.kernel, b.stride, b.padding, !b.norm, b.norm, b.act});
      break;
    case BlockKind::Head:
      bu.units.push_back({Op::Dense, b.in, b.out, 1, 1, 0, true, false, Activation::None});
      break;
  }
  return bu;
}

Shape weight_shape(const UnitShape& u) {
  switch (u.op) {
    case UnitShape::Op::Dense: return {u.cout, u.cin, u.kernel, u.kernel};
    case UnitShape::Op::Depthwise: return {u.cout, 1, u.kernel, u.kernel};
    case UnitShape::Op::Transposed: return {u.cin, u.cout, u.kernel, u.kernel};
  }
  return {};
}

std::size_t unit_out_side(const UnitShape& u, std::size_t side) {
  if (u.op == UnitShape::Op::Transposed) return deconv_out_size(side, u.kernel, u.stride, u.padding);
  return conv_out_size(side, u.kernel, u.stride, u.padding);
}

std::size_t block_out_side(const BlockSpec& b, std::size_t side) {
  if (b.kind == BlockKind::MaxPool) return conv_out_size(side, b.kernel, b.stride, b.padding);
  const auto bu = expand_block(b);
  const std::size_t main_units = bu.units.size() - (bu.projection ? 1 : 0);
  for (std::size_t i = 0; i < main_units; ++i) side = unit_out_side(bu.units[i], side);
  return side;
}

const char* kind_name(BlockKind k) {
  switch (k) {
    case BlockKind::Conv: return "conv";
    case BlockKind::InvertedResidual: return "inverted_residual";
    case BlockKind::Bottleneck: return "bottleneck";
    case BlockKind::MaxPool: return "maxpool";
    case BlockKind::Deconv: return "deconv";
    case BlockKind::Head: return "head";
  }
  return "?";
}

BlockKind parse_kind(const std::string& s) {
  static const std::map<std::string, BlockKind> kinds = {
      {"conv", BlockKind::Conv},       {"inverted_residual", BlockKind::InvertedResidual},
      {"bottleneck", BlockKind::Bottleneck}, {"maxpool", BlockKind::MaxPool},
      {"deconv", BlockKind::Deconv},   {"head", BlockKind::Head}};
  const auto it = kinds.find(s);
  if (it == kinds.end()) throw std::invalid_argument("network spec: unknown block kind '" + s + "'");
  return it->second;
}

const char* act_name(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::ReLU: return "relu";
    case Activation::ReLU6: return "relu6";
  }
  return "?";
}

Activation parse_act(const std::string& s) {
  if (s == "none") return Activation::None;
  if (s == "relu") return Activation::ReLU;
  if (s == "relu6") return Activation::ReLU6;
  throw std::invalid_argument("network spec: unknown activation '" + s + "'");
}

void check_width(double width) {
  if (width != 1.0 && width != 0.5) {
    std::ostringstream os;
    os << "unsupported width multiplier " << width << " (expected 1.0 or 0.5)";
    throw std::invalid_argument(os.str());
  }
}

BlockSpec conv_block(std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t p, Activation act) {
  BlockSpec b;
  b.kind = BlockKind::Conv;
  b.in = in;
  b.out = out;
  b.kernel = k;
  b.stride = s;
  b.padding = p;
  b.act = act;
  b.norm = true;
  return b;
}

BlockSpec inverted_residual(std::size_t in, std::size_t out, std::size_t stride, std::size_t expand) {
  BlockSpec b;
  b.kind = BlockKind::InvertedResidual;
  b.in = in;
  b.out = out;
  b.kernel = 3;
  b.stride = stride;
  b.padding = 1;
  b.expand = expand;
  b.norm = true;
  b.act = Activation::ReLU6;
  return b;
}

BlockSpec bottleneck(std::size_t in, std::size_t mid, std::size_t out, std::size_t stride) {
  BlockSpec b;
  b.kind = BlockKind::Bottleneck;
  b.in = in;
  b.mid = mid;
  b.out = out;
  b.kernel = 3;
  b.stride = stride;
  b.padding = 1;
  b.norm = true;
  b.act = Activation::ReLU;
  return b;
}

BlockSpec max_pool() {
  BlockSpec b;
  b.kind = BlockKind::MaxPool;
  b.kernel = 3;
  b.stride = 2;
  b.padding = 1;
  return b;
}

BlockSpec deconv(std::size_t in, std::size_t out, std::size_t k, std::size_t p, int tap) {
  BlockSpec b;
  b.kind = BlockKind::Deconv;
  b.in = in;
  b.out = out;
  b.kernel = k;
  b.stride = 2;
  b.padding = p;
  b.norm = true;
  b.act = Activation::ReLU;
  b.tap = tap;
  return b;
}

BlockSpec head(std::size_t in, std::size_t landmarks) {
  BlockSpec b;
  b.kind = BlockKind::Head;
  b.in = in;
  b.out = landmarks;
  return b;
}

void add_decoder(NetworkSpec& spec, std::size_t in, std::size_t channels, std::size_t kernel, std::size_t padding) {
  for (int r = 1; r <= 3; ++r) {
    spec.blocks.push_back(deconv(in, channels, kernel, padding, r));
    in = channels;
  }
  spec.blocks.push_back(head(channels, spec.landmarks));
}

std::size_t channels_after(const BlockSpec& b, std::size_t in) {
  return b.kind == BlockKind::MaxPool ? in : b.out;
}

}  // namespace

void NetworkSpec::validate() const {
  if (landmarks == 0) throw std::invalid_argument("network spec '" + name + "': landmark count must be >= 1");
  if (blocks.empty() || blocks.back().kind != BlockKind::Head) {
    throw std::invalid_argument("network spec '" + name + "': last block must be the head");
  }
  if (blocks.back().out != landmarks) {
    throw std::invalid_argument("network spec '" + name + "': head produces " + std::to_string(blocks.back().out) +
                                " planes for " + std::to_string(landmarks) + " landmarks");
  }
  std::size_t channels = 3;
  int next_tap = 1;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.kind != BlockKind::MaxPool && b.in != channels) {
      throw std::invalid_argument("network spec '" + name + "': block " + std::to_string(i) + " expects " +
                                  std::to_string(b.in) + " channels but receives " + std::to_string(channels));
    }
    if (b.stride == 0 || (b.kind != BlockKind::MaxPool && (b.out == 0 || b.kernel == 0))) {
      throw std::invalid_argument("network spec '" + name + "': block " + std::to_string(i) + " has a zero size");
    }
    if (b.kind == BlockKind::Bottleneck && b.mid == 0) {
      throw std::invalid_argument("network spec '" + name + "': bottleneck " + std::to_string(i) + " has no width");
    }
    if (b.kind == BlockKind::Deconv && !b.norm) {
      throw std::invalid_argument("network spec '" + name + "': decoder block " + std::to_string(i) +
                                  " must be normalized");
    }
    if (b.kind == BlockKind::InvertedResidual && b.expand == 0) {
      throw std::invalid_argument("network spec '" + name + "': zero expansion at block " + std::to_string(i));
    }
    if (b.tap != 0) {
      if (b.kind != BlockKind::Deconv || b.tap != next_tap) {
        throw std::invalid_argument("network spec '" + name + "': taps must be decoder layers 1, 2, 3 in order");
      }
      ++next_tap;
    }
    channels = channels_after(b, channels);
  }
  if (next_tap != 4) throw std::invalid_argument("network spec '" + name + "': expected exactly 3 decoder taps");
}

std::string NetworkSpec::to_text() const {
  std::ostringstream os;
  os << "network " << name << " input=" << input_side << " landmarks=" << landmarks << '\n';
  for (const auto& b : blocks) {
    os << kind_name(b.kind) << " in=" << b.in << " out=" << b.out << " k=" << b.kernel << " s=" << b.stride
       << " p=" << b.padding << " t=" << b.expand << " mid=" << b.mid << " act=" << act_name(b.act)
       << " norm=" << (b.norm ? 1 : 0) << " tap=" << b.tap << '\n';
  }
  return os.str();
}

NetworkSpec NetworkSpec::parse(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  NetworkSpec spec;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::map<std::string, std::string> kv;
    std::string field;
    std::string bare;
    while (ls >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) {
        bare = field;
        continue;
      }
      kv[field.substr(0, eq)] = field.substr(eq + 1);
    }
    auto num = [&](const char* key, std::size_t fallback) -> std::size_t {
      const auto it = kv.find(key);
      if (it == kv.end()) return fallback;
      try {
        return static_cast<std::size_t>(std::stoull(it->second));
      } catch (const std::exception&) {
        throw std::invalid_argument("network spec line " + std::to_string(lineno) + ": bad value for " + key +
                                    ": '" + it->second + "'");
      }
    };
    if (word == "network") {
      spec.name = bare;
      spec.input_side = num("input", 256);
      spec.landmarks = num("landmarks", 0);
      have_header = true;
      continue;
    }
    if (!have_header) throw std::invalid_argument("network spec: missing 'network' header line");
    BlockSpec b;
    b.kind = parse_kind(word);
    b.in = num("in", 0);
    b.out = num("out", 0);
    b.kernel = num("k", 1);
    b.stride = num("s", 1);
    b.padding = num("p", 0);
    b.expand = num("t", 1);
    b.mid = num("mid", 0);
    b.act = parse_act(kv.count("act") ? kv["act"] : "none");
    b.norm = num("norm", 0) != 0;
    b.tap = static_cast<int>(num("tap", 0));
    spec.blocks.push_back(b);
  }
  spec.validate();
  return spec;
}

NetworkSpec build_student(double width, std::size_t landmarks) {
  check_width(width);
  if (landmarks == 0) throw std::invalid_argument("build_student: landmark count must be >= 1");
  NetworkSpec spec;
  spec.name = width == 1.0 ? "student-w1.0" : "student-w0.5";
  spec.input_side = 256;
  spec.landmarks = landmarks;
  spec.blocks.push_back(conv_block(3, 32, 3, 2, 1, Activation::ReLU6));
  // MobileNetV2 bottleneck table: expansion, channels, repeats, first stride.
  struct Stage {
    std::size_t t, c, n, s;
  };
  constexpr Stage stages[] = {{1, 16, 1, 1}, {6, 24, 2, 2}, {6, 32, 3, 2}, {6, 64, 4, 2},
                              {6, 96, 3, 1}, {6, 160, 3, 2}, {6, 320, 1, 1}};
  std::size_t in = 32;
  for (const auto& st : stages) {
    for (std::size_t i = 0; i < st.n; ++i) {
      spec.blocks.push_back(inverted_residual(in, st.c, i == 0 ? st.s : 1, st.t));
      in = st.c;
    }
  }
  add_decoder(spec, in, static_cast<std::size_t>(128 * width), 2, 0);
  spec.validate();
  return spec;
}

NetworkSpec build_teacher(std::size_t landmarks) {
  if (landmarks == 0) throw std::invalid_argument("build_teacher: landmark count must be >= 1");
  NetworkSpec spec;
  spec.name = "teacher";
  spec.input_side = 256;
  spec.landmarks = landmarks;
  spec.blocks.push_back(conv_block(3, 64, 7, 2, 3, Activation::ReLU));
  spec.blocks.push_back(max_pool());
  struct Stage {
    std::size_t mid, out, n, s;
  };
  constexpr Stage stages[] = {{64, 256, 3, 1}, {128, 512, 4, 2}, {256, 1024, 6, 2}, {512, 2048, 3, 2}};
  std::size_t in = 64;
  for (const auto& st : stages) {
    for (std::size_t i = 0; i < st.n; ++i) {
      spec.blocks.push_back(bottleneck(in, st.mid, st.out, i == 0 ? st.s : 1));
      in = st.out;
    }
  }
  add_decoder(spec, in, 256, 4, 1);
  spec.validate();
  return spec;
}

NetworkSpec build_toy(Role role, double width, std::size_t landmarks, ToyScale scale) {
  check_width(width);
  if (landmarks == 0) throw std::invalid_argument("build_toy: landmark count must be >= 1");
  if (scale.input_side % 32 != 0) throw std::invalid_argument("build_toy: input side must be divisible by 32");
  NetworkSpec spec;
  spec.input_side = scale.input_side;
  spec.landmarks = landmarks;
  if (role == Role::Student) {
    spec.name = width == 1.0 ? "toy-student-w1.0" : "toy-student-w0.5";
    spec.blocks.push_back(conv_block(3, 8, 3, 2, 1, Activation::ReLU6));
    spec.blocks.push_back(inverted_residual(8, 12, 2, 2));
    spec.blocks.push_back(inverted_residual(12, 16, 2, 4));
    spec.blocks.push_back(inverted_residual(16, 16, 1, 4));
    spec.blocks.push_back(inverted_residual(16, 24, 2, 4));
    spec.blocks.push_back(inverted_residual(24, 32, 2, 4));
    add_decoder(spec, 32, static_cast<std::size_t>(static_cast<double>(scale.student_decoder) * width), 2, 0);
  } else {
    spec.name = "toy-teacher";
    spec.blocks.push_back(conv_block(3, 16, 3, 2, 1, Activation::ReLU));
    spec.blocks.push_back(max_pool());
    spec.blocks.push_back(bottleneck(16, 8, 32, 1));
    spec.blocks.push_back(bottleneck(32, 16, 64, 2));
    spec.blocks.push_back(bottleneck(64, 16, 64, 1));
    spec.blocks.push_back(bottleneck(64, 24, 96, 2));
    spec.blocks.push_back(bottleneck(96, 32, 128, 2));
    add_decoder(spec, 128, scale.teacher_decoder, 4, 1);
  }
  spec.validate();
  return spec;
}

std::uint64_t count_params(const NetworkSpec& spec) {
  std::uint64_t total = 0;
  for (const auto& b : spec.blocks) {
    for (const auto& u : expand_block(b).units) {
      total += numel(weight_shape(u));
      if (u.bias) total += u.cout;
      if (u.norm) total += 2 * u.cout;
    }
  }
  return total;
}

std::uint64_t count_flops(const NetworkSpec& spec, std::size_t input_side) {
  std::uint64_t total = 0;
  std::size_t side = input_side;
  for (const auto& b : spec.blocks) {
    const auto bu = expand_block(b);
    std::size_t s = side;
    for (std::size_t i = 0; i < bu.units.size(); ++i) {
      const auto& u = bu.units[i];
      const bool skip = bu.projection && i + 1 == bu.units.size();
      const std::size_t in_side = skip ? side : s;
      const std::size_t out_side = unit_out_side(u, in_side);
      const std::uint64_t k2 = u.kernel * u.kernel;
      switch (u.op) {
        case UnitShape::Op::Dense: total += out_side * out_side * u.cout * u.cin * k2; break;
        case UnitShape::Op::Depthwise: total += out_side * out_side * u.cout * k2; break;
        // Costed as the equivalent dense conv over the zero-inserted input:
        // k²·C_in·C_out per output pixel. Scatter-only MACs would be
        // in_side² instead, a quarter of this at stride 2.
        case UnitShape::Op::Transposed: total += out_side * out_side * u.cin * u.cout * k2; break;
      }
      if (!skip) s = out_side;
    }
    side = block_out_side(b, side);
  }
  return total;
}

ModelStats model_stats(const NetworkSpec& spec, std::size_t input_side) {
  return {count_params(spec), count_flops(spec, input_side)};
}

std::array<std::size_t, 3> tap_sides(const NetworkSpec& spec, std::size_t input_side) {
  std::array<std::size_t, 3> sides{};
  std::size_t side = input_side;
  for (const auto& b : spec.blocks) {
    side = block_out_side(b, side);
    if (b.tap > 0) sides[static_cast<std::size_t>(b.tap - 1)] = side;
  }
  return sides;
}

std::array<std::size_t, 3> tap_channels(const NetworkSpec& spec) {
  std::array<std::size_t, 3> ch{};
  for (const auto& b : spec.blocks) {
    if (b.tap > 0) ch[static_cast<std::size_t>(b.tap - 1)] = b.out;
  }
  return ch;
}

template <typename T>
Network<T> Network<T>::assemble(NetworkSpec spec, const Source& source) {
  spec.validate();
  Network net;
  net.spec_ = std::move(spec);
  for (const auto& b : net.spec_.blocks) {
    Block block;
    block.spec = b;
    const auto bu = expand_block(b);
    block.has_projection = bu.projection;
    for (const auto& us : bu.units) {
      Unit u;
      u.op = static_cast<typename Unit::Op>(us.op);
      u.stride = us.stride;
      u.padding = us.padding;
      u.act = us.act;
      u.norm = us.norm;
      u.weight = source(Slot::Weight, weight_shape(us), us.cout * us.kernel * us.kernel);
      if (us.bias) u.bias = source(Slot::Bias, {us.cout}, 0);
      if (us.norm) {
        u.gamma = source(Slot::Gamma, {us.cout}, 0);
        u.beta = source(Slot::Beta, {us.cout}, 0);
        u.stats.mean = source(Slot::Mean, {us.cout}, 0);
        u.stats.var = source(Slot::Var, {us.cout}, 0);
      }
      block.units.push_back(std::move(u));
    }
    net.blocks_.push_back(std::move(block));
  }
  return net;
}

template <typename T>
Network<T> Network<T>::init(NetworkSpec spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return assemble(std::move(spec), [&](Slot slot, const Shape& shape, std::size_t fan_out) {
    switch (slot) {
      case Slot::Weight: {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_out)));
        std::vector<T> w(numel(shape));
        for (auto& v : w) v = static_cast<T>(dist(rng));
        return Tensor<T>::from(shape, std::move(w), true);
      }
      case Slot::Gamma: return Tensor<T>::full(shape, T{1}, true);
      case Slot::Var: return Tensor<T>::full(shape, T{1});
      case Slot::Bias:
      case Slot::Beta: return Tensor<T>::zeros(shape, true);
      case Slot::Mean: break;
    }
    return Tensor<T>::zeros(shape);
  });
}

template <typename T>
Network<T> Network<T>::from_tensors(NetworkSpec spec, std::vector<Tensor<T>> params, std::vector<Tensor<T>> buffers) {
  std::size_t pi = 0, bi = 0;
  auto take = [&](std::vector<Tensor<T>>& pool, std::size_t& idx, const Shape& shape, const char* what) {
    if (idx >= pool.size()) {
      throw ShapeError(std::string("network: too few ") + what + " tensors for spec");
    }
    auto t = pool[idx++];
    if (t.shape() != shape) {
      throw ShapeError(std::string("network: ") + what + " " + std::to_string(idx - 1) + " has shape " +
                       to_string(t.shape()) + ", spec expects " + to_string(shape));
    }
    return t;
  };
  auto net = assemble(std::move(spec), [&](Slot slot, const Shape& shape, std::size_t) {
    if (slot == Slot::Mean || slot == Slot::Var) return take(buffers, bi, shape, "buffer");
    auto t = take(params, pi, shape, "parameter");
    t.set_requires_grad(true);
    return t;
  });
  if (pi != params.size() || bi != buffers.size()) {
    throw ShapeError("network: " + std::to_string(params.size() - pi) + " parameter and " +
                     std::to_string(buffers.size() - bi) + " buffer tensors left over after matching spec");
  }
  return net;
}

template <typename T>
std::vector<Tensor<T>> Network<T>::parameters() const {
  std::vector<Tensor<T>> out;
  for (const auto& b : blocks_) {
    for (const auto& u : b.units) {
      out.push_back(u.weight);
      if (u.bias.defined()) out.push_back(u.bias);
      if (u.norm) {
        out.push_back(u.gamma);
        out.push_back(u.beta);
      }
    }
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> Network<T>::buffers() const {
  std::vector<Tensor<T>> out;
  for (const auto& b : blocks_) {
    for (const auto& u : b.units) {
      if (!u.norm) continue;
      out.push_back(u.stats.mean);
      out.push_back(u.stats.var);
    }
  }
  return out;
}

template <typename T>
void Network<T>::set_requires_grad(bool on) {
  for (auto& p : parameters()) p.set_requires_grad(on);
}

template <typename T>
Network<T> Network<T>::clone() const {
  std::vector<Tensor<T>> params, bufs;
  for (const auto& p : parameters()) {
    auto c = p.clone();
    c.set_requires_grad(p.requires_grad());
    params.push_back(c);
  }
  for (const auto& b : buffers()) bufs.push_back(b.clone());
  auto net = from_tensors(spec_, std::move(params), std::move(bufs));
  // from_tensors marks parameters trainable; restore the original flags.
  auto src = parameters();
  auto dst = net.parameters();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i].set_requires_grad(src[i].requires_grad());
  return net;
}

template <typename T>
Tensor<T> Network<T>::run_unit(Tape<T>& tape, Unit& u, const Tensor<T>& x, Mode mode) {
  Tensor<T> y;
  switch (u.op) {
    case Unit::Op::Dense: y = conv2d(tape, x, u.weight, u.bias, u.stride, u.padding); break;
    case Unit::Op::Depthwise: y = depthwise_conv2d(tape, x, u.weight, u.stride, u.padding); break;
    case Unit::Op::Transposed:
      y = transposed_conv2d(tape, x, u.weight, u.stride, u.padding);
      if (u.bias.defined()) throw std::logic_error("transposed unit with bias is not supported");
      break;
  }
  if (u.norm) y = batchnorm2d(tape, y, u.gamma, u.beta, u.stats, mode);
  switch (u.act) {
    case Activation::None: break;
    case Activation::ReLU: y = relu(tape, y); break;
    case Activation::ReLU6: y = relu6(tape, y); break;
  }
  return y;
}

template <typename T>
ForwardResult<T> Network<T>::forward(Tape<T>& tape, const Tensor<T>& images, Mode mode) {
  const auto& s = images.shape();
  const bool batched = s.size() == 4;
  if (!(s.size() == 3 || batched) || s[batched ? 1 : 0] != 3) {
    throw ShapeError("forward: expected 3×S×S or N×3×S×S images, got " + to_string(s));
  }
  const std::size_t h = s[batched ? 2 : 1], w = s[batched ? 3 : 2];
  if (h != w || h % 32 != 0) {
    throw ShapeError("forward: image side must be square and divisible by 32, got " + to_string(s));
  }
  ForwardResult<T> result;
  Tensor<T> x = images;
  for (auto& block : blocks_) {
    const auto& b = block.spec;
    if (b.kind == BlockKind::MaxPool) {
      x = max_pool2d(tape, x, b.kernel, b.stride, b.padding);
      continue;
    }
    const std::size_t main_units = block.units.size() - (block.has_projection ? 1 : 0);
    Tensor<T> y = x;
    for (std::size_t i = 0; i < main_units; ++i) y = run_unit(tape, block.units[i], y, mode);
    if (b.kind == BlockKind::InvertedResidual) {
      if (b.stride == 1 && b.in == b.out) y = add(tape, x, y);
    } else if (b.kind == BlockKind::Bottleneck) {
      const Tensor<T> skip = block.has_projection ? run_unit(tape, block.units.back(), x, mode) : x;
      y = relu(tape, add(tape, y, skip));
    }
    if (b.tap > 0) result.features[static_cast<std::size_t>(b.tap - 1)] = y;
    x = y;
  }
  result.heatmaps = x;
  return result;
}

template class Network<float>;
template class Network<double>;

}  // namespace lmkd
