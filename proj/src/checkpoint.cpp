#include "lmkd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace lmkd {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::uint64_t Checkpoint::param_elements() const {
  std::uint64_t n = 0;
  for (const auto& t : params) n += t.values.size();
  return n;
}

namespace {

template <typename U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out += s;
}

void put_tensors(std::string& out, const std::vector<StoredTensor>& ts, Precision p) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put<std::uint64_t>(out, d);
    for (double v : t.values) {
      if (p == Precision::F32) {
        put<float>(out, static_cast<float>(v));
      } else {
        put<double>(out, v);
      }
    }
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::vector<StoredTensor> get_tensors(Precision p) {
    const auto count = get<std::uint32_t>();
    std::vector<StoredTensor> ts(count);
    for (auto& t : ts) {
      const auto rank = get<std::uint32_t>();
      if (rank > 8) throw std::runtime_error("checkpoint: implausible tensor rank " + std::to_string(rank));
      for (std::uint32_t i = 0; i < rank; ++i) t.shape.push_back(get<std::uint64_t>());
      const std::size_t n = numel(t.shape);
      need(n * (p == Precision::F32 ? 4 : 8));
      t.values.resize(n);
      for (auto& v : t.values) v = p == Precision::F32 ? static_cast<double>(get<float>()) : get<double>();
    }
    return ts;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw std::runtime_error("checkpoint is truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
std::vector<StoredTensor> store(const std::vector<Tensor<T>>& ts) {
  std::vector<StoredTensor> out;
  for (const auto& t : ts) out.push_back({t.shape(), std::vector<double>(t.data().begin(), t.data().end())});
  return out;
}

template <typename T>
std::vector<Tensor<T>> restore(const std::vector<StoredTensor>& ts) {
  std::vector<Tensor<T>> out;
  for (const auto& t : ts) {
    std::vector<T> v(t.values.begin(), t.values.end());
    out.push_back(Tensor<T>::from(t.shape, std::move(v)));
  }
  return out;
}

}  // namespace

std::string serialize(const Checkpoint& ckpt) {
  std::string out = "LMKD";
  put<std::uint32_t>(out, ckpt.version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.precision));
  put_string(out, ckpt.spec.to_text());
  put_string(out, ckpt.metadata);
  put_tensors(out, ckpt.params, ckpt.precision);
  put_tensors(out, ckpt.buffers, ckpt.precision);
  return out;
}

Checkpoint deserialize(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "LMKD") != 0) throw std::runtime_error("not an lmkd checkpoint");
  Reader r(bytes);
  r.get<std::uint32_t>();  // magic
  Checkpoint c;
  c.version = r.get<std::uint32_t>();
  if (c.version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(c.version));
  }
  c.precision = parse_precision(static_cast<int>(r.get<std::uint32_t>()));
  c.spec = NetworkSpec::parse(r.get_string());
  c.metadata = r.get_string();
  c.params = r.get_tensors(c.precision);
  c.buffers = r.get_tensors(c.precision);
  if (!r.done()) throw std::runtime_error("checkpoint has trailing bytes");
  if (c.param_elements() != count_params(c.spec)) {
    throw std::runtime_error("checkpoint holds " + std::to_string(c.param_elements()) +
                             " parameter values, spec needs " + std::to_string(count_params(c.spec)));
  }
  return c;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  const std::string bytes = serialize(ckpt);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  try {
    return deserialize(read_file_bytes(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

template <typename T>
Checkpoint make_checkpoint(const Network<T>& net, std::string metadata) {
  Checkpoint c;
  c.precision = sizeof(T) == 4 ? Precision::F32 : Precision::F64;
  c.spec = net.spec();
  c.metadata = std::move(metadata);
  c.params = store(net.parameters());
  c.buffers = store(net.buffers());
  return c;
}

template <typename T>
Network<T> network_from(const Checkpoint& ckpt) {
  return Network<T>::from_tensors(ckpt.spec, restore<T>(ckpt.params), restore<T>(ckpt.buffers));
}

template Checkpoint make_checkpoint(const Network<float>&, std::string);
template Checkpoint make_checkpoint(const Network<double>&, std::string);
template Network<float> network_from(const Checkpoint&);
template Network<double> network_from(const Checkpoint&);

}  // namespace lmkd
