#include "catnet/numerics/param_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>

namespace catnet {

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) {
    auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    }
  }
  void f64(double d) { le(std::bit_cast<std::uint64_t>(d)); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw std::runtime_error("parameter file truncated");
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(in_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return v;
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(in_.begin() + static_cast<long>(pos_), in_.begin() + static_cast<long>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_parameters(const ParameterSet& params) {
  std::vector<std::uint8_t> out;
  Writer w(out);
  w.bytes("CATP", 4);
  w.le<std::uint32_t>(kParamFormatVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params.items()) {
    if (p.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw std::invalid_argument("parameter name too long: " + p.name);
    }
    const auto& t = p.var.value();
    if (t.rank() > std::numeric_limits<std::uint8_t>::max()) {
      throw std::invalid_argument("parameter rank too large: " + p.name);
    }
    w.le<std::uint16_t>(static_cast<std::uint16_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    w.le<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (double v : t.data()) w.f64(v);
  }
  return out;
}

ParameterSet decode_parameters(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(4) != "CATP") throw std::runtime_error("not a parameter file (bad magic)");
  const auto version = r.le<std::uint32_t>();
  if (version != kParamFormatVersion) {
    throw std::runtime_error("unsupported parameter file version " + std::to_string(version));
  }
  const auto count = r.le<std::uint32_t>();
  ParameterSet out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.le<std::uint16_t>();
    std::string name = r.str(len);
    const auto rank = r.le<std::uint8_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.le<std::uint32_t>();
    Tensor t(shape);
    for (auto& v : t.data()) v = r.f64();
    out.add(std::move(name), std::move(t));
  }
  if (!r.done()) throw std::runtime_error("trailing bytes after parameter payload");
  return out;
}

void save_parameters(const ParameterSet& params, const std::filesystem::path& path) {
  auto bytes = encode_parameters(params);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ParameterSet load_parameters(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return decode_parameters(bytes);
}

void assign_parameters(ParameterSet& dst, const ParameterSet& src) {
  for (auto& p : dst.items()) {
    const Var& s = src.get(p.name);
    if (s.shape() != p.var.shape()) {
      throw std::invalid_argument("parameter " + p.name + " shape " + shape_str(s.shape()) +
                                  " does not match " + shape_str(p.var.shape()));
    }
    p.var.mutable_value() = s.value();
  }
}

}  // namespace catnet
