#include "gedi/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace gedi {

namespace {

constexpr char kMagic[8] = {'G', 'E', 'D', 'I', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kTagModel = 1;
constexpr std::uint32_t kTagSwav = 2;
constexpr std::uint32_t kTagBuffer = 3;
constexpr std::uint32_t kTagAdam = 4;

class Writer {
 public:
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void matrix(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
  const std::string& bytes() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n) {
    buf_.append(static_cast<const char*>(p), n);
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() { return take<std::uint8_t>(); }
  std::uint32_t u32() { return take<std::uint32_t>(); }
  std::uint64_t u64() { return take<std::uint64_t>(); }
  double f64() { return take<double>(); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }
  Eigen::MatrixXd matrix() {
    const auto rows = static_cast<Eigen::Index>(u64());
    const auto cols = static_cast<Eigen::Index>(u64());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = f64();
    return m;
  }
  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }

 private:
  template <typename T>
  T take() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::uint64_t n) const {
    if (pos_ + n > size_) throw std::runtime_error("checkpoint: truncated file");
  }
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void write_mlp(Writer& w, const Mlp& mlp) {
  w.u32(static_cast<std::uint32_t>(mlp.layers.size()));
  w.u32(mlp.activation == Activation::kRelu ? 0u : 1u);
  w.f64(mlp.leaky_slope);
  w.u8(mlp.standardize_layers ? 1 : 0);
  for (const DenseLayer& l : mlp.layers) {
    w.u32(static_cast<std::uint32_t>(l.weight.rows()));
    w.u32(static_cast<std::uint32_t>(l.weight.cols()));
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) w.f64(l.weight(i, j));
    for (Eigen::Index j = 0; j < l.bias.cols(); ++j) w.f64(l.bias(0, j));
  }
}

Mlp read_mlp(Reader& r) {
  Mlp mlp;
  const std::uint32_t layers = r.u32();
  mlp.activation = r.u32() == 0 ? Activation::kRelu : Activation::kLeakyRelu;
  mlp.leaky_slope = r.f64();
  mlp.standardize_layers = r.u8() != 0;
  for (std::uint32_t k = 0; k < layers; ++k) {
    const auto rows = static_cast<Eigen::Index>(r.u32());
    const auto cols = static_cast<Eigen::Index>(r.u32());
    DenseLayer l;
    l.weight.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) l.weight(i, j) = r.f64();
    l.bias.resize(1, cols);
    for (Eigen::Index j = 0; j < cols; ++j) l.bias(0, j) = r.f64();
    mlp.layers.push_back(std::move(l));
  }
  return mlp;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::vector<std::pair<std::uint32_t, std::string>> sections;

  if (ck.model) {
    Writer w;
    w.f64(ck.model->tau);
    write_mlp(w, ck.model->encoder);
    write_mlp(w, ck.model->head);
    sections.emplace_back(kTagModel, w.bytes());
  }
  if (ck.swav) {
    Writer w;
    w.f64(ck.swav->tau);
    write_mlp(w, ck.swav->encoder);
    write_mlp(w, ck.swav->projector);
    w.matrix(ck.swav->prototypes);
    sections.emplace_back(kTagSwav, w.bytes());
  }
  if (ck.buffer) {
    Writer w;
    w.matrix(ck.buffer->entries);
    w.str(ck.buffer->rng_state);
    sections.emplace_back(kTagBuffer, w.bytes());
  }
  if (ck.adam) {
    Writer w;
    w.f64(ck.adam->cfg.lr);
    w.f64(ck.adam->cfg.beta1);
    w.f64(ck.adam->cfg.beta2);
    w.f64(ck.adam->cfg.eps);
    w.u64(static_cast<std::uint64_t>(ck.adam->step));
    w.u32(static_cast<std::uint32_t>(ck.adam->m.size()));
    for (std::size_t i = 0; i < ck.adam->m.size(); ++i) {
      w.matrix(ck.adam->m[i]);
      w.matrix(ck.adam->v[i]);
    }
    sections.emplace_back(kTagAdam, w.bytes());
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f.write(kMagic, sizeof kMagic);
  const std::uint32_t count = static_cast<std::uint32_t>(sections.size());
  f.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& [tag, payload] : sections) {
    f.write(reinterpret_cast<const char*>(&tag), 4);
    const std::uint64_t len = payload.size();
    f.write(reinterpret_cast<const char*>(&len), 8);
    f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);

  Reader r(bytes.data(), bytes.size());
  r.seek(8);
  const std::uint32_t count = r.u32();
  Checkpoint ck;
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::uint32_t tag = r.u32();
    const std::uint64_t len = r.u64();
    const std::size_t end = r.pos() + len;
    switch (tag) {
      case kTagModel: {
        ModelParams p;
        p.tau = r.f64();
        p.encoder = read_mlp(r);
        p.head = read_mlp(r);
        ck.model = std::move(p);
        break;
      }
      case kTagSwav: {
        SwavParams p;
        p.tau = r.f64();
        p.encoder = read_mlp(r);
        p.projector = read_mlp(r);
        p.prototypes = r.matrix();
        ck.swav = std::move(p);
        break;
      }
      case kTagBuffer: {
        ReplayBufferState b;
        b.entries = r.matrix();
        b.rng_state = r.str();
        ck.buffer = std::move(b);
        break;
      }
      case kTagAdam: {
        AdamState a;
        a.cfg.lr = r.f64();
        a.cfg.beta1 = r.f64();
        a.cfg.beta2 = r.f64();
        a.cfg.eps = r.f64();
        a.step = static_cast<std::int64_t>(r.u64());
        const std::uint32_t n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
          a.m.push_back(r.matrix());
          a.v.push_back(r.matrix());
        }
        ck.adam = std::move(a);
        break;
      }
      default:
        break;  // unknown section: skip for forward compatibility
    }
    r.seek(end);
  }
  return ck;
}

}  // namespace gedi
