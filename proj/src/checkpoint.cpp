#include "graphbsi/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "graphbsi/error.hpp"

namespace graphbsi {

namespace {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(std::uint64_t v) {
    if (v > 0xffffffffULL) throw DomainError("checkpoint: value does not fit in u32");
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 4);
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 8);
  }
  void reals(std::span<const double> v) {
    for (double x : v) f64(x);
  }
  void schedule(const PrecisionSchedule& s) {
    f64(s.beta_start());
    f64(s.beta_end());
    f64(s.beta0());
    reals(s.mu0());
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (!in_) throw IoError("checkpoint: unexpected end of file");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::vector<double> reals(std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = f64();
    return v;
  }
  PrecisionSchedule schedule(std::size_t categories) {
    const double bs = f64(), be = f64(), b0 = f64();
    return PrecisionSchedule(bs, be, b0, reals(categories));
  }

 private:
  std::istream& in_;
};

// Guards against absurd sizes from corrupted files before allocating.
std::uint32_t bounded(std::uint32_t v, std::uint32_t limit, const char* what) {
  if (v > limit) throw IoError(std::string("checkpoint: implausible ") + what);
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  Writer w(out);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  const NetConfig& c = ckpt.net.config();
  w.u32(c.node_categories);
  w.u32(c.edge_categories);
  w.u32(c.hidden);
  w.u32(c.layers);
  w.u32(c.freqs);
  w.u32(ckpt.node_counts.n_max());
  w.schedule(ckpt.node_schedule);
  w.schedule(ckpt.edge_schedule);
  w.u32(ckpt.family.size());
  out.write(ckpt.family.data(), static_cast<std::streamsize>(ckpt.family.size()));
  w.reals(ckpt.node_counts.probabilities());
  const auto& params = ckpt.net.parameters();
  w.u32(params.size());
  for (const Matrix& p : params) {
    w.u32(p.rows());
    w.u32(p.cols());
    w.reals(p.values());
  }
  if (!out) throw IoError("checkpoint: write failed");
}

Checkpoint load_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[sizeof kCheckpointMagic];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw IoError("checkpoint: bad magic, not a checkpoint file");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  }
  NetConfig c;
  c.node_categories = bounded(r.u32(), 1 << 16, "node category count");
  c.edge_categories = bounded(r.u32(), 1 << 16, "edge category count");
  c.hidden = bounded(r.u32(), 1 << 16, "hidden width");
  c.layers = bounded(r.u32(), 1 << 10, "depth");
  c.freqs = bounded(r.u32(), 1 << 10, "frequency count");
  const std::uint32_t n_max = bounded(r.u32(), 1 << 12, "n_max");
  try {
    PrecisionSchedule node = r.schedule(c.node_categories);
    PrecisionSchedule edge = r.schedule(c.edge_categories);
    std::string family(bounded(r.u32(), 256, "family name length"), '\0');
    r.bytes(family.data(), family.size());
    NodeCountDistribution counts(r.reals(n_max));
    const std::uint32_t blocks = bounded(r.u32(), 1 << 16, "parameter block count");
    std::vector<Matrix> params;
    for (std::uint32_t b = 0; b < blocks; ++b) {
      const std::uint32_t rows = bounded(r.u32(), 1 << 20, "block rows");
      const std::uint32_t cols = bounded(r.u32(), 1 << 20, "block cols");
      Matrix m(rows, cols);
      for (double& v : m.values()) v = r.f64();
      params.push_back(std::move(m));
    }
    return Checkpoint{ReconNet(c, std::move(params)), std::move(node), std::move(edge),
                      std::move(family), std::move(counts)};
  } catch (const std::logic_error& e) {
    // Schedule, network or histogram validation failed on the stored values.
    throw IoError(std::string("checkpoint: invalid contents: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  save_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace graphbsi
