#include "logodet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "logodet/error.hpp"

namespace logodet {

namespace {

constexpr char kMagic[4] = {'L', 'D', 'C', 'K'};
constexpr uint32_t kVersion = 1;

uint64_t fnv1a(const std::vector<char>& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

struct Writer {
  std::vector<char> buf;

  void raw(const void* p, size_t n) {
    const char* c = static_cast<const char*>(p);
    buf.insert(buf.end(), c, c + n);
  }
  void u32(uint32_t v) { raw(&v, sizeof v); }
  void u64(uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void f32v(const std::vector<float>& v) { raw(v.data(), v.size() * sizeof(float)); }
};

struct Reader {
  const std::vector<char>& buf;
  size_t pos = 0;
  const std::string& path;

  void raw(void* p, size_t n) {
    if (pos + n > buf.size()) throw ParseError(path + ": checkpoint truncated");
    std::memcpy(p, buf.data() + pos, n);
    pos += n;
  }
  uint32_t u32() {
    uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  void f32v(std::vector<float>& v, size_t n) {
    if (n > (1u << 28)) throw ParseError(path + ": implausible tensor size");
    v.resize(n);
    raw(v.data(), n * sizeof(float));
  }
};

void write_fc(Writer& w, const FcLayer& fc) {
  if (fc.rank > 0) {
    w.u32(1);
    w.u32(static_cast<uint32_t>(fc.out_dim()));
    w.u32(static_cast<uint32_t>(fc.in_dim()));
    w.u32(static_cast<uint32_t>(fc.rank));
    w.f32v(fc.w_first.data);
    w.f32v(fc.w_second.data);
  } else {
    w.u32(0);
    w.u32(static_cast<uint32_t>(fc.w.shape[0]));
    w.u32(static_cast<uint32_t>(fc.w.shape[1]));
    w.f32v(fc.w.data);
  }
  w.f32v(fc.b);
}

FcLayer read_fc(Reader& r) {
  FcLayer fc;
  uint32_t tag = r.u32();
  if (tag == 1) {
    int out = static_cast<int>(r.u32());
    int in = static_cast<int>(r.u32());
    int rank = static_cast<int>(r.u32());
    fc.rank = rank;
    fc.w_first = Tensor({rank, in});
    r.f32v(fc.w_first.data, static_cast<size_t>(rank) * in);
    fc.w_second = Tensor({out, rank});
    r.f32v(fc.w_second.data, static_cast<size_t>(out) * rank);
    r.f32v(fc.b, static_cast<size_t>(out));
  } else if (tag == 0) {
    int out = static_cast<int>(r.u32());
    int in = static_cast<int>(r.u32());
    fc.w = Tensor({out, in});
    r.f32v(fc.w.data, static_cast<size_t>(out) * in);
    r.f32v(fc.b, static_cast<size_t>(out));
  } else {
    throw ParseError(r.path + ": unknown FC layer tag");
  }
  return fc;
}

}  // namespace

void save_checkpoint(const std::string& path, const NetworkParams& params) {
  params.validate();
  Writer w;
  w.u32(static_cast<uint32_t>(params.num_classes));
  w.u32(params.mode == PipelineMode::kSharedMap ? 1 : 0);
  w.u32(static_cast<uint32_t>(params.pooling.levels.size()));
  for (const auto& [h, gw] : params.pooling.levels) {
    w.u32(static_cast<uint32_t>(h));
    w.u32(static_cast<uint32_t>(gw));
  }
  for (double v : params.target_mean) w.f64(v);
  for (double v : params.target_std) w.f64(v);

  w.u32(static_cast<uint32_t>(params.conv.size()));
  for (const auto& c : params.conv) {
    w.u32(static_cast<uint32_t>(c.in_ch));
    w.u32(static_cast<uint32_t>(c.out_ch));
    w.u32(static_cast<uint32_t>(c.ksize));
    w.u32(static_cast<uint32_t>(c.stride));
    w.u32(static_cast<uint32_t>(c.pad));
    w.u32(c.pool_after ? 1 : 0);
    w.u32(c.relu ? 1 : 0);
    w.f32v(c.w.data);
    w.f32v(c.b);
  }
  w.u32(static_cast<uint32_t>(params.trunk.size()));
  for (const auto& fc : params.trunk) write_fc(w, fc);
  write_fc(w, params.cls_head);
  write_fc(w, params.bbox_head);

  uint64_t hash = fnv1a(w.buf);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out.write(kMagic, 4);
  uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
  out.write(reinterpret_cast<const char*>(&hash), sizeof hash);
  if (!out) throw IoError("failed writing checkpoint " + path);
}

NetworkParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path);
  std::vector<char> all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (all.size() < 4 + sizeof(uint32_t) + sizeof(uint64_t))
    throw ParseError(path + ": checkpoint too small");
  if (std::memcmp(all.data(), kMagic, 4) != 0)
    throw ParseError(path + ": not a model checkpoint (bad magic)");
  uint32_t version;
  std::memcpy(&version, all.data() + 4, sizeof version);
  if (version != kVersion)
    throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));

  std::vector<char> body(all.begin() + 4 + sizeof(uint32_t), all.end() - sizeof(uint64_t));
  uint64_t stored;
  std::memcpy(&stored, all.data() + all.size() - sizeof stored, sizeof stored);
  if (fnv1a(body) != stored) throw ParseError(path + ": checkpoint corrupted (hash mismatch)");

  Reader r{body, 0, path};
  NetworkParams p;
  p.num_classes = static_cast<int>(r.u32());
  p.mode = r.u32() == 1 ? PipelineMode::kSharedMap : PipelineMode::kPerRegion;
  uint32_t n_levels = r.u32();
  p.pooling.levels.clear();
  for (uint32_t i = 0; i < n_levels; ++i) {
    int h = static_cast<int>(r.u32());
    int gw = static_cast<int>(r.u32());
    p.pooling.levels.push_back({h, gw});
  }
  for (auto& v : p.target_mean) v = r.f64();
  for (auto& v : p.target_std) v = r.f64();

  uint32_t n_conv = r.u32();
  for (uint32_t i = 0; i < n_conv; ++i) {
    ConvLayer c;
    c.in_ch = static_cast<int>(r.u32());
    c.out_ch = static_cast<int>(r.u32());
    c.ksize = static_cast<int>(r.u32());
    c.stride = static_cast<int>(r.u32());
    c.pad = static_cast<int>(r.u32());
    c.pool_after = r.u32() == 1;
    c.relu = r.u32() == 1;
    c.w = Tensor({c.out_ch, c.ksize * c.ksize * c.in_ch});
    r.f32v(c.w.data, c.w.numel());
    r.f32v(c.b, static_cast<size_t>(c.out_ch));
    p.conv.push_back(std::move(c));
  }
  uint32_t n_trunk = r.u32();
  for (uint32_t i = 0; i < n_trunk; ++i) p.trunk.push_back(read_fc(r));
  p.cls_head = read_fc(r);
  p.bbox_head = read_fc(r);
  if (r.pos != body.size()) throw ParseError(path + ": trailing bytes in checkpoint");
  p.validate();
  return p;
}

}  // namespace logodet
