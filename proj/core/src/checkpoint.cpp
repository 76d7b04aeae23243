#include "memcap/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>

#include "memcap/error.hpp"

namespace memcap {

namespace {

constexpr std::string_view kMagic = "MCKP1";

class Writer {
 public:
  void raw(std::string_view bytes) { out_.append(bytes); }
  void u32(std::uint32_t v) { uint(v, 4); }
  void u64(std::uint64_t v) { uint(v, 8); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v), 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }
  std::string take() { return std::move(out_); }

 private:
  void uint(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view raw(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("checkpoint truncated in ") + what, pos_);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(uint(4, what)); }
  std::uint64_t u64(const char* what) { return uint(8, what); }
  double f64(const char* what) { return std::bit_cast<double>(uint(8, what)); }
  std::string str(const char* what) {
    const auto n = u32(what);
    return std::string(raw(n, what));
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::uint64_t uint(int n, const char* what) {
    auto s = raw(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Blob* Checkpoint::find(std::string_view name) const {
  auto it = std::find_if(blobs.begin(), blobs.end(), [&](const Blob& b) { return b.name == name; });
  return it == blobs.end() ? nullptr : &*it;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic);
  w.str(ckpt.config_text);
  w.str(ckpt.vocab_text);
  w.str(ckpt.rng_state);
  w.u64(ckpt.step);
  w.u64(ckpt.epoch);
  w.u32(static_cast<std::uint32_t>(ckpt.blobs.size()));
  for (const auto& blob : ckpt.blobs) {
    if (shape_numel(blob.shape) != blob.values.size()) {
      throw DimensionError("checkpoint blob '" + blob.name + "' has inconsistent shape");
    }
    w.str(blob.name);
    w.u32(static_cast<std::uint32_t>(blob.shape.size()));
    for (auto extent : blob.shape) w.u32(static_cast<std::uint32_t>(extent));
    for (double v : blob.values) w.f64(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.raw(kMagic.size(), "magic") != kMagic) throw FormatError("bad checkpoint magic, expected MCKP1", 0);
  Checkpoint ckpt;
  ckpt.config_text = r.str("config");
  ckpt.vocab_text = r.str("vocabulary");
  ckpt.rng_state = r.str("rng state");
  ckpt.step = r.u64("step");
  ckpt.epoch = r.u64("epoch");
  const auto count = r.u32("blob count");
  for (std::uint32_t b = 0; b < count; ++b) {
    Blob blob;
    blob.name = r.str("blob name");
    const auto rank = r.u32("blob rank");
    if (rank > 8) throw FormatError("implausible blob rank " + std::to_string(rank), r.pos() - 4);
    std::uint64_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      blob.shape.push_back(r.u32("blob shape"));
      n *= blob.shape.back();
    }
    if (n * 8 > bytes.size() - r.pos()) throw FormatError("checkpoint truncated in blob '" + blob.name + "'", r.pos());
    blob.values.resize(n);
    for (auto& v : blob.values) v = r.f64("blob values");
    ckpt.blobs.push_back(std::move(blob));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint", r.pos());
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw UsageError("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open checkpoint " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

std::vector<Blob> snapshot_parameters(const ParamList& params) {
  std::vector<Blob> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    auto d = p.tensor.data();
    out.push_back({p.name, p.tensor.shape(), {d.begin(), d.end()}});
  }
  return out;
}

void restore_parameters(const ParamList& params, const Checkpoint& ckpt) {
  for (const auto& p : params) {
    const Blob* blob = ckpt.find(p.name);
    if (!blob) throw DimensionError("checkpoint has no parameter '" + p.name + "'");
    if (blob->shape != p.tensor.shape()) {
      throw DimensionError("parameter '" + p.name + "' is " + shape_str(p.tensor.shape()) +
                           " but checkpoint holds " + shape_str(blob->shape));
    }
    Tensor t = p.tensor;
    std::copy(blob->values.begin(), blob->values.end(), t.mutable_data().begin());
  }
}

}  // namespace memcap
