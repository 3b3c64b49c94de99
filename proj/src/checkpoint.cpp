#include "nrdf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace nrdf {

namespace {

constexpr char kMagic[8] = {'N', 'R', 'D', 'F', 'T', 'B', 'L', '1'};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void size(std::size_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  template <class T, class F>
  void seq(const std::vector<T>& v, F&& each) {
    size(v.size());
    for (const T& x : v) each(x);
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::size_t size() {
    const std::uint64_t v = u64();
    // Every element takes at least one byte, so this bounds garbage lengths.
    if (v > in_.size() - pos_) throw Error(ErrorKind::CorruptFile, "checkpoint: length field out of range");
    return static_cast<std::size_t>(v);
  }
  double f64() { return std::bit_cast<double>(u64()); }
  template <class T, class F>
  std::vector<T> seq(F&& each) {
    const std::size_t n = size();
    std::vector<T> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) v.push_back(each());
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorKind::CorruptFile, "checkpoint: truncated data");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::string payload_of(const BackwardTables& t) {
  Writer w;
  w.size(t.horizon);
  w.seq(std::vector<double>(t.schedule.values().begin(), t.schedule.values().end()), [&](double v) { w.f64(v); });
  w.f64(t.epsilon);
  w.size(t.max_iter);
  w.u64(t.model_fingerprint);
  w.seq(t.grids, [&](const BeliefGrid& g) {
    w.size(g.x_size());
    w.size(g.y_size());
    w.size(g.levels());
    w.seq(g.candidates(), [&](const std::vector<double>& c) { w.seq(c, [&](double v) { w.f64(v); }); });
  });
  w.seq(t.stages, [&](const StageTable& st) {
    w.size(st.current_points);
    w.size(st.next_points);
    w.size(st.branches);
    w.seq(st.rate, [&](double v) { w.f64(v); });
    w.seq(st.dist, [&](double v) { w.f64(v); });
    w.seq(st.gap, [&](double v) { w.f64(v); });
    w.seq(st.iters, [&](std::uint32_t v) { w.u32(v); });
    w.seq(st.converged, [&](std::uint8_t v) { w.u8(v); });
  });
  w.seq(t.values, [&](const ValueTable& v) {
    w.size(v.points);
    w.size(v.branches);
    w.seq(v.values, [&](double x) { w.f64(x); });
  });
  return std::move(w.bytes());
}

BackwardTables tables_from(std::string_view payload) {
  Reader r(payload);
  BackwardTables t;
  t.horizon = static_cast<std::size_t>(r.u64());
  t.schedule = LagrangeSchedule(r.seq<double>([&] { return r.f64(); }));
  t.epsilon = r.f64();
  t.max_iter = static_cast<std::size_t>(r.u64());
  t.model_fingerprint = r.u64();
  t.grids = r.seq<BeliefGrid>([&] {
    const std::size_t x = r.size();
    const std::size_t y = r.size();
    const std::size_t levels = r.size();
    auto cands = r.seq<std::vector<double>>([&] { return r.seq<double>([&] { return r.f64(); }); });
    return BeliefGrid(x, y, levels, std::move(cands), SIZE_MAX);
  });
  t.stages = r.seq<StageTable>([&] {
    StageTable st;
    st.current_points = r.size();
    st.next_points = r.size();
    st.branches = r.size();
    st.rate = r.seq<double>([&] { return r.f64(); });
    st.dist = r.seq<double>([&] { return r.f64(); });
    st.gap = r.seq<double>([&] { return r.f64(); });
    st.iters = r.seq<std::uint32_t>([&] { return r.u32(); });
    st.converged = r.seq<std::uint8_t>([&] { return r.u8(); });
    const std::size_t cells = st.cells();
    if (st.rate.size() != cells || st.dist.size() != cells || st.gap.size() != cells ||
        st.iters.size() != cells || st.converged.size() != cells) {
      throw Error(ErrorKind::CorruptFile, "checkpoint: stage table sizes are inconsistent");
    }
    return st;
  });
  t.values = r.seq<ValueTable>([&] {
    ValueTable v;
    v.points = r.size();
    v.branches = r.size();
    v.values = r.seq<double>([&] { return r.f64(); });
    if (v.values.size() != v.points * v.branches) {
      throw Error(ErrorKind::CorruptFile, "checkpoint: value table size is inconsistent");
    }
    return v;
  });
  if (!r.done()) throw Error(ErrorKind::CorruptFile, "checkpoint: trailing bytes in payload");
  if (t.grids.size() != t.horizon + 1 || t.stages.size() != t.horizon || t.values.size() != t.horizon + 1 ||
      t.schedule.horizon() != t.horizon) {
    throw Error(ErrorKind::CorruptFile, "checkpoint: table counts do not match the horizon");
  }
  return t;
}

}  // namespace

std::string serialize_tables(const BackwardTables& tables) {
  const std::string payload = payload_of(tables);
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  w.size(payload.size());
  w.bytes() += payload;
  w.u64(fnv1a(payload));
  return std::move(w.bytes());
}

BackwardTables deserialize_tables(const std::string& bytes) {
  Reader head(bytes);
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::CorruptFile, "checkpoint: bad magic");
  }
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) head.u8();
  const std::uint32_t version = head.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::Version, "checkpoint: format version " + std::to_string(version) +
                                        " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t length = head.u64();
  const std::size_t offset = sizeof(kMagic) + 4 + 8;
  if (bytes.size() - offset < 8 || length != bytes.size() - offset - 8) {
    throw Error(ErrorKind::CorruptFile, "checkpoint: truncated or oversized file");
  }
  const std::string_view payload(bytes.data() + offset, length);
  Reader tail(std::string_view(bytes).substr(offset + length));
  if (tail.u64() != fnv1a(payload)) throw Error(ErrorKind::CorruptFile, "checkpoint: checksum mismatch");
  return tables_from(payload);
}

void save_tables(const BackwardTables& tables, const std::filesystem::path& path) {
  const std::string bytes = serialize_tables(tables);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

BackwardTables load_tables(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_tables(bytes);
}

std::uint64_t tables_checksum(const BackwardTables& tables) { return fnv1a(payload_of(tables)); }

}  // namespace nrdf
