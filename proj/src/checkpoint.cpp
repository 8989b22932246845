#include "archstyle/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "archstyle/config.hpp"
#include "archstyle/errors.hpp"

namespace archstyle {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot write checkpoint " + path);
  }

  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const std::string& name, const nn::Tensor& t) {
    str(name);
    const nn::Shape& s = t.shape();
    u32(4);
    for (int d : {s.n, s.c, s.h, s.w}) u32(static_cast<std::uint32_t>(d));
    bytes(t.data(), t.size() * sizeof(float));
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("failed writing checkpoint " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot read checkpoint " + path);
  }

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) throw CheckpointError("truncated checkpoint " + path_);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    bytes(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw CheckpointError("implausible string length in " + path_);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::pair<std::string, nn::Tensor> tensor() {
    std::string name = str();
    if (u32() != 4) throw CheckpointError("tensor '" + name + "' is not 4-dimensional");
    nn::Shape s;
    s.n = static_cast<int>(u32());
    s.c = static_cast<int>(u32());
    s.h = static_cast<int>(u32());
    s.w = static_cast<int>(u32());
    if (s.size() > (std::size_t{1} << 30)) throw CheckpointError("tensor '" + name + "' is implausibly large");
    nn::Tensor t(s);
    bytes(t.data(), t.size() * sizeof(float));
    return {std::move(name), std::move(t)};
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::string path_;
};

void write_moments(Writer& w, const std::string& prefix, const nn::Adam& opt) {
  for (const auto& [name, mom] : opt.moments()) {
    w.tensor(prefix + ".m/" + name, mom.m);
    w.tensor(prefix + ".v/" + name, mom.v);
  }
}

std::size_t moment_count(const nn::Adam& opt) { return 2 * opt.moments().size(); }

}  // namespace

void save_checkpoint(const TranslatorBundle& b, const std::string& path) {
  Writer w(path);
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(net_config_to_text(b.config()));
  w.u64(static_cast<std::uint64_t>(b.generator_optimizer().steps()));
  w.u64(static_cast<std::uint64_t>(b.discriminator_optimizer().steps()));
  const nn::ParamList params = b.parameters();
  w.u32(static_cast<std::uint32_t>(params.size() + moment_count(b.generator_optimizer()) +
                                   moment_count(b.discriminator_optimizer())));
  for (const auto& p : params) w.tensor("param/" + p.name, p.var.value());
  write_moments(w, "adam.gen", b.generator_optimizer());
  write_moments(w, "adam.dis", b.discriminator_optimizer());
  w.finish();
}

TranslatorBundle load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[sizeof kCheckpointMagic];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw CheckpointError(path + " is not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  NetConfig cfg;
  try {
    cfg = net_config_from_text(r.str());
  } catch (const ValidationError& e) {
    throw CheckpointError(std::string("bad config in checkpoint: ") + e.what());
  }
  TranslatorBundle b(cfg);
  b.generator_optimizer().set_steps(static_cast<long>(r.u64()));
  b.discriminator_optimizer().set_steps(static_cast<long>(r.u64()));

  std::map<std::string, nn::Var> by_name;
  for (const auto& p : b.parameters()) by_name.emplace(p.name, p.var);
  std::set<std::string> loaded;

  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, t] = r.tensor();
    const auto slash = name.find('/');
    const std::string kind = slash == std::string::npos ? "" : name.substr(0, slash);
    const std::string key = slash == std::string::npos ? name : name.substr(slash + 1);
    const auto it = by_name.find(key);
    if (it == by_name.end()) throw CheckpointError("checkpoint tensor '" + name + "' does not match the network");
    if (!(it->second.shape() == t.shape())) throw CheckpointError("shape mismatch for '" + name + "'");
    if (kind == "param") {
      if (!loaded.insert(key).second) throw CheckpointError("duplicate tensor '" + name + "'");
      it->second.mutable_value() = std::move(t);
    } else if (kind == "adam.gen.m" || kind == "adam.dis.m") {
      auto& opt = kind == "adam.gen.m" ? b.generator_optimizer() : b.discriminator_optimizer();
      opt.moments()[key].m = std::move(t);
    } else if (kind == "adam.gen.v" || kind == "adam.dis.v") {
      auto& opt = kind == "adam.gen.v" ? b.generator_optimizer() : b.discriminator_optimizer();
      opt.moments()[key].v = std::move(t);
    } else {
      throw CheckpointError("unknown tensor kind in '" + name + "'");
    }
  }
  if (loaded.size() != by_name.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(loaded.size()) + " of " +
                          std::to_string(by_name.size()) + " parameters");
  }
  if (!r.at_end()) throw CheckpointError("trailing bytes after checkpoint data");
  return b;
}

}  // namespace archstyle
