// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include "p2be/training/checkpoint.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "p2be/error.hpp"

namespace p2be::training {

namespace {

constexpr std::array<char, 4> kMagic = {'P', '2', 'B', 'E'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void floats(std::span<const float> v) {
    u64(v.size());
    for (float f : v) f32(f);
  }
  void tensor(const numgraph::Tensor& t) {
    u32(std::uint32_t(t.rank()));
    for (auto d : t.shape()) u64(d);
    for (float f : t.data()) f32(f);
  }
  void params(const numgraph::ParameterSet<float>& p) {
    u32(std::uint32_t(p.size()));
    for (const auto& e : p) {
      str(e.name);
      tensor(e.value);
    }
  }
  void section(const char (&tag)[5], const Writer& body) {
    bytes(tag, 4);
    u64(body.out_.size());
    bytes(body.out_.data(), body.out_.size());
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> in, std::string context) : in_(in), context_(std::move(context)) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() { return std::uint16_t(le(2)); }
  std::uint32_t u32() { return std::uint32_t(le(4)); }
  std::uint64_t u64() { return le(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > in_.size() - pos_) throw FormatError("truncated checkpoint (" + context_ + ")");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() {
    const auto n = u64();
    auto s = take(n);
    return std::string(s.begin(), s.end());
  }
  std::vector<float> floats() {
    const auto n = u64();
    if (n > remaining() / 4) throw FormatError("truncated checkpoint (" + context_ + ")");
    std::vector<float> v(n);
    for (auto& f : v) f = f32();
    return v;
  }
  numgraph::Tensor tensor() {
    const auto rank = u32();
    if (rank == 0 || rank > 8) throw FormatError("checkpoint tensor has invalid rank " + std::to_string(rank));
    numgraph::Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = u64();
      if (d == 0 || d > remaining()) throw FormatError("checkpoint tensor has invalid dimension");
      n *= d;
      if (n > remaining()) throw FormatError("truncated checkpoint (" + context_ + ")");
    }
    std::vector<float> data(n);
    for (auto& f : data) f = f32();
    return numgraph::Tensor(std::move(shape), std::move(data));
  }
  numgraph::ParameterSet<float> params() {
    numgraph::ParameterSet<float> p;
    const auto n = u32();
    for (std::uint32_t i = 0; i < n; ++i) {
      auto name = str();
      p.add(std::move(name), tensor());
    }
    return p;
  }
  std::size_t remaining() const { return in_.size() - pos_; }
  void finish() const {
    if (pos_ != in_.size()) throw FormatError("checkpoint section " + context_ + " has trailing bytes");
  }

 private:
  std::uint64_t le(int n) {
    auto s = take(std::size_t(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(s[std::size_t(i)]) << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::string context_;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, bytes.data() + off, uInt(n));
    off += n;
  }
  return std::uint32_t(crc);
}

}  // namespace

Checkpoint Checkpoint::capture(const Classifier& model, const nlohmann::json& config, std::uint64_t step,
                               const SgdState& sgd, const AdamWState& adamw) {
  Checkpoint c;
  c.config = config;
  c.encoder = model.encoder();
  c.dim = model.dim();
  c.classes = model.classes();
  const auto& in = model.network().input_shape();
  c.height = in.at(1);
  c.width = in.at(2);
  c.step = step;
  c.network = model.network().parameters();
  if (model.has_table()) c.table = model.table();
  c.sgd = sgd;
  c.adamw = adamw;
  return c;
}

Classifier Checkpoint::model() const {
  return Classifier::restore(encoder, dim, classes, height, width, network, table);
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  Writer body;
  {
    Writer s;
    s.str(config.dump());
    body.section("CONF", s);
  }
  {
    Writer s;
    s.u8(std::uint8_t(encoder));
    s.u64(dim);
    s.u64(classes);
    s.u64(height);
    s.u64(width);
    body.section("MODL", s);
  }
  {
    Writer s;
    s.u64(step);
    body.section("STEP", s);
  }
  {
    Writer s;
    s.params(network);
    body.section("NETP", s);
  }
  if (table) {
    Writer s;
    s.u64(table->dim());
    s.floats(table->weights());
    body.section("EMBD", s);
  }
  {
    Writer s;
    s.params(sgd.velocity);
    s.u64(adamw.step);
    s.floats(adamw.first_moment);
    s.floats(adamw.second_moment);
    body.section("OPTS", s);
  }

  Writer out;
  out.bytes(kMagic.data(), kMagic.size());
  out.u16(kCheckpointVersion);
  out.bytes(body.data().data(), body.data().size());
  out.u32(crc_of(body.data()));
  return std::move(out.data());
}

Checkpoint Checkpoint::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 6 + 4) throw FormatError("truncated checkpoint (header)");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  const std::uint16_t version = std::uint16_t(bytes[4] | (bytes[5] << 8));
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const auto body = bytes.subspan(6, bytes.size() - 10);
  const auto tail = bytes.subspan(bytes.size() - 4);
  const std::uint32_t stored = std::uint32_t(tail[0]) | (std::uint32_t(tail[1]) << 8) |
                               (std::uint32_t(tail[2]) << 16) | (std::uint32_t(tail[3]) << 24);
  if (stored != crc_of(body)) throw FormatError("checkpoint checksum mismatch (file is corrupt)");

  Checkpoint c;
  bool seen_conf = false, seen_modl = false, seen_netp = false, seen_opts = false;
  Reader r(body, "sections");
  while (r.remaining() > 0) {
    const auto tag_bytes = r.take(4);
    const std::string tag(tag_bytes.begin(), tag_bytes.end());
    const auto len = r.u64();
    Reader s(r.take(len), tag);
    if (tag == "CONF") {
      try {
        c.config = nlohmann::json::parse(s.str());
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint config is not valid JSON: ") + e.what());
      }
      seen_conf = true;
    } else if (tag == "MODL") {
      const auto kind = s.u8();
      if (kind > std::uint8_t(encoders::EncoderKind::p2be)) throw FormatError("checkpoint has unknown encoder");
      c.encoder = encoders::EncoderKind(kind);
      c.dim = s.u64();
      c.classes = s.u64();
      c.height = s.u64();
      c.width = s.u64();
      seen_modl = true;
    } else if (tag == "STEP") {
      c.step = s.u64();
    } else if (tag == "NETP") {
      c.network = s.params();
      seen_netp = true;
    } else if (tag == "EMBD") {
      const auto dim = s.u64();
      c.table = encoders::EmbeddingTable(dim, s.floats());
    } else if (tag == "OPTS") {
      c.sgd.velocity = s.params();
      c.adamw.step = s.u64();
      c.adamw.first_moment = s.floats();
      c.adamw.second_moment = s.floats();
      seen_opts = true;
    } else {
      throw FormatError("checkpoint has unknown section '" + tag + "'");
    }
    s.finish();
  }
  if (!seen_conf || !seen_modl || !seen_netp || !seen_opts) throw FormatError("checkpoint is missing a section");
  if (c.table.has_value() != (c.encoder == encoders::EncoderKind::p2be)) {
    throw FormatError("checkpoint embedding table does not match its encoder");
  }
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw FormatError("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace p2be::training
