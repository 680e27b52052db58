#include "sesn/params.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "sesn/binary_io.hpp"

namespace sesn {

namespace binary {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(path + ": write failed");
}

}  // namespace binary

void ModelParams::add(std::string name, Var var, bool trainable) {
  if (find(name)) throw ConfigError("duplicate parameter name: " + name);
  entries_.push_back({std::move(name), std::move(var), trainable});
}

const ModelParams::Entry* ModelParams::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e;
  return nullptr;
}

std::size_t ModelParams::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable || !trainable_only) n += e.var->value.size();
  return n;
}

void ModelParams::zero_grads() {
  for (auto& e : entries_) e.var->zero_grad();
}

std::vector<Tensor> ModelParams::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.var->value);
  return out;
}

void ModelParams::restore(const std::vector<Tensor>& values) {
  if (values.size() != entries_.size()) throw ShapeError("snapshot does not match parameter set");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].shape() != entries_[i].var->value.shape())
      throw ShapeError("snapshot shape mismatch for " + entries_[i].name);
    entries_[i].var->value = values[i];
  }
}

void ModelParams::assign_from(const ModelParams& other) {
  for (auto& e : entries_) {
    const Entry* src = other.find(e.name);
    if (!src) throw ShapeError("checkpoint is missing parameter " + e.name);
    if (src->var->value.shape() != e.var->value.shape())
      throw ShapeError("checkpoint parameter " + e.name + " has shape " +
                       shape_to_string(src->var->value.shape()) + ", model expects " +
                       shape_to_string(e.var->value.shape()));
  }
  if (other.size() != entries_.size())
    throw ShapeError("checkpoint holds " + std::to_string(other.size()) + " arrays, model expects " +
                     std::to_string(entries_.size()));
  for (auto& e : entries_) e.var->value = other.find(e.name)->var->value;
}

std::vector<std::uint8_t> ModelParams::serialize() const {
  std::vector<std::uint8_t> out;
  binary::put_bytes(out, "SESN");
  binary::put<std::uint32_t>(out, kFormatVersion);
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    binary::put_bytes(out, e.name);
    const Tensor& t = e.var->value;
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto extent : t.shape()) binary::put<std::uint64_t>(out, extent);
    for (Real v : t.values()) binary::put<double>(out, v);
  }
  return out;
}

ModelParams ModelParams::deserialize(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  binary::Reader r(bytes, what);
  if (r.get_string(4) != "SESN") r.fail("bad magic, not a SESN checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  ModelParams params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    std::string name = r.get_string(name_len);
    const auto rank = r.get<std::uint32_t>();
    if (rank == 0 || rank > 4) r.fail("entry " + name + " has invalid rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& extent : shape) extent = r.get<std::uint64_t>();
    const std::size_t n = shape_size(shape);
    if (n == 0 || r.remaining() / sizeof(double) < n) r.fail("entry " + name + " is truncated");
    std::vector<Real> values(n);
    for (auto& v : values) v = r.get<double>();
    params.add(std::move(name), constant(Tensor(std::move(shape), std::move(values))), false);
  }
  if (r.remaining() != 0) r.fail("trailing bytes after last entry");
  return params;
}

void ModelParams::save(const std::string& path) const { binary::write_file(path, serialize()); }

ModelParams ModelParams::load(const std::string& path) {
  return deserialize(binary::read_file(path), path);
}

bool ModelParams::bitwise_equal(const ModelParams& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.var->value.shape() != b.var->value.shape()) return false;
    const auto da = a.var->value.data();
    const auto db = b.var->value.data();
    if (std::memcmp(da.data(), db.data(), da.size_bytes()) != 0) return false;
  }
  return true;
}

}  // namespace sesn
