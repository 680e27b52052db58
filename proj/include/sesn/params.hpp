#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sesn/autograd.hpp"

namespace sesn {

/// Ordered, named collection of every array a model owns: trainable weights
/// and the non-trainable batch-norm running statistics.
///
/// Checkpoint layout (little-endian):
///   "SESN" | u32 version | u32 entry count |
///   per entry: u32 name length | UTF-8 name | u32 rank | u64 extents[rank] | f64 values
class ModelParams {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  struct Entry {
    std::string name;
    Var var;
    bool trainable;
  };

  /// Registers a node under a unique name.
  void add(std::string name, Var var, bool trainable);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const Entry* find(const std::string& name) const;

  /// Total number of scalars, optionally restricted to trainable entries.
  std::size_t scalar_count(bool trainable_only = true) const;

  void zero_grads();

  /// Deep copy of every value, in entry order.
  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

  /// Copies values from `other` by name; every entry here must be present there
  /// with the same shape.
  void assign_from(const ModelParams& other);

  std::vector<std::uint8_t> serialize() const;
  /// Parses a checkpoint into detached constant nodes (no trainable flags).
  static ModelParams deserialize(const std::vector<std::uint8_t>& bytes, const std::string& what);

  void save(const std::string& path) const;
  static ModelParams load(const std::string& path);

  /// True when names, shapes and every value bit match.
  bool bitwise_equal(const ModelParams& other) const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace sesn
