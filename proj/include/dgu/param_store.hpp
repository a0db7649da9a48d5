#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dgu/matrix.hpp"

namespace dgu {

// Named parameter matrices with stable iteration order. The order in which
// parameters are added defines the flat-vector layout, the gradient layout
// and the checkpoint layout, and never changes afterwards.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Matrix value;
  };

  std::size_t add(std::string name, Matrix value);

  std::size_t count() const { return entries_.size(); }
  std::size_t total_size() const { return total_size_; }

  const Entry& entry(std::size_t i) const { return entries_[i]; }
  Matrix& value(std::size_t i) { return entries_[i].value; }
  const Matrix& value(std::size_t i) const { return entries_[i].value; }

  bool contains(const std::string& name) const {
    return index_.count(name) != 0;
  }
  std::size_t index_of(const std::string& name) const;
  Matrix& at(const std::string& name) { return value(index_of(name)); }
  const Matrix& at(const std::string& name) const {
    return value(index_of(name));
  }

  // Offset of entry i in the flat vector.
  std::size_t offset(std::size_t i) const { return offsets_[i]; }

  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

  // True when both stores have identical names and shapes in the same order.
  bool same_manifest(const ParamStore& other) const;

  // Flat binary checkpoint: header (magic, version, shape manifest) followed
  // by little-endian 64-bit floats. Round-trips exactly.
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

 private:
  std::vector<Entry> entries_;
  std::vector<std::size_t> offsets_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t total_size_{0};
};

}  // namespace dgu
