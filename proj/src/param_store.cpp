#include "dgu/param_store.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dgu {

namespace {

constexpr std::uint32_t kMagic = 0x4D504744;  // "DGPM"
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("ParamStore: truncated checkpoint");
  return v;
}

}  // namespace

std::size_t ParamStore::add(std::string name, Matrix value) {
  if (index_.count(name)) {
    throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  }
  const std::size_t i = entries_.size();
  index_.emplace(name, i);
  offsets_.push_back(total_size_);
  total_size_ += value.size();
  entries_.push_back(Entry{std::move(name), std::move(value)});
  return i;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::out_of_range("ParamStore: unknown parameter " + name);
  }
  return it->second;
}

std::vector<double> ParamStore::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_size_);
  for (const auto& e : entries_) {
    flat.insert(flat.end(), e.value.vec().begin(), e.value.vec().end());
  }
  return flat;
}

void ParamStore::unflatten(const std::vector<double>& flat) {
  if (flat.size() != total_size_) {
    throw std::invalid_argument(
        "ParamStore: flat length " + std::to_string(flat.size()) +
        " does not match total size " + std::to_string(total_size_));
  }
  std::size_t pos = 0;
  for (auto& e : entries_) {
    for (std::size_t i = 0; i < e.value.size(); ++i) e.value[i] = flat[pos++];
  }
}

bool ParamStore::same_manifest(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (entries_[i].value.rows() != other.entries_[i].value.rows()) return false;
    if (entries_[i].value.cols() != other.entries_[i].value.cols()) return false;
  }
  return true;
}

void ParamStore::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("ParamStore: cannot open " + path);
  write_pod(os, kMagic);
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    write_pod(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_pod(os, static_cast<std::uint64_t>(e.value.rows()));
    write_pod(os, static_cast<std::uint64_t>(e.value.cols()));
  }
  for (const auto& e : entries_) {
    os.write(reinterpret_cast<const char*>(e.value.data()),
             static_cast<std::streamsize>(e.value.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("ParamStore: write failed for " + path);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("ParamStore: cannot open " + path);
  if (read_pod<std::uint32_t>(is) != kMagic) {
    throw std::runtime_error("ParamStore: bad magic in " + path);
  }
  if (read_pod<std::uint32_t>(is) != kVersion) {
    throw std::runtime_error("ParamStore: unsupported version in " + path);
  }
  const auto count = read_pod<std::uint32_t>(is);
  ParamStore store;
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  std::vector<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = read_pod<std::uint32_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    const auto rows = read_pod<std::uint64_t>(is);
    const auto cols = read_pod<std::uint64_t>(is);
    names.push_back(std::move(name));
    shapes.emplace_back(rows, cols);
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    Matrix m(shapes[i].first, shapes[i].second);
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!is) throw std::runtime_error("ParamStore: truncated checkpoint");
    store.add(names[i], std::move(m));
  }
  return store;
}

}  // namespace dgu
