#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/error.hpp"
#include "jobtext/text.hpp"

namespace jobtext {

/// Row-major matrix of unit-normalized f32 embeddings addressed by string id.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::size_t dim) : dim_(dim) {}

  /// Build from raw rows; every row is normalized. Throws on duplicate ids,
  /// dimension mismatches and zero rows.
  template <typename Row>
  static EmbeddingMatrix from_rows(std::vector<std::string> ids, const std::vector<Row>& rows, std::size_t dim) {
    if (ids.size() != rows.size()) throw ArgumentError("ids and rows differ in length");
    EmbeddingMatrix m(dim);
    m.data_.reserve(rows.size() * dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != dim) throw ArgumentError("row " + ids[i] + " has wrong dimension");
      m.push_row(std::move(ids[i]), std::span(rows[i].data(), rows[i].size()));
    }
    return m;
  }

  template <typename T>
  void push_row(std::string id, std::span<const T> values) {
    if (values.size() != dim_) throw ArgumentError("row " + id + " has dimension " + std::to_string(values.size()) +
                                                   ", expected " + std::to_string(dim_));
    double norm = 0;
    for (auto v : values) norm += static_cast<double>(v) * static_cast<double>(v);
    norm = std::sqrt(norm);
    if (!(norm > 0) || !std::isfinite(norm)) throw InputError("embedding row '" + id + "' has zero or non-finite norm");
    if (!index_.try_emplace(id, ids_.size()).second) throw InputError("duplicate embedding id '" + id + "'");
    // Rows that are already unit length (to f32 precision) are stored untouched
    // so that file round trips stay bit-exact.
    const double scale = std::abs(norm - 1.0) <= 1e-6 ? 1.0 : norm;
    for (auto v : values) data_.push_back(static_cast<float>(static_cast<double>(v) / scale));
    ids_.push_back(std::move(id));
  }

  [[nodiscard]] std::size_t size() const { return ids_.size(); }
  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] bool empty() const { return ids_.empty(); }
  [[nodiscard]] const std::vector<std::string>& ids() const { return ids_; }
  [[nodiscard]] const std::string& id(std::size_t row) const { return ids_[row]; }
  [[nodiscard]] std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  [[nodiscard]] std::span<const float> data() const { return data_; }

  [[nodiscard]] std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// JVEC: "JVEC", u32 version=1, u32 n, u32 d, n*d f32 row-major, then n ids
// each as u16 byte length + UTF-8 bytes. All integers and floats little-endian.

namespace jvec {

inline constexpr char kMagic[4] = {'J', 'V', 'E', 'C'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint64_t kHeaderBytes = 16;

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

}  // namespace detail

/// Parse a JVEC image held in memory.
inline EmbeddingMatrix parse(std::string_view bytes, std::string_view source = "<jvec>") {
  auto fail = [&](const std::string& msg) { return InputError(std::string(source) + ": " + msg); };
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < kHeaderBytes)
    throw fail("truncated header: expected " + std::to_string(kHeaderBytes) + " bytes, found " +
               std::to_string(bytes.size()));
  if (std::memcmp(p, kMagic, 4) != 0) throw fail("bad magic (not a JVEC file)");
  const auto version = detail::read_u32(p + 4);
  if (version != kVersion) throw fail("unsupported JVEC version " + std::to_string(version));
  const std::uint64_t n = detail::read_u32(p + 8);
  const std::uint64_t d = detail::read_u32(p + 12);
  if (d != 0 && n > (UINT64_MAX / 4) / d) throw fail("n*d overflows the addressable size");
  const std::uint64_t value_bytes = n * d * 4;
  const std::uint64_t min_size = kHeaderBytes + value_bytes + 2 * n;
  if (bytes.size() < min_size)
    throw fail("truncated: expected at least " + std::to_string(min_size) + " bytes, found " +
               std::to_string(bytes.size()));

  EmbeddingMatrix m(static_cast<std::size_t>(d));
  std::uint64_t id_pos = kHeaderBytes + value_bytes;
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (id_pos + 2 > bytes.size())
      throw fail("truncated id table: expected at least " + std::to_string(id_pos + 2) + " bytes, found " +
                 std::to_string(bytes.size()));
    const std::uint64_t len = static_cast<std::uint64_t>(p[id_pos]) | (static_cast<std::uint64_t>(p[id_pos + 1]) << 8);
    id_pos += 2;
    if (id_pos + len > bytes.size())
      throw fail("truncated id table: expected at least " + std::to_string(id_pos + len) + " bytes, found " +
                 std::to_string(bytes.size()));
    ids.emplace_back(bytes.substr(id_pos, len));
    if (!is_valid_utf8(ids.back())) throw fail("id " + std::to_string(i) + " is not valid UTF-8");
    id_pos += len;
  }
  if (id_pos != bytes.size())
    throw fail("trailing bytes: expected " + std::to_string(id_pos) + " bytes, found " + std::to_string(bytes.size()));

  std::vector<float> row(static_cast<std::size_t>(d));
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < d; ++j) {
      const auto bits = detail::read_u32(p + kHeaderBytes + (i * d + j) * 4);
      row[j] = std::bit_cast<float>(bits);
    }
    m.push_row(std::move(ids[i]), std::span<const float>(row));
  }
  return m;
}

/// Serialize; `ids` and row values are written exactly as stored.
inline std::string serialize(const EmbeddingMatrix& m) {
  std::string out(kMagic, 4);
  detail::put_u32(out, kVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(m.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(m.dim()));
  for (float v : m.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  for (auto& id : m.ids()) {
    if (id.size() > 0xFFFF) throw ArgumentError("id longer than 65535 bytes");
    out += static_cast<char>(id.size() & 0xFF);
    out += static_cast<char>((id.size() >> 8) & 0xFF);
    out += id;
  }
  return out;
}

}  // namespace jvec

inline EmbeddingMatrix load_vectors(const std::filesystem::path& path) {
  return jvec::parse(read_file(path), path.string());
}

inline void save_vectors(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  auto bytes = jvec::serialize(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// Similarity

template <typename A, typename B>
double dot(std::span<const A> a, std::span<const B> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

template <typename T>
double norm(std::span<const T> a) {
  return std::sqrt(dot(a, a));
}

template <typename A, typename B>
double cosine(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size())
    throw ArgumentError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  const double na = norm(a), nb = norm(b);
  if (na == 0 || nb == 0) throw ArgumentError("cosine of a zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return cosine(std::span<const double>(a), std::span<const double>(b));
}

struct Neighbor {
  std::string id;
  double score = 0;
  std::size_t row = 0;
};

/// Exact top-k by cosine; ties broken by ascending id.
template <typename T>
std::vector<Neighbor> nearest(std::span<const T> query, const EmbeddingMatrix& matrix, std::size_t k) {
  if (matrix.empty()) throw ArgumentError("nearest: empty matrix");
  if (k < 1) throw ArgumentError("nearest: k must be >= 1");
  if (query.size() != matrix.dim())
    throw ArgumentError("nearest: query dimension " + std::to_string(query.size()) + ", matrix " +
                        std::to_string(matrix.dim()));
  const double qn = norm(query);
  if (qn == 0) throw ArgumentError("nearest: zero query vector");
  std::vector<Neighbor> all(matrix.size());
  for (std::size_t i = 0; i < matrix.size(); ++i) all[i] = {matrix.id(i), std::clamp(dot(matrix.row(i), query) / qn, -1.0, 1.0), i};
  k = std::min(k, all.size());
  auto before = [](const Neighbor& a, const Neighbor& b) { return a.score != b.score ? a.score > b.score : a.id < b.id; };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), before);
  all.resize(k);
  return all;
}

inline std::vector<Neighbor> nearest(const std::vector<double>& query, const EmbeddingMatrix& matrix, std::size_t k) {
  return nearest(std::span<const double>(query), matrix, k);
}

// ---------------------------------------------------------------------------
// Labeled statement sets

struct LabeledSet {
  std::string label_code;
  std::vector<std::string> member_ids;

  bool operator==(const LabeledSet&) const = default;
};

/// Sidecar JSON: {"label_code": ["member id", ...], ...}. Sets come back in
/// ascending label-code order.
inline std::vector<LabeledSet> parse_labeled_sets(std::string_view text, std::string_view source = "<sets>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string(source) + ": " + e.what());
  }
  if (!j.is_object()) throw InputError(std::string(source) + ": expected a JSON object");
  std::vector<LabeledSet> sets;
  for (auto& [code, members] : j.items()) {
    if (!members.is_array()) throw InputError(std::string(source) + ": members of " + code + " must be an array");
    LabeledSet s{code, {}};
    for (auto& m : members) s.member_ids.push_back(m.get<std::string>());
    if (s.member_ids.empty()) throw InputError(std::string(source) + ": label " + code + " has no members");
    sets.push_back(std::move(s));
  }
  return sets;
}

inline std::vector<LabeledSet> load_labeled_sets(const std::filesystem::path& path) {
  return parse_labeled_sets(read_file(path), path.string());
}

inline std::string serialize_labeled_sets(const std::vector<LabeledSet>& sets) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  std::map<std::string, const LabeledSet*> sorted;
  for (auto& s : sets) sorted[s.label_code] = &s;
  for (auto& [code, s] : sorted) j[code] = s->member_ids;
  return j.dump(2) + "\n";
}

/// Every member must resolve in one of `matrices`.
inline void check_members(const std::vector<LabeledSet>& sets, std::initializer_list<const EmbeddingMatrix*> matrices) {
  for (auto& s : sets)
    for (auto& id : s.member_ids) {
      bool ok = false;
      for (auto* m : matrices) ok = ok || m->find(id).has_value();
      if (!ok) throw InputError("label " + s.label_code + ": member '" + id + "' has no embedding");
    }
}

/// One augmentation pass. Anchors of a set are its members that resolve in
/// `seed_vectors`; each candidate joins every set whose best anchor similarity
/// reaches `threshold`. Members that are themselves candidates are kept but do
/// not act as anchors, so a second pass over the same pool adds nothing.
inline std::vector<LabeledSet> augment(const std::vector<LabeledSet>& seed_sets, const EmbeddingMatrix& seed_vectors,
                                       const EmbeddingMatrix& candidates, double threshold) {
  if (!(threshold > 0 && threshold <= 1)) throw ArgumentError("augment: threshold must lie in (0, 1]");
  if (!candidates.empty() && !seed_vectors.empty() && candidates.dim() != seed_vectors.dim())
    throw ArgumentError("augment: seed and candidate dimensions differ");
  std::vector<LabeledSet> out = seed_sets;
  for (auto& set : out) {
    std::vector<std::size_t> anchors;
    for (auto& id : set.member_ids)
      if (auto r = seed_vectors.find(id)) anchors.push_back(*r);
    if (anchors.empty()) continue;
    std::set<std::string> members(set.member_ids.begin(), set.member_ids.end());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (members.count(candidates.id(c))) continue;
      double best = -1;
      for (auto a : anchors) best = std::max(best, dot(candidates.row(c), seed_vectors.row(a)));
      if (best >= threshold) {
        set.member_ids.push_back(candidates.id(c));
        members.insert(candidates.id(c));
      }
    }
  }
  return out;
}

}  // namespace jobtext
