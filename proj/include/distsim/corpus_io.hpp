// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "distsim/common.hpp"
#include "distsim/pair_counts.hpp"
#include "distsim/vocabulary.hpp"

namespace distsim {

struct IngestOptions {
  bool lowercase = false;
  /// Keep only the top-N objects by marginal frequency (0 = keep all).
  std::size_t top_objects = 0;
};

namespace detail {

inline std::string lowercased(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline Count parse_count_field(std::string_view field, std::size_t line_no) {
  if (field.empty() || field[0] == '-' || field[0] == '+')
    throw DataError("line " + std::to_string(line_no) + ": count must be a positive integer");
  Count value = 0;
  for (char c : field) {
    if (c < '0' || c > '9')
      throw DataError("line " + std::to_string(line_no) + ": count must be a positive integer");
    value = value * 10 + static_cast<Count>(c - '0');
  }
  if (value == 0) throw DataError("line " + std::to_string(line_no) + ": count must be positive");
  return value;
}

struct PairRecord {
  std::string object;
  std::string context;
  Count count;
};

/// Tab-separated: object, context, optional positive count (default 1).
inline bool parse_pair_line(const std::string& line, std::size_t line_no, bool lowercase,
                            PairRecord& out) {
  if (line.empty()) return false;
  std::size_t first = line.find('\t');
  if (first == std::string::npos)
    throw DataError("line " + std::to_string(line_no) + ": expected tab-separated object and context");
  std::size_t second = line.find('\t', first + 1);
  std::string object = line.substr(0, first);
  std::string context;
  Count count = 1;
  if (second == std::string::npos) {
    context = line.substr(first + 1);
  } else {
    context = line.substr(first + 1, second - first - 1);
    std::string_view rest(line.data() + second + 1, line.size() - second - 1);
    if (rest.find('\t') != std::string_view::npos)
      throw DataError("line " + std::to_string(line_no) + ": too many fields");
    count = parse_count_field(rest, line_no);
  }
  if (object.empty() || context.empty())
    throw DataError("line " + std::to_string(line_no) + ": empty object or context");
  out.object = lowercase ? lowercased(object) : std::move(object);
  out.context = lowercase ? lowercased(context) : std::move(context);
  out.count = count;
  return true;
}

}  // namespace detail

/// Keep only the top-N objects by marginal frequency, ties broken
/// lexicographically by surface; pairs of dropped objects are discarded.
/// The vocabulary itself is left intact.
inline PairCounts truncate_objects(const PairCounts& counts, std::size_t top_n) {
  if (top_n == 0 || counts.num_objects() <= top_n) return counts;
  std::vector<ObjectId> ranked = counts.object_ids();
  std::sort(ranked.begin(), ranked.end(), [&](ObjectId a, ObjectId b) {
    Count ca = counts.object_marginal(a), cb = counts.object_marginal(b);
    if (ca != cb) return ca > cb;
    return counts.vocab().surface(a) < counts.vocab().surface(b);
  });
  ranked.resize(top_n);
  std::sort(ranked.begin(), ranked.end());
  PairCounts::Builder builder(counts.vocab());
  for (ObjectId x : ranked)
    for (const auto& [y, c] : counts.row(x)) builder.add(x, y, c);
  return std::move(builder).build();
}

/// Pair file ingestion: one record per line, fields separated by a single
/// tab.  Counts accumulate; vocabulary ids are assigned in first-seen order.
inline PairCounts ingest_pairs(std::istream& in, const IngestOptions& options = {}) {
  PairCounts::Builder builder;
  std::string line;
  std::size_t line_no = 0;
  bool any = false;
  detail::PairRecord rec;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::parse_pair_line(line, line_no, options.lowercase, rec)) continue;
    builder.add_surface(rec.object, rec.context, rec.count);
    any = true;
  }
  if (!any) throw DataError("empty corpus");
  PairCounts counts = std::move(builder).build();
  if (options.top_objects > 0) counts = truncate_objects(counts, options.top_objects);
  return counts;
}

/// Occurrence-level ingestion of the same pair format; a record with count
/// n expands to n occurrences.  Interns into the given vocabulary.
inline std::vector<PairOccurrence> read_pair_occurrences(std::istream& in, Vocabulary& vocab,
                                                         const IngestOptions& options = {}) {
  std::vector<PairOccurrence> out;
  std::string line;
  std::size_t line_no = 0;
  detail::PairRecord rec;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::parse_pair_line(line, line_no, options.lowercase, rec)) continue;
    ObjectId x = vocab.intern(rec.object);
    ContextId y = vocab.intern(rec.context);
    for (Count i = 0; i < rec.count; ++i) out.push_back({x, y});
  }
  return out;
}

/// Adjacent-bigram extraction from a token file, one sentence per line,
/// whitespace-separated tokens.  Pairs never cross line boundaries.
template <typename Sink>
inline void extract_adjacent_bigrams(std::istream& in, bool lowercase, Sink&& sink) {
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream tokens(line);
    std::string prev, cur;
    if (!(tokens >> prev)) continue;
    while (tokens >> cur) {
      if (lowercase)
        sink(detail::lowercased(prev), detail::lowercased(cur));
      else
        sink(prev, cur);
      prev = std::move(cur);
    }
  }
}

inline std::vector<PairOccurrence> extract_bigram_occurrences(std::istream& in, Vocabulary& vocab,
                                                              bool lowercase = false) {
  std::vector<PairOccurrence> out;
  extract_adjacent_bigrams(in, lowercase, [&](const std::string& a, const std::string& b) {
    ObjectId x = vocab.intern(a);
    ContextId y = vocab.intern(b);
    out.push_back({x, y});
  });
  return out;
}

inline PairCounts ingest_tokens(std::istream& in, const IngestOptions& options = {}) {
  Vocabulary vocab;
  std::vector<PairOccurrence> occs = extract_bigram_occurrences(in, vocab, options.lowercase);
  if (occs.empty()) throw DataError("empty corpus");
  PairCounts counts = counts_from_occurrences(vocab, occs);
  if (options.top_objects > 0) counts = truncate_objects(counts, options.top_objects);
  return counts;
}

/// Drop all pairs with count 1 and recompute marginals and the total.
/// Objects or contexts whose marginal falls to zero stay in the
/// vocabulary; they are simply no longer active.  Idempotent.
inline PairCounts filter_singletons(const PairCounts& counts) {
  PairCounts::Builder builder(counts.vocab());
  for (ObjectId x : counts.object_ids())
    for (const auto& [y, c] : counts.row(x))
      if (c > 1) builder.add(x, y, c);
  return std::move(builder).build();
}

// --- serialized counts container (versioned, round-trippable) -------------

namespace detail {

inline constexpr char kCountsMagic[4] = {'D', 'S', 'C', 'T'};
inline constexpr std::uint32_t kCountsVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("truncated counts file");
  return value;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
  auto n = read_raw<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw DataError("truncated counts file");
  return s;
}

}  // namespace detail

inline void save_counts(std::ostream& out, const PairCounts& counts) {
  out.write(detail::kCountsMagic, 4);
  detail::write_raw(out, detail::kCountsVersion);
  detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(counts.vocab().size()));
  for (WordId id = 0; id < counts.vocab().size(); ++id)
    detail::write_string(out, counts.vocab().surface(id));
  detail::write_raw<std::uint64_t>(out, counts.num_pairs());
  for (ObjectId x : counts.object_ids())
    for (const auto& [y, c] : counts.row(x)) {
      detail::write_raw<std::uint32_t>(out, x);
      detail::write_raw<std::uint32_t>(out, y);
      detail::write_raw<std::uint64_t>(out, c);
    }
}

inline PairCounts load_counts(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, detail::kCountsMagic))
    throw DataError("not a counts file");
  auto version = detail::read_raw<std::uint32_t>(in);
  if (version != detail::kCountsVersion)
    throw DataError("unsupported counts file version " + std::to_string(version));
  auto vocab_size = detail::read_raw<std::uint32_t>(in);
  Vocabulary vocab;
  for (std::uint32_t i = 0; i < vocab_size; ++i) vocab.intern(detail::read_string(in));
  PairCounts::Builder builder(std::move(vocab));
  auto num_pairs = detail::read_raw<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < num_pairs; ++i) {
    auto x = detail::read_raw<std::uint32_t>(in);
    auto y = detail::read_raw<std::uint32_t>(in);
    auto c = detail::read_raw<std::uint64_t>(in);
    builder.add(x, y, c);
  }
  return std::move(builder).build();
}

}  // namespace distsim
