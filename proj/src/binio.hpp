#pragma once

// Little-endian length-prefixed encoding used by the snapshot and corpus
// files. Readers throw ChecksumMismatch on truncation: a short read can only
// happen when the checksum was also wrong or the file was cut.

#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "litsearch/docmodel.hpp"
#include "litsearch/error.hpp"

namespace litsearch::bin {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }

  std::string& buffer() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(s[i]);
    return v;
  }
  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(s[i]);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  std::string str() {
    const auto n = u64();
    return std::string(take(n));
  }
  std::size_t count() {
    const auto n = u64();
    if (n > in_.size() - pos_) fail();  // every element takes at least one byte
    return static_cast<std::size_t>(n);
  }
  std::string_view take(std::uint64_t n) {
    if (n > in_.size() - pos_) fail();
    auto s = in_.substr(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

  [[noreturn]] static void fail() { throw Error(ErrorCode::ChecksumMismatch, "truncated or corrupt data"); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

inline void write(Writer& w, const CharSpan& s) {
  w.u64(s.start);
  w.u64(s.length);
}
inline void read(Reader& r, CharSpan& s) {
  s.start = r.u64();
  s.length = r.u64();
}

inline void write(Writer& w, const EntityAnnotation& a) {
  write(w, a.span);
  w.str(a.text);
  w.u8(static_cast<std::uint8_t>(a.etype));
  w.u8(static_cast<std::uint8_t>(a.identifier.ns));
  w.str(a.identifier.id);
  w.str(a.semantic_key);
}
inline void read(Reader& r, EntityAnnotation& a) {
  read(r, a.span);
  a.text = r.str();
  a.etype = static_cast<EntityType>(r.u8());
  a.identifier.ns = static_cast<Namespace>(r.u8());
  a.identifier.id = r.str();
  a.semantic_key = r.str();
  if (static_cast<int>(a.etype) > 5 || static_cast<int>(a.identifier.ns) > 5) Reader::fail();
}

inline void write(Writer& w, const Relation& rel) {
  w.u64(rel.pmid);
  w.u8(static_cast<std::uint8_t>(rel.rtype));
  w.str(rel.e1);
  w.str(rel.e2);
  w.u64(rel.evidence.size());
  for (auto e : rel.evidence) w.u64(e);
}
inline void read(Reader& r, Relation& rel) {
  rel.pmid = r.u64();
  rel.rtype = static_cast<RelationType>(r.u8());
  if (static_cast<std::size_t>(rel.rtype) >= kRelationTypeCount) Reader::fail();
  rel.e1 = r.str();
  rel.e2 = r.str();
  rel.evidence.resize(r.count());
  for (auto& e : rel.evidence) e = r.u64();
}

inline void write(Writer& w, const Document& d) {
  w.u64(d.pmid);
  w.u8(d.pmcid ? 1 : 0);
  if (d.pmcid) w.str(*d.pmcid);
  w.str(d.title);
  w.str(d.journal);
  w.i64(d.pub_year);
  w.u64(d.pub_types.size());
  for (const auto& t : d.pub_types) w.str(t);
  w.u64(d.passages.size());
  for (const auto& p : d.passages) {
    w.u8(static_cast<std::uint8_t>(p.section));
    w.str(p.text);
    w.u64(p.offset);
    w.u64(p.annotations.size());
    for (const auto& a : p.annotations) write(w, a);
  }
  w.u64(d.relations.size());
  for (const auto& rel : d.relations) write(w, rel);
}
inline void read(Reader& r, Document& d) {
  d.pmid = r.u64();
  if (r.u8()) d.pmcid = r.str();
  d.title = r.str();
  d.journal = r.str();
  d.pub_year = static_cast<int>(r.i64());
  const auto nt = r.count();
  for (std::size_t i = 0; i < nt; ++i) d.pub_types.insert(r.str());
  d.passages.resize(r.count());
  for (auto& p : d.passages) {
    p.section = static_cast<SectionKind>(r.u8());
    if (static_cast<int>(p.section) > 6) Reader::fail();
    p.text = r.str();
    p.offset = r.u64();
    p.annotations.resize(r.count());
    for (auto& a : p.annotations) read(r, a);
  }
  d.relations.resize(r.count());
  for (auto& rel : d.relations) read(r, rel);
}

}  // namespace litsearch::bin
