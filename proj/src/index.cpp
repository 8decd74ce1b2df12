#include "litsearch/index.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_set>

#include "binio.hpp"
#include "litsearch/text.hpp"

namespace litsearch {

namespace {

const std::vector<RelationKey> kNoRelations;

std::string name_from_key(std::string_view key) {
  const auto us = key.find('_');
  std::string name(key.substr(us == std::string_view::npos ? 0 : us + 1));
  std::replace(name.begin(), name.end(), '_', ' ');
  return name;
}

template <class T>
void erase_pmid(std::vector<T>& v, Pmid pmid) {
  v.erase(std::remove_if(v.begin(), v.end(), [&](const T& x) { return x.pmid == pmid; }), v.end());
}

}  // namespace

// ------------------------------------------------------------------ EntityRef

EntityRef EntityRef::parse(std::string_view s) {
  if (!s.empty() && s.front() == '@') {
    if (!is_well_formed_key(s)) throw Error(ErrorCode::BadKey, "malformed semantic key '" + std::string(s) + "'");
    return concrete(std::string(s));
  }
  if (auto t = entity_type_from_string(s)) return any(*t);
  throw Error(ErrorCode::BadKey, "expected a semantic key or entity type, got '" + std::string(s) + "'");
}

bool EntityRef::matches(const std::string& k) const {
  if (is_concrete()) return k == key;
  return wildcard && key_entity_type(k) == wildcard;
}

std::string EntityRef::str() const { return is_concrete() ? key : std::string(to_string(*wildcard)); }

// ----------------------------------------------------------- EntityDictionary

EntityDictionary::EntityDictionary(const std::map<std::string, DictionaryEntry>& entries) {
  entries_.reserve(entries.size());
  for (const auto& [key, e] : entries) entries_.push_back(e);
  std::sort(entries_.begin(), entries_.end(), [](const DictionaryEntry& a, const DictionaryEntry& b) {
    if (a.doc_freq != b.doc_freq) return a.doc_freq > b.doc_freq;
    if (a.name != b.name) return a.name < b.name;
    return a.semantic_key < b.semantic_key;
  });

  surfaces_.resize(entries_.size());
  for (std::uint32_t ei = 0; ei < entries_.size(); ++ei) {
    auto& surf = surfaces_[ei];
    surf.push_back(entries_[ei].name);
    for (const auto& s : entries_[ei].synonyms) surf.push_back(s);
    for (std::uint32_t si = 0; si < surf.size(); ++si) {
      const auto folded = text::fold_term(surf[si]);
      if (folded.empty()) continue;
      for (std::size_t pos = 0; pos != std::string::npos;) {
        suffixes_.push_back({folded.substr(pos), ei, si});
        const auto sp = folded.find(' ', pos);
        pos = sp == std::string::npos ? sp : sp + 1;
      }
      auto [it, inserted] = exact_.emplace(folded, ei);
      if (!inserted) {
        const auto& cur = entries_[it->second];
        const auto& cand = entries_[ei];
        const int pc = entity_priority(cur.etype), pn = entity_priority(cand.etype);
        if (pn < pc) it->second = ei;  // equal priority keeps the better rank (earlier ei)
      }
    }
  }
  std::sort(suffixes_.begin(), suffixes_.end(), [](const Suffix& a, const Suffix& b) {
    if (a.text != b.text) return a.text < b.text;
    if (a.entry != b.entry) return a.entry < b.entry;
    return a.surface < b.surface;
  });
  suffixes_.erase(std::unique(suffixes_.begin(), suffixes_.end(),
                              [](const Suffix& a, const Suffix& b) { return a.text == b.text && a.entry == b.entry; }),
                  suffixes_.end());

  const std::size_t n = suffixes_.size();
  if (n == 0) return;
  sparse_.emplace_back(n);
  for (std::uint32_t i = 0; i < n; ++i) sparse_[0][i] = i;
  for (std::size_t k = 1; (std::size_t{1} << k) <= n; ++k) {
    const auto& prev = sparse_[k - 1];
    std::vector<std::uint32_t> level(n - (std::size_t{1} << k) + 1);
    for (std::size_t i = 0; i < level.size(); ++i) {
      const auto a = prev[i], b = prev[i + (std::size_t{1} << (k - 1))];
      level[i] = suffixes_[b].entry < suffixes_[a].entry ? b : a;
    }
    sparse_.push_back(std::move(level));
  }
}

std::uint32_t EntityDictionary::min_rank(std::size_t lo, std::size_t hi) const {
  const std::size_t len = hi - lo + 1;
  std::size_t k = 0;
  while ((std::size_t{2} << k) <= len) ++k;
  const auto a = sparse_[k][lo], b = sparse_[k][hi + 1 - (std::size_t{1} << k)];
  return suffixes_[b].entry < suffixes_[a].entry ? b : a;
}

std::vector<Suggestion> EntityDictionary::suggest(std::string_view prefix, std::size_t limit) const {
  std::vector<Suggestion> out;
  if (limit == 0 || suffixes_.empty()) return out;
  const auto p = text::fold_term(prefix);
  auto lo_it = std::lower_bound(suffixes_.begin(), suffixes_.end(), p,
                                [](const Suffix& s, const std::string& v) { return s.text < v; });
  auto hi_it = std::upper_bound(lo_it, suffixes_.end(), p, [](const std::string& v, const Suffix& s) {
    return v < std::string_view(s.text).substr(0, v.size());
  });
  if (lo_it == hi_it) return out;

  using Item = std::tuple<std::uint32_t, std::size_t, std::size_t, std::size_t>;  // rank, idx, lo, hi
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  auto push = [&](std::size_t lo, std::size_t hi) {
    if (lo > hi || hi == static_cast<std::size_t>(-1)) return;
    const auto idx = min_rank(lo, hi);
    heap.emplace(suffixes_[idx].entry, idx, lo, hi);
  };
  push(static_cast<std::size_t>(lo_it - suffixes_.begin()), static_cast<std::size_t>(hi_it - suffixes_.begin()) - 1);
  std::unordered_set<std::uint32_t> seen;
  while (!heap.empty() && out.size() < limit) {
    const auto [rank, idx, lo, hi] = heap.top();
    heap.pop();
    if (seen.insert(rank).second) {
      const auto& e = entries_[rank];
      out.push_back({e.name, e.semantic_key, e.etype, e.doc_freq, surfaces_[rank][suffixes_[idx].surface]});
    }
    if (idx > lo) push(lo, idx - 1);
    push(idx + 1, hi);
  }
  return out;
}

std::optional<std::string> EntityDictionary::resolve(std::string_view term) const {
  auto it = exact_.find(text::fold_term(term));
  if (it == exact_.end()) return std::nullopt;
  return entries_[it->second].semantic_key;
}

// -------------------------------------------------------------- IndexSnapshot

IndexSnapshot::IndexSnapshot() : entity_dictionary_(std::make_shared<EntityDictionary>()) {}

const Document* IndexSnapshot::document(Pmid pmid) const {
  auto it = documents_.find(pmid);
  return it == documents_.end() ? nullptr : &it->second;
}

const DocMeta* IndexSnapshot::meta(Pmid pmid) const {
  auto it = docs_.find(pmid);
  return it == docs_.end() ? nullptr : &it->second;
}

const std::vector<KeywordPosting>* IndexSnapshot::keyword(const std::string& term) const {
  auto it = keyword_postings_.find(term);
  return it == keyword_postings_.end() ? nullptr : &it->second;
}

const std::vector<EntityPosting>* IndexSnapshot::entity(const std::string& key) const {
  auto it = entity_postings_.find(key);
  return it == entity_postings_.end() ? nullptr : &it->second;
}

std::size_t IndexSnapshot::keyword_doc_freq(const std::string& term) const {
  const auto* postings = keyword(term);
  if (!postings) return 0;
  std::size_t n = 0;
  Pmid last = 0;
  for (const auto& p : *postings) {
    if (p.pmid != last) ++n;
    last = p.pmid;
  }
  return n;
}

const std::vector<RelationKey>& IndexSnapshot::relations_of(const std::string& key) const {
  auto it = relations_by_entity_.find(key);
  return it == relations_by_entity_.end() ? kNoRelations : it->second;
}

const EntityDictionary& IndexSnapshot::entity_dictionary() const { return *entity_dictionary_; }

void IndexSnapshot::add_document(const Document& d) {
  documents_[d.pmid] = d;
  DocMeta meta;
  meta.pmid = d.pmid;
  meta.title = d.title;
  meta.journal = d.journal;
  meta.pub_year = d.pub_year;
  meta.pub_types = d.pub_types;

  std::uint32_t next_token = 0;
  for (std::uint32_t pi = 0; pi < d.passages.size(); ++pi) {
    const auto& p = d.passages[pi];
    const std::string_view t = p.text;
    const text::CharIndex cidx(t);
    PassageInfo info;
    info.section = p.section;
    info.offset = p.offset;
    info.length = cidx.size_chars();
    info.first_token = next_token;
    const auto words = text::word_tokens(t);
    info.token_count = static_cast<std::uint32_t>(words.size());
    const auto sents = text::split_sentences(t);
    for (const auto& s : sents) {
      const auto b = cidx.byte_to_char(s.begin), e = cidx.byte_to_char(s.end);
      info.sentences.push_back({p.offset + b, e - b});
    }

    std::map<std::string, std::vector<std::uint32_t>> positions;
    for (const auto& tok : text::analyze_keywords(t, next_token)) {
      positions[tok.term].push_back(static_cast<std::uint32_t>(tok.position));
      ++meta.keyword_length;
    }
    for (auto& [term, pos] : positions) {
      auto& vec = keyword_postings_[term];
      KeywordPosting kp{d.pmid, pi, std::move(pos)};
      auto at = std::lower_bound(vec.begin(), vec.end(), kp, [](const KeywordPosting& a, const KeywordPosting& b) {
        return std::tie(a.pmid, a.passage) < std::tie(b.pmid, b.passage);
      });
      vec.insert(at, std::move(kp));
    }

    for (const auto& a : p.annotations) {
      const auto local = a.span.start - p.offset;
      const auto byte = cidx.char_to_byte(local);
      EntityPosting ep;
      ep.pmid = d.pmid;
      ep.passage = pi;
      ep.span = a.span;
      std::uint32_t sent = 0;
      for (std::uint32_t si = 0; si < sents.size(); ++si) {
        if (sents[si].begin <= byte) sent = si;
      }
      ep.sentence = sent;
      auto w = std::find_if(words.begin(), words.end(), [&](const text::Span& s) { return s.end > byte; });
      ep.position = next_token + static_cast<std::uint32_t>(w - words.begin());
      auto& vec = entity_postings_[a.semantic_key];
      vec.insert(std::upper_bound(vec.begin(), vec.end(), ep), ep);
    }
    next_token += info.token_count;
    meta.passages.push_back(std::move(info));
  }
  docs_[d.pmid] = std::move(meta);

  for (const auto& r0 : d.relations) {
    Relation r = r0;
    canonicalize(r);
    auto& ev = relation_store_[{r.rtype, r.e1, r.e2}][d.pmid];
    ev.insert(ev.end(), r.evidence.begin(), r.evidence.end());
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
  }
}

void IndexSnapshot::remove_document(Pmid pmid) {
  auto it = documents_.find(pmid);
  if (it == documents_.end()) return;
  const Document& d = it->second;
  for (const auto& p : d.passages) {
    for (const auto& tok : text::analyze_keywords(p.text)) {
      auto kp = keyword_postings_.find(tok.term);
      if (kp == keyword_postings_.end()) continue;
      erase_pmid(kp->second, pmid);
      if (kp->second.empty()) keyword_postings_.erase(kp);
    }
    for (const auto& a : p.annotations) {
      auto ep = entity_postings_.find(a.semantic_key);
      if (ep == entity_postings_.end()) continue;
      erase_pmid(ep->second, pmid);
      if (ep->second.empty()) entity_postings_.erase(ep);
    }
  }
  for (const auto& r0 : d.relations) {
    Relation r = r0;
    canonicalize(r);
    auto rs = relation_store_.find({r.rtype, r.e1, r.e2});
    if (rs == relation_store_.end()) continue;
    rs->second.erase(pmid);
    if (rs->second.empty()) relation_store_.erase(rs);
  }
  docs_.erase(pmid);
  documents_.erase(it);
}

void IndexSnapshot::add_synonyms(const std::map<std::string, SynonymGroup>& groups) {
  for (const auto& [key, g] : groups) synonyms_[key] = g;
}

void IndexSnapshot::refresh_dictionary_entry(const std::string& key) {
  const auto* postings = entity(key);
  auto syn = synonyms_.find(key);
  if (!postings && syn == synonyms_.end()) {
    dictionary_.erase(key);
    return;
  }
  DictionaryEntry e;
  e.semantic_key = key;
  std::set<Pmid> pmids;
  std::map<std::string, std::size_t> mention_counts;
  if (postings) {
    for (const auto& p : *postings) {
      pmids.insert(p.pmid);
      if (auto t = document_text_at(documents_.at(p.pmid), p.span)) ++mention_counts[*t];
    }
  }
  e.doc_freq = static_cast<std::uint32_t>(pmids.size());
  if (syn != synonyms_.end()) {
    e.etype = syn->second.etype;
    e.name = syn->second.preferred_name;
    for (const auto& s : syn->second.surfaces) {
      if (s != e.name) e.synonyms.push_back(s);
    }
  } else {
    e.etype = key_entity_type(key).value_or(EntityType::Chemical);
    // Most frequent mention text names an entity the lexicon does not know.
    std::size_t best = 0;
    for (const auto& [t, n] : mention_counts) {
      if (n > best) {
        best = n;
        e.name = t;
      }
    }
    if (e.name.empty()) e.name = name_from_key(key);
    for (const auto& [t, n] : mention_counts) {
      if (t != e.name) e.synonyms.push_back(t);
    }
  }
  dictionary_[key] = std::move(e);
}

void IndexSnapshot::finish() {
  stats_ = {};
  stats_.documents = docs_.size();
  for (const auto& [key, v] : entity_postings_) stats_.annotations += v.size();
  stats_.unique_identifiers = entity_postings_.size();
  std::set<std::pair<std::string, std::string>> pairs;
  relations_by_entity_.clear();
  for (const auto& [rk, ev] : relation_store_) {
    stats_.relations += ev.size();
    pairs.emplace(rk.e1, rk.e2);
    relations_by_entity_[rk.e1].push_back(rk);
    relations_by_entity_[rk.e2].push_back(rk);
  }
  stats_.unique_pairs = pairs.size();
  for (const auto& [pmid, m] : docs_) stats_.keyword_tokens += m.keyword_length;
  entity_dictionary_ = std::make_shared<EntityDictionary>(dictionary_);
}

void IndexSnapshot::check_invariants() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::SchemaError, "index invariant: " + what); };
  for (const auto& [term, v] : keyword_postings_) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i && std::tie(v[i - 1].pmid, v[i - 1].passage) >= std::tie(v[i].pmid, v[i].passage)) {
        fail("keyword postings for '" + term + "' not sorted");
      }
      if (!std::is_sorted(v[i].positions.begin(), v[i].positions.end()) ||
          std::adjacent_find(v[i].positions.begin(), v[i].positions.end()) != v[i].positions.end()) {
        fail("duplicate keyword position for '" + term + "'");
      }
      if (!docs_.count(v[i].pmid)) fail("keyword posting for unknown pmid");
    }
  }
  for (const auto& [key, v] : entity_postings_) {
    if (!std::is_sorted(v.begin(), v.end())) fail("entity postings for " + key + " not sorted");
    if (std::adjacent_find(v.begin(), v.end()) != v.end()) fail("duplicate entity posting for " + key);
  }
  std::size_t total = 0;
  for (const auto& [rk, ev] : relation_store_) {
    if (!entity_postings_.count(rk.e1) || !entity_postings_.count(rk.e2)) {
      fail("relation endpoint without postings: " + rk.e1 + " / " + rk.e2);
    }
    if (ev.empty()) fail("empty relation entry");
    total += ev.size();
  }
  if (total != stats_.relations) fail("stats.relations disagrees with relation store");
}

bool operator==(const IndexSnapshot& a, const IndexSnapshot& b) {
  return a.documents_ == b.documents_ && a.docs_ == b.docs_ && a.keyword_postings_ == b.keyword_postings_ &&
         a.entity_postings_ == b.entity_postings_ && a.relation_store_ == b.relation_store_ &&
         a.synonyms_ == b.synonyms_ && a.dictionary_ == b.dictionary_ && a.stats_ == b.stats_;
}

IndexSnapshot build_index(const AnnotatedCorpus& corpus) {
  IndexSnapshot s;
  for (const auto& d : corpus.documents) {
    if (s.documents_.count(d.pmid)) {
      throw Error(ErrorCode::DuplicatePmid, "duplicate pmid " + std::to_string(d.pmid));
    }
    s.add_document(d);
  }
  s.add_synonyms(corpus.synonyms);
  for (const auto& [key, v] : s.entity_postings_) s.refresh_dictionary_entry(key);
  for (const auto& [key, g] : s.synonyms_) s.refresh_dictionary_entry(key);
  s.finish();
  return s;
}

IndexSnapshot merge(const IndexSnapshot& base, const AnnotatedCorpus& delta) {
  IndexSnapshot s = base;
  std::set<std::string> touched;
  auto touch = [&](const Document& d) {
    for (const auto& p : d.passages) {
      for (const auto& a : p.annotations) touched.insert(a.semantic_key);
    }
  };
  for (const auto& d : delta.documents) {
    if (const auto* old = s.document(d.pmid)) {
      touch(*old);
      s.remove_document(d.pmid);
    }
    touch(d);
    s.add_document(d);
  }
  s.add_synonyms(delta.synonyms);
  for (const auto& [key, g] : delta.synonyms) touched.insert(key);
  for (const auto& key : touched) s.refresh_dictionary_entry(key);
  s.finish();
  return s;
}

std::vector<RelationRow> lookup_relations(const IndexSnapshot& snap, const EntityRef& e1,
                                          std::optional<RelationType> rtype, const EntityRef& e2) {
  if (!e1.is_concrete() && !e2.is_concrete()) {
    throw Error(ErrorCode::BadKey, "relation lookup needs at least one concrete semantic key");
  }
  for (const auto* ref : {&e1, &e2}) {
    if (ref->is_concrete() && !is_well_formed_key(ref->key)) {
      throw Error(ErrorCode::BadKey, "malformed semantic key '" + ref->key + "'");
    }
  }
  const auto& anchor = e1.is_concrete() ? e1.key : e2.key;
  std::vector<RelationRow> rows;
  for (const auto& rk : snap.relations_of(anchor)) {
    if (rtype && rk.rtype != *rtype) continue;
    const bool fwd = e1.matches(rk.e1) && e2.matches(rk.e2);
    const bool rev = e1.matches(rk.e2) && e2.matches(rk.e1);
    if (!fwd && !rev) continue;
    RelationRow row{rk.rtype, rk.e1, rk.e2, {}};
    for (const auto& [pmid, ev] : snap.relation_store().at(rk)) row.pmids.push_back(pmid);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const RelationRow& a, const RelationRow& b) {
    if (a.pmids.size() != b.pmids.size()) return a.pmids.size() > b.pmids.size();
    return std::tie(a.rtype, a.e1, a.e2) < std::tie(b.rtype, b.e1, b.e2);
  });
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

// ---------------------------------------------------------------- Persistence

namespace {

constexpr char kSnapshotMagic[4] = {'L', 'S', 'I', 'X'};
constexpr char kCorpusMagic[4] = {'L', 'S', 'C', 'P'};
constexpr std::uint32_t kCorpusVersion = 1;

enum Section : std::uint32_t { kDocuments = 1, kMeta, kKeywords, kEntities, kRelations, kSynonyms, kDictionary, kStats };

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_section(bin::Writer& out, std::uint32_t tag, bin::Writer& body) {
  out.u32(tag);
  out.str(body.buffer());
}

void write_group(bin::Writer& w, const SynonymGroup& g) {
  w.u8(static_cast<std::uint8_t>(g.etype));
  w.u8(static_cast<std::uint8_t>(g.identifier.ns));
  w.str(g.identifier.id);
  w.str(g.preferred_name);
  w.str(g.semantic_key);
  w.u64(g.surfaces.size());
  for (const auto& s : g.surfaces) w.str(s);
}

SynonymGroup read_group(bin::Reader& r) {
  SynonymGroup g;
  g.etype = static_cast<EntityType>(r.u8());
  g.identifier.ns = static_cast<Namespace>(r.u8());
  g.identifier.id = r.str();
  g.preferred_name = r.str();
  g.semantic_key = r.str();
  g.surfaces.resize(r.count());
  for (auto& s : g.surfaces) s = r.str();
  return g;
}

// Frame: magic, version, payload, crc32(magic..payload).
std::string frame(const char (&magic)[4], std::uint32_t version, std::string payload) {
  bin::Writer w;
  w.raw(std::string_view(magic, 4));
  w.u32(version);
  w.raw(payload);
  const auto crc = crc_of(w.buffer());
  w.u32(crc);
  return std::move(w.buffer());
}

std::string_view unframe(std::string_view bytes, const char (&magic)[4], std::uint32_t version, const char* what) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != std::string_view(magic, 4)) {
    throw Error(ErrorCode::IoError, std::string("not a ") + what + " file");
  }
  if (bytes.size() < 12) throw Error(ErrorCode::ChecksumMismatch, std::string(what) + " file truncated");
  bin::Reader hdr(bytes.substr(4, 4));
  const auto v = hdr.u32();
  if (v != version) {
    throw Error(ErrorCode::VersionMismatch, std::string(what) + " format version " + std::to_string(v) +
                                                " is not supported (expected " + std::to_string(version) + ")");
  }
  bin::Reader tail(bytes.substr(bytes.size() - 4));
  if (tail.u32() != crc_of(bytes.substr(0, bytes.size() - 4))) {
    throw Error(ErrorCode::ChecksumMismatch, std::string(what) + " checksum mismatch");
  }
  return bytes.substr(8, bytes.size() - 12);
}

std::string read_whole(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_whole(const std::filesystem::path& path, const std::string& bytes) {
  // Write then rename so a watcher never sees a half-written file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
}

}  // namespace

std::string encode_snapshot(const IndexSnapshot& snap) {
  bin::Writer out;
  {
    bin::Writer w;
    w.u64(snap.documents_.size());
    for (const auto& [pmid, d] : snap.documents_) bin::write(w, d);
    write_section(out, kDocuments, w);
  }
  {
    bin::Writer w;
    w.u64(snap.docs_.size());
    for (const auto& [pmid, m] : snap.docs_) {
      w.u64(m.pmid);
      w.str(m.title);
      w.str(m.journal);
      w.i64(m.pub_year);
      w.u64(m.pub_types.size());
      for (const auto& t : m.pub_types) w.str(t);
      w.u64(m.passages.size());
      for (const auto& p : m.passages) {
        w.u8(static_cast<std::uint8_t>(p.section));
        w.u64(p.offset);
        w.u64(p.length);
        w.u32(p.first_token);
        w.u32(p.token_count);
        w.u64(p.sentences.size());
        for (const auto& s : p.sentences) bin::write(w, s);
      }
      w.u32(m.keyword_length);
    }
    write_section(out, kMeta, w);
  }
  {
    bin::Writer w;
    w.u64(snap.keyword_postings_.size());
    for (const auto& [term, v] : snap.keyword_postings_) {
      w.str(term);
      w.u64(v.size());
      for (const auto& p : v) {
        w.u64(p.pmid);
        w.u32(p.passage);
        w.u64(p.positions.size());
        for (auto x : p.positions) w.u32(x);
      }
    }
    write_section(out, kKeywords, w);
  }
  {
    bin::Writer w;
    w.u64(snap.entity_postings_.size());
    for (const auto& [key, v] : snap.entity_postings_) {
      w.str(key);
      w.u64(v.size());
      for (const auto& p : v) {
        w.u64(p.pmid);
        w.u32(p.passage);
        w.u32(p.sentence);
        bin::write(w, p.span);
        w.u32(p.position);
      }
    }
    write_section(out, kEntities, w);
  }
  {
    bin::Writer w;
    w.u64(snap.relation_store_.size());
    for (const auto& [rk, ev] : snap.relation_store_) {
      w.u8(static_cast<std::uint8_t>(rk.rtype));
      w.str(rk.e1);
      w.str(rk.e2);
      w.u64(ev.size());
      for (const auto& [pmid, idx] : ev) {
        w.u64(pmid);
        w.u64(idx.size());
        for (auto i : idx) w.u64(i);
      }
    }
    write_section(out, kRelations, w);
  }
  {
    bin::Writer w;
    w.u64(snap.synonyms_.size());
    for (const auto& [key, g] : snap.synonyms_) write_group(w, g);
    write_section(out, kSynonyms, w);
  }
  {
    bin::Writer w;
    w.u64(snap.dictionary_.size());
    for (const auto& [key, e] : snap.dictionary_) {
      w.str(e.semantic_key);
      w.u8(static_cast<std::uint8_t>(e.etype));
      w.str(e.name);
      w.u64(e.synonyms.size());
      for (const auto& s : e.synonyms) w.str(s);
      w.u32(e.doc_freq);
    }
    write_section(out, kDictionary, w);
  }
  {
    bin::Writer w;
    const auto& st = snap.stats_;
    for (auto v : {st.documents, st.annotations, st.unique_identifiers, st.relations, st.unique_pairs, st.keyword_tokens}) {
      w.u64(v);
    }
    write_section(out, kStats, w);
  }
  return frame(kSnapshotMagic, kSnapshotVersion, std::move(out.buffer()));
}

IndexSnapshot decode_snapshot(std::string_view bytes) {
  bin::Reader top(unframe(bytes, kSnapshotMagic, kSnapshotVersion, "snapshot"));
  IndexSnapshot s;
  auto section = [&](std::uint32_t tag) {
    if (top.u32() != tag) throw Error(ErrorCode::ChecksumMismatch, "snapshot sections out of order");
    const auto len = top.u64();
    return bin::Reader(top.take(len));
  };
  {
    auto r = section(kDocuments);
    const auto n = r.count();
    for (std::size_t i = 0; i < n; ++i) {
      Document d;
      bin::read(r, d);
      s.documents_.emplace(d.pmid, std::move(d));
    }
  }
  {
    auto r = section(kMeta);
    const auto n = r.count();
    for (std::size_t i = 0; i < n; ++i) {
      DocMeta m;
      m.pmid = r.u64();
      m.title = r.str();
      m.journal = r.str();
      m.pub_year = static_cast<int>(r.i64());
      const auto nt = r.count();
      for (std::size_t k = 0; k < nt; ++k) m.pub_types.insert(r.str());
      m.passages.resize(r.count());
      for (auto& p : m.passages) {
        p.section = static_cast<SectionKind>(r.u8());
        p.offset = r.u64();
        p.length = r.u64();
        p.first_token = r.u32();
        p.token_count = r.u32();
        p.sentences.resize(r.count());
        for (auto& sp : p.sentences) bin::read(r, sp);
      }
      m.keyword_length = r.u32();
      s.docs_.emplace(m.pmid, std::move(m));
    }
  }
  {
    auto r = section(kKeywords);
    const auto n = r.count();
    for (std::size_t i = 0; i < n; ++i) {
      auto term = r.str();
      std::vector<KeywordPosting> v(r.count());
      for (auto& p : v) {
        p.pmid = r.u64();
        p.passage = r.u32();
        p.positions.resize(r.count());
        for (auto& x : p.positions) x = r.u32();
      }
      s.keyword_postings_.emplace(std::move(term), std::move(v));
    }
  }
  {
    auto r = section(kEntities);
    const auto n = r.count();
    for (std::size_t i = 0; i < n; ++i) {
      auto key = r.str();
      std::vector<EntityPosting> v(r.count());
      for (auto& p : v) {
        p.pmid = r.u64();
        p.passage = r.u32();
        p.sentence = r.u32();
        bin::read(r, p.span);
        p.position = r.u32();
      }
      s.entity_postings_.emplace(std::move(key), std::move(v));
    }
  }
  {
    auto r = section(kRelations);
    const auto n = r.count();
    for (std::size_t i = 0; i < n; ++i) {
      RelationKey rk;
      rk.rtype = static_cast<RelationType>(r.u8());
      rk.e1 = r.str();
      rk.e2 = r.str();
      RelationEvidence ev;
      const auto m = r.count();
      for (std::size_t k = 0; k < m; ++k) {
        const auto pmid = r.u64();
        std::vector<std::size_t> idx(r.count());
        for (auto& x : idx) x = r.u64();
        ev.emplace(pmid, std::move(idx));
      }
      s.relation_store_.emplace(std::move(rk), std::move(ev));
    }
  }
  {
    auto r = section(kSynonyms);
    const auto n = r.count();
    for (std::size_t i = 0; i < n; ++i) {
      auto g = read_group(r);
      auto key = g.semantic_key;
      s.synonyms_.emplace(std::move(key), std::move(g));
    }
  }
  {
    auto r = section(kDictionary);
    const auto n = r.count();
    for (std::size_t i = 0; i < n; ++i) {
      DictionaryEntry e;
      e.semantic_key = r.str();
      e.etype = static_cast<EntityType>(r.u8());
      e.name = r.str();
      e.synonyms.resize(r.count());
      for (auto& x : e.synonyms) x = r.str();
      e.doc_freq = r.u32();
      auto key = e.semantic_key;
      s.dictionary_.emplace(std::move(key), std::move(e));
    }
  }
  IndexStats stored;
  {
    auto r = section(kStats);
    for (auto* v : {&stored.documents, &stored.annotations, &stored.unique_identifiers, &stored.relations,
                    &stored.unique_pairs, &stored.keyword_tokens}) {
      *v = r.u64();
    }
  }
  if (!top.done()) throw Error(ErrorCode::ChecksumMismatch, "trailing bytes in snapshot");
  s.finish();
  if (!(s.stats_ == stored)) throw Error(ErrorCode::ChecksumMismatch, "snapshot statistics disagree with content");
  return s;
}

void persist(const IndexSnapshot& snap, const std::filesystem::path& path) {
  write_whole(path, encode_snapshot(snap));
}

IndexSnapshot load_snapshot(const std::filesystem::path& path) { return decode_snapshot(read_whole(path)); }

std::string encode_corpus(const AnnotatedCorpus& corpus) {
  bin::Writer w;
  w.u64(corpus.documents.size());
  for (const auto& d : corpus.documents) bin::write(w, d);
  w.u64(corpus.synonyms.size());
  for (const auto& [key, g] : corpus.synonyms) write_group(w, g);
  w.u64(corpus.errors.size());
  for (const auto& e : corpus.errors) {
    w.u64(e.pmid);
    w.str(to_string(e.code));
    w.str(e.message);
  }
  for (auto v : {corpus.counts.documents, corpus.counts.abbreviations, corpus.counts.annotations,
                 corpus.counts.relations}) {
    w.u64(v);
  }
  return frame(kCorpusMagic, kCorpusVersion, std::move(w.buffer()));
}

AnnotatedCorpus decode_corpus(std::string_view bytes) {
  bin::Reader r(unframe(bytes, kCorpusMagic, kCorpusVersion, "corpus"));
  std::vector<Document> docs(r.count());
  for (auto& d : docs) bin::read(r, d);
  std::map<std::string, SynonymGroup> synonyms;
  const auto ns = r.count();
  for (std::size_t i = 0; i < ns; ++i) {
    auto g = read_group(r);
    auto key = g.semantic_key;
    synonyms.emplace(std::move(key), std::move(g));
  }
  std::vector<PipelineError> errors(r.count());
  for (auto& e : errors) {
    e.pmid = r.u64();
    const auto code = r.str();
    e.code = ErrorCode::SchemaError;
    for (int c = 0; c <= static_cast<int>(ErrorCode::ConfigError); ++c) {
      if (to_string(static_cast<ErrorCode>(c)) == code) e.code = static_cast<ErrorCode>(c);
    }
    e.message = r.str();
  }
  auto corpus = make_corpus(std::move(docs), std::move(synonyms));
  corpus.errors = std::move(errors);
  for (auto* v : {&corpus.counts.documents, &corpus.counts.abbreviations, &corpus.counts.annotations,
                  &corpus.counts.relations}) {
    *v = r.u64();
  }
  return corpus;
}

void write_corpus_file(const AnnotatedCorpus& corpus, const std::filesystem::path& path) {
  write_whole(path, encode_corpus(corpus));
}

AnnotatedCorpus read_corpus_file(const std::filesystem::path& path) { return decode_corpus(read_whole(path)); }

// ---------------------------------------------------------------- Bulk export

std::string export_entities_tsv(const IndexSnapshot& snap) {
  std::ostringstream out;
  out << "pmid\ttype\tidentifier\tsemantic_key\tmentions\n";
  for (const auto& [pmid, d] : snap.documents()) {
    std::map<std::pair<std::string, std::string>, std::pair<EntityAnnotation, std::set<std::string>>> rows;
    for (const auto& p : d.passages) {
      for (const auto& a : p.annotations) {
        auto& row = rows[{a.semantic_key, a.identifier.str()}];
        row.first = a;
        row.second.insert(a.text);
      }
    }
    for (const auto& [k, row] : rows) {
      out << pmid << '\t' << to_string(row.first.etype) << '\t' << k.second << '\t' << k.first << '\t';
      bool first = true;
      for (const auto& m : row.second) {
        out << (first ? "" : "|") << m;
        first = false;
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string export_relations_tsv(const IndexSnapshot& snap) {
  std::vector<std::tuple<Pmid, RelationType, std::string, std::string>> rows;
  for (const auto& [rk, ev] : snap.relation_store()) {
    for (const auto& [pmid, idx] : ev) rows.emplace_back(pmid, rk.rtype, rk.e1, rk.e2);
  }
  std::sort(rows.begin(), rows.end());
  std::ostringstream out;
  out << "pmid\trtype\te1\te2\n";
  for (const auto& [pmid, t, a, b] : rows) out << pmid << '\t' << to_string(t) << '\t' << a << '\t' << b << '\n';
  return out.str();
}

}  // namespace litsearch
