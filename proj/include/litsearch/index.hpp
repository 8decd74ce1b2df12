#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "litsearch/annotator.hpp"
#include "litsearch/docmodel.hpp"

namespace litsearch {

struct PassageInfo {
  SectionKind section = SectionKind::Other;
  std::size_t offset = 0;  // chars, document coordinates
  std::size_t length = 0;  // chars
  std::uint32_t first_token = 0;  // global word-token position of the passage start
  std::uint32_t token_count = 0;
  std::vector<CharSpan> sentences;  // document coordinates

  friend bool operator==(const PassageInfo&, const PassageInfo&) = default;
};

struct DocMeta {
  Pmid pmid = 0;
  std::string title;
  std::string journal;
  int pub_year = 0;
  std::set<std::string> pub_types;
  std::vector<PassageInfo> passages;
  std::uint32_t keyword_length = 0;  // indexed (non-stopword) tokens, the BM25 dl

  friend bool operator==(const DocMeta&, const DocMeta&) = default;
};

// Occurrences of one keyword inside one passage.
struct KeywordPosting {
  Pmid pmid = 0;
  std::uint32_t passage = 0;
  std::vector<std::uint32_t> positions;  // global token positions, ascending

  friend bool operator==(const KeywordPosting&, const KeywordPosting&) = default;
};

// One entry per annotation.
struct EntityPosting {
  Pmid pmid = 0;
  std::uint32_t passage = 0;
  std::uint32_t sentence = 0;  // index within the passage
  CharSpan span;
  std::uint32_t position = 0;  // global token position of the first word

  friend auto operator<=>(const EntityPosting&, const EntityPosting&) = default;
};

struct RelationKey {
  RelationType rtype = RelationType::ASSOCIATE;
  std::string e1;  // canonical order
  std::string e2;

  friend auto operator<=>(const RelationKey&, const RelationKey&) = default;
};

// pmid -> evidence passage indices
using RelationEvidence = std::map<Pmid, std::vector<std::size_t>>;

struct DictionaryEntry {
  std::string semantic_key;
  EntityType etype = EntityType::Chemical;
  std::string name;                   // display / preferred name
  std::vector<std::string> synonyms;  // surfaces other than the name
  std::uint32_t doc_freq = 0;

  friend bool operator==(const DictionaryEntry&, const DictionaryEntry&) = default;
};

struct IndexStats {
  std::size_t documents = 0;
  std::size_t annotations = 0;
  std::size_t unique_identifiers = 0;  // distinct semantic keys with postings
  std::size_t relations = 0;           // (triple, pmid) records
  std::size_t unique_pairs = 0;        // distinct unordered entity pairs
  std::size_t keyword_tokens = 0;

  friend bool operator==(const IndexStats&, const IndexStats&) = default;
};

// One side of a relation lookup: a concrete key or "any entity of this type".
struct EntityRef {
  std::string key;                    // non-empty for a concrete endpoint
  std::optional<EntityType> wildcard;

  static EntityRef concrete(std::string k) { return {std::move(k), std::nullopt}; }
  static EntityRef any(EntityType t) { return {{}, t}; }
  // "@GENE_JAK1" or a type name such as "Chemical"; BadKey otherwise.
  static EntityRef parse(std::string_view s);

  bool is_concrete() const { return !key.empty(); }
  bool matches(const std::string& k) const;
  std::string str() const;

  friend bool operator==(const EntityRef&, const EntityRef&) = default;
};

struct RelationRow {
  RelationType rtype = RelationType::ASSOCIATE;
  std::string e1;
  std::string e2;
  std::vector<Pmid> pmids;  // ascending

  friend bool operator==(const RelationRow&, const RelationRow&) = default;
};

struct Suggestion {
  std::string name;
  std::string semantic_key;
  EntityType etype = EntityType::Chemical;
  std::uint32_t doc_freq = 0;
  std::string matched;  // the name or synonym whose word matched the prefix

  friend bool operator==(const Suggestion&, const Suggestion&) = default;
};

// Prefix lookup over every word-boundary suffix of folded names and synonyms.
// Top-k by (doc_freq desc, name asc) comes from a sparse-table range minimum
// over the entries' global rank, so a call costs O(log n + k log k).
class EntityDictionary {
 public:
  EntityDictionary() = default;
  explicit EntityDictionary(const std::map<std::string, DictionaryEntry>& entries);

  std::vector<Suggestion> suggest(std::string_view prefix, std::size_t limit) const;
  std::optional<std::string> resolve(std::string_view term) const;

 private:
  struct Suffix {
    std::string text;
    std::uint32_t entry;
    std::uint32_t surface;
  };
  std::uint32_t min_rank(std::size_t lo, std::size_t hi) const;  // index of best in [lo, hi]

  std::vector<DictionaryEntry> entries_;  // rank order
  std::vector<std::vector<std::string>> surfaces_;  // name first, then synonyms
  std::vector<Suffix> suffixes_;
  std::vector<std::vector<std::uint32_t>> sparse_;
  std::unordered_map<std::string, std::uint32_t> exact_;
};

class IndexSnapshot {
 public:
  IndexSnapshot();

  const std::map<Pmid, Document>& documents() const { return documents_; }
  const std::map<Pmid, DocMeta>& docs() const { return docs_; }
  const std::map<std::string, std::vector<KeywordPosting>>& keyword_postings() const { return keyword_postings_; }
  const std::map<std::string, std::vector<EntityPosting>>& entity_postings() const { return entity_postings_; }
  const std::map<RelationKey, RelationEvidence>& relation_store() const { return relation_store_; }
  const std::map<std::string, DictionaryEntry>& dictionary() const { return dictionary_; }
  const std::map<std::string, SynonymGroup>& synonyms() const { return synonyms_; }
  const IndexStats& stats() const { return stats_; }

  const Document* document(Pmid pmid) const;
  const DocMeta* meta(Pmid pmid) const;
  const std::vector<KeywordPosting>* keyword(const std::string& term) const;
  const std::vector<EntityPosting>* entity(const std::string& key) const;
  // Number of documents containing the keyword.
  std::size_t keyword_doc_freq(const std::string& term) const;

  // Relations touching a concrete key.
  const std::vector<RelationKey>& relations_of(const std::string& key) const;

  const EntityDictionary& entity_dictionary() const;

  // Checks the structural invariants; throws SchemaError with a description.
  void check_invariants() const;

  friend bool operator==(const IndexSnapshot& a, const IndexSnapshot& b);

 private:
  friend IndexSnapshot build_index(const AnnotatedCorpus&);
  friend IndexSnapshot merge(const IndexSnapshot&, const AnnotatedCorpus&);
  friend IndexSnapshot load_snapshot(const std::filesystem::path&);
  friend IndexSnapshot decode_snapshot(std::string_view);
  friend std::string encode_snapshot(const IndexSnapshot&);

  void add_document(const Document& d);
  void remove_document(Pmid pmid);
  void add_synonyms(const std::map<std::string, SynonymGroup>& groups);
  void refresh_dictionary_entry(const std::string& key);
  void finish();  // recompute stats and derived lookups

  std::map<Pmid, Document> documents_;
  std::map<Pmid, DocMeta> docs_;
  std::map<std::string, std::vector<KeywordPosting>> keyword_postings_;
  std::map<std::string, std::vector<EntityPosting>> entity_postings_;
  std::map<RelationKey, RelationEvidence> relation_store_;
  std::map<std::string, SynonymGroup> synonyms_;
  std::map<std::string, DictionaryEntry> dictionary_;
  IndexStats stats_;

  // Derived, rebuilt by finish().
  std::map<std::string, std::vector<RelationKey>> relations_by_entity_;
  std::shared_ptr<const EntityDictionary> entity_dictionary_;
};

// Throws DuplicatePmid when two documents share a pmid.
IndexSnapshot build_index(const AnnotatedCorpus& corpus);

// Documents of `delta` replace base documents with the same pmid. Equal to
// rebuilding from the union; `base` is not modified.
IndexSnapshot merge(const IndexSnapshot& base, const AnnotatedCorpus& delta);

// Requires at least one concrete endpoint (BadKey otherwise). Rows are in
// canonical argument order, sorted by pmid count desc then (rtype, e1, e2).
std::vector<RelationRow> lookup_relations(const IndexSnapshot& snap, const EntityRef& e1,
                                          std::optional<RelationType> rtype, const EntityRef& e2);

inline constexpr std::uint32_t kSnapshotVersion = 1;

// Single file: "LSIX", u32 version, fixed-order length-prefixed sections,
// crc32 trailer. IoError / VersionMismatch / ChecksumMismatch on load.
std::string encode_snapshot(const IndexSnapshot& snap);
IndexSnapshot decode_snapshot(std::string_view bytes);
void persist(const IndexSnapshot& snap, const std::filesystem::path& path);
IndexSnapshot load_snapshot(const std::filesystem::path& path);

// Bulk summaries: entities.tsv (pmid, type, identifier, semantic_key,
// mentions) and relations.tsv (pmid, rtype, e1, e2).
std::string export_entities_tsv(const IndexSnapshot& snap);
std::string export_relations_tsv(const IndexSnapshot& snap);

// Annotated-corpus container used between CLI stages ("LSCP" + crc32).
std::string encode_corpus(const AnnotatedCorpus& corpus);
AnnotatedCorpus decode_corpus(std::string_view bytes);
void write_corpus_file(const AnnotatedCorpus& corpus, const std::filesystem::path& path);
AnnotatedCorpus read_corpus_file(const std::filesystem::path& path);

}  // namespace litsearch
