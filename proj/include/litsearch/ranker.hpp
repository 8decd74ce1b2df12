#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "litsearch/docmodel.hpp"
#include "litsearch/index.hpp"
#include "litsearch/querylang.hpp"

namespace litsearch {

enum class Tier : std::uint8_t { KeywordOnly = 0, DocCooccur = 1, SentenceCooccur = 2, RelationMatch = 3 };

std::string_view to_string(Tier t);  // "RelationMatch"

// Section weights used by the proximity component.
double section_weight(SectionKind s);

// One occurrence of a query term inside a document.
struct TermHit {
  std::uint32_t passage = 0;
  SectionKind section = SectionKind::Other;
  std::uint32_t sentence = 0;  // entity hits only; 0 for keyword and phrase hits
  std::uint32_t position = 0;  // global word-token position
  std::uint32_t tokens = 1;    // word tokens covered (phrases)
  CharSpan span;               // document coordinates; empty until resolved for keyword hits

  friend bool operator==(const TermHit&, const TermHit&) = default;
};

struct TermMatch {
  QueryNode::Kind kind = QueryNode::Kind::Keyword;
  std::string id;  // printed leaf, e.g. "tamoxifen", "@GENE_PON1"
  std::vector<TermHit> hits;  // sorted by (passage, position, span)
};

// Everything the scorer needs about one matching document. Terms are the
// distinct positive leaves of the query (not under NOT), sorted by id.
struct MatchInfo {
  Pmid pmid = 0;
  std::vector<TermMatch> terms;
  bool relation_hit = false;
  double bm25 = 0.0;
};

struct DocScore {
  Tier tier = Tier::KeywordOnly;
  double score = 0.0;
  SectionKind matched_section = SectionKind::Other;

  friend bool operator==(const DocScore&, const DocScore&) = default;
};

// tier: 3 relation hit, 2 two entity terms in one sentence, 1 any entity
// term, 0 otherwise. score: best section_weight/(1 + token distance) over
// same-passage hits of two different terms (a lone term counts at distance
// 0), plus the BM25 keyword component.
DocScore score_document(const MatchInfo& info);

// Okapi BM25 for one term, k1 = 1.2, b = 0.75.
double bm25_term(std::size_t tf, std::size_t df, std::size_t n_docs, double dl, double avgdl);

struct Snippet {
  std::string text;
  std::vector<CharSpan> highlights;  // snippet-relative chars, sorted, non-overlapping
  std::uint32_t passage = 0;
  SectionKind section = SectionKind::Other;

  friend bool operator==(const Snippet&, const Snippet&) = default;
};

inline constexpr std::size_t kDefaultSnippetWindow = 240;

// `focus` spans (document coordinates) name the co-occurrence to show; the
// first one is the primary match and fixes the passage. The window covers
// the focus extended to sentence bounds when that fits, otherwise it is
// centred on the focus (or on the primary match when the focus is wider than
// the window). "..." marks a cut inside a sentence.
Snippet make_snippet(const Document& doc, const std::vector<CharSpan>& focus, const std::vector<CharSpan>& highlights,
                     std::size_t window = kDefaultSnippetWindow);

struct RankedHit {
  Pmid pmid = 0;
  Tier tier = Tier::KeywordOnly;
  double score = 0.0;
  SectionKind matched_section = SectionKind::Other;
  int pub_year = 0;
  std::string title;
  std::string journal;
  Snippet snippet;  // filled for the returned page only
};

struct SearchFilters {
  std::set<std::string> journals;       // any of
  std::set<std::string> pub_types;      // any of
  std::set<SectionKind> sections;       // matched_section any of
  std::optional<int> year_from;         // inclusive
  std::optional<int> year_to;           // inclusive

  bool empty() const {
    return journals.empty() && pub_types.empty() && sections.empty() && !year_from && !year_to;
  }
};

struct Page {
  std::size_t offset = 0;
  std::size_t size = 10;  // 1..100
};

inline constexpr std::size_t kMaxPageSize = 100;

struct SearchResult {
  std::vector<RankedHit> hits;
  std::size_t total = 0;
  // "journal", "section", "pub_type" -> value -> count over all filtered matches.
  std::map<std::string, std::map<std::string, std::size_t>> facets;
  std::map<int, std::size_t> histogram;  // pub_year -> count
  std::vector<std::string> unknown_entities;  // keys with no postings and no dictionary entry
};

// Sorted by (tier desc, score desc, pub_year desc, pmid desc).
bool ranks_before(const RankedHit& a, const RankedHit& b);

// Match sets by set algebra over postings; NOT is the complement within the
// snapshot. All matches ranked, filters applied, no snippets.
std::vector<RankedHit> rank_all(const QueryAst& ast, const IndexSnapshot& snap, const SearchFilters& filters = {});

// BadPage when page.size is 0 or above kMaxPageSize.
SearchResult execute(const QueryAst& ast, const IndexSnapshot& snap, const SearchFilters& filters = {},
                     Page page = {});

// Test oracle: the same semantics by linear scan over the documents, with no
// index structures. Hits carry tier, score and matched_section.
std::vector<RankedHit> brute_force_search(const QueryAst& ast, const std::vector<Document>& corpus);
std::vector<Pmid> brute_force_rank(const QueryAst& ast, const std::vector<Document>& corpus);

}  // namespace litsearch
