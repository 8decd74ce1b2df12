#include "litsearch/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iterator>
#include <tuple>

#include "litsearch/error.hpp"
#include "litsearch/text.hpp"

namespace litsearch {

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::RelationMatch: return "RelationMatch";
    case Tier::SentenceCooccur: return "SentenceCooccur";
    case Tier::DocCooccur: return "DocCooccur";
    case Tier::KeywordOnly: return "KeywordOnly";
  }
  return "KeywordOnly";
}

double section_weight(SectionKind s) {
  switch (s) {
    case SectionKind::Title: return 3.0;
    case SectionKind::Abstract: return 2.0;
    default: return 1.0;
  }
}

double bm25_term(std::size_t tf, std::size_t df, std::size_t n_docs, double dl, double avgdl) {
  constexpr double k1 = 1.2, b = 0.75;
  if (tf == 0 || n_docs == 0) return 0.0;
  const double n = static_cast<double>(n_docs), d = static_cast<double>(df);
  const double idf = std::log(1.0 + (n - d + 0.5) / (d + 0.5));
  const double f = static_cast<double>(tf);
  const double norm = avgdl > 0 ? dl / avgdl : 1.0;
  return idf * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * norm));
}

namespace {

bool is_entity_like(QueryNode::Kind k) { return k == QueryNode::Kind::Entity || k == QueryNode::Kind::Relation; }

std::uint32_t distance(const TermHit& a, const TermHit& b) {
  return a.position > b.position ? a.position - b.position : b.position - a.position;
}

// Best same-passage pair of hits from two different terms.
struct PairChoice {
  double value = -1.0;
  const TermHit* a = nullptr;
  const TermHit* b = nullptr;
};

template <class Accept>
PairChoice best_pair(const MatchInfo& info, Accept accept) {
  PairChoice best;
  for (std::size_t i = 0; i < info.terms.size(); ++i) {
    for (std::size_t j = i + 1; j < info.terms.size(); ++j) {
      if (!accept(info.terms[i], info.terms[j])) continue;
      for (const auto& ha : info.terms[i].hits) {
        for (const auto& hb : info.terms[j].hits) {
          if (ha.passage != hb.passage) continue;
          const double v = section_weight(ha.section) / (1.0 + distance(ha, hb));
          if (v > best.value) best = {v, &ha, &hb};
        }
      }
    }
  }
  return best;
}

const TermHit* best_single(const MatchInfo& info) {
  const TermHit* best = nullptr;
  for (const auto& t : info.terms) {
    for (const auto& h : t.hits) {
      if (!best || section_weight(h.section) > section_weight(best->section)) best = &h;
    }
  }
  return best;
}

std::size_t terms_with_hits(const MatchInfo& info) {
  return static_cast<std::size_t>(
      std::count_if(info.terms.begin(), info.terms.end(), [](const TermMatch& t) { return !t.hits.empty(); }));
}

bool sentence_pair(const MatchInfo& info) {
  for (std::size_t i = 0; i < info.terms.size(); ++i) {
    if (info.terms[i].kind != QueryNode::Kind::Entity) continue;
    for (std::size_t j = i + 1; j < info.terms.size(); ++j) {
      if (info.terms[j].kind != QueryNode::Kind::Entity) continue;
      for (const auto& ha : info.terms[i].hits) {
        for (const auto& hb : info.terms[j].hits) {
          if (ha.passage == hb.passage && ha.sentence == hb.sentence) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace

DocScore score_document(const MatchInfo& info) {
  DocScore out;
  if (info.relation_hit) {
    out.tier = Tier::RelationMatch;
  } else if (sentence_pair(info)) {
    out.tier = Tier::SentenceCooccur;
  } else if (std::any_of(info.terms.begin(), info.terms.end(), [](const TermMatch& t) {
               return is_entity_like(t.kind) && !t.hits.empty();
             })) {
    out.tier = Tier::DocCooccur;
  }

  double proximity = 0.0;
  const TermHit* single = best_single(info);
  if (single) out.matched_section = single->section;
  if (terms_with_hits(info) < 2) {
    if (single) proximity = section_weight(single->section);
  } else {
    const auto pair = best_pair(info, [](const TermMatch&, const TermMatch&) { return true; });
    if (pair.a) {
      proximity = pair.value;
      out.matched_section = pair.a->section;
    }
  }
  out.score = proximity + info.bm25;
  return out;
}

bool ranks_before(const RankedHit& a, const RankedHit& b) {
  if (a.tier != b.tier) return a.tier > b.tier;
  if (a.score != b.score) return a.score > b.score;
  if (a.pub_year != b.pub_year) return a.pub_year > b.pub_year;
  return a.pmid > b.pmid;
}

// ------------------------------------------------------------------ Snippets

namespace {

struct CharText {
  explicit CharText(std::string_view s) : text(s), idx(s) {}
  std::size_t size() const { return idx.size_chars(); }
  std::string sub(std::size_t start, std::size_t len) const {
    const auto b = idx.char_to_byte(start), e = idx.char_to_byte(start + len);
    return std::string(text.substr(b, e - b));
  }
  bool space_at(std::size_t c) const {
    const auto b = idx.char_to_byte(c);
    const char ch = text[b];
    return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r';
  }

  std::string_view text;
  text::CharIndex idx;
};

}  // namespace

Snippet make_snippet(const Document& doc, const std::vector<CharSpan>& focus, const std::vector<CharSpan>& highlights,
                     std::size_t window) {
  Snippet out;
  if (doc.passages.empty()) return out;
  if (window == 0) window = kDefaultSnippetWindow;

  std::uint32_t pi = 0;
  if (!focus.empty()) {
    for (std::uint32_t i = 0; i < doc.passages.size(); ++i) {
      const auto& p = doc.passages[i];
      if (focus.front().start >= p.offset && focus.front().start < p.offset + text::CharIndex(p.text).size_chars()) {
        pi = i;
        break;
      }
    }
  }
  const auto& p = doc.passages[pi];
  out.passage = pi;
  out.section = p.section;
  const CharText ct(p.text);
  const std::size_t len = ct.size();

  std::vector<CharSpan> sents;
  for (const auto& s : text::split_sentences(p.text)) {
    const auto b = ct.idx.byte_to_char(s.begin), e = ct.idx.byte_to_char(s.end);
    sents.push_back({b, e - b});
  }
  if (sents.empty()) sents.push_back({0, len});

  // Focus in passage-local chars.
  std::size_t a = len, b = 0, pa = 0, pb = 0;
  bool first = true;
  for (const auto& f : focus) {
    if (f.start < p.offset || f.start >= p.offset + len) continue;
    const auto s = f.start - p.offset, e = std::min(len, f.end() - p.offset);
    if (first) {
      pa = s;
      pb = e;
      first = false;
    }
    a = std::min(a, s);
    b = std::max(b, e);
  }
  if (first) a = b = pa = pb = 0;

  auto sentence_of = [&](std::size_t c) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < sents.size(); ++i) {
      if (sents[i].start <= c) k = i;
    }
    return k;
  };
  const auto& s_first = sents[sentence_of(a)];
  const auto& s_last = sents[sentence_of(b > a ? b - 1 : a)];

  std::size_t start = 0, end = 0;
  if (s_last.end() >= s_first.start && s_last.end() - s_first.start <= window) {
    start = s_first.start;
    end = s_last.end();
  } else {
    std::size_t fa = a, fb = b;
    if (fb - fa > window) {
      fa = pa;
      fb = std::min(pb, pa + window);
    }
    const std::size_t mid = (fa + fb) / 2;
    start = mid > window / 2 ? mid - window / 2 : 0;
    if (start + window > len) start = len > window ? len - window : 0;
    start = std::min(start, fa);
    if (fb > window) start = std::max(start, fb - window);
    end = std::min(len, start + window);
    // Do not cut words in half.
    while (start > 0 && start < fa && !ct.space_at(start - 1)) ++start;
    while (end < len && end > fb && !ct.space_at(end)) --end;
    while (start < fa && ct.space_at(start)) ++start;
    while (end > fb && ct.space_at(end - 1)) --end;
  }

  auto at_sentence_start = [&](std::size_t c) {
    if (c == 0) return true;
    return std::any_of(sents.begin(), sents.end(), [&](const CharSpan& s) { return s.start == c; });
  };
  auto at_sentence_end = [&](std::size_t c) {
    if (c >= len) return true;
    return std::any_of(sents.begin(), sents.end(), [&](const CharSpan& s) { return s.end() == c; });
  };
  const bool lead = !at_sentence_start(start);
  const bool trail = !at_sentence_end(end);
  out.text = (lead ? "..." : "") + ct.sub(start, end - start) + (trail ? "..." : "");
  const std::size_t shift = lead ? 3 : 0;

  std::vector<CharSpan> hl;
  for (const auto& h : highlights) {
    if (h.length == 0 || h.start < p.offset) continue;
    const auto s = h.start - p.offset, e = h.end() - p.offset;
    const auto cs = std::max(s, start), ce = std::min(e, end);
    if (cs >= ce) continue;
    hl.push_back({cs - start + shift, ce - cs});
  }
  std::sort(hl.begin(), hl.end());
  for (const auto& h : hl) {
    if (!out.highlights.empty() && h.start <= out.highlights.back().end()) {
      auto& last = out.highlights.back();
      last.length = std::max(last.end(), h.end()) - last.start;
    } else {
      out.highlights.push_back(h);
    }
  }
  return out;
}

// --------------------------------------------------------- Shared query walk

namespace {

struct Leaf {
  const QueryNode* node = nullptr;
  std::string id;
  bool positive = false;
};

void collect_leaves(const QueryNode& n, bool negated, std::map<std::string, Leaf>& out) {
  if (n.is_leaf()) {
    auto id = print_query(n);
    auto& leaf = out[id];
    if (!leaf.node) {
      leaf.node = &n;
      leaf.id = id;
    }
    leaf.positive = leaf.positive || !negated;
    return;
  }
  for (const auto& c : n.children) collect_leaves(c, negated || n.kind == QueryNode::Kind::Not, out);
}

bool pattern_matches(const RelationPattern& p, RelationType t, const std::string& e1, const std::string& e2) {
  if (p.rtype && *p.rtype != t) return false;
  return (p.e1.matches(e1) && p.e2.matches(e2)) || (p.e1.matches(e2) && p.e2.matches(e1));
}

// Non-stopword phrase words with their offsets inside the phrase.
std::vector<std::pair<std::string, std::uint32_t>> phrase_anchors(const std::vector<std::string>& words) {
  std::vector<std::pair<std::string, std::uint32_t>> out;
  for (std::uint32_t i = 0; i < words.size(); ++i) {
    if (!text::is_stopword(words[i])) out.emplace_back(words[i], i);
  }
  return out;
}

void sort_hits(std::vector<TermHit>& hits) {
  std::sort(hits.begin(), hits.end(), [](const TermHit& x, const TermHit& y) {
    return std::tie(x.passage, x.position, x.span, x.tokens) < std::tie(y.passage, y.position, y.span, y.tokens);
  });
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
}

using PmidSet = std::vector<Pmid>;  // sorted

PmidSet set_and(const PmidSet& a, const PmidSet& b) {
  PmidSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}
PmidSet set_or(const PmidSet& a, const PmidSet& b) {
  PmidSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}
PmidSet set_minus(const PmidSet& a, const PmidSet& b) {
  PmidSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// ------------------------------------------------------- Index-backed search

struct LeafResult {
  std::map<Pmid, std::vector<TermHit>> hits;
  PmidSet pmids;
};

class IndexEvaluator {
 public:
  explicit IndexEvaluator(const IndexSnapshot& snap) : snap_(snap) {
    for (const auto& [pmid, m] : snap.docs()) all_.push_back(pmid);
  }

  const LeafResult& leaf(const QueryNode& n) {
    auto id = print_query(n);
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
    LeafResult r;
    switch (n.kind) {
      case QueryNode::Kind::Keyword: keyword(n.term, r); break;
      case QueryNode::Kind::Phrase: phrase(n.words, r); break;
      case QueryNode::Kind::Entity: entity(n.term, r); break;
      case QueryNode::Kind::Relation: relation(n.relation, r); break;
      default: break;
    }
    for (auto& [pmid, hs] : r.hits) {
      sort_hits(hs);
      r.pmids.push_back(pmid);
    }
    return cache_.emplace(std::move(id), std::move(r)).first->second;
  }

  PmidSet eval(const QueryNode& n) {
    switch (n.kind) {
      case QueryNode::Kind::And: {
        PmidSet acc = eval(n.children.front());
        for (std::size_t i = 1; i < n.children.size(); ++i) acc = set_and(acc, eval(n.children[i]));
        return acc;
      }
      case QueryNode::Kind::Or: {
        PmidSet acc;
        for (const auto& c : n.children) acc = set_or(acc, eval(c));
        return acc;
      }
      case QueryNode::Kind::Not: return set_minus(all_, eval(n.children.front()));
      default: return leaf(n).pmids;
    }
  }

  // Entity pairs related in this document.
  bool related(const std::string& a, const std::string& b, Pmid pmid) const {
    for (const auto& rk : snap_.relations_of(a)) {
      if (!((rk.e1 == a && rk.e2 == b) || (rk.e1 == b && rk.e2 == a))) continue;
      if (snap_.relation_store().at(rk).count(pmid)) return true;
    }
    return false;
  }

 private:
  SectionKind section(Pmid pmid, std::uint32_t passage) const {
    return snap_.meta(pmid)->passages[passage].section;
  }

  void keyword(const std::string& term, LeafResult& r) {
    const auto* postings = snap_.keyword(term);
    if (!postings) return;
    for (const auto& kp : *postings) {
      auto& hs = r.hits[kp.pmid];
      for (auto pos : kp.positions) hs.push_back({kp.passage, section(kp.pmid, kp.passage), 0, pos, 1, {}});
    }
  }

  void phrase(const std::vector<std::string>& words, LeafResult& r) {
    const auto anchors = phrase_anchors(words);
    if (anchors.empty()) return;
    const auto* first = snap_.keyword(anchors.front().first);
    if (!first) return;
    std::vector<const std::vector<KeywordPosting>*> others;
    for (std::size_t k = 1; k < anchors.size(); ++k) {
      const auto* ps = snap_.keyword(anchors[k].first);
      if (!ps) return;
      others.push_back(ps);
    }
    const auto n = static_cast<std::uint32_t>(words.size());
    for (const auto& kp : *first) {
      const auto& info = snap_.meta(kp.pmid)->passages[kp.passage];
      for (auto pos : kp.positions) {
        if (pos < anchors.front().second) continue;
        const std::uint32_t start = pos - anchors.front().second;
        if (start < info.first_token || start + n > info.first_token + info.token_count) continue;
        bool ok = true;
        for (std::size_t k = 1; k < anchors.size() && ok; ++k) {
          const auto& ps = *others[k - 1];
          auto it = std::lower_bound(ps.begin(), ps.end(), std::make_pair(kp.pmid, kp.passage),
                                     [](const KeywordPosting& x, const std::pair<Pmid, std::uint32_t>& key) {
                                       return std::tie(x.pmid, x.passage) < std::tie(key.first, key.second);
                                     });
          ok = it != ps.end() && it->pmid == kp.pmid && it->passage == kp.passage &&
               std::binary_search(it->positions.begin(), it->positions.end(), start + anchors[k].second);
        }
        if (ok) r.hits[kp.pmid].push_back({kp.passage, info.section, 0, start, n, {}});
      }
    }
  }

  void entity_hits(const std::string& key, Pmid pmid, std::vector<TermHit>& out) const {
    const auto* postings = snap_.entity(key);
    if (!postings) return;
    auto lo = std::lower_bound(postings->begin(), postings->end(), pmid,
                               [](const EntityPosting& p, Pmid v) { return p.pmid < v; });
    for (auto it = lo; it != postings->end() && it->pmid == pmid; ++it) {
      out.push_back({it->passage, section(pmid, it->passage), it->sentence, it->position, 1, it->span});
    }
  }

  void entity(const std::string& key, LeafResult& r) {
    const auto* postings = snap_.entity(key);
    if (!postings) return;
    for (const auto& p : *postings) {
      r.hits[p.pmid].push_back({p.passage, section(p.pmid, p.passage), p.sentence, p.position, 1, p.span});
    }
  }

  void relation(const RelationPattern& pat, LeafResult& r) {
    const auto& anchor = pat.e1.is_concrete() ? pat.e1.key : pat.e2.key;
    if (anchor.empty()) return;
    for (const auto& rk : snap_.relations_of(anchor)) {
      if (!pattern_matches(pat, rk.rtype, rk.e1, rk.e2)) continue;
      for (const auto& [pmid, ev] : snap_.relation_store().at(rk)) {
        auto& hs = r.hits[pmid];
        entity_hits(rk.e1, pmid, hs);
        entity_hits(rk.e2, pmid, hs);
      }
    }
  }

  const IndexSnapshot& snap_;
  PmidSet all_;
  std::map<std::string, LeafResult> cache_;
};

bool passes(const RankedHit& h, const std::set<std::string>& pub_types, const SearchFilters& f) {
  if (!f.journals.empty() && !f.journals.count(h.journal)) return false;
  if (!f.sections.empty() && !f.sections.count(h.matched_section)) return false;
  if (f.year_from && h.pub_year < *f.year_from) return false;
  if (f.year_to && h.pub_year > *f.year_to) return false;
  if (!f.pub_types.empty() &&
      std::none_of(pub_types.begin(), pub_types.end(), [&](const std::string& t) { return f.pub_types.count(t); })) {
    return false;
  }
  return true;
}

struct Ranked {
  std::vector<RankedHit> hits;
  std::map<Pmid, MatchInfo> infos;
};

Ranked rank_index(const QueryAst& ast, const IndexSnapshot& snap, const SearchFilters& filters) {
  IndexEvaluator ev(snap);
  std::map<std::string, Leaf> leaves;
  collect_leaves(ast, false, leaves);
  const auto matched = ev.eval(ast);

  const auto& stats = snap.stats();
  const double avgdl = stats.documents ? static_cast<double>(stats.keyword_tokens) / stats.documents : 0.0;

  Ranked out;
  for (const auto pmid : matched) {
    const auto* meta = snap.meta(pmid);
    MatchInfo info;
    info.pmid = pmid;
    std::vector<std::string> entity_keys;
    for (const auto& [id, leaf] : leaves) {
      if (!leaf.positive) continue;
      const auto& lr = ev.leaf(*leaf.node);
      TermMatch tm;
      tm.kind = leaf.node->kind;
      tm.id = id;
      auto it = lr.hits.find(pmid);
      if (it != lr.hits.end()) tm.hits = it->second;
      if (tm.kind == QueryNode::Kind::Relation && it != lr.hits.end()) info.relation_hit = true;
      if (tm.kind == QueryNode::Kind::Entity) entity_keys.push_back(leaf.node->term);
      if (tm.kind == QueryNode::Kind::Keyword && !tm.hits.empty()) {
        info.bm25 += bm25_term(tm.hits.size(), snap.keyword_doc_freq(leaf.node->term), stats.documents,
                               meta->keyword_length, avgdl);
      }
      info.terms.push_back(std::move(tm));
    }
    for (std::size_t i = 0; i < entity_keys.size() && !info.relation_hit; ++i) {
      for (std::size_t j = i + 1; j < entity_keys.size() && !info.relation_hit; ++j) {
        info.relation_hit = ev.related(entity_keys[i], entity_keys[j], pmid);
      }
    }
    const auto sc = score_document(info);
    RankedHit h;
    h.pmid = pmid;
    h.tier = sc.tier;
    h.score = sc.score;
    h.matched_section = sc.matched_section;
    h.pub_year = meta->pub_year;
    h.title = meta->title;
    h.journal = meta->journal;
    if (!passes(h, meta->pub_types, filters)) continue;
    out.hits.push_back(std::move(h));
    out.infos.emplace(pmid, std::move(info));
  }
  std::sort(out.hits.begin(), out.hits.end(), ranks_before);
  return out;
}

// Keyword and phrase hits only carry token positions; give them spans.
void resolve_spans(const Document& doc, const DocMeta& meta, MatchInfo& info) {
  std::map<std::uint32_t, std::pair<std::vector<text::Span>, text::CharIndex>> cache;
  for (auto& t : info.terms) {
    if (t.kind != QueryNode::Kind::Keyword && t.kind != QueryNode::Kind::Phrase) continue;
    for (auto& h : t.hits) {
      auto it = cache.find(h.passage);
      if (it == cache.end()) {
        const auto& text = doc.passages[h.passage].text;
        it = cache.emplace(h.passage, std::make_pair(text::word_tokens(text), text::CharIndex(text))).first;
      }
      const auto& [words, cidx] = it->second;
      const auto local = h.position - meta.passages[h.passage].first_token;
      if (local + h.tokens > words.size()) continue;
      const auto b = cidx.byte_to_char(words[local].begin);
      const auto e = cidx.byte_to_char(words[local + h.tokens - 1].end);
      h.span = {doc.passages[h.passage].offset + b, e - b};
    }
  }
}

std::vector<CharSpan> choose_focus(const MatchInfo& info, Tier tier) {
  PairChoice pair;
  if (tier >= Tier::SentenceCooccur) {
    for (std::size_t i = 0; i < info.terms.size(); ++i) {
      for (std::size_t j = i + 1; j < info.terms.size(); ++j) {
        if (!is_entity_like(info.terms[i].kind) || !is_entity_like(info.terms[j].kind)) continue;
        for (const auto& ha : info.terms[i].hits) {
          for (const auto& hb : info.terms[j].hits) {
            if (ha.passage != hb.passage || ha.sentence != hb.sentence) continue;
            const double v = section_weight(ha.section) / (1.0 + distance(ha, hb));
            if (v > pair.value) pair = {v, &ha, &hb};
          }
        }
      }
    }
  }
  if (!pair.a) pair = best_pair(info, [](const TermMatch&, const TermMatch&) { return true; });
  if (pair.a) {
    auto x = pair.a->span, y = pair.b->span;
    if (y.start < x.start) std::swap(x, y);
    return {x, y};
  }
  if (const auto* s = best_single(info)) return {s->span};
  return {};
}

void unknown_keys(const QueryNode& n, const IndexSnapshot& snap, std::set<std::string>& out) {
  auto check = [&](const std::string& key) {
    if (!key.empty() && !snap.entity(key) && !snap.dictionary().count(key)) out.insert(key);
  };
  if (n.kind == QueryNode::Kind::Entity) check(n.term);
  if (n.kind == QueryNode::Kind::Relation) {
    check(n.relation.e1.key);
    check(n.relation.e2.key);
  }
  for (const auto& c : n.children) unknown_keys(c, snap, out);
}

}  // namespace

std::vector<RankedHit> rank_all(const QueryAst& ast, const IndexSnapshot& snap, const SearchFilters& filters) {
  return rank_index(ast, snap, filters).hits;
}

SearchResult execute(const QueryAst& ast, const IndexSnapshot& snap, const SearchFilters& filters, Page page) {
  if (page.size == 0 || page.size > kMaxPageSize) {
    throw Error(ErrorCode::BadPage, "page size must be between 1 and " + std::to_string(kMaxPageSize));
  }
  auto ranked = rank_index(ast, snap, filters);
  SearchResult out;
  out.total = ranked.hits.size();
  for (const auto& h : ranked.hits) {
    const auto* meta = snap.meta(h.pmid);
    ++out.facets["journal"][h.journal];
    ++out.facets["section"][std::string(to_string(h.matched_section))];
    for (const auto& t : meta->pub_types) ++out.facets["pub_type"][t];
    ++out.histogram[h.pub_year];
  }
  std::set<std::string> unknown;
  unknown_keys(ast, snap, unknown);
  out.unknown_entities.assign(unknown.begin(), unknown.end());

  const auto begin = std::min(page.offset, ranked.hits.size());
  const auto end = std::min(ranked.hits.size(), begin + page.size);
  for (auto i = begin; i < end; ++i) {
    auto hit = std::move(ranked.hits[i]);
    auto& info = ranked.infos.at(hit.pmid);
    const auto& doc = *snap.document(hit.pmid);
    resolve_spans(doc, *snap.meta(hit.pmid), info);
    std::vector<CharSpan> highlights;
    for (const auto& t : info.terms) {
      for (const auto& th : t.hits) highlights.push_back(th.span);
    }
    hit.snippet = make_snippet(doc, choose_focus(info, hit.tier), highlights);
    out.hits.push_back(std::move(hit));
  }
  return out;
}

// ------------------------------------------------------------- Brute force

namespace {

struct ScanPassage {
  std::vector<text::Span> words;
  std::vector<std::string> folded;
  std::vector<text::Span> sentences;
  std::uint32_t first_token = 0;
};

struct ScanDoc {
  const Document* doc = nullptr;
  std::vector<ScanPassage> passages;
  std::set<std::string> keywords;
  std::size_t keyword_length = 0;
};

ScanDoc scan(const Document& d) {
  ScanDoc s;
  s.doc = &d;
  std::uint32_t next = 0;
  for (const auto& p : d.passages) {
    ScanPassage sp;
    sp.words = text::word_tokens(p.text);
    for (const auto& w : sp.words) {
      sp.folded.push_back(text::fold_word(std::string_view(p.text).substr(w.begin, w.end - w.begin)));
      const auto& f = sp.folded.back();
      if (!f.empty() && !text::is_stopword(f)) {
        s.keywords.insert(f);
        ++s.keyword_length;
      }
    }
    sp.sentences = text::split_sentences(p.text);
    sp.first_token = next;
    next += static_cast<std::uint32_t>(sp.words.size());
    s.passages.push_back(std::move(sp));
  }
  return s;
}

TermHit annotation_hit(const ScanDoc& sd, std::uint32_t pi, const EntityAnnotation& a) {
  const auto& p = sd.doc->passages[pi];
  const auto& sp = sd.passages[pi];
  const auto byte = text::CharIndex(p.text).char_to_byte(a.span.start - p.offset);
  TermHit h;
  h.passage = pi;
  h.section = p.section;
  for (std::uint32_t si = 0; si < sp.sentences.size(); ++si) {
    if (sp.sentences[si].begin <= byte) h.sentence = si;
  }
  std::uint32_t w = 0;
  while (w < sp.words.size() && sp.words[w].end <= byte) ++w;
  h.position = sp.first_token + w;
  h.span = a.span;
  return h;
}

std::vector<TermHit> scan_leaf(const QueryNode& n, const ScanDoc& sd, bool& matched) {
  std::vector<TermHit> hits;
  matched = false;
  const auto& d = *sd.doc;
  switch (n.kind) {
    case QueryNode::Kind::Keyword:
      if (text::is_stopword(n.term)) break;
      for (std::uint32_t pi = 0; pi < d.passages.size(); ++pi) {
        const auto& sp = sd.passages[pi];
        for (std::uint32_t w = 0; w < sp.folded.size(); ++w) {
          if (sp.folded[w] == n.term) hits.push_back({pi, d.passages[pi].section, 0, sp.first_token + w, 1, {}});
        }
      }
      matched = !hits.empty();
      break;
    case QueryNode::Kind::Phrase: {
      const auto anchors = phrase_anchors(n.words);
      if (anchors.empty()) break;
      const auto len = n.words.size();
      for (std::uint32_t pi = 0; pi < d.passages.size(); ++pi) {
        const auto& sp = sd.passages[pi];
        for (std::size_t s = 0; s + len <= sp.folded.size(); ++s) {
          const bool ok = std::all_of(anchors.begin(), anchors.end(),
                                      [&](const auto& an) { return sp.folded[s + an.second] == an.first; });
          if (ok) {
            hits.push_back({pi, d.passages[pi].section, 0, sp.first_token + static_cast<std::uint32_t>(s),
                            static_cast<std::uint32_t>(len), {}});
          }
        }
      }
      matched = !hits.empty();
      break;
    }
    case QueryNode::Kind::Entity:
      for (std::uint32_t pi = 0; pi < d.passages.size(); ++pi) {
        for (const auto& a : d.passages[pi].annotations) {
          if (a.semantic_key == n.term) hits.push_back(annotation_hit(sd, pi, a));
        }
      }
      matched = !hits.empty();
      break;
    case QueryNode::Kind::Relation: {
      std::set<std::string> keys;
      for (const auto& r : d.relations) {
        if (!pattern_matches(n.relation, r.rtype, r.e1, r.e2)) continue;
        matched = true;
        keys.insert(r.e1);
        keys.insert(r.e2);
      }
      for (std::uint32_t pi = 0; pi < d.passages.size(); ++pi) {
        for (const auto& a : d.passages[pi].annotations) {
          if (keys.count(a.semantic_key)) hits.push_back(annotation_hit(sd, pi, a));
        }
      }
      break;
    }
    default: break;
  }
  sort_hits(hits);
  return hits;
}

bool scan_eval(const QueryNode& n, const ScanDoc& sd) {
  switch (n.kind) {
    case QueryNode::Kind::And:
      return std::all_of(n.children.begin(), n.children.end(), [&](const QueryNode& c) { return scan_eval(c, sd); });
    case QueryNode::Kind::Or:
      return std::any_of(n.children.begin(), n.children.end(), [&](const QueryNode& c) { return scan_eval(c, sd); });
    case QueryNode::Kind::Not: return !scan_eval(n.children.front(), sd);
    default: {
      bool matched = false;
      scan_leaf(n, sd, matched);
      return matched;
    }
  }
}

}  // namespace

std::vector<RankedHit> brute_force_search(const QueryAst& ast, const std::vector<Document>& corpus) {
  std::vector<ScanDoc> docs;
  docs.reserve(corpus.size());
  std::size_t total_tokens = 0;
  for (const auto& d : corpus) {
    docs.push_back(scan(d));
    total_tokens += docs.back().keyword_length;
  }
  const double avgdl = docs.empty() ? 0.0 : static_cast<double>(total_tokens) / docs.size();
  auto df = [&](const std::string& term) {
    return static_cast<std::size_t>(
        std::count_if(docs.begin(), docs.end(), [&](const ScanDoc& s) { return s.keywords.count(term) != 0; }));
  };

  std::map<std::string, Leaf> leaves;
  collect_leaves(ast, false, leaves);

  std::vector<RankedHit> out;
  for (const auto& sd : docs) {
    if (!scan_eval(ast, sd)) continue;
    const auto& d = *sd.doc;
    MatchInfo info;
    info.pmid = d.pmid;
    std::vector<std::string> entity_keys;
    for (const auto& [id, leaf] : leaves) {
      if (!leaf.positive) continue;
      bool matched = false;
      TermMatch tm;
      tm.kind = leaf.node->kind;
      tm.id = id;
      tm.hits = scan_leaf(*leaf.node, sd, matched);
      if (tm.kind == QueryNode::Kind::Relation && matched) info.relation_hit = true;
      if (tm.kind == QueryNode::Kind::Entity) entity_keys.push_back(leaf.node->term);
      if (tm.kind == QueryNode::Kind::Keyword && !tm.hits.empty()) {
        info.bm25 += bm25_term(tm.hits.size(), df(leaf.node->term), docs.size(),
                               static_cast<double>(sd.keyword_length), avgdl);
      }
      info.terms.push_back(std::move(tm));
    }
    for (std::size_t i = 0; i < entity_keys.size(); ++i) {
      for (std::size_t j = i + 1; j < entity_keys.size(); ++j) {
        for (const auto& r : d.relations) {
          if ((r.e1 == entity_keys[i] && r.e2 == entity_keys[j]) || (r.e1 == entity_keys[j] && r.e2 == entity_keys[i])) {
            info.relation_hit = true;
          }
        }
      }
    }
    const auto sc = score_document(info);
    RankedHit h;
    h.pmid = d.pmid;
    h.tier = sc.tier;
    h.score = sc.score;
    h.matched_section = sc.matched_section;
    h.pub_year = d.pub_year;
    h.title = d.title;
    h.journal = d.journal;
    out.push_back(std::move(h));
  }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

std::vector<Pmid> brute_force_rank(const QueryAst& ast, const std::vector<Document>& corpus) {
  std::vector<Pmid> out;
  for (const auto& h : brute_force_search(ast, corpus)) out.push_back(h.pmid);
  return out;
}

}  // namespace litsearch
