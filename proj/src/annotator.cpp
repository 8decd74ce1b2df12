#include "litsearch/annotator.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "litsearch/error.hpp"
#include "litsearch/text.hpp"

namespace litsearch {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto p = s.find(sep);
    out.push_back(s.substr(0, p));
    if (p == std::string_view::npos) break;
    s.remove_prefix(p + 1);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int entity_priority(EntityType t) {
  switch (t) {
    case EntityType::Gene: return 0;
    case EntityType::Chemical: return 1;
    case EntityType::Disease: return 2;
    case EntityType::Variant: return 3;
    case EntityType::Species: return 4;
    case EntityType::CellLine: return 5;
  }
  return 6;
}

// ------------------------------------------------------------------ Lexicon

Lexicon Lexicon::parse(std::string_view tsv) {
  Lexicon lex;
  std::size_t line_no = 0;
  for (auto line : split(tsv, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto cols = split(line, '\t');
    const auto where = "lexicon line " + std::to_string(line_no);
    if (cols.size() != 4) throw Error(ErrorCode::LexiconError, where + ": expected 4 tab-separated columns");
    auto etype = entity_type_from_string(trim(cols[1]));
    if (!etype) throw Error(ErrorCode::LexiconError, where + ": unknown entity type");
    auto id = Identifier::parse(trim(cols[2]));
    if (!id) throw Error(ErrorCode::LexiconError, where + ": identifier must be namespace:id");
    try {
      lex.add(trim(cols[0]), *etype, *id, trim(cols[3]));
    } catch (const Error& e) {
      throw Error(ErrorCode::LexiconError, where + ": " + e.what());
    }
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) { return parse(read_file(path)); }

void Lexicon::add(std::string_view surface, EntityType etype, const Identifier& id,
                  std::string_view preferred_name) {
  if (!namespace_allowed(etype, id.ns)) {
    throw Error(ErrorCode::LexiconError, "namespace " + std::string(to_string(id.ns)) +
                                             " not allowed for " + std::string(to_string(etype)));
  }
  const auto folded = text::fold_term(surface);
  if (folded.empty()) throw Error(ErrorCode::LexiconError, "empty surface form");

  const auto group_key = std::make_pair(etype, id);
  std::size_t gi;
  if (auto it = group_index_.find(group_key); it != group_index_.end()) {
    gi = it->second;
    if (groups_[gi].preferred_name != preferred_name) {
      throw Error(ErrorCode::LexiconError, "identifier " + id.str() + " has conflicting preferred names '" +
                                               groups_[gi].preferred_name + "' and '" +
                                               std::string(preferred_name) + "'");
    }
  } else {
    gi = groups_.size();
    SynonymGroup g;
    g.etype = etype;
    g.identifier = id;
    g.preferred_name = std::string(preferred_name);
    g.semantic_key = make_semantic_key(etype, preferred_name);
    groups_.push_back(std::move(g));
    group_index_.emplace(group_key, gi);
  }

  auto register_surface = [&](std::string_view s) {
    const auto f = text::fold_term(s);
    auto& bucket = by_surface_[f];
    for (auto other : bucket) {
      if (other == gi) return;
      if (groups_[other].etype == etype) {
        throw Error(ErrorCode::LexiconError, "surface '" + std::string(s) + "' maps to both " +
                                                 groups_[other].identifier.str() + " and " + id.str());
      }
    }
    bucket.push_back(gi);
    std::stable_sort(bucket.begin(), bucket.end(), [this](std::size_t a, std::size_t b) {
      return entity_priority(groups_[a].etype) < entity_priority(groups_[b].etype);
    });
    auto& surfaces = groups_[gi].surfaces;
    if (std::find(surfaces.begin(), surfaces.end(), s) == surfaces.end()) surfaces.emplace_back(s);
    max_words_ = std::max(max_words_, text::word_tokens(s).size());
  };
  register_surface(preferred_name);
  register_surface(surface);
}

std::vector<const SynonymGroup*> Lexicon::find_folded(const std::string& folded) const {
  std::vector<const SynonymGroup*> out;
  if (auto it = by_surface_.find(folded); it != by_surface_.end()) {
    for (auto gi : it->second) out.push_back(&groups_[gi]);
  }
  return out;
}

std::optional<NormalizedMention> normalize_mention(std::string_view mention, EntityType etype,
                                                   const Lexicon& lex) {
  for (const auto* g : lex.find_folded(text::fold_term(mention))) {
    if (g->etype == etype) return NormalizedMention{g->identifier, g->semantic_key};
  }
  return std::nullopt;
}

// ------------------------------------------------------------ Abbreviations

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

struct Alignment {
  std::size_t long_start = 0;  // byte offset into the candidate
  double confidence = 0.0;
};

// Right-to-left alignment of the short form against the candidate text. Each
// short-form character must appear, in order, inside the long form; the first
// one must start a whitespace-delimited word.
std::optional<Alignment> align_short_form(std::string_view sf, std::string_view lf) {
  if (lf.empty()) return std::nullopt;
  long s = static_cast<long>(sf.size()) - 1;
  long l = static_cast<long>(lf.size()) - 1;
  std::size_t counted = 0, at_word_start = 0;
  auto first_alnum = static_cast<long>(std::find_if(sf.begin(), sf.end(), is_alnum) - sf.begin());
  while (s >= 0) {
    const char c = lower(sf[static_cast<std::size_t>(s)]);
    if (!is_alnum(c)) {
      --s;
      continue;
    }
    const bool need_word_start = s == first_alnum;
    while (l >= 0) {
      const bool same = lower(lf[static_cast<std::size_t>(l)]) == c;
      const bool word_start =
          l == 0 || std::isspace(static_cast<unsigned char>(lf[static_cast<std::size_t>(l - 1)]));
      if (same && (!need_word_start || word_start)) break;
      --l;
    }
    if (l < 0) return std::nullopt;
    ++counted;
    if (l == 0 || !is_alnum(lf[static_cast<std::size_t>(l - 1)])) ++at_word_start;
    --l;
    --s;
  }
  if (counted == 0) return std::nullopt;
  return Alignment{static_cast<std::size_t>(l + 1),
                   static_cast<double>(at_word_start) / static_cast<double>(counted)};
}

bool plausible_short_form(std::string_view sf) {
  const auto chars = text::char_count(sf);
  if (chars < 2 || chars > 10) return false;
  if (!is_alnum(sf.front())) return false;
  if (std::any_of(sf.begin(), sf.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
    return false;
  }
  return std::any_of(sf.begin(), sf.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
}

}  // namespace

std::vector<AbbrevPair> detect_abbreviations(const Document& doc) {
  std::vector<AbbrevPair> out;
  for (std::size_t pi = 0; pi < doc.passages.size(); ++pi) {
    const auto& p = doc.passages[pi];
    const std::string_view t = p.text;
    const text::CharIndex cidx(t);
    for (const auto& sent : text::split_sentences(t)) {
      for (auto open = t.find('(', sent.begin); open != std::string_view::npos && open < sent.end;
           open = t.find('(', open + 1)) {
        const auto close = t.find_first_of("()", open + 1);
        if (close == std::string_view::npos || close >= sent.end || t[close] != ')') continue;
        auto inner_begin = open + 1;
        auto inner_end = close;
        while (inner_begin < inner_end && std::isspace(static_cast<unsigned char>(t[inner_begin]))) ++inner_begin;
        while (inner_end > inner_begin && std::isspace(static_cast<unsigned char>(t[inner_end - 1]))) --inner_end;
        const auto sf = t.substr(inner_begin, inner_end - inner_begin);
        if (!plausible_short_form(sf)) continue;

        auto cand_end = open;
        while (cand_end > sent.begin && std::isspace(static_cast<unsigned char>(t[cand_end - 1]))) --cand_end;
        const auto sf_chars = text::char_count(sf);
        const auto max_words = std::min(sf_chars + 5, sf_chars * 2);
        // Walk back over at most max_words whitespace-separated words.
        auto cand_begin = cand_end;
        std::size_t words = 0;
        while (cand_begin > sent.begin && words < max_words) {
          while (cand_begin > sent.begin && std::isspace(static_cast<unsigned char>(t[cand_begin - 1]))) --cand_begin;
          if (cand_begin == sent.begin) break;
          while (cand_begin > sent.begin && !std::isspace(static_cast<unsigned char>(t[cand_begin - 1]))) --cand_begin;
          ++words;
        }
        const auto candidate = t.substr(cand_begin, cand_end - cand_begin);
        auto aligned = align_short_form(sf, candidate);
        if (!aligned) continue;
        const auto lf = candidate.substr(aligned->long_start);
        if (text::char_count(lf) <= sf_chars) continue;

        AbbrevPair pair;
        pair.short_form = std::string(sf);
        pair.long_form = std::string(lf);
        pair.passage = pi;
        pair.confidence = aligned->confidence;
        const auto lf_begin = cand_begin + aligned->long_start;
        pair.long_span = CharSpan{p.offset + cidx.byte_to_char(lf_begin), text::char_count(lf)};
        pair.short_span = CharSpan{p.offset + cidx.byte_to_char(inner_begin), sf_chars};
        out.push_back(std::move(pair));
      }
    }
  }
  return out;
}

// ------------------------------------------------------------------ Tagging

namespace {

bool is_rs_number(std::string_view tok) {
  if (tok.size() < 3 || lower(tok[0]) != 'r' || lower(tok[1]) != 's') return false;
  return std::all_of(tok.begin() + 2, tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

// Byte end of a c./p. HGVS-like mention starting at `begin`, or 0.
std::size_t hgvs_end(std::string_view t, std::size_t begin) {
  if (begin + 2 >= t.size()) return 0;
  const char k = lower(t[begin]);
  if ((k != 'c' && k != 'p') || t[begin + 1] != '.') return 0;
  auto end = begin + 2;
  while (end < t.size() && !std::isspace(static_cast<unsigned char>(t[end]))) ++end;
  while (end > begin + 2 && std::string_view(".,;:)]").find(t[end - 1]) != std::string_view::npos) --end;
  const auto body = t.substr(begin + 2, end - begin - 2);
  if (body.empty() || std::none_of(body.begin(), body.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return 0;
  }
  return end;
}

EntityAnnotation make_annotation(const Passage& p, const text::CharIndex& cidx, std::size_t b, std::size_t e,
                                 EntityType etype, Identifier id, std::string key) {
  EntityAnnotation a;
  const auto cs = cidx.byte_to_char(b);
  const auto ce = cidx.byte_to_char(e);
  a.span = CharSpan{p.offset + cs, ce - cs};
  a.text = std::string(std::string_view(p.text).substr(b, e - b));
  a.etype = etype;
  a.identifier = std::move(id);
  a.semantic_key = std::move(key);
  return a;
}

void tag_passage(Passage& p, const Lexicon& lex) {
  const std::string_view t = p.text;
  const text::CharIndex cidx(t);
  const auto toks = text::term_tokens(t);
  const auto n = toks.size();
  const auto window = std::max<std::size_t>(lex.max_words(), 1);
  std::size_t i = 0;
  while (i < n) {
    bool matched = false;
    for (std::size_t j = std::min(n - 1, i + window - 1) + 1; j-- > i;) {
      const auto folded = text::fold_term(t.substr(toks[i].begin, toks[j].end - toks[i].begin));
      const auto groups = lex.find_folded(folded);
      if (groups.empty()) continue;
      const auto* g = groups.front();
      p.annotations.push_back(make_annotation(p, cidx, toks[i].begin, toks[j].end, g->etype, g->identifier,
                                              g->semantic_key));
      i = j + 1;
      matched = true;
      break;
    }
    if (matched) continue;
    const auto tok = t.substr(toks[i].begin, toks[i].end - toks[i].begin);
    if (is_rs_number(tok)) {
      std::string id = "rs" + std::string(tok.substr(2));
      p.annotations.push_back(make_annotation(p, cidx, toks[i].begin, toks[i].end, EntityType::Variant,
                                              Identifier{Namespace::dbSNP, id},
                                              make_semantic_key(EntityType::Variant, id)));
      ++i;
      continue;
    }
    if (auto end = hgvs_end(t, toks[i].begin); end != 0 && toks[i].end == toks[i].begin + 1) {
      const std::string mention(t.substr(toks[i].begin, end - toks[i].begin));
      p.annotations.push_back(make_annotation(p, cidx, toks[i].begin, end, EntityType::Variant,
                                              Identifier{Namespace::HGNC, mention},
                                              make_semantic_key(EntityType::Variant, mention)));
      while (i < n && toks[i].begin < end) ++i;
      continue;
    }
    ++i;
  }
}

bool overlaps(const CharSpan& a, const CharSpan& b) { return a.start < b.end() && b.start < a.end(); }

void inherit_short_forms(Document& doc, const std::vector<AbbrevPair>& abbrevs) {
  struct Inherited {
    EntityType etype;
    Identifier identifier;
    std::string key;
    std::size_t from;
  };
  std::map<std::string, Inherited> inherit;
  for (const auto& ab : abbrevs) {
    const EntityAnnotation* best = nullptr;
    for (const auto& p : doc.passages) {
      for (const auto& a : p.annotations) {
        if (a.span.start >= ab.long_span.start && a.span.end() == ab.long_span.end() &&
            (!best || a.span.length > best->span.length)) {
          best = &a;
        }
      }
    }
    if (best) inherit[ab.short_form] = Inherited{best->etype, best->identifier, best->semantic_key, ab.long_span.start};
  }
  if (inherit.empty()) return;

  for (auto& p : doc.passages) {
    const std::string_view t = p.text;
    const text::CharIndex cidx(t);
    for (const auto& [sf, inh] : inherit) {
      for (auto pos = t.find(sf); pos != std::string_view::npos; pos = t.find(sf, pos + 1)) {
        const auto end = pos + sf.size();
        if (pos > 0 && text::is_word_byte(static_cast<unsigned char>(t[pos - 1]))) continue;
        if (end < t.size() && text::is_word_byte(static_cast<unsigned char>(t[end]))) continue;
        auto ann = make_annotation(p, cidx, pos, end, inh.etype, inh.identifier, inh.key);
        if (ann.span.start < inh.from) continue;
        auto same = std::find_if(p.annotations.begin(), p.annotations.end(),
                                 [&](const EntityAnnotation& a) { return a.span == ann.span; });
        if (same != p.annotations.end()) {
          *same = std::move(ann);
          continue;
        }
        if (std::any_of(p.annotations.begin(), p.annotations.end(),
                        [&](const EntityAnnotation& a) { return overlaps(a.span, ann.span); })) {
          continue;
        }
        p.annotations.push_back(std::move(ann));
      }
    }
  }
}

}  // namespace

Document tag_entities(const Document& doc, const Lexicon& lex) {
  Document out = doc;
  for (auto& p : out.passages) {
    p.annotations.clear();
    tag_passage(p, lex);
  }
  inherit_short_forms(out, detect_abbreviations(doc));
  for (auto& p : out.passages) {
    std::sort(p.annotations.begin(), p.annotations.end(),
              [](const EntityAnnotation& a, const EntityAnnotation& b) { return a.span < b.span; });
  }
  return out;
}

// ------------------------------------------------------------ Trigger rules

std::vector<TriggerRule> parse_trigger_rules(std::string_view tsv) {
  std::vector<TriggerRule> rules;
  std::size_t line_no = 0;
  for (auto line : split(tsv, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto where = "rules line " + std::to_string(line_no);
    const auto cols = split(line, '\t');
    if (cols.size() != 3) throw Error(ErrorCode::RuleError, where + ": expected 3 tab-separated columns");
    TriggerRule r;
    auto rt = relation_type_from_string(trim(cols[0]));
    if (!rt) throw Error(ErrorCode::RuleError, where + ": unknown relation type");
    r.rtype = *rt;
    for (auto lemma : split(cols[1], '|')) {
      const auto folded = text::fold_term(lemma);
      if (folded.empty() || folded.find(' ') != std::string::npos) {
        throw Error(ErrorCode::RuleError, where + ": trigger lemmas must be single words");
      }
      r.lemmas.push_back(folded);
    }
    const auto pair = split(trim(cols[2]), '/');
    if (pair.size() != 2) throw Error(ErrorCode::RuleError, where + ": entity pair must be Type1/Type2");
    auto a = entity_type_from_string(trim(pair[0]));
    auto b = entity_type_from_string(trim(pair[1]));
    if (!a || !b) throw Error(ErrorCode::RuleError, where + ": unknown entity type in pair");
    if (!validate_relation_schema(r.rtype, *a, *b)) {
      throw Error(ErrorCode::RuleError, where + ": pair not allowed for " + std::string(to_string(r.rtype)));
    }
    r.first = *a;
    r.second = *b;
    rules.push_back(std::move(r));
  }
  return rules;
}

std::vector<TriggerRule> load_trigger_rules(const std::filesystem::path& path) {
  return parse_trigger_rules(read_file(path));
}

std::vector<Relation> extract_relations(const Document& doc, const std::vector<TriggerRule>& rules) {
  std::map<std::tuple<RelationType, std::string, std::string>, std::set<std::size_t>> found;
  for (std::size_t pi = 0; pi < doc.passages.size(); ++pi) {
    const auto& p = doc.passages[pi];
    if (p.section != SectionKind::Title && p.section != SectionKind::Abstract) continue;
    const std::string_view t = p.text;
    const text::CharIndex cidx(t);
    const auto words = text::word_tokens(t);
    for (const auto& sent : text::split_sentences(t)) {
      const auto s_begin = p.offset + cidx.byte_to_char(sent.begin);
      const auto s_end = p.offset + cidx.byte_to_char(sent.end);
      std::vector<const EntityAnnotation*> anns;
      for (const auto& a : p.annotations) {
        if (a.span.start >= s_begin && a.span.end() <= s_end) anns.push_back(&a);
      }
      if (anns.size() < 2) continue;

      struct Word {
        CharSpan span;
        std::string folded;
        bool in_entity;
      };
      std::vector<Word> ws;
      for (const auto& w : words) {
        if (w.begin < sent.begin || w.end > sent.end) continue;
        const auto cs = p.offset + cidx.byte_to_char(w.begin);
        const auto ce = p.offset + cidx.byte_to_char(w.end);
        Word word{CharSpan{cs, ce - cs}, text::fold_word(t.substr(w.begin, w.end - w.begin)), false};
        word.in_entity = std::any_of(anns.begin(), anns.end(),
                                     [&](const EntityAnnotation* a) { return overlaps(a->span, word.span); });
        ws.push_back(std::move(word));
      }
      auto is_trigger = [](const Word& w, const TriggerRule& r) {
        return !w.in_entity && std::find(r.lemmas.begin(), r.lemmas.end(), w.folded) != r.lemmas.end();
      };

      for (const auto& rule : rules) {
        for (std::size_t x = 0; x < anns.size(); ++x) {
          for (std::size_t y = x + 1; y < anns.size(); ++y) {
            const auto* a = anns[x];
            const auto* b = anns[y];
            if (a->semantic_key == b->semantic_key) continue;
            const bool types_ok = (a->etype == rule.first && b->etype == rule.second) ||
                                  (a->etype == rule.second && b->etype == rule.first);
            if (!types_ok) continue;
            bool triggered = false;
            const Word* before = nullptr;
            const Word* after = nullptr;
            for (const auto& w : ws) {
              if (w.span.end() <= a->span.start) before = &w;
              if (!after && w.span.start >= b->span.end()) after = &w;
              if (w.span.start >= a->span.end() && w.span.end() <= b->span.start && is_trigger(w, rule)) {
                triggered = true;
              }
            }
            if (!triggered && before && is_trigger(*before, rule)) triggered = true;
            if (!triggered && after && is_trigger(*after, rule)) triggered = true;
            if (!triggered) continue;
            Relation r{doc.pmid, rule.rtype, a->semantic_key, b->semantic_key, {}};
            canonicalize(r);
            found[{r.rtype, r.e1, r.e2}].insert(pi);
          }
        }
      }
    }
  }
  std::vector<Relation> out;
  for (const auto& [k, ev] : found) {
    out.push_back(Relation{doc.pmid, std::get<0>(k), std::get<1>(k), std::get<2>(k),
                           std::vector<std::size_t>(ev.begin(), ev.end())});
  }
  return out;
}

// ----------------------------------------------------------------- Pipeline

std::map<std::string, SynonymGroup> synonym_table(const Lexicon& lex) {
  std::map<std::string, SynonymGroup> out;
  for (const auto& g : lex.groups()) {
    auto [it, inserted] = out.emplace(g.semantic_key, g);
    if (!inserted) {
      for (const auto& s : g.surfaces) {
        auto& dst = it->second.surfaces;
        if (std::find(dst.begin(), dst.end(), s) == dst.end()) dst.push_back(s);
      }
    }
  }
  return out;
}

AnnotatedCorpus run_pipeline(const std::vector<Document>& docs, const Lexicon& lex,
                             const std::vector<TriggerRule>& rules) {
  AnnotatedCorpus corpus;
  corpus.synonyms = synonym_table(lex);
  for (const auto& input : docs) {
    try {
      validate_document(input);
      corpus.counts.abbreviations += detect_abbreviations(input).size();
      Document tagged = tag_entities(input, lex);
      tagged.relations = extract_relations(tagged, rules);
      validate_document(tagged);
      for (const auto& p : tagged.passages) corpus.counts.annotations += p.annotations.size();
      corpus.counts.relations += tagged.relations.size();
      ++corpus.counts.documents;
      corpus.documents.push_back(std::move(tagged));
    } catch (const Error& e) {
      corpus.errors.push_back(PipelineError{input.pmid, e.code(), e.what()});
    }
  }
  std::stable_sort(corpus.documents.begin(), corpus.documents.end(),
                   [](const Document& a, const Document& b) { return a.pmid < b.pmid; });
  return corpus;
}

AnnotatedCorpus make_corpus(std::vector<Document> docs, std::map<std::string, SynonymGroup> synonyms) {
  AnnotatedCorpus corpus;
  corpus.synonyms = std::move(synonyms);
  for (const auto& d : docs) {
    for (const auto& p : d.passages) corpus.counts.annotations += p.annotations.size();
    corpus.counts.relations += d.relations.size();
  }
  corpus.counts.documents = docs.size();
  corpus.documents = std::move(docs);
  std::stable_sort(corpus.documents.begin(), corpus.documents.end(),
                   [](const Document& a, const Document& b) { return a.pmid < b.pmid; });
  return corpus;
}

}  // namespace litsearch
