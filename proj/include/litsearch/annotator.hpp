#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "litsearch/docmodel.hpp"
#include "litsearch/error.hpp"

namespace litsearch {

// One normalized concept: all surface forms sharing an identifier.
struct SynonymGroup {
  EntityType etype = EntityType::Chemical;
  Identifier identifier;
  std::string preferred_name;
  std::string semantic_key;
  std::vector<std::string> surfaces;  // as written in the lexicon, insertion order

  friend bool operator==(const SynonymGroup&, const SynonymGroup&) = default;
};

// Dictionary standing in for the neural recognizers. Surfaces are matched
// after fold_term(); a folded surface may name at most one identifier per
// entity type.
class Lexicon {
 public:
  // TSV: surface <TAB> etype <TAB> namespace:id <TAB> preferred_name.
  // Blank lines and lines starting with '#' are skipped.
  static Lexicon parse(std::string_view tsv);
  static Lexicon load(const std::filesystem::path& path);

  // Throws LexiconError on namespace/type mismatch, conflicting preferred
  // names, or a surface that already names another identifier of that type.
  void add(std::string_view surface, EntityType etype, const Identifier& id,
           std::string_view preferred_name);

  // Groups for a folded surface, ordered by entity-type priority
  // Gene > Chemical > Disease > Variant > Species > CellLine.
  std::vector<const SynonymGroup*> find_folded(const std::string& folded) const;

  const std::vector<SynonymGroup>& groups() const { return groups_; }
  std::size_t max_words() const { return max_words_; }
  std::size_t size() const { return by_surface_.size(); }

 private:
  std::vector<SynonymGroup> groups_;
  std::map<std::pair<EntityType, Identifier>, std::size_t> group_index_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_surface_;
  std::size_t max_words_ = 0;
};

int entity_priority(EntityType t);  // lower is preferred

struct NormalizedMention {
  Identifier identifier;
  std::string semantic_key;

  friend bool operator==(const NormalizedMention&, const NormalizedMention&) = default;
};

// Folded lookup of a mention restricted to one entity type; nullopt when the
// lexicon has no such surface.
std::optional<NormalizedMention> normalize_mention(std::string_view mention, EntityType etype,
                                                   const Lexicon& lex);

struct AbbrevPair {
  std::string short_form;
  std::string long_form;
  std::size_t passage = 0;
  double confidence = 0.0;
  CharSpan short_span;  // document coordinates, inside the parentheses
  CharSpan long_span;

  friend bool operator==(const AbbrevPair&, const AbbrevPair&) = default;
};

// Parenthetical "long form (SF)" definitions, aligned right to left.
std::vector<AbbrevPair> detect_abbreviations(const Document& doc);

// Replaces every passage's annotations with greedy longest-match lexicon
// tags, rs-number / c. / p. variant mentions, and short forms inheriting the
// identifier of their tagged long form.
Document tag_entities(const Document& doc, const Lexicon& lex);

struct TriggerRule {
  RelationType rtype = RelationType::ASSOCIATE;
  std::vector<std::string> lemmas;  // folded single words
  EntityType first = EntityType::Chemical;
  EntityType second = EntityType::Disease;
};

// TSV: rtype <TAB> lemma1|lemma2 <TAB> etype1/etype2. Throws RuleError for
// malformed lines and for pairs the relation schema rejects.
std::vector<TriggerRule> parse_trigger_rules(std::string_view tsv);
std::vector<TriggerRule> load_trigger_rules(const std::filesystem::path& path);

// Sentence-scoped rule matching over title and abstract passages. Output is
// canonical, deduplicated, sorted by (rtype, e1, e2).
std::vector<Relation> extract_relations(const Document& doc, const std::vector<TriggerRule>& rules);

struct PipelineError {
  Pmid pmid = 0;
  ErrorCode code = ErrorCode::SchemaError;
  std::string message;
};

struct StageCounts {
  std::size_t documents = 0;
  std::size_t abbreviations = 0;
  std::size_t annotations = 0;
  std::size_t relations = 0;

  friend bool operator==(const StageCounts&, const StageCounts&) = default;
};

struct AnnotatedCorpus {
  std::vector<Document> documents;  // sorted by pmid, relations filled in
  std::vector<PipelineError> errors;
  StageCounts counts;
  std::map<std::string, SynonymGroup> synonyms;  // by semantic key
};

std::map<std::string, SynonymGroup> synonym_table(const Lexicon& lex);

// abbreviations -> tagging -> relations per document. A document failing
// validation becomes an error record; the rest of the batch continues.
AnnotatedCorpus run_pipeline(const std::vector<Document>& docs, const Lexicon& lex,
                             const std::vector<TriggerRule>& rules);

// Wraps already-annotated documents (e.g. read back from BioC) as a corpus.
AnnotatedCorpus make_corpus(std::vector<Document> docs, std::map<std::string, SynonymGroup> synonyms = {});

}  // namespace litsearch
