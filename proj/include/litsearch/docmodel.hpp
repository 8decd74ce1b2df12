#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace litsearch {

using Pmid = std::uint64_t;

// Declaration order is the canonical argument order for relations.
enum class EntityType : std::uint8_t { Chemical, Disease, Gene, Variant, Species, CellLine };

inline constexpr std::array<EntityType, 6> kAllEntityTypes = {
    EntityType::Chemical, EntityType::Disease, EntityType::Gene,
    EntityType::Variant,  EntityType::Species, EntityType::CellLine};

std::string_view to_string(EntityType t);         // "Chemical"
std::string_view key_prefix(EntityType t);        // "CHEMICAL"
std::optional<EntityType> entity_type_from_string(std::string_view s);  // case-insensitive

enum class Namespace : std::uint8_t { NCBIGene, MeSH, dbSNP, HGNC, NCBITaxonomy, Cellosaurus };

std::string_view to_string(Namespace ns);
std::optional<Namespace> namespace_from_string(std::string_view s);
bool namespace_allowed(EntityType t, Namespace ns);

struct Identifier {
  Namespace ns = Namespace::MeSH;
  std::string id;

  std::string str() const;  // "MeSH:D013629"
  static std::optional<Identifier> parse(std::string_view s);

  friend auto operator<=>(const Identifier&, const Identifier&) = default;
};

enum class SectionKind : std::uint8_t { Title, Abstract, Intro, Methods, Results, Discussion, Other };

std::string_view to_string(SectionKind k);  // "Title"
std::optional<SectionKind> section_from_string(std::string_view s);  // case-insensitive

enum class RelationType : std::uint8_t {
  ASSOCIATE,
  CAUSE,
  COMPARE,
  COTREAT,
  DRUG_INTERACT,
  INHIBIT,
  INTERACT,
  NEGATIVE_CORRELATE,
  POSITIVE_CORRELATE,
  PREVENT,
  STIMULATE,
  TREAT,
};

inline constexpr std::size_t kRelationTypeCount = 12;

std::string_view to_string(RelationType t);  // "NEGATIVE_CORRELATE"
std::string relation_api_token(RelationType t);  // "negative_correlate"
std::optional<RelationType> relation_type_from_string(std::string_view s);  // either case

// True iff the unordered pair {a, b} is listed for `t` in the relation schema.
bool validate_relation_schema(RelationType t, EntityType a, EntityType b);

struct SchemaEntry {
  RelationType rtype;
  EntityType first;
  EntityType second;
};
const std::vector<SchemaEntry>& relation_schema();

// "@" + type prefix + "_" + name with non-alphanumerics mapped to '_' and runs
// collapsed: ("Breast cancer" -> "@DISEASE_Breast_cancer").
std::string make_semantic_key(EntityType t, std::string_view preferred_name);
bool is_well_formed_key(std::string_view key);
std::optional<EntityType> key_entity_type(std::string_view key);

struct CharSpan {
  std::size_t start = 0;  // Unicode scalar offset in document coordinates
  std::size_t length = 0;

  std::size_t end() const { return start + length; }
  friend auto operator<=>(const CharSpan&, const CharSpan&) = default;
};

struct EntityAnnotation {
  CharSpan span;
  std::string text;
  EntityType etype = EntityType::Chemical;
  Identifier identifier;
  std::string semantic_key;

  friend bool operator==(const EntityAnnotation&, const EntityAnnotation&) = default;
};

struct Passage {
  SectionKind section = SectionKind::Other;
  std::string text;
  std::size_t offset = 0;  // chars, document coordinates
  std::vector<EntityAnnotation> annotations;

  std::size_t length() const;  // chars
  friend bool operator==(const Passage&, const Passage&) = default;
};

struct Relation {
  Pmid pmid = 0;
  RelationType rtype = RelationType::ASSOCIATE;
  std::string e1;
  std::string e2;
  std::vector<std::size_t> evidence;  // passage indices

  friend bool operator==(const Relation&, const Relation&) = default;
};

// Puts (e1, e2) in canonical order: entity type order, then key.
void canonicalize(Relation& r);
bool is_canonical(const Relation& r);

struct Document {
  Pmid pmid = 0;
  std::optional<std::string> pmcid;
  std::string title;
  std::string journal;
  int pub_year = 0;
  std::set<std::string> pub_types;
  std::vector<Passage> passages;
  std::vector<Relation> relations;

  friend bool operator==(const Document&, const Document&) = default;
};

// Throws SchemaError / OffsetError when a document breaks the model
// invariants (title first at offset 0, sorted non-overlapping passages,
// annotation spans inside their passage and matching the text).
void validate_document(const Document& doc);

// Text of the document at a char span, or nullopt when the span does not lie
// inside a single passage.
std::optional<std::string> document_text_at(const Document& doc, CharSpan span);

// Builds a title + abstract document with the conventional offsets
// (abstract starts one char after the title).
Document make_title_abstract(Pmid pmid, std::string title, std::string abstract_text);

}  // namespace litsearch
