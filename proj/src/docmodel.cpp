#include "litsearch/docmodel.hpp"

#include <algorithm>
#include <cctype>

#include "litsearch/error.hpp"
#include "litsearch/text.hpp"

namespace litsearch {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

constexpr std::array<std::string_view, kRelationTypeCount> kRelationNames = {
    "ASSOCIATE", "CAUSE",   "COMPARE",   "COTREAT",           "DRUG_INTERACT",      "INHIBIT",
    "INTERACT",  "NEGATIVE_CORRELATE",   "POSITIVE_CORRELATE", "PREVENT", "STIMULATE", "TREAT"};

}  // namespace

std::string_view to_string(EntityType t) {
  switch (t) {
    case EntityType::Chemical: return "Chemical";
    case EntityType::Disease: return "Disease";
    case EntityType::Gene: return "Gene";
    case EntityType::Variant: return "Variant";
    case EntityType::Species: return "Species";
    case EntityType::CellLine: return "CellLine";
  }
  return "";
}

std::string_view key_prefix(EntityType t) {
  switch (t) {
    case EntityType::Chemical: return "CHEMICAL";
    case EntityType::Disease: return "DISEASE";
    case EntityType::Gene: return "GENE";
    case EntityType::Variant: return "VARIANT";
    case EntityType::Species: return "SPECIES";
    case EntityType::CellLine: return "CELLLINE";
  }
  return "";
}

std::optional<EntityType> entity_type_from_string(std::string_view s) {
  for (auto t : kAllEntityTypes) {
    if (iequals(s, to_string(t)) || iequals(s, key_prefix(t))) return t;
  }
  return std::nullopt;
}

std::string_view to_string(Namespace ns) {
  switch (ns) {
    case Namespace::NCBIGene: return "NCBIGene";
    case Namespace::MeSH: return "MeSH";
    case Namespace::dbSNP: return "dbSNP";
    case Namespace::HGNC: return "HGNC";
    case Namespace::NCBITaxonomy: return "NCBITaxonomy";
    case Namespace::Cellosaurus: return "Cellosaurus";
  }
  return "";
}

std::optional<Namespace> namespace_from_string(std::string_view s) {
  for (auto ns : {Namespace::NCBIGene, Namespace::MeSH, Namespace::dbSNP, Namespace::HGNC,
                  Namespace::NCBITaxonomy, Namespace::Cellosaurus}) {
    if (iequals(s, to_string(ns))) return ns;
  }
  return std::nullopt;
}

bool namespace_allowed(EntityType t, Namespace ns) {
  switch (t) {
    case EntityType::Gene: return ns == Namespace::NCBIGene;
    case EntityType::Disease:
    case EntityType::Chemical: return ns == Namespace::MeSH;
    case EntityType::Variant: return ns == Namespace::dbSNP || ns == Namespace::HGNC;
    case EntityType::Species: return ns == Namespace::NCBITaxonomy;
    case EntityType::CellLine: return ns == Namespace::Cellosaurus;
  }
  return false;
}

std::string Identifier::str() const { return std::string(to_string(ns)) + ":" + id; }

std::optional<Identifier> Identifier::parse(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos || colon + 1 >= s.size()) return std::nullopt;
  auto ns = namespace_from_string(s.substr(0, colon));
  if (!ns) return std::nullopt;
  return Identifier{*ns, std::string(s.substr(colon + 1))};
}

std::string_view to_string(SectionKind k) {
  switch (k) {
    case SectionKind::Title: return "Title";
    case SectionKind::Abstract: return "Abstract";
    case SectionKind::Intro: return "Intro";
    case SectionKind::Methods: return "Methods";
    case SectionKind::Results: return "Results";
    case SectionKind::Discussion: return "Discussion";
    case SectionKind::Other: return "Other";
  }
  return "";
}

std::optional<SectionKind> section_from_string(std::string_view s) {
  for (auto k : {SectionKind::Title, SectionKind::Abstract, SectionKind::Intro,
                 SectionKind::Methods, SectionKind::Results, SectionKind::Discussion,
                 SectionKind::Other}) {
    if (iequals(s, to_string(k))) return k;
  }
  return std::nullopt;
}

std::string_view to_string(RelationType t) { return kRelationNames[static_cast<std::size_t>(t)]; }

std::string relation_api_token(RelationType t) {
  std::string s(to_string(t));
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::optional<RelationType> relation_type_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (iequals(s, kRelationNames[i])) return static_cast<RelationType>(i);
  }
  return std::nullopt;
}

const std::vector<SchemaEntry>& relation_schema() {
  using R = RelationType;
  using E = EntityType;
  static const std::vector<SchemaEntry> kSchema = {
      {R::ASSOCIATE, E::Chemical, E::Disease},
      {R::ASSOCIATE, E::Chemical, E::Gene},
      {R::ASSOCIATE, E::Chemical, E::Variant},
      {R::ASSOCIATE, E::Disease, E::Gene},
      {R::ASSOCIATE, E::Disease, E::Variant},
      {R::ASSOCIATE, E::Variant, E::Variant},
      {R::CAUSE, E::Chemical, E::Disease},
      {R::CAUSE, E::Variant, E::Disease},
      {R::COMPARE, E::Chemical, E::Chemical},
      {R::COTREAT, E::Chemical, E::Chemical},
      {R::DRUG_INTERACT, E::Chemical, E::Chemical},
      {R::INHIBIT, E::Chemical, E::Variant},
      {R::INHIBIT, E::Gene, E::Disease},
      {R::INTERACT, E::Chemical, E::Gene},
      {R::INTERACT, E::Chemical, E::Variant},
      {R::INTERACT, E::Gene, E::Gene},
      {R::NEGATIVE_CORRELATE, E::Chemical, E::Gene},
      {R::NEGATIVE_CORRELATE, E::Chemical, E::Variant},
      {R::NEGATIVE_CORRELATE, E::Gene, E::Gene},
      {R::POSITIVE_CORRELATE, E::Chemical, E::Chemical},
      {R::POSITIVE_CORRELATE, E::Chemical, E::Gene},
      {R::POSITIVE_CORRELATE, E::Gene, E::Gene},
      {R::PREVENT, E::Variant, E::Disease},
      {R::STIMULATE, E::Chemical, E::Variant},
      {R::STIMULATE, E::Gene, E::Disease},
      {R::TREAT, E::Chemical, E::Disease},
  };
  return kSchema;
}

bool validate_relation_schema(RelationType t, EntityType a, EntityType b) {
  return std::any_of(relation_schema().begin(), relation_schema().end(), [&](const SchemaEntry& e) {
    return e.rtype == t && ((e.first == a && e.second == b) || (e.first == b && e.second == a));
  });
}

std::string make_semantic_key(EntityType t, std::string_view preferred_name) {
  std::string name;
  for (char c : preferred_name) {
    if (std::isalnum(static_cast<unsigned char>(c)) && static_cast<unsigned char>(c) < 0x80) {
      name.push_back(c);
    } else if (!name.empty() && name.back() != '_') {
      name.push_back('_');
    }
  }
  while (!name.empty() && name.back() == '_') name.pop_back();
  if (name.empty()) {
    throw Error(ErrorCode::SchemaError,
                "preferred name '" + std::string(preferred_name) + "' yields an empty semantic key");
  }
  return "@" + std::string(key_prefix(t)) + "_" + name;
}

std::optional<EntityType> key_entity_type(std::string_view key) {
  if (key.size() < 3 || key[0] != '@') return std::nullopt;
  const auto us = key.find('_');
  if (us == std::string_view::npos) return std::nullopt;
  const auto prefix = key.substr(1, us - 1);
  for (auto t : kAllEntityTypes) {
    if (prefix == key_prefix(t)) return t;
  }
  return std::nullopt;
}

bool is_well_formed_key(std::string_view key) {
  if (!key_entity_type(key)) return false;
  const auto rest = key.substr(key.find('_') + 1);
  if (rest.empty()) return false;
  return std::all_of(rest.begin(), rest.end(), [](char c) {
    return c == '_' || (static_cast<unsigned char>(c) < 0x80 && std::isalnum(static_cast<unsigned char>(c)));
  });
}

namespace {

std::pair<int, std::string_view> order_key(std::string_view key) {
  auto t = key_entity_type(key);
  return {t ? static_cast<int>(*t) : 99, key};
}

}  // namespace

void canonicalize(Relation& r) {
  if (order_key(r.e2) < order_key(r.e1)) std::swap(r.e1, r.e2);
}

bool is_canonical(const Relation& r) { return !(order_key(r.e2) < order_key(r.e1)); }

std::size_t Passage::length() const { return text::char_count(text); }

std::optional<std::string> document_text_at(const Document& doc, CharSpan span) {
  for (const auto& p : doc.passages) {
    const auto len = p.length();
    if (span.start >= p.offset && span.end() <= p.offset + len) {
      return text::substr_chars(p.text, span.start - p.offset, span.length);
    }
  }
  return std::nullopt;
}

void validate_document(const Document& doc) {
  const auto where = "document " + std::to_string(doc.pmid);
  if (doc.pmid == 0) throw Error(ErrorCode::SchemaError, "missing or zero pmid");
  if (doc.passages.empty() || doc.passages.front().section != SectionKind::Title) {
    throw Error(ErrorCode::SchemaError, where + ": title passage must be present and first");
  }
  if (doc.passages.front().offset != 0) {
    throw Error(ErrorCode::SchemaError, where + ": first passage offset must be 0");
  }
  if (doc.title != doc.passages.front().text) {
    throw Error(ErrorCode::SchemaError, where + ": title differs from the title passage");
  }
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < doc.passages.size(); ++i) {
    const auto& p = doc.passages[i];
    if (!text::is_valid_utf8(p.text)) {
      throw Error(ErrorCode::SchemaError, where + ": passage " + std::to_string(i) + " is not UTF-8");
    }
    if (i > 0 && p.offset < prev_end) {
      throw Error(ErrorCode::SchemaError,
                  where + ": passage " + std::to_string(i) + " overlaps or is out of order");
    }
    const auto len = p.length();
    prev_end = p.offset + len;
    for (const auto& a : p.annotations) {
      if (a.span.start < p.offset || a.span.end() > p.offset + len) {
        throw Error(ErrorCode::OffsetError, where + ": annotation '" + a.text + "' at " +
                                                std::to_string(a.span.start) +
                                                " lies outside its passage");
      }
      const auto actual = text::substr_chars(p.text, a.span.start - p.offset, a.span.length);
      if (actual != a.text) {
        throw Error(ErrorCode::OffsetError, where + ": annotation claims '" + a.text + "' at " +
                                                std::to_string(a.span.start) + " but text is '" +
                                                actual + "'");
      }
      if (!namespace_allowed(a.etype, a.identifier.ns)) {
        throw Error(ErrorCode::SchemaError, where + ": namespace " +
                                                std::string(to_string(a.identifier.ns)) +
                                                " not allowed for " + std::string(to_string(a.etype)));
      }
      if (!is_well_formed_key(a.semantic_key) || key_entity_type(a.semantic_key) != a.etype) {
        throw Error(ErrorCode::SchemaError, where + ": bad semantic key '" + a.semantic_key + "'");
      }
    }
  }
  for (const auto& r : doc.relations) {
    auto t1 = key_entity_type(r.e1);
    auto t2 = key_entity_type(r.e2);
    if (!t1 || !t2 || !is_well_formed_key(r.e1) || !is_well_formed_key(r.e2)) {
      throw Error(ErrorCode::SchemaError, where + ": relation with malformed keys");
    }
    if (r.e1 == r.e2) throw Error(ErrorCode::SchemaError, where + ": relation endpoints equal");
    if (!validate_relation_schema(r.rtype, *t1, *t2)) {
      throw Error(ErrorCode::SchemaError, where + ": relation " + std::string(to_string(r.rtype)) +
                                              " not allowed between " + std::string(to_string(*t1)) +
                                              " and " + std::string(to_string(*t2)));
    }
    for (auto ev : r.evidence) {
      if (ev >= doc.passages.size()) {
        throw Error(ErrorCode::SchemaError, where + ": relation evidence index out of range");
      }
    }
  }
}

Document make_title_abstract(Pmid pmid, std::string title, std::string abstract_text) {
  Document d;
  d.pmid = pmid;
  d.title = title;
  const auto title_len = text::char_count(title);
  d.passages.push_back(Passage{SectionKind::Title, std::move(title), 0, {}});
  d.passages.push_back(Passage{SectionKind::Abstract, std::move(abstract_text), title_len + 1, {}});
  return d;
}

}  // namespace litsearch
