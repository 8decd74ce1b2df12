#include "generators.hpp"

namespace litsearch::testing {

std::string sexp(const QueryNode& n) {
  switch (n.kind) {
    case QueryNode::Kind::Keyword: return n.term;
    case QueryNode::Kind::Entity: return n.term;
    case QueryNode::Kind::Phrase: {
      std::string s = "\"";
      for (std::size_t i = 0; i < n.words.size(); ++i) s += (i ? " " : "") + n.words[i];
      return s + "\"";
    }
    case QueryNode::Kind::Relation:
      return "rel:" + (n.relation.rtype ? std::string(to_string(*n.relation.rtype)) : std::string("ANY")) + "|" +
             n.relation.e1.str() + "|" + n.relation.e2.str();
    default: break;
  }
  std::string s = n.kind == QueryNode::Kind::And ? "(and" : n.kind == QueryNode::Kind::Or ? "(or" : "(not";
  for (const auto& c : n.children) s += " " + sexp(c);
  return s + ")";
}

const std::vector<std::pair<std::string, std::string>>& precedence_cases() {
  static const std::vector<std::pair<std::string, std::string>> cases = {
      {"a b", "(and a b)"},
      {"a AND b", "(and a b)"},
      {"a OR b", "(or a b)"},
      {"a b OR c", "(or (and a b) c)"},
      {"a OR b c", "(or a (and b c))"},
      {"a AND b OR c AND d", "(or (and a b) (and c d))"},
      {"a AND (b OR c)", "(and a (or b c))"},
      {"a NOT b", "(and a (not b))"},
      {"a AND NOT b OR c", "(or (and a (not b)) c)"},
      {"a NOT (b OR c)", "(and a (not (or b c)))"},
      {"(a OR b) (c OR d)", "(and (or a b) (or c d))"},
      {"a or b and c", "(or a (and b c))"},
      {"a Or b", "(or a b)"},
      {"((a))", "a"},
      {"a (b c)", "(and a b c)"},
      {"a OR (b OR c)", "(or a b c)"},
      {"\"breast cancer\" OR tamoxifen", "(or \"breast cancer\" tamoxifen)"},
      {"@DISEASE_COVID_19 @GENE_PON1 OR x", "(or (and @DISEASE_COVID_19 @GENE_PON1) x)"},
      {"a AND NOT b NOT c", "(and a (not b) (not c))"},
      {"relations:treat|@CHEMICAL_Doxorubicin|Disease OR a b",
       "(or rel:TREAT|@CHEMICAL_Doxorubicin|Disease (and a b))"},
  };
  return cases;
}

namespace {

const std::vector<std::string> kWords = {"tamoxifen", "cancer", "jak1", "covid", "2019", "x", "beta", "il"};
const std::vector<std::string> kKeys = {"@DISEASE_COVID_19", "@GENE_PON1", "@CHEMICAL_Doxorubicin",
                                        "@VARIANT_rs12329760", "@CELLLINE_MCF_7"};

EntityRef random_ref(std::mt19937_64& rng, bool concrete) {
  if (concrete) return EntityRef::concrete(kKeys[rng() % kKeys.size()]);
  return EntityRef::any(kAllEntityTypes[rng() % kAllEntityTypes.size()]);
}

}  // namespace

QueryNode random_ast(std::mt19937_64& rng, int depth) {
  const int pick = static_cast<int>(rng() % (depth > 0 ? 7 : 4));
  switch (pick) {
    case 0: return QueryNode::keyword(kWords[rng() % kWords.size()]);
    case 1: {
      std::vector<std::string> ws(1 + rng() % 3);
      for (auto& w : ws) w = kWords[rng() % kWords.size()];
      return QueryNode::phrase(ws);
    }
    case 2: return QueryNode::entity(kKeys[rng() % kKeys.size()]);
    case 3: {
      RelationPattern p;
      if (rng() % 3) p.rtype = static_cast<RelationType>(rng() % kRelationTypeCount);
      const bool first = rng() % 2;
      p.e1 = random_ref(rng, first || rng() % 2);
      p.e2 = random_ref(rng, !first || rng() % 2);
      return QueryNode::relation_term(p);
    }
    case 4:
    case 5: {
      std::vector<QueryNode> cs(2 + rng() % 3);
      for (auto& c : cs) c = random_ast(rng, depth - 1);
      return pick == 4 ? QueryNode::all_of(cs) : QueryNode::any_of(cs);
    }
    default: return QueryNode::negate(random_ast(rng, depth - 1));
  }
}

QueryNode random_query(std::mt19937_64& rng, const SyntheticCorpus& sc, int depth) {
  auto leaf = [&]() -> QueryNode {
    switch (rng() % 6) {
      case 0:
      case 1: return QueryNode::entity(sc.keys[rng() % sc.keys.size()]);
      case 2: return QueryNode::keyword(sc.keywords[rng() % sc.keywords.size()]);
      case 3: {
        std::vector<std::string> ws = {sc.keywords[rng() % sc.keywords.size()]};
        if (rng() % 2) ws.insert(ws.begin(), "alphacillin");
        if (rng() % 3 == 0) ws.push_back("the");
        return QueryNode::phrase(ws);
      }
      case 4: {
        RelationPattern p;
        if (rng() % 2) p.rtype = static_cast<RelationType>(rng() % kRelationTypeCount);
        p.e1 = EntityRef::concrete(sc.keys[rng() % sc.keys.size()]);
        p.e2 = rng() % 2 ? EntityRef::concrete(sc.keys[rng() % sc.keys.size()])
                         : EntityRef::any(kAllEntityTypes[rng() % 3]);
        if (rng() % 2) std::swap(p.e1, p.e2);
        return QueryNode::relation_term(p);
      }
      default: return QueryNode::entity(rng() % 8 ? sc.keys[rng() % sc.keys.size()] : "@GENE_Unknown_Thing");
    }
  };
  if (depth == 0) return leaf();
  switch (rng() % 5) {
    case 0:
    case 1: {
      std::vector<QueryNode> cs(2 + rng() % 2);
      for (auto& c : cs) c = random_query(rng, sc, depth - 1);
      return QueryNode::all_of(cs);
    }
    case 2: {
      std::vector<QueryNode> cs(2 + rng() % 2);
      for (auto& c : cs) c = random_query(rng, sc, depth - 1);
      return QueryNode::any_of(cs);
    }
    case 3: return QueryNode::all_of({random_query(rng, sc, depth - 1), QueryNode::negate(leaf())});
    default: return leaf();
  }
}

std::string random_query_text(std::mt19937_64& rng) {
  static const std::vector<std::string> atoms = {
      "a",   "b", " ", " ", "(", ")", "\"", "AND", "or", "NOT", "@", "_", "|", "é", "新", "-", ",", "\t",
      "@GENE_PON1", "relations:", "treat", "ANY", "Disease", "x1", "\xff"};
  std::string q;
  const auto n = rng() % 12;
  for (std::size_t k = 0; k < n; ++k) q += atoms[rng() % atoms.size()];
  return q;
}

std::map<std::string, DictionaryEntry> synthetic_dictionary(std::mt19937_64& rng, std::size_t n,
                                                            std::vector<std::string>& names) {
  const std::vector<std::string> syl = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "zen", "pra", "dex", "ol"};
  auto word = [&] {
    std::string w;
    const auto k = 2 + rng() % 3;
    for (std::size_t i = 0; i < k; ++i) w += syl[rng() % syl.size()];
    return w;
  };
  std::map<std::string, DictionaryEntry> entries;
  for (std::size_t i = 0; entries.size() < n; ++i) {
    DictionaryEntry e;
    e.etype = kAllEntityTypes[rng() % kAllEntityTypes.size()];
    e.name = word() + " " + word() + " " + std::to_string(i);
    e.semantic_key = make_semantic_key(e.etype, e.name);
    e.synonyms = {word()};
    e.doc_freq = static_cast<std::uint32_t>(rng() % 5000);
    names.push_back(e.name);
    entries.emplace(e.semantic_key, std::move(e));
  }
  return entries;
}

}  // namespace litsearch::testing
