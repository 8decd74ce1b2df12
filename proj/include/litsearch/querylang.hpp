#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "litsearch/docmodel.hpp"
#include "litsearch/error.hpp"
#include "litsearch/index.hpp"

namespace litsearch {

struct RelationPattern {
  std::optional<RelationType> rtype;  // nullopt = ANY
  EntityRef e1;
  EntityRef e2;

  friend bool operator==(const RelationPattern&, const RelationPattern&) = default;
};

struct QueryNode {
  enum class Kind { Keyword, Phrase, Entity, Relation, And, Or, Not };

  Kind kind = Kind::Keyword;
  std::string term;                 // Keyword: folded word; Entity: semantic key
  std::vector<std::string> words;   // Phrase: folded words
  RelationPattern relation;         // Relation
  std::vector<QueryNode> children;  // And / Or (>= 2), Not (exactly 1)

  static QueryNode keyword(std::string w);
  static QueryNode phrase(std::vector<std::string> ws);
  static QueryNode entity(std::string key);
  static QueryNode relation_term(RelationPattern p);
  static QueryNode all_of(std::vector<QueryNode> cs);
  static QueryNode any_of(std::vector<QueryNode> cs);
  static QueryNode negate(QueryNode c);

  bool is_leaf() const { return kind != Kind::And && kind != Kind::Or && kind != Kind::Not; }
  friend bool operator==(const QueryNode&, const QueryNode&) = default;
};

using QueryAst = QueryNode;

// Grammar (operators case-insensitive):
//   query   := or
//   or      := and ("OR" and)*
//   and     := unary (["AND"] unary)*
//   unary   := "NOT" unary | primary
//   primary := "(" or ")" | '"' words '"' | "@KEY" | "relations:" TYPE "|" REF "|" REF | word
// A query whose matches would be an unbounded complement (NOT x, a OR NOT b)
// is rejected. Throws ParseError (0-based position) or Error{EmptyQuery}.
QueryAst parse_query(std::string_view input);

// Canonical text of canonicalize(ast): And/Or flattened, children sorted by their printed form,
// Or nested in And parenthesized. parse_query(print_query(a)) == canonicalize(a).
std::string print_query(const QueryAst& ast);
QueryAst canonicalize(const QueryAst& ast);

// Structural checks from the AST invariants (arity, key shape, relation anchor).
bool is_valid_query(const QueryAst& ast);

// True when the node's match set is bounded by a positive term.
bool is_bounded(const QueryAst& ast);

// Case-insensitive word-boundary prefix search over entity names and synonyms,
// deduplicated by key, ordered by doc frequency then name.
std::vector<Suggestion> suggest(std::string_view prefix, const IndexSnapshot& snap, std::size_t limit);

// Whole-term folded match against a name or synonym.
std::optional<std::string> resolve_free_term(std::string_view term, const IndexSnapshot& snap);

}  // namespace litsearch
