#include "litsearch/querylang.hpp"

#include <algorithm>
#include <cctype>

#include "litsearch/text.hpp"

namespace litsearch {

QueryNode QueryNode::keyword(std::string w) {
  QueryNode n;
  n.kind = Kind::Keyword;
  n.term = std::move(w);
  return n;
}

QueryNode QueryNode::phrase(std::vector<std::string> ws) {
  QueryNode n;
  n.kind = Kind::Phrase;
  n.words = std::move(ws);
  return n;
}

QueryNode QueryNode::entity(std::string key) {
  QueryNode n;
  n.kind = Kind::Entity;
  n.term = std::move(key);
  return n;
}

QueryNode QueryNode::relation_term(RelationPattern p) {
  QueryNode n;
  n.kind = Kind::Relation;
  n.relation = std::move(p);
  return n;
}

QueryNode QueryNode::all_of(std::vector<QueryNode> cs) {
  QueryNode n;
  n.kind = Kind::And;
  n.children = std::move(cs);
  return n;
}

QueryNode QueryNode::any_of(std::vector<QueryNode> cs) {
  QueryNode n;
  n.kind = Kind::Or;
  n.children = std::move(cs);
  return n;
}

QueryNode QueryNode::negate(QueryNode c) {
  QueryNode n;
  n.kind = Kind::Not;
  n.children.push_back(std::move(c));
  return n;
}

namespace {

constexpr std::size_t kMaxDepth = 200;

enum class Tok { LParen, RParen, And, Or, Not, Term, End };

struct Token {
  Tok kind = Tok::End;
  std::size_t pos = 0;  // chars
  QueryNode term;
};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  }
  return true;
}

bool is_operator_word(std::string_view w) { return w == "and" || w == "or" || w == "not"; }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<std::string> split_words(const std::string& folded) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < folded.size()) {
    auto sp = folded.find(' ', start);
    if (sp == std::string::npos) sp = folded.size();
    out.push_back(folded.substr(start, sp - start));
    start = sp + 1;
  }
  return out;
}

class Lexer {
 public:
  explicit Lexer(std::string_view in) : in_(in), cidx_(in) {}

  std::vector<Token> run() {
    std::vector<Token> toks;
    std::size_t i = 0;
    while (i < in_.size()) {
      const char c = in_[i];
      if (is_space(c)) {
        ++i;
      } else if (c == '(' || c == ')') {
        toks.push_back({c == '(' ? Tok::LParen : Tok::RParen, at(i), {}});
        ++i;
      } else if (c == '"') {
        const auto close = in_.find('"', i + 1);
        if (close == std::string_view::npos) throw ParseError(at(i), "unterminated phrase");
        const auto folded = text::fold_term(in_.substr(i + 1, close - i - 1));
        if (folded.empty()) throw ParseError(at(i), "empty phrase");
        toks.push_back({Tok::Term, at(i), QueryNode::phrase(split_words(folded))});
        i = close + 1;
      } else {
        std::size_t j = i;
        while (j < in_.size() && !is_space(in_[j]) && in_[j] != '(' && in_[j] != ')' && in_[j] != '"') ++j;
        bare(in_.substr(i, j - i), i, toks);
        i = j;
      }
    }
    toks.push_back({Tok::End, at(in_.size()), {}});
    return toks;
  }

 private:
  std::size_t at(std::size_t byte) const { return cidx_.byte_to_char(byte); }

  void bare(std::string_view w, std::size_t byte_pos, std::vector<Token>& toks) {
    const auto pos = at(byte_pos);
    if (iequals(w, "AND")) return toks.push_back({Tok::And, pos, {}});
    if (iequals(w, "OR")) return toks.push_back({Tok::Or, pos, {}});
    if (iequals(w, "NOT")) return toks.push_back({Tok::Not, pos, {}});
    if (w.front() == '@') {
      if (!is_well_formed_key(w)) throw ParseError(pos, "malformed semantic key '" + std::string(w) + "'");
      return toks.push_back({Tok::Term, pos, QueryNode::entity(std::string(w))});
    }
    constexpr std::string_view kRel = "relations:";
    if (w.size() >= kRel.size() && iequals(w.substr(0, kRel.size()), kRel)) {
      return toks.push_back({Tok::Term, pos, relation(w.substr(kRel.size()), byte_pos + kRel.size())});
    }
    const auto folded = text::fold_term(w);
    if (folded.empty()) return;  // punctuation only: nothing to search for
    auto words = split_words(folded);
    if (words.size() == 1) {
      // "-not," spelled as an operator word would not survive printing.
      if (is_operator_word(words[0])) return;
      return toks.push_back({Tok::Term, pos, QueryNode::keyword(words[0])});
    }
    toks.push_back({Tok::Term, pos, QueryNode::phrase(std::move(words))});
  }

  QueryNode relation(std::string_view body, std::size_t byte_pos) {
    std::vector<std::pair<std::string_view, std::size_t>> parts;
    std::size_t start = 0;
    for (std::size_t k = 0; k <= body.size(); ++k) {
      if (k == body.size() || body[k] == '|') {
        parts.emplace_back(body.substr(start, k - start), byte_pos + start);
        start = k + 1;
      }
    }
    if (parts.size() != 3) throw ParseError(at(byte_pos), "relation term needs TYPE|A|B");
    RelationPattern p;
    if (!iequals(parts[0].first, "ANY")) {
      auto t = relation_type_from_string(parts[0].first);
      if (!t) throw ParseError(at(parts[0].second), "unknown relation type '" + std::string(parts[0].first) + "'");
      p.rtype = *t;
    }
    auto ref = [&](const std::pair<std::string_view, std::size_t>& part) {
      try {
        return EntityRef::parse(part.first);
      } catch (const Error& e) {
        throw ParseError(at(part.second), e.what());
      }
    };
    p.e1 = ref(parts[1]);
    p.e2 = ref(parts[2]);
    if (!p.e1.is_concrete() && !p.e2.is_concrete()) {
      throw ParseError(at(parts[1].second), "relation term needs at least one semantic key");
    }
    return QueryNode::relation_term(std::move(p));
  }

  std::string_view in_;
  text::CharIndex cidx_;
};

void append_flat(std::vector<QueryNode>& out, QueryNode n, QueryNode::Kind kind) {
  if (n.kind == kind) {
    for (auto& c : n.children) out.push_back(std::move(c));
  } else {
    out.push_back(std::move(n));
  }
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  QueryNode parse() {
    if (toks_.size() == 1) throw Error(ErrorCode::EmptyQuery, "query is empty");
    auto root = parse_or(0);
    if (cur().kind != Tok::End) {
      throw ParseError(cur().pos, cur().kind == Tok::RParen ? "unbalanced ')'" : "unexpected token");
    }
    if (!is_bounded(root)) throw ParseError(first_not_, "negation requires a positive clause");
    return root;
  }

 private:
  const Token& cur() const { return toks_[i_]; }

  bool starts_unary() const {
    const auto k = cur().kind;
    return k == Tok::Not || k == Tok::LParen || k == Tok::Term;
  }

  QueryNode parse_or(std::size_t depth) {
    if (depth > kMaxDepth) throw ParseError(cur().pos, "query nested too deeply");
    std::vector<QueryNode> items;
    append_flat(items, parse_and(depth), QueryNode::Kind::Or);
    while (cur().kind == Tok::Or) {
      ++i_;
      append_flat(items, parse_and(depth), QueryNode::Kind::Or);
    }
    if (items.size() == 1) return std::move(items.front());
    return QueryNode::any_of(std::move(items));
  }

  QueryNode parse_and(std::size_t depth) {
    std::vector<QueryNode> items;
    append_flat(items, parse_unary(depth), QueryNode::Kind::And);
    for (;;) {
      if (cur().kind == Tok::And) {
        ++i_;
      } else if (!starts_unary()) {
        break;
      }
      append_flat(items, parse_unary(depth), QueryNode::Kind::And);
    }
    if (items.size() == 1) return std::move(items.front());
    return QueryNode::all_of(std::move(items));
  }

  QueryNode parse_unary(std::size_t depth) {
    if (depth > kMaxDepth) throw ParseError(cur().pos, "query nested too deeply");
    if (cur().kind == Tok::Not) {
      if (!first_not_set_) {
        first_not_ = cur().pos;
        first_not_set_ = true;
      }
      ++i_;
      return QueryNode::negate(parse_unary(depth + 1));
    }
    return parse_primary(depth);
  }

  QueryNode parse_primary(std::size_t depth) {
    const auto& t = cur();
    if (t.kind == Tok::LParen) {
      ++i_;
      auto inner = parse_or(depth + 1);
      if (cur().kind != Tok::RParen) throw ParseError(cur().pos, "expected ')'");
      ++i_;
      return inner;
    }
    if (t.kind == Tok::Term) {
      ++i_;
      return t.term;
    }
    throw ParseError(t.pos, t.kind == Tok::End ? "expected a term" : "unexpected operator");
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  std::size_t first_not_ = 0;
  bool first_not_set_ = false;
};

std::string print_node(const QueryNode& n, bool inside_and);

std::string print_leaf(const QueryNode& n) {
  switch (n.kind) {
    case QueryNode::Kind::Keyword: return n.term;
    case QueryNode::Kind::Entity: return n.term;
    case QueryNode::Kind::Phrase: {
      std::string s = "\"";
      for (std::size_t i = 0; i < n.words.size(); ++i) s += (i ? " " : "") + n.words[i];
      return s + "\"";
    }
    case QueryNode::Kind::Relation: {
      const auto& r = n.relation;
      return "relations:" + (r.rtype ? relation_api_token(*r.rtype) : std::string("ANY")) + "|" + r.e1.str() +
             "|" + r.e2.str();
    }
    default: return {};
  }
}

std::string print_node(const QueryNode& n, bool inside_and) {
  switch (n.kind) {
    case QueryNode::Kind::And:
    case QueryNode::Kind::Or: {
      const bool is_and = n.kind == QueryNode::Kind::And;
      std::string s;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        const auto& c = n.children[i];
        auto part = print_node(c, is_and);
        // And binds tighter than Or; anything else nested keeps its grouping.
        if (c.kind == n.kind || (c.kind == QueryNode::Kind::Or && is_and)) part = "(" + part + ")";
        s += (i ? (is_and ? " AND " : " OR ") : "") + part;
      }
      return s;
    }
    case QueryNode::Kind::Not: {
      const auto& c = n.children.front();
      const auto inner = print_node(c, false);
      if (c.kind == QueryNode::Kind::And || c.kind == QueryNode::Kind::Or) return "NOT (" + inner + ")";
      return "NOT " + inner;
    }
    default: return print_leaf(n);
  }
  (void)inside_and;
}

}  // namespace

QueryAst parse_query(std::string_view input) {
  if (!text::is_valid_utf8(input)) {
    // Character position of the first sequence that fails to decode.
    std::size_t i = 0, chars = 0;
    while (i < input.size()) {
      const auto c = static_cast<unsigned char>(input[i]);
      const std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
      if (len == 0 || i + len > input.size() || !text::is_valid_utf8(input.substr(i, len))) break;
      i += len;
      ++chars;
    }
    throw ParseError(chars, "query is not valid UTF-8");
  }
  return Parser(Lexer(input).run()).parse();
}

QueryAst canonicalize(const QueryAst& ast) {
  if (ast.is_leaf()) return ast;
  QueryNode out;
  out.kind = ast.kind;
  for (const auto& c : ast.children) {
    auto cc = canonicalize(c);
    if (ast.kind != QueryNode::Kind::Not) {
      append_flat(out.children, std::move(cc), ast.kind);
    } else {
      out.children.push_back(std::move(cc));
    }
  }
  if (out.kind != QueryNode::Kind::Not) {
    std::vector<std::pair<std::string, QueryNode>> keyed;
    for (auto& c : out.children) {
      auto k = print_node(c, false);
      keyed.emplace_back(std::move(k), std::move(c));
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    out.children.clear();
    for (auto& [k, c] : keyed) out.children.push_back(std::move(c));
  }
  return out;
}

std::string print_query(const QueryAst& ast) { return print_node(canonicalize(ast), false); }

bool is_bounded(const QueryAst& ast) {
  switch (ast.kind) {
    case QueryNode::Kind::And:
      return std::any_of(ast.children.begin(), ast.children.end(), [](const QueryNode& c) { return is_bounded(c); });
    case QueryNode::Kind::Or:
      return std::all_of(ast.children.begin(), ast.children.end(), [](const QueryNode& c) { return is_bounded(c); });
    case QueryNode::Kind::Not: return false;
    default: return true;
  }
}

bool is_valid_query(const QueryAst& ast) {
  switch (ast.kind) {
    case QueryNode::Kind::Keyword:
      return !ast.term.empty() && !is_operator_word(ast.term) && text::fold_term(ast.term) == ast.term && ast.term.find(' ') == std::string::npos;
    case QueryNode::Kind::Phrase:
      return !ast.words.empty() && std::all_of(ast.words.begin(), ast.words.end(), [](const std::string& w) {
        return !w.empty() && text::fold_term(w) == w && w.find(' ') == std::string::npos;
      });
    case QueryNode::Kind::Entity: return is_well_formed_key(ast.term);
    case QueryNode::Kind::Relation: {
      const auto& r = ast.relation;
      auto ok = [](const EntityRef& e) { return e.is_concrete() ? is_well_formed_key(e.key) : e.wildcard.has_value(); };
      return ok(r.e1) && ok(r.e2) && (r.e1.is_concrete() || r.e2.is_concrete());
    }
    case QueryNode::Kind::Not:
      return ast.children.size() == 1 && is_valid_query(ast.children.front());
    case QueryNode::Kind::And:
    case QueryNode::Kind::Or:
      return ast.children.size() >= 2 &&
             std::all_of(ast.children.begin(), ast.children.end(), [](const QueryNode& c) { return is_valid_query(c); });
  }
  return false;
}

std::vector<Suggestion> suggest(std::string_view prefix, const IndexSnapshot& snap, std::size_t limit) {
  return snap.entity_dictionary().suggest(prefix, limit);
}

std::optional<std::string> resolve_free_term(std::string_view term, const IndexSnapshot& snap) {
  return snap.entity_dictionary().resolve(term);
}

}  // namespace litsearch
