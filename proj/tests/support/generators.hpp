#pragma once

#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fixtures.hpp"
#include "litsearch/index.hpp"
#include "litsearch/querylang.hpp"

namespace litsearch::testing {

// Independent prefix rendering of an AST, used as the precedence oracle:
// "(and a (not b))".
std::string sexp(const QueryNode& n);

// Twenty (query text, expected sexp) pairs covering operator precedence,
// implicit AND, grouping and flattening.
const std::vector<std::pair<std::string, std::string>>& precedence_cases();

// Random AST over a small fixed vocabulary; may be unbounded.
QueryNode random_ast(std::mt19937_64& rng, int depth);

// Random query over a synthetic corpus's keys and keywords.
QueryNode random_query(std::mt19937_64& rng, const SyntheticCorpus& sc, int depth);

// Random query strings for the parser fuzz.
std::string random_query_text(std::mt19937_64& rng);

// `n` synthetic dictionary entries with random frequencies; `names` receives
// their preferred names.
std::map<std::string, DictionaryEntry> synthetic_dictionary(std::mt19937_64& rng, std::size_t n,
                                                            std::vector<std::string>& names);

}  // namespace litsearch::testing
