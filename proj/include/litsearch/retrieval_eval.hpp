#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "litsearch/docmodel.hpp"
#include "litsearch/index.hpp"

namespace litsearch {

inline constexpr std::size_t kJudgedTop = 20;

struct EntityPair {
  std::string label;
  std::string e1;  // semantic keys after resolution
  std::string e2;
};

// TSV label <TAB> entity <TAB> entity; '#' comments. Entities are semantic
// keys or names resolved through the snapshot dictionary. BadKey names the
// term that does not resolve, SyntaxError the malformed line.
std::vector<EntityPair> parse_pairs(std::string_view tsv, const IndexSnapshot& snap);

// "D/G" style pair type: C, D, G, V, S, CL.
std::string pair_type(const EntityPair& p);

// Automated relevance judgement: the article supports a relationship between
// the two entities when the relation store lists it as evidence for any
// relation type between them, or one sentence mentions both.
bool judged_relevant(const IndexSnapshot& snap, Pmid pmid, const std::string& e1, const std::string& e2);

struct RetrievalRow {
  EntityPair pair;
  std::size_t count = 0;      // "#": articles matching e1 AND e2
  std::size_t judged = 0;     // min(count, 20)
  std::size_t relevant = 0;   // "Top20": relevant among the judged
  std::vector<Pmid> top;      // the judged pmids in rank order
};

std::vector<RetrievalRow> evaluate_retrieval(const std::vector<EntityPair>& pairs, const IndexSnapshot& snap);

// TSV with columns Pair, Type, #, Top20 and a closing total row carrying the
// overall top-20 precision.
std::string format_retrieval_report(const std::vector<RetrievalRow>& rows);

}  // namespace litsearch
