#include "litsearch/retrieval_eval.hpp"

#include <cstdio>
#include <set>

#include "litsearch/error.hpp"
#include "litsearch/querylang.hpp"
#include "litsearch/ranker.hpp"

namespace litsearch {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string resolve(std::string_view term, const IndexSnapshot& snap, std::size_t line) {
  if (!term.empty() && term.front() == '@') {
    if (!is_well_formed_key(term)) {
      throw Error(ErrorCode::BadKey, "line " + std::to_string(line) + ": malformed key " + std::string(term));
    }
    return std::string(term);
  }
  if (auto key = resolve_free_term(term, snap)) return *key;
  throw Error(ErrorCode::BadKey, "line " + std::to_string(line) + ": no entity named '" + std::string(term) + "'");
}

std::string_view type_letter(EntityType t) {
  switch (t) {
    case EntityType::Chemical:
      return "C";
    case EntityType::Disease:
      return "D";
    case EntityType::Gene:
      return "G";
    case EntityType::Variant:
      return "V";
    case EntityType::Species:
      return "S";
    case EntityType::CellLine:
      return "CL";
  }
  return "?";
}

}  // namespace

std::vector<EntityPair> parse_pairs(std::string_view tsv, const IndexSnapshot& snap) {
  std::vector<EntityPair> out;
  std::size_t line_no = 0;
  while (!tsv.empty()) {
    const auto nl = tsv.find('\n');
    auto line = tsv.substr(0, nl);
    tsv = nl == std::string_view::npos ? std::string_view{} : tsv.substr(nl + 1);
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    std::vector<std::string_view> cols;
    for (std::size_t start = 0;;) {
      const auto tab = line.find('\t', start);
      cols.push_back(trim(line.substr(start, tab == std::string_view::npos ? tab : tab - start)));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty() || cols[2].empty()) {
      throw Error(ErrorCode::SyntaxError,
                  "line " + std::to_string(line_no) + ": expected label<TAB>entity<TAB>entity");
    }
    EntityPair p{std::string(cols[0]), resolve(cols[1], snap, line_no), resolve(cols[2], snap, line_no)};
    if (p.e1 == p.e2) {
      throw Error(ErrorCode::BadKey, "line " + std::to_string(line_no) + ": both entities are " + p.e1);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string pair_type(const EntityPair& p) {
  const auto a = key_entity_type(p.e1);
  const auto b = key_entity_type(p.e2);
  return std::string(a ? type_letter(*a) : "?") + "/" + std::string(b ? type_letter(*b) : "?");
}

bool judged_relevant(const IndexSnapshot& snap, Pmid pmid, const std::string& e1, const std::string& e2) {
  for (const auto& rk : snap.relations_of(e1)) {
    if ((rk.e1 == e2 || rk.e2 == e2) && snap.relation_store().at(rk).count(pmid)) return true;
  }
  const auto* pa = snap.entity(e1);
  const auto* pb = snap.entity(e2);
  if (!pa || !pb) return false;
  std::set<std::pair<std::uint32_t, std::uint32_t>> sentences;
  for (const auto& p : *pa) {
    if (p.pmid == pmid) sentences.insert({p.passage, p.sentence});
  }
  for (const auto& p : *pb) {
    if (p.pmid == pmid && sentences.count({p.passage, p.sentence})) return true;
  }
  return false;
}

std::vector<RetrievalRow> evaluate_retrieval(const std::vector<EntityPair>& pairs, const IndexSnapshot& snap) {
  std::vector<RetrievalRow> rows;
  for (const auto& p : pairs) {
    const auto ast = QueryNode::all_of({QueryNode::entity(p.e1), QueryNode::entity(p.e2)});
    const auto hits = rank_all(ast, snap);
    RetrievalRow row;
    row.pair = p;
    row.count = hits.size();
    row.judged = std::min(hits.size(), kJudgedTop);
    for (std::size_t i = 0; i < row.judged; ++i) {
      row.top.push_back(hits[i].pmid);
      if (judged_relevant(snap, hits[i].pmid, p.e1, p.e2)) ++row.relevant;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_retrieval_report(const std::vector<RetrievalRow>& rows) {
  std::string out = "Pair\tType\t#\tTop20\n";
  std::size_t count = 0, judged = 0, relevant = 0;
  for (const auto& r : rows) {
    out += r.pair.label + "\t" + pair_type(r.pair) + "\t" + std::to_string(r.count) + "\t" +
           std::to_string(r.relevant) + "\n";
    count += r.count;
    judged += r.judged;
    relevant += r.relevant;
  }
  char pct[32];
  std::snprintf(pct, sizeof pct, "%.1f%%", judged == 0 ? 0.0 : 100.0 * relevant / judged);
  out += "Overall\t\t" + std::to_string(count) + "\t" + std::to_string(relevant) + " / " + std::to_string(judged) +
         " (" + pct + ")\n";
  return out;
}

}  // namespace litsearch
