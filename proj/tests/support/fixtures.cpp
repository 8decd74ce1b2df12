#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <stdexcept>

#include "litsearch/bioc.hpp"
#include "litsearch/querylang.hpp"
#include "litsearch/ranker.hpp"
#include "litsearch/text.hpp"

namespace litsearch::testing {

std::filesystem::path data_dir() { return LITSEARCH_DATA_DIR; }

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Document> toy10_raw() {
  std::vector<Document> docs;
  for (int i = 1; i <= 10; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "d%02d.biocjson", i);
    auto part = parse_bioc(read_text(data_dir() / "toy10" / name), BiocFormat::Json);
    docs.insert(docs.end(), part.begin(), part.end());
  }
  return docs;
}

const Lexicon& toy10_lexicon() {
  static const Lexicon lex = Lexicon::load(data_dir() / "toy10" / "lexicon.tsv");
  return lex;
}

const std::vector<TriggerRule>& toy10_rules() {
  static const auto rules = load_trigger_rules(data_dir() / "trigger_rules.tsv");
  return rules;
}

const AnnotatedCorpus& toy10_corpus() {
  static const AnnotatedCorpus corpus = run_pipeline(toy10_raw(), toy10_lexicon(), toy10_rules());
  return corpus;
}

const AnnotatedCorpus& ragset_corpus() {
  static const AnnotatedCorpus corpus = [] {
    const auto dir = data_dir() / "ragset";
    return run_pipeline(parse_bioc(read_text(dir / "corpus.biocjson"), BiocFormat::Json),
                        Lexicon::load(dir / "lexicon.tsv"), toy10_rules());
  }();
  return corpus;
}

const IndexSnapshot& ragset_snapshot() {
  static const IndexSnapshot snap = build_index(ragset_corpus());
  return snap;
}

std::vector<RagQuestion> ragset_questions() {
  return parse_questions(read_text(data_dir() / "ragset" / "questions.tsv"));
}

std::map<std::string, QuestionPlan> ragset_plans() {
  const auto by_qid = parse_plans(read_text(data_dir() / "ragset" / "plans.json"));
  std::map<std::string, QuestionPlan> out;
  for (const auto& q : ragset_questions()) out.emplace(q.question, by_qid.at(q.qid));
  return out;
}

namespace {

template <class T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

bool coin(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

const std::vector<std::string> kWords = {
    "the",   "protein", "cells",    "α-synuclein", "naïve",  "β-cell",  "café",  "日本",
    "x<y",   "A&B",     "\"quoted\"", "it's",      "rate",   "p<0.05",  "IL-6",  "Δ",
    "tumor", "]]>",     "<tag>",    "→",           "emoji😀", "line",    "data",  "TNF-α"};

std::string random_sentence(std::mt19937_64& rng) {
  std::string s;
  const int n = uniform(rng, 1, 12);
  for (int i = 0; i < n; ++i) {
    if (i) s += coin(rng, 0.1) ? ", " : " ";
    s += pick(rng, kWords);
  }
  s += coin(rng, 0.8) ? "." : "?";
  return s;
}

std::string random_text(std::mt19937_64& rng, int max_sentences) {
  std::string s;
  const int n = uniform(rng, 1, max_sentences);
  for (int i = 0; i < n; ++i) {
    if (i) s += coin(rng, 0.05) ? "\n" : " ";
    s += random_sentence(rng);
  }
  return s;
}

Identifier random_identifier(std::mt19937_64& rng, EntityType t) {
  const auto n = std::to_string(uniform(rng, 1, 99999));
  switch (t) {
    case EntityType::Gene: return {Namespace::NCBIGene, n};
    case EntityType::Chemical:
    case EntityType::Disease: return {Namespace::MeSH, "D" + n};
    case EntityType::Variant: return coin(rng, 0.5) ? Identifier{Namespace::dbSNP, "rs" + n}
                                                    : Identifier{Namespace::HGNC, "c." + n + "A>G"};
    case EntityType::Species: return {Namespace::NCBITaxonomy, n};
    case EntityType::CellLine: return {Namespace::Cellosaurus, "CVCL_" + n};
  }
  return {};
}

}  // namespace

Document random_document(std::mt19937_64& rng, Pmid pmid) {
  Document d;
  d.pmid = pmid;
  if (coin(rng, 0.3)) d.pmcid = "PMC" + std::to_string(uniform(rng, 1, 9999999));
  d.journal = coin(rng, 0.1) ? "" : pick(rng, std::vector<std::string>{"J <Biol> & Chem", "Nature", "Cell Rep", "Ärztebl"});
  d.pub_year = uniform(rng, 1950, 2025);
  for (const auto* t : {"Review", "Journal Article", "Clinical Trial", "Case Reports"}) {
    if (coin(rng, 0.3)) d.pub_types.insert(t);
  }
  const std::vector<SectionKind> later = {SectionKind::Abstract, SectionKind::Intro,
                                          SectionKind::Methods,  SectionKind::Results,
                                          SectionKind::Discussion, SectionKind::Other};
  std::size_t offset = 0;
  const int n_passages = uniform(rng, 1, 5);
  for (int i = 0; i < n_passages; ++i) {
    Passage p;
    p.section = i == 0 ? SectionKind::Title : pick(rng, later);
    p.text = random_text(rng, i == 0 ? 1 : 4);
    p.offset = offset;
    offset += p.length() + static_cast<std::size_t>(uniform(rng, 0, 3));
    d.passages.push_back(std::move(p));
  }
  d.title = d.passages.front().text;

  std::vector<std::string> keys_by_type[6];
  for (auto& p : d.passages) {
    const auto len = p.length();
    const int n_ann = uniform(rng, 0, 4);
    for (int k = 0; k < n_ann && len > 0; ++k) {
      EntityAnnotation a;
      const auto start = static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(len) - 1));
      const auto alen = static_cast<std::size_t>(uniform(rng, 1, static_cast<int>(std::min<std::size_t>(len - start, 20))));
      a.span = {p.offset + start, alen};
      a.text = text::substr_chars(p.text, start, alen);
      a.etype = kAllEntityTypes[static_cast<std::size_t>(uniform(rng, 0, 5))];
      a.identifier = random_identifier(rng, a.etype);
      a.semantic_key = make_semantic_key(a.etype, "Name " + std::to_string(uniform(rng, 1, 30)));
      keys_by_type[static_cast<int>(a.etype)].push_back(a.semantic_key);
      p.annotations.push_back(std::move(a));
    }
  }
  const int n_rel = uniform(rng, 0, 3);
  for (int k = 0; k < n_rel; ++k) {
    const auto& entry = pick(rng, relation_schema());
    Relation r;
    r.pmid = pmid;
    r.rtype = entry.rtype;
    r.e1 = make_semantic_key(entry.first, "Rel " + std::to_string(uniform(rng, 1, 9)));
    r.e2 = make_semantic_key(entry.second, "Rel " + std::to_string(uniform(rng, 10, 19)));
    for (std::size_t i = 0; i < d.passages.size(); ++i) {
      if (coin(rng, 0.5)) r.evidence.push_back(i);
    }
    canonicalize(r);
    d.relations.push_back(std::move(r));
  }
  return d;
}

SyntheticCorpus random_corpus(std::mt19937_64& rng, std::size_t n_docs, Pmid first_pmid) {
  struct Ent {
    const char* surface;
    EntityType etype;
    Identifier id;
  };
  static const std::vector<Ent> ents = {
      {"Alphacillin", EntityType::Chemical, {Namespace::MeSH, "D900001"}},
      {"Betamab", EntityType::Chemical, {Namespace::MeSH, "D900002"}},
      {"Gammazole", EntityType::Chemical, {Namespace::MeSH, "D900003"}},
      {"Red Fever", EntityType::Disease, {Namespace::MeSH, "D900010"}},
      {"Blue Syndrome", EntityType::Disease, {Namespace::MeSH, "D900011"}},
      {"GNA1", EntityType::Gene, {Namespace::NCBIGene, "900020"}},
      {"GNB2", EntityType::Gene, {Namespace::NCBIGene, "900021"}},
  };
  static const std::vector<std::string> fillers = {"patients", "marker",  "levels", "cohort",  "trial",
                                                   "serum",    "with",    "and",    "in",      "dose",
                                                   "response", "outcome", "the",    "study",   "signal"};
  static const std::vector<std::string> triggers = {"treats", "causes", "associated", "reduces", "binds"};
  static Lexicon lex = [] {
    Lexicon l;
    for (const auto& e : ents) l.add(e.surface, e.etype, e.id, e.surface);
    return l;
  }();
  static const auto rules = parse_trigger_rules(
      "TREAT\ttreats\tChemical/Disease\n"
      "CAUSE\tcauses\tChemical/Disease\n"
      "ASSOCIATE\tassociated\tDisease/Gene\n"
      "NEGATIVE_CORRELATE\treduces\tChemical/Gene\n"
      "INTERACT\tbinds\tGene/Gene\n");

  auto sentence = [&] {
    std::string s;
    const int n = uniform(rng, 2, 9);
    for (int i = 0; i < n; ++i) {
      if (i) s += " ";
      const double r = std::uniform_real_distribution<double>(0, 1)(rng);
      std::string w;
      if (r < 0.3) w = pick(rng, ents).surface;
      else if (r < 0.4) w = pick(rng, triggers);
      else w = pick(rng, fillers);
      if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      s += w;
    }
    return s + ".";
  };
  auto paragraph = [&](int max_sentences) {
    std::string s;
    const int n = uniform(rng, 1, max_sentences);
    for (int i = 0; i < n; ++i) {
      if (i) s += " ";
      s += sentence();
    }
    return s;
  };

  std::vector<Document> raw;
  const std::vector<std::string> journals = {"Alpha J", "Beta Rev", "Gamma Lett"};
  for (std::size_t i = 0; i < n_docs; ++i) {
    Document d = make_title_abstract(first_pmid + i, sentence(), paragraph(4));
    if (coin(rng, 0.3)) {
      Passage p;
      p.section = coin(rng, 0.5) ? SectionKind::Results : SectionKind::Methods;
      p.offset = d.passages.back().offset + d.passages.back().length() + 1;
      p.text = paragraph(3);
      d.passages.push_back(std::move(p));
    }
    d.journal = pick(rng, journals);
    d.pub_year = uniform(rng, 2015, 2024);
    d.pub_types.insert(coin(rng, 0.3) ? "Review" : "Journal Article");
    raw.push_back(std::move(d));
  }
  SyntheticCorpus out;
  out.documents = run_pipeline(raw, lex, rules).documents;
  for (const auto& e : ents) out.keys.push_back(make_semantic_key(e.etype, e.surface));
  for (const auto& f : fillers) {
    if (!text::is_stopword(f)) out.keywords.push_back(f);
  }
  for (const auto& t : triggers) out.keywords.push_back(t);
  return out;
}

SchemaComparison compare_schema_with_table() {
  std::set<std::tuple<RelationType, EntityType, EntityType>> table;
  std::istringstream in(read_text(data_dir() / "relation_schema.tsv"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    const auto rtype = relation_type_from_string(line.substr(0, t1));
    if (!rtype || t2 == std::string::npos) throw std::runtime_error("bad schema row: " + line);
    // "Chemical / Disease Chemical / Gene ..." : name, slash, name triples.
    std::istringstream pairs(line.substr(t2 + 1));
    std::string a, slash, b;
    while (pairs >> a >> slash >> b) {
      const auto ea = entity_type_from_string(a);
      const auto eb = entity_type_from_string(b);
      if (!ea || !eb || slash != "/") throw std::runtime_error("bad schema pair in: " + line);
      table.insert({*rtype, std::min(*ea, *eb), std::max(*ea, *eb)});
    }
  }
  SchemaComparison out;
  out.tabulated_valid = table.size();
  for (std::size_t r = 0; r < kRelationTypeCount; ++r) {
    const auto rt = static_cast<RelationType>(r);
    for (std::size_t i = 0; i < kAllEntityTypes.size(); ++i) {
      for (std::size_t j = i; j < kAllEntityTypes.size(); ++j) {
        const auto a = kAllEntityTypes[i], b = kAllEntityTypes[j];
        ++out.cells;
        const bool want = table.count({rt, std::min(a, b), std::max(a, b)}) > 0;
        const bool got = validate_relation_schema(rt, a, b);
        if (got != validate_relation_schema(rt, b, a)) {
          ++out.mismatches;
          out.problems.push_back(std::string(to_string(rt)) + " not symmetric");
        } else if (got != want) {
          ++out.mismatches;
          out.problems.push_back(std::string(to_string(rt)) + " " + std::string(to_string(a)) + "/" +
                                 std::string(to_string(b)));
        }
        out.implemented_valid += got;
      }
    }
  }
  return out;
}

bool scan_pair_supported(const Document& doc, const std::string& a, const std::string& b) {
  for (const auto& r : doc.relations) {
    if ((r.e1 == a && r.e2 == b) || (r.e1 == b && r.e2 == a)) return true;
  }
  for (const auto& p : doc.passages) {
    const text::CharIndex idx(p.text);
    for (const auto& s : text::split_sentences(p.text)) {
      const auto lo = p.offset + idx.byte_to_char(s.begin);
      const auto hi = p.offset + idx.byte_to_char(s.end);
      bool has_a = false, has_b = false;
      for (const auto& ann : p.annotations) {
        if (ann.span.start >= lo && ann.span.end() <= hi) {
          has_a |= ann.semantic_key == a;
          has_b |= ann.semantic_key == b;
        }
      }
      if (has_a && has_b) return true;
    }
  }
  return false;
}

ScanRetrieval scan_retrieval(const std::vector<Document>& docs, const std::string& a, const std::string& b) {
  ScanRetrieval out;
  for (const auto& d : docs) {
    bool has_a = false, has_b = false;
    for (const auto& p : d.passages) {
      for (const auto& ann : p.annotations) {
        has_a |= ann.semantic_key == a;
        has_b |= ann.semantic_key == b;
      }
    }
    if (has_a && has_b) ++out.count;
  }
  const auto ranked = brute_force_rank(QueryNode::all_of({QueryNode::entity(a), QueryNode::entity(b)}), docs);
  out.judged = std::min<std::size_t>(ranked.size(), 20);
  for (std::size_t i = 0; i < out.judged; ++i) {
    const auto it = std::find_if(docs.begin(), docs.end(), [&](const Document& d) { return d.pmid == ranked[i]; });
    if (scan_pair_supported(*it, a, b)) ++out.relevant;
  }
  return out;
}

}  // namespace litsearch::testing
