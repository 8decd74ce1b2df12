#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "litsearch/annotator.hpp"
#include "litsearch/docmodel.hpp"
#include "litsearch/index.hpp"
#include "litsearch/ragent.hpp"

namespace litsearch::testing {

std::filesystem::path data_dir();
std::string read_text(const std::filesystem::path& p);

// Raw (unannotated) toy10 documents in pmid order.
std::vector<Document> toy10_raw();
const Lexicon& toy10_lexicon();
const std::vector<TriggerRule>& toy10_rules();
// Pipeline output over toy10; computed once.
const AnnotatedCorpus& toy10_corpus();

// Question-answering fixture: pipeline output over data/ragset, its index,
// the 8 questions and the scripted-model plans keyed by question text.
const AnnotatedCorpus& ragset_corpus();
const IndexSnapshot& ragset_snapshot();
std::vector<RagQuestion> ragset_questions();
std::map<std::string, QuestionPlan> ragset_plans();

// Exhaustive comparison of validate_relation_schema with the tabulated
// schema in data/relation_schema.tsv over every relation type and every
// unordered pair of entity types (12 x 21 cells).
struct SchemaComparison {
  std::size_t cells = 0;
  std::size_t mismatches = 0;
  std::size_t tabulated_valid = 0;    // valid cells in the table
  std::size_t implemented_valid = 0;  // cells the implementation accepts
  std::vector<std::string> problems;
};
SchemaComparison compare_schema_with_table();

// Linear-scan judgement for an entity pair: the document lists a relation
// of any type between them, or one sentence of one passage carries
// annotations of both. Shares no code with the index.
bool scan_pair_supported(const Document& doc, const std::string& a, const std::string& b);

// Retrieval counts for "a AND b" by scanning: documents annotated with both
// keys, and how many of the brute-force top 20 pass scan_pair_supported.
struct ScanRetrieval {
  std::size_t count = 0;
  std::size_t judged = 0;
  std::size_t relevant = 0;
};
ScanRetrieval scan_retrieval(const std::vector<Document>& docs, const std::string& a, const std::string& b);

// Random valid documents. Text mixes ASCII words, multibyte characters and
// punctuation; annotations are real substrings; relations are schema-valid.
Document random_document(std::mt19937_64& rng, Pmid pmid);

// Random annotated corpus drawn from a small vocabulary so that entities
// co-occur, share sentences and hold relations often enough to exercise every
// ranking tier.
struct SyntheticCorpus {
  std::vector<Document> documents;
  std::vector<std::string> keys;      // semantic keys used
  std::vector<std::string> keywords;  // folded keywords that appear in text
};
SyntheticCorpus random_corpus(std::mt19937_64& rng, std::size_t n_docs, Pmid first_pmid = 1);

}  // namespace litsearch::testing
