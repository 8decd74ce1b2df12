#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "litsearch/index.hpp"

using namespace litsearch;
using litsearch::testing::toy10_corpus;

namespace {

const IndexSnapshot& toy_index() {
  static const IndexSnapshot s = build_index(toy10_corpus());
  return s;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("litsearch_test_" + name);
}

std::set<Pmid> row_pmids(const std::vector<RelationRow>& rows) {
  std::set<Pmid> out;
  for (const auto& r : rows) out.insert(r.pmids.begin(), r.pmids.end());
  return out;
}

}  // namespace

TEST(BuildIndex, Toy10Stats) {
  const auto& s = toy_index();
  s.check_invariants();
  EXPECT_EQ(s.stats().documents, 10u);
  // Linear-scan oracle over the pipeline output.
  std::set<std::pair<std::string, std::string>> pairs;
  std::size_t records = 0, annotations = 0;
  std::set<std::string> keys;
  for (const auto& d : toy10_corpus().documents) {
    std::set<std::tuple<RelationType, std::string, std::string>> triples;
    for (const auto& r : d.relations) {
      pairs.emplace(r.e1, r.e2);
      triples.emplace(r.rtype, r.e1, r.e2);
    }
    records += triples.size();
    for (const auto& p : d.passages) {
      annotations += p.annotations.size();
      for (const auto& a : p.annotations) keys.insert(a.semantic_key);
    }
  }
  EXPECT_EQ(s.stats().unique_pairs, pairs.size());
  EXPECT_EQ(s.stats().unique_pairs, 9u);
  EXPECT_EQ(s.stats().relations, records);
  EXPECT_EQ(s.stats().annotations, annotations);
  EXPECT_EQ(s.stats().unique_identifiers, keys.size());
}

TEST(BuildIndex, EmptyCorpus) {
  const auto s = build_index(AnnotatedCorpus{});
  EXPECT_EQ(s.stats(), IndexStats{});
  EXPECT_TRUE(s.docs().empty());
}

TEST(BuildIndex, DuplicatePmid) {
  auto c = toy10_corpus();
  c.documents.push_back(c.documents.front());
  try {
    build_index(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicatePmid);
  }
}

TEST(BuildIndex, EntityPostingsComplete) {
  const auto& s = toy_index();
  std::multiset<std::tuple<std::string, Pmid, std::size_t, std::size_t>> from_docs, from_index;
  for (const auto& d : toy10_corpus().documents) {
    for (const auto& p : d.passages) {
      for (const auto& a : p.annotations) from_docs.emplace(a.semantic_key, d.pmid, a.span.start, a.span.length);
    }
  }
  for (const auto& [key, v] : s.entity_postings()) {
    for (const auto& p : v) from_index.emplace(key, p.pmid, p.span.start, p.span.length);
  }
  EXPECT_EQ(from_docs, from_index);
}

TEST(BuildIndex, SentenceIdsAndPositions) {
  const auto& s = toy_index();
  const auto* covid = s.entity("@DISEASE_COVID_19");
  const auto* pon1 = s.entity("@GENE_PON1");
  ASSERT_TRUE(covid && pon1);
  auto find = [](const std::vector<EntityPosting>& v, Pmid pmid) {
    std::vector<EntityPosting> out;
    for (const auto& p : v) {
      if (p.pmid == pmid) out.push_back(p);
    }
    return out;
  };
  auto c2 = find(*covid, 1002), p2 = find(*pon1, 1002);
  ASSERT_EQ(p2.size(), 1u);
  EXPECT_EQ(p2[0].passage, 1u);
  EXPECT_EQ(p2[0].sentence, 0u);
  EXPECT_EQ(c2.back().sentence, 0u);
  auto p3 = find(*pon1, 1003);
  ASSERT_EQ(p3.size(), 1u);
  EXPECT_EQ(p3[0].sentence, 2u);
  // "We measured PON1": the title has 7 word tokens (COVID-19 is two), so PON1 sits at 7 + 2.
  EXPECT_EQ(p2[0].position, 9u);
}

TEST(BuildIndex, DictionaryFrequencies) {
  const auto& dict = toy_index().dictionary();
  EXPECT_EQ(dict.at("@DISEASE_COVID_19").doc_freq, 4u);
  EXPECT_EQ(dict.at("@DISEASE_Post_Acute_COVID_19_Syndrome").doc_freq, 1u);
  EXPECT_EQ(dict.at("@CHEMICAL_Tofacitinib").doc_freq, 0u);
  EXPECT_EQ(dict.at("@VARIANT_rs12329760").name, "rs12329760");
}

TEST(Merge, EmptyBaseEqualsBuild) {
  EXPECT_EQ(merge(build_index({}), toy10_corpus()), toy_index());
}

TEST(Merge, EmptyDeltaIsIdentity) { EXPECT_EQ(merge(toy_index(), AnnotatedCorpus{}), toy_index()); }

TEST(Merge, ReannotatedDocumentReplaced) {
  auto d01 = toy10_corpus().documents.front();
  const auto at = d01.passages[1].offset + d01.passages[1].text.find("trials");
  EntityAnnotation extra{{at, 6}, "trials", EntityType::Chemical, {Namespace::MeSH, "D777"}, "@CHEMICAL_Trials"};
  ASSERT_EQ(document_text_at(d01, extra.span), "trials");
  d01.passages[1].annotations.push_back(extra);
  const auto before = toy_index();
  const auto merged = merge(before, make_corpus({d01}));
  EXPECT_EQ(before, toy_index());  // base untouched
  auto all = toy10_corpus();
  all.documents.front() = d01;
  EXPECT_EQ(merged, build_index(all));
  ASSERT_NE(merged.entity("@CHEMICAL_Trials"), nullptr);
  EXPECT_EQ(merged.entity_postings().at("@GENE_PON1"), toy_index().entity_postings().at("@GENE_PON1"));
}

TEST(Merge, RandomSplitsEqualRebuild) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto n = std::uniform_int_distribution<std::size_t>(0, 50)(rng);
    auto a = litsearch::testing::random_corpus(rng, n);
    auto b = litsearch::testing::random_corpus(rng, n);  // same pmids, different content
    AnnotatedCorpus base, delta;
    std::map<Pmid, Document> expected;
    for (std::size_t i = 0; i < n; ++i) {
      const int r = std::uniform_int_distribution<int>(0, 3)(rng);
      if (r == 0 || r == 1) base.documents.push_back(a.documents[i]);
      if (r == 2) delta.documents.push_back(a.documents[i]);
      if (r == 3) {
        base.documents.push_back(a.documents[i]);
        delta.documents.push_back(b.documents[i]);
      }
      expected[a.documents[i].pmid] = r == 3 ? b.documents[i] : a.documents[i];
    }
    AnnotatedCorpus all;
    for (auto& [pmid, d] : expected) all.documents.push_back(d);
    const auto merged = merge(build_index(base), delta);
    merged.check_invariants();
    EXPECT_EQ(merged, build_index(all)) << "trial " << trial;
  }
}

TEST(Lookup, JakOneChemicalsDocumentedUrl) {
  auto rows = lookup_relations(toy_index(), EntityRef::parse("@GENE_JAK1"), RelationType::NEGATIVE_CORRELATE,
                               EntityRef::parse("Chemical"));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].e1, "@CHEMICAL_Filgotinib");
  EXPECT_EQ(rows[0].pmids, std::vector<Pmid>{1005});
}

TEST(Lookup, BreastCancerTreatments) {
  auto rows = lookup_relations(toy_index(), EntityRef::parse("@DISEASE_Breast_Cancer"), RelationType::TREAT,
                               EntityRef::parse("Chemical"));
  std::set<std::string> chems;
  for (const auto& r : rows) chems.insert(r.e1);
  EXPECT_TRUE(chems.count("@CHEMICAL_Tamoxifen"));
  EXPECT_TRUE(chems.count("@CHEMICAL_Doxorubicin"));
}

TEST(Lookup, TwoWildcardsRejected) {
  try {
    lookup_relations(toy_index(), EntityRef::any(EntityType::Chemical), RelationType::TREAT,
                     EntityRef::any(EntityType::Disease));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadKey);
  }
  EXPECT_THROW(EntityRef::parse("@GENE-JAK1"), Error);
  EXPECT_THROW(EntityRef::parse("Protein"), Error);
}

TEST(Lookup, Symmetric) {
  const auto& s = toy_index();
  std::set<std::string> keys;
  for (const auto& [k, v] : s.entity_postings()) keys.insert(k);
  for (const auto& a : keys) {
    for (const auto& b : keys) {
      for (std::optional<RelationType> t : {std::optional<RelationType>{}, std::optional{RelationType::TREAT}}) {
        EXPECT_EQ(row_pmids(lookup_relations(s, EntityRef::concrete(a), t, EntityRef::concrete(b))),
                  row_pmids(lookup_relations(s, EntityRef::concrete(b), t, EntityRef::concrete(a))));
      }
    }
  }
}

TEST(Lookup, SortedByCountThenKey) {
  auto c = toy10_corpus();
  auto extra = make_title_abstract(2001, "Tamoxifen treats breast cancer.", "");
  extra = tag_entities(extra, litsearch::testing::toy10_lexicon());
  extra.relations = extract_relations(extra, litsearch::testing::toy10_rules());
  c.documents.push_back(extra);
  auto s = build_index(c);
  auto rows = lookup_relations(s, EntityRef::parse("@DISEASE_Breast_Cancer"), std::nullopt, EntityRef::parse("Chemical"));
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0].e1, "@CHEMICAL_Tamoxifen");
  EXPECT_EQ(rows[0].pmids.size(), 2u);
}

TEST(Persist, RoundTripToy10) {
  const auto path = temp_path("toy10.idx");
  persist(toy_index(), path);
  const auto loaded = load_snapshot(path);
  EXPECT_EQ(loaded, toy_index());
  EXPECT_EQ(encode_snapshot(loaded), encode_snapshot(toy_index()));
  EXPECT_EQ(loaded.entity_dictionary().suggest("covid", 1).at(0).semantic_key, "@DISEASE_COVID_19");
  std::filesystem::remove(path);
}

TEST(Persist, RoundTripEmpty) {
  const auto empty = build_index({});
  EXPECT_EQ(decode_snapshot(encode_snapshot(empty)), empty);
}

TEST(Persist, TruncatedIsChecksumMismatch) {
  auto bytes = encode_snapshot(toy_index());
  for (std::size_t cut : {bytes.size() - 1, bytes.size() / 2, std::size_t{10}}) {
    try {
      decode_snapshot(std::string_view(bytes).substr(0, cut));
      FAIL() << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ChecksumMismatch) << cut;
    }
  }
  bytes[bytes.size() / 2] ^= 0x40;
  try {
    decode_snapshot(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChecksumMismatch);
  }
}

TEST(Persist, FutureVersionRejected) {
  auto bytes = encode_snapshot(toy_index());
  bytes[4] = static_cast<char>(kSnapshotVersion + 1);
  try {
    decode_snapshot(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::VersionMismatch);
  }
}

TEST(Persist, MissingFileIsIoError) {
  try {
    load_snapshot("/nonexistent/dir/x.idx");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(Persist, CorpusFileRoundTrip) {
  const auto bytes = encode_corpus(toy10_corpus());
  const auto back = decode_corpus(bytes);
  EXPECT_EQ(back.documents, toy10_corpus().documents);
  EXPECT_EQ(back.synonyms, toy10_corpus().synonyms);
  EXPECT_EQ(back.counts, toy10_corpus().counts);
}

TEST(BulkExport, Shapes) {
  const auto rel = export_relations_tsv(toy_index());
  EXPECT_NE(rel.find("1001\tTREAT\t@CHEMICAL_Tamoxifen\t@DISEASE_Breast_Cancer\n"), std::string::npos);
  const auto ent = export_entities_tsv(toy_index());
  EXPECT_NE(ent.find("1004\tDisease\tMeSH:D000086382\t@DISEASE_COVID_19\tCOVID-19|SARS-CoV-2 infection\n"),
            std::string::npos);
}
