#include <gtest/gtest.h>

#include <future>
#include <random>
#include <thread>

#include <httplib.h>
#include <unistd.h>

#include "fixtures.hpp"
#include "litsearch/ragent.hpp"
#include "litsearch/text.hpp"

using namespace litsearch;
namespace fx = litsearch::testing;

namespace {

const IndexSnapshot& toy() {
  static const IndexSnapshot snap = build_index(fx::toy10_corpus());
  return snap;
}

const std::string kBreastCancerQ =
    "What drugs can treat breast cancer? For each drug in your answer, please cite the article PMIDs that contain "
    "the evidence.";

std::vector<std::string> names(const std::vector<ToolCall>& t) {
  std::vector<std::string> out;
  for (const auto& c : t) out.push_back(c.name);
  return out;
}

std::set<Pmid> cited(const AgentAnswer& a) {
  std::set<Pmid> out;
  for (const auto& c : a.claims) out.insert(c.pmids.begin(), c.pmids.end());
  return out;
}

}  // namespace

// ---- fixture oracle ----

TEST(RagFixture, PipelineFindsTheHandWrittenRelations) {
  // Worked out by reading each sentence against the trigger rules.
  const std::set<std::tuple<Pmid, std::string, std::string, std::string>> expected = {
      {2001, "CAUSE", "@CHEMICAL_Tocilizumab", "@DISEASE_Neutropenia"},
      {2002, "CAUSE", "@CHEMICAL_Tocilizumab", "@DISEASE_Chemical_and_Drug_Induced_Liver_Injury"},
      {2003, "CAUSE", "@CHEMICAL_Tocilizumab", "@DISEASE_Thrombocytopenia"},
      {2005, "CAUSE", "@CHEMICAL_Tocilizumab", "@DISEASE_Chemical_and_Drug_Induced_Liver_Injury"},
      {2011, "CAUSE", "@CHEMICAL_Scopolamine", "@DISEASE_Memory_Disorders"},
      {2012, "CAUSE", "@CHEMICAL_Ethanol", "@DISEASE_Memory_Disorders"},
      {2013, "CAUSE", "@CHEMICAL_Diazepam", "@DISEASE_Memory_Disorders"},
      {2021, "TREAT", "@CHEMICAL_Cocaine", "@DISEASE_Epistaxis"},
      {2022, "TREAT", "@CHEMICAL_Cocaine", "@DISEASE_Pain"},
      {2024, "INTERACT", "@CHEMICAL_Cocaine", "@GENE_SLC6A3"},
      {2025, "INTERACT", "@CHEMICAL_Cocaine", "@GENE_DRD2"},
      {2031, "TREAT", "@CHEMICAL_Doxorubicin", "@DISEASE_Leukemia"},
      {2032, "TREAT", "@CHEMICAL_Doxorubicin", "@DISEASE_Breast_Cancer"},
      {2033, "TREAT", "@CHEMICAL_Doxorubicin", "@DISEASE_Lymphoma"},
      {2041, "TREAT", "@CHEMICAL_Tamoxifen", "@DISEASE_Breast_Cancer"},
      {2042, "TREAT", "@CHEMICAL_Tamoxifen", "@DISEASE_Breast_Cancer"},
      {2043, "TREAT", "@CHEMICAL_Letrozole", "@DISEASE_Breast_Cancer"},
      {2044, "TREAT", "@CHEMICAL_Letrozole", "@DISEASE_Breast_Cancer"},
      {2045, "TREAT", "@CHEMICAL_Anastrozole", "@DISEASE_Breast_Cancer"},
      {2046, "TREAT", "@CHEMICAL_Trastuzumab", "@DISEASE_Breast_Cancer"},
      {2047, "TREAT", "@CHEMICAL_Trastuzumab", "@DISEASE_Breast_Cancer"},
      {2048, "TREAT", "@CHEMICAL_Paclitaxel", "@DISEASE_Breast_Cancer"},
      {2049, "TREAT", "@CHEMICAL_Capecitabine", "@DISEASE_Breast_Cancer"},
      {2050, "TREAT", "@CHEMICAL_Doxorubicin", "@DISEASE_Breast_Cancer"},
      {2061, "TREAT", "@CHEMICAL_Nintedanib", "@DISEASE_Scleroderma_Systemic"},
      {2062, "TREAT", "@CHEMICAL_Mycophenolic_Acid", "@DISEASE_Scleroderma_Systemic"},
      {2063, "TREAT", "@CHEMICAL_Cyclophosphamide", "@DISEASE_Scleroderma_Systemic"},
      {2071, "TREAT", "@CHEMICAL_Finasteride", "@DISEASE_Prostatic_Hyperplasia"},
      {2072, "TREAT", "@CHEMICAL_Finasteride", "@DISEASE_Alopecia"},
  };
  std::set<std::tuple<Pmid, std::string, std::string, std::string>> got;
  for (const auto& d : fx::ragset_corpus().documents) {
    for (const auto& r : d.relations) got.insert({d.pmid, std::string(to_string(r.rtype)), r.e1, r.e2});
  }
  EXPECT_EQ(got, expected);
  EXPECT_TRUE(fx::ragset_corpus().errors.empty());
  EXPECT_EQ(fx::ragset_questions().size(), 8u);
  EXPECT_EQ(fx::ragset_plans().size(), 8u);
}

// ---- tools ----

TEST(RagTools, FindEntityId) {
  auto bc = tool_find_entity_id("breast cancer", toy());
  ASSERT_FALSE(bc.empty());
  EXPECT_EQ(bc[0], "@DISEASE_Breast_Cancer");
  EXPECT_EQ(tool_find_entity_id("PON1", toy()).at(0), "@GENE_PON1");
  EXPECT_EQ(tool_find_entity_id("paraoxonase 1", toy()).at(0), "@GENE_PON1");
  EXPECT_TRUE(tool_find_entity_id("zzz", toy()).empty());
  EXPECT_TRUE(tool_find_entity_id("  ", toy()).empty());
  EXPECT_LE(tool_find_entity_id("c", toy()).size(), kEntityIdCap);
  EXPECT_EQ(tool_find_entity_id("memory deficits", fx::ragset_snapshot()).at(0), "@DISEASE_Memory_Disorders");
}

TEST(RagTools, FindRelatedEntities) {
  auto rows = tool_find_related_entities("@DISEASE_Breast_Cancer", RelationType::TREAT, EntityType::Chemical, toy());
  bool tamoxifen = false;
  for (const auto& r : rows) tamoxifen |= r.semantic_key == "@CHEMICAL_Tamoxifen";
  EXPECT_TRUE(tamoxifen);
  EXPECT_TRUE(tool_find_related_entities("@DISEASE_Nothing_Here", std::nullopt, std::nullopt, toy()).empty());
  EXPECT_THROW(tool_find_related_entities("breast cancer", std::nullopt, std::nullopt, toy()), Error);

  // Seven chemicals treat breast cancer in the fixture; five come back, by
  // pmid count and then key. Doxorubicin wins the tie on key order.
  auto capped = tool_find_related_entities("@DISEASE_Breast_Cancer", RelationType::TREAT, EntityType::Chemical,
                                           fx::ragset_snapshot());
  std::vector<std::pair<std::string, std::size_t>> got;
  for (const auto& r : capped) got.push_back({r.semantic_key, r.pmid_count});
  EXPECT_EQ(got, (std::vector<std::pair<std::string, std::size_t>>{{"@CHEMICAL_Doxorubicin", 2},
                                                                   {"@CHEMICAL_Letrozole", 2},
                                                                   {"@CHEMICAL_Tamoxifen", 2},
                                                                   {"@CHEMICAL_Trastuzumab", 2},
                                                                   {"@CHEMICAL_Anastrozole", 1}}));
  auto all = tool_find_related_entities("@DISEASE_Breast_Cancer", std::nullopt, std::nullopt, fx::ragset_snapshot());
  EXPECT_EQ(all.size(), kRelatedEntityCap);
  for (const auto& r : all) {
    Relation rel{0, r.rtype, "@DISEASE_Breast_Cancer", r.semantic_key, {}};
    canonicalize(rel);
    EXPECT_TRUE(fx::ragset_snapshot().relation_store().count(RelationKey{rel.rtype, rel.e1, rel.e2}));
  }
}

TEST(RagTools, ExportRelevantSearchResults) {
  auto t = tool_export_relevant_search_results("@CHEMICAL_Tamoxifen", RelationType::TREAT, "@DISEASE_Breast_Cancer", toy());
  EXPECT_EQ(t, std::vector<Pmid>{1001});
  // Either argument order names the same triple; newest first.
  const auto& rs = fx::ragset_snapshot();
  EXPECT_EQ(tool_export_relevant_search_results("@DISEASE_Breast_Cancer", RelationType::TREAT, "@CHEMICAL_Doxorubicin", rs),
            (std::vector<Pmid>{2032, 2050}));
  EXPECT_EQ(tool_export_relevant_search_results("@CHEMICAL_Doxorubicin", RelationType::TREAT, "@DISEASE_Breast_Cancer", rs),
            (std::vector<Pmid>{2032, 2050}));
  EXPECT_TRUE(tool_export_relevant_search_results("@CHEMICAL_Tamoxifen", RelationType::TREAT, "@DISEASE_Leukemia", toy()).empty());
  try {
    tool_export_relevant_search_results("@GENE_PON1", RelationType::TREAT, "@GENE_JAK1", toy());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
  }
}

TEST(RagTools, ExportCapsAtTwentyNewestFirst) {
  std::vector<Document> docs;
  for (int i = 0; i < 30; ++i) {
    docs.push_back(make_title_abstract(5000 + i, "Tamoxifen treats breast cancer.", "Trial " + std::to_string(i) + "."));
    docs.back().pub_year = 1990 + (i * 7) % 30;
  }
  auto corpus = run_pipeline(docs, fx::toy10_lexicon(), fx::toy10_rules());
  auto snap = build_index(corpus);
  auto out = tool_export_relevant_search_results("@CHEMICAL_Tamoxifen", RelationType::TREAT, "@DISEASE_Breast_Cancer", snap);
  ASSERT_EQ(out.size(), kExportCap);
  for (std::size_t i = 1; i < out.size(); ++i) {
    const auto ya = snap.meta(out[i - 1])->pub_year;
    const auto yb = snap.meta(out[i])->pub_year;
    EXPECT_TRUE(ya > yb || (ya == yb && out[i - 1] > out[i]));
  }
  EXPECT_EQ(snap.meta(out.back())->pub_year, 2000);
}

TEST(RagTools, Deterministic) {
  const auto& rs = fx::ragset_snapshot();
  EXPECT_EQ(tool_find_entity_id("cocaine", rs), tool_find_entity_id("cocaine", rs));
  EXPECT_EQ(tool_find_related_entities("@CHEMICAL_Cocaine", std::nullopt, std::nullopt, rs),
            tool_find_related_entities("@CHEMICAL_Cocaine", std::nullopt, std::nullopt, rs));
  EXPECT_EQ(tool_search_articles("cocaine", rs), tool_search_articles("cocaine", rs));
  EXPECT_LE(tool_search_articles("breast cancer OR cocaine OR doxorubicin", rs).size(), kSearchCap);
}

// ---- orchestration ----

TEST(RagAgent, BreastCancerThreeStepTranscript) {
  MockLlm llm(fx::ragset_plans());
  auto ans = orchestrate(kBreastCancerQ, llm, fx::ragset_snapshot());
  ASSERT_FALSE(ans.degraded) << (ans.problems.empty() ? "" : ans.problems[0]);
  ASSERT_EQ(ans.transcript.size(), 7u);
  EXPECT_EQ(ans.transcript[0].name, "find_entity_id");
  EXPECT_EQ(ans.transcript[0].step, 1u);
  EXPECT_EQ(ans.transcript[0].result.at(0), "@DISEASE_Breast_Cancer");
  EXPECT_EQ(ans.transcript[1].name, "find_related_entities");
  EXPECT_EQ(ans.transcript[1].step, 2u);
  EXPECT_EQ(ans.transcript[1].arguments["relation_type"], "treat");
  for (std::size_t i = 2; i < 7; ++i) {
    EXPECT_EQ(ans.transcript[i].name, "export_relevant_search_results");
    EXPECT_EQ(ans.transcript[i].step, 3u);
  }
  EXPECT_EQ(ans.message.rfind("Summary:", 0), 0u);
  EXPECT_EQ(ans.claims.size(), 5u);
  const auto seen = transcript_pmids(ans.transcript);
  for (auto p : cited(ans)) EXPECT_TRUE(seen.count(p)) << p;
  for (double t : llm.temperatures()) EXPECT_EQ(t, 0.0);

  auto rep = verify_citations(ans, fx::ragset_snapshot());
  EXPECT_EQ(rep.total(), 9u);
  EXPECT_EQ(rep.precision(), 1.0);
}

TEST(RagAgent, ToyCorpusFlowTreatsBreastCancer) {
  std::map<std::string, QuestionPlan> plans;
  QuestionPlan p;
  p.anchor_text = "breast cancer";
  p.anchor_key = "@DISEASE_Breast_Cancer";
  p.rtype = RelationType::TREAT;
  p.target_type = EntityType::Chemical;
  p.search_query = "breast cancer";
  plans[kBreastCancerQ] = p;
  MockLlm llm(plans);
  auto ans = orchestrate(kBreastCancerQ, llm, toy(), AgentOptions{AgentMode::Grounded, 4});
  // Doxorubicin (1006) and Tamoxifen (1001) both treat breast cancer in toy10.
  EXPECT_EQ(names(ans.transcript),
            (std::vector<std::string>{"find_entity_id", "find_related_entities", "export_relevant_search_results",
                                      "export_relevant_search_results"}));
  EXPECT_FALSE(ans.degraded);
  ASSERT_EQ(ans.claims.size(), 2u);
  EXPECT_EQ(ans.claims[0].subject, "@CHEMICAL_Doxorubicin");
  EXPECT_EQ(ans.claims[0].pmids, std::vector<Pmid>{1006});
  EXPECT_EQ(ans.claims[1].subject, "@CHEMICAL_Tamoxifen");
  EXPECT_EQ(ans.claims[1].pmids, std::vector<Pmid>{1001});
}

TEST(RagAgent, CitationClosureAcrossScenarios) {
  const auto plans = fx::ragset_plans();
  for (auto b : {MockLlm::Behaviour::Faithful, MockLlm::Behaviour::Fabricate, MockLlm::Behaviour::NoSummary}) {
    MockLlm llm(plans, b, {99999001});
    for (const auto& q : fx::ragset_questions()) {
      for (auto mode : {AgentMode::NoTool, AgentMode::SearchOnly, AgentMode::Grounded}) {
        auto ans = orchestrate(q.question, llm, fx::ragset_snapshot(), AgentOptions{mode, 16});
        const auto seen = transcript_pmids(ans.transcript);
        bool closed = true;
        for (auto p : cited(ans)) closed &= seen.count(p) > 0;
        if (!ans.degraded) EXPECT_TRUE(closed) << q.qid << " " << to_string(mode);
        if (!closed) EXPECT_TRUE(ans.degraded) << q.qid << " " << to_string(mode);
      }
    }
  }
}

TEST(RagAgent, FabricatedPmidsAreDetected) {
  for (std::size_t fakes : {1u, 2u, 3u}) {
    std::vector<Pmid> fake;
    for (std::size_t i = 0; i < fakes; ++i) fake.push_back(99999001 + i);
    MockLlm llm(fx::ragset_plans(), MockLlm::Behaviour::Fabricate, fake);
    auto ans = orchestrate(kBreastCancerQ, llm, fx::ragset_snapshot());
    EXPECT_TRUE(ans.degraded);
    EXPECT_EQ(ans.fabricated, fake);
    auto rep = verify_citations(ans, fx::ragset_snapshot());
    const auto n = rep.total();
    EXPECT_EQ(n, 9u + fakes);
    EXPECT_EQ(rep.nonexistent, fakes);
    EXPECT_EQ(rep.precision(), static_cast<double>(n - fakes) / static_cast<double>(n));
  }
}

TEST(RagAgent, OneFakeAmongFourRealIsPointEight) {
  AgentAnswer a;
  a.claims_parsed = true;
  a.claims = {{"@CHEMICAL_Tamoxifen", RelationType::TREAT, "@DISEASE_Breast_Cancer", {2041, 2042, 99999999}},
              {"@CHEMICAL_Letrozole", RelationType::TREAT, "@DISEASE_Breast_Cancer", {2043, 2044}}};
  auto rep = verify_citations(a, fx::ragset_snapshot());
  EXPECT_EQ(rep.nonexistent, 1u);
  EXPECT_EQ(rep.supported, 4u);
  EXPECT_DOUBLE_EQ(rep.precision(), 0.8);
  EXPECT_EQ(rep.cell(), "4 / 5");
}

TEST(RagAgent, BudgetAndProtocolErrors) {
  MockLlm over(fx::ragset_plans(), MockLlm::Behaviour::OverCall);
  try {
    orchestrate(kBreastCancerQ, over, fx::ragset_snapshot(), AgentOptions{AgentMode::Grounded, 3});
    ADD_FAILURE();
  } catch (const BudgetExhaustedError& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetExhausted);
    EXPECT_EQ(e.transcript().size(), 3u);
    EXPECT_EQ(over.calls(), 4u);
  }

  MockLlm bad(fx::ragset_plans(), MockLlm::Behaviour::UnknownTool);
  try {
    orchestrate(kBreastCancerQ, bad, fx::ragset_snapshot());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProtocolError);
  }

  MockLlm ok(fx::ragset_plans());
  try {
    orchestrate(kBreastCancerQ, ok, fx::ragset_snapshot(), AgentOptions{AgentMode::Grounded, 2});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }

  MockLlm nosum(fx::ragset_plans(), MockLlm::Behaviour::NoSummary);
  auto ans = orchestrate(kBreastCancerQ, nosum, fx::ragset_snapshot());
  EXPECT_TRUE(ans.degraded);
  EXPECT_TRUE(ans.claims_parsed);
  EXPECT_TRUE(ans.fabricated.empty());
}

TEST(RagAgent, ToolErrorsGoBackToTheModel) {
  struct Scripted : ChatClient {
    int turn = 0;
    std::string seen;
    ChatReply complete(const ChatRequest& req) override {
      if (turn++ == 0) {
        return {"", {{"c1", "export_relevant_search_results",
                      R"({"e1": "@GENE_PON1", "relation_type": "treat", "e2": "@GENE_JAK1"})"}}};
      }
      seen = req.messages.back().content;
      return {"Summary: nothing.\n```claims\n[]\n```", {}};
    }
  } llm;
  auto ans = orchestrate("q", llm, toy());
  EXPECT_NE(llm.seen.find("SchemaError"), std::string::npos);
  EXPECT_FALSE(ans.degraded);
  EXPECT_EQ(ans.transcript.size(), 1u);
}

// ---- verification ----

TEST(RagVerify, Verdicts) {
  AgentAnswer a;
  a.claims_parsed = true;
  a.claims = {
      {"@CHEMICAL_Tamoxifen", RelationType::TREAT, "@DISEASE_Breast_Cancer", {1001}},  // stored relation
      {"@DISEASE_COVID_19", RelationType::ASSOCIATE, "@GENE_PON1", {1002}},            // same sentence only
      {"@DISEASE_COVID_19", RelationType::ASSOCIATE, "@GENE_PON1", {1003}},            // far apart
      {"@CHEMICAL_Tamoxifen", RelationType::TREAT, "@DISEASE_Breast_Cancer", {1005}},  // doc lacks both
      {"@CHEMICAL_Tamoxifen", RelationType::TREAT, "@DISEASE_Breast_Cancer", {4242}},  // not in snapshot
  };
  auto rep = verify_citations(a, toy());
  ASSERT_EQ(rep.checks.size(), 5u);
  EXPECT_EQ(rep.checks[0].verdict, CitationVerdict::Supported);
  EXPECT_EQ(rep.checks[1].verdict, CitationVerdict::Supported);
  EXPECT_EQ(rep.checks[2].verdict, CitationVerdict::Unsupported);
  EXPECT_EQ(rep.checks[3].verdict, CitationVerdict::Unsupported);
  EXPECT_EQ(rep.checks[4].verdict, CitationVerdict::Nonexistent);
  EXPECT_EQ(rep.supported + rep.unsupported + rep.nonexistent, rep.total());

  AgentAnswer unparsed;
  EXPECT_THROW(verify_citations(unparsed, toy()), Error);
}

TEST(RagVerify, SoundAgainstBruteScan) {
  // Independent rule: the document lists the canonical triple, or some
  // sentence of some passage holds annotations of both keys.
  const auto& corpus = fx::ragset_corpus();
  const auto& snap = fx::ragset_snapshot();
  auto brute = [&](const Claim& c, Pmid pmid) {
    const Document* doc = nullptr;
    for (const auto& d : corpus.documents) {
      if (d.pmid == pmid) doc = &d;
    }
    if (!doc) return CitationVerdict::Nonexistent;
    Relation r{pmid, c.rtype, c.subject, c.object, {}};
    canonicalize(r);
    for (const auto& x : doc->relations) {
      if (x.rtype == r.rtype && x.e1 == r.e1 && x.e2 == r.e2) return CitationVerdict::Supported;
    }
    for (const auto& p : doc->passages) {
      const text::CharIndex idx(p.text);
      for (const auto& s : text::split_sentences(p.text)) {
        const auto b = p.offset + idx.byte_to_char(s.begin);
        const auto e = p.offset + idx.byte_to_char(s.end);
        bool has_s = false, has_o = false;
        for (const auto& a : p.annotations) {
          if (a.span.start >= b && a.span.end() <= e) {
            has_s |= a.semantic_key == c.subject;
            has_o |= a.semantic_key == c.object;
          }
        }
        if (has_s && has_o) return CitationVerdict::Supported;
      }
    }
    return CitationVerdict::Unsupported;
  };

  std::vector<std::string> keys;
  for (const auto& [k, g] : snap.synonyms()) keys.push_back(k);
  std::vector<Pmid> pmids = {1, 99999};
  for (const auto& d : corpus.documents) pmids.push_back(d.pmid);
  std::mt19937_64 rng(7);
  auto pick = [&](const auto& v) { return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]; };
  std::size_t supported = 0;
  for (int i = 0; i < 3000; ++i) {
    AgentAnswer a;
    a.claims_parsed = true;
    const auto rt = static_cast<RelationType>(std::uniform_int_distribution<int>(0, kRelationTypeCount - 1)(rng));
    a.claims = {{pick(keys), rt, pick(keys), {pick(pmids)}}};
    if (i % 3 == 0) {
      // Bias toward real relations so the supported branch is exercised.
      const auto& d = pick(corpus.documents);
      if (!d.relations.empty()) {
        const auto& r = pick(d.relations);
        a.claims = {{r.e2, r.rtype, r.e1, {d.pmid}}};
      }
    }
    const auto rep = verify_citations(a, snap);
    ASSERT_EQ(rep.checks.size(), 1u);
    EXPECT_EQ(rep.checks[0].verdict, brute(a.claims[0], a.claims[0].pmids[0]));
    supported += rep.supported;
  }
  EXPECT_GT(supported, 500u);
}

// ---- evaluation ----

TEST(RagEval, OrderingNoToolBelowSearchBelowGrounded) {
  MockLlm llm(fx::ragset_plans());
  const auto rows = evaluate_rag(fx::ragset_questions(), llm, fx::ragset_snapshot());
  ASSERT_EQ(rows.size(), 8u);
  CitationReport tot[3];
  for (const auto& r : rows) {
    const auto& n = r.reports.at(AgentMode::NoTool);
    const auto& s = r.reports.at(AgentMode::SearchOnly);
    const auto& g = r.reports.at(AgentMode::Grounded);
    EXPECT_GT(n.total(), 0u) << r.qid;
    EXPECT_GT(s.total(), 0u) << r.qid;
    EXPECT_GT(g.total(), 0u) << r.qid;
    EXPECT_LT(n.precision(), s.precision()) << r.qid;
    EXPECT_LT(s.precision(), g.precision()) << r.qid;
    EXPECT_FALSE(r.degraded.at(AgentMode::Grounded)) << r.qid;
    EXPECT_FALSE(r.degraded.at(AgentMode::SearchOnly)) << r.qid;
    EXPECT_TRUE(r.degraded.at(AgentMode::NoTool)) << r.qid;
    int i = 0;
    for (const auto* rep : {&n, &s, &g}) {
      tot[i].supported += rep->supported;
      tot[i].unsupported += rep->unsupported;
      tot[i].nonexistent += rep->nonexistent;
      ++i;
    }
  }
  EXPECT_LT(tot[0].precision(), tot[1].precision());
  EXPECT_LT(tot[1].precision(), tot[2].precision());

  const auto report = format_rag_report(rows);
  EXPECT_EQ(report.rfind("qid\tquestion\tno_tool\tsearch_only\tgrounded\n", 0), 0u);
  EXPECT_NE(report.find("\ntotal\t\t" + tot[0].cell() + "\t" + tot[1].cell() + "\t" + tot[2].cell() + "\n"),
            std::string::npos)
      << report;
}

// ---- claims contract ----

TEST(RagClaims, ParseAndFormat) {
  std::vector<Claim> claims = {{"@CHEMICAL_Tamoxifen", RelationType::TREAT, "@DISEASE_Breast_Cancer", {1, 2}},
                               {"@GENE_PON1", RelationType::ASSOCIATE, "@DISEASE_COVID_19", {}}};
  EXPECT_EQ(parse_claims("Summary: x\n" + format_claims(claims)), claims);
  EXPECT_EQ(parse_claims("```claims\n[{\"subject\":\"@GENE_A\",\"rtype\":\"treat\",\"object\":\"@GENE_B\",\"pmids\":[7]}]\n```")
                .at(0)
                .pmids,
            std::vector<Pmid>{7});
  for (const char* bad : {"Summary: no block", "```claims\n[{]\n```", "```claims\n{}\n```", "```claims\n[1]\n```",
                          "```claims\n[{\"subject\":\"x\",\"rtype\":\"treat\",\"object\":\"@GENE_B\",\"pmids\":[]}]\n```",
                          "```claims\n[{\"subject\":\"@GENE_A\",\"rtype\":\"heals\",\"object\":\"@GENE_B\",\"pmids\":[]}]\n```",
                          "```claims\n[{\"subject\":\"@GENE_A\",\"rtype\":\"treat\",\"object\":\"@GENE_B\",\"pmids\":[-1]}]\n```",
                          "```claims\n[{\"subject\":\"@GENE_A\",\"rtype\":\"treat\",\"object\":\"@GENE_B\",\"pmids\":[\"7\"]}]\n```",
                          "```claims\n[]"}) {
    try {
      parse_claims(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ClaimParseError) << bad;
    }
  }
}

// ---- wire protocol ----

namespace {

// Server side of the chat protocol, enough to put MockLlm behind HTTP.
ChatRequest decode_request(const Json& body) {
  ChatRequest req;
  req.temperature = body.value("temperature", 1.0);
  if (body.contains("tools")) req.tools = body["tools"];
  for (const auto& m : body.at("messages")) {
    ChatMessage msg;
    msg.role = m.at("role");
    if (m.contains("content") && m["content"].is_string()) msg.content = m["content"];
    if (m.contains("tool_calls")) {
      for (const auto& c : m["tool_calls"]) {
        msg.tool_calls.push_back({c["id"], c["function"]["name"], c["function"]["arguments"]});
      }
    }
    msg.tool_call_id = m.value("tool_call_id", "");
    msg.name = m.value("name", "");
    req.messages.push_back(std::move(msg));
  }
  return req;
}

Json encode_reply(const ChatReply& r) {
  Json msg{{"role", "assistant"}, {"content", r.content.empty() ? Json(nullptr) : Json(r.content)}};
  if (!r.tool_calls.empty()) {
    Json calls = Json::array();
    for (const auto& c : r.tool_calls) {
      calls.push_back({{"id", c.id}, {"type", "function"}, {"function", {{"name", c.name}, {"arguments", c.arguments}}}});
    }
    msg["tool_calls"] = calls;
  }
  return Json{{"choices", Json::array({{{"index", 0}, {"message", msg}}})}};
}

}  // namespace

TEST(RagWire, EncodeDecode) {
  ChatRequest req;
  req.tools = tool_schemas(AgentMode::Grounded);
  req.messages = {{"system", "s", {}, {}, {}},
                  {"user", "q", {}, {}, {}},
                  {"assistant", "", {{"c1", "find_entity_id", R"({"text":"x"})"}}, {}, {}},
                  {"tool", "[]", {}, "c1", "find_entity_id"}};
  auto body = encode_chat_request(req, "gpt-4");
  EXPECT_EQ(body["model"], "gpt-4");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["tools"].size(), 3u);
  EXPECT_TRUE(body["messages"][2]["content"].is_null());
  EXPECT_EQ(body["messages"][2]["tool_calls"][0]["function"]["name"], "find_entity_id");
  EXPECT_EQ(body["messages"][3]["tool_call_id"], "c1");
  auto back = decode_request(body);
  EXPECT_EQ(back.messages.size(), 4u);

  auto reply = decode_chat_reply(encode_reply({"", {{"id1", "find_entity_id", "{}"}}}));
  ASSERT_EQ(reply.tool_calls.size(), 1u);
  EXPECT_EQ(reply.tool_calls[0].name, "find_entity_id");
  EXPECT_THROW(decode_chat_reply(Json{{"nope", 1}}), Error);
  EXPECT_EQ(tool_schemas(AgentMode::NoTool).size(), 0u);
  EXPECT_EQ(tool_schemas(AgentMode::SearchOnly).size(), 1u);
}

TEST(RagWire, OrchestrateOverHttp) {
  MockLlm mock(fx::ragset_plans());
  httplib::Server svr;
  std::string auth;
  svr.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    auto reply = mock.complete(decode_request(Json::parse(req.body)));
    res.set_content(encode_reply(reply).dump(), "application/json");
  });
  svr.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.set_content("<html>", "text/html"); });
  const int port = svr.bind_to_any_port("127.0.0.1");
  std::thread th([&] { svr.listen_after_bind(); });
  svr.wait_until_ready();

  const auto base = "http://127.0.0.1:" + std::to_string(port);
  HttpChatClient client(base + "/v1/chat/completions", "mock-model", "k123", 5);
  auto ans = orchestrate(kBreastCancerQ, client, fx::ragset_snapshot());
  EXPECT_FALSE(ans.degraded);
  EXPECT_EQ(ans.transcript.size(), 7u);
  EXPECT_EQ(auth, "Bearer k123");
  MockLlm direct(fx::ragset_plans());
  EXPECT_EQ(ans.message, orchestrate(kBreastCancerQ, direct, fx::ragset_snapshot()).message);

  HttpChatClient broken(base + "/broken", "", "", 5);
  try {
    orchestrate(kBreastCancerQ, broken, fx::ragset_snapshot());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProtocolError);
  }
  HttpChatClient missing(base + "/nowhere", "", "", 5);
  try {
    orchestrate(kBreastCancerQ, missing, fx::ragset_snapshot());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LlmTransportError);
  }
  svr.stop();
  th.join();

  HttpChatClient down(base + "/v1/chat/completions", "", "", 1);
  try {
    down.complete({});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LlmTransportError);
  }
  EXPECT_THROW(HttpChatClient("ftp://x", "", ""), Error);
}
