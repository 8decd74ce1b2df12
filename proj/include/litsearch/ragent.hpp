#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "litsearch/docmodel.hpp"
#include "litsearch/error.hpp"
#include "litsearch/index.hpp"

namespace litsearch {

using Json = nlohmann::json;

// ---- tools ----

inline constexpr std::size_t kEntityIdCap = 5;
inline constexpr std::size_t kRelatedEntityCap = 5;
inline constexpr std::size_t kExportCap = 20;
inline constexpr std::size_t kSearchCap = 20;

// Exact resolve_free_term hit first, then suggest() results; at most 5.
std::vector<std::string> tool_find_entity_id(std::string_view text, const IndexSnapshot& snap);

struct RelatedEntity {
  std::string semantic_key;
  RelationType rtype = RelationType::ASSOCIATE;
  std::size_t pmid_count = 0;

  friend bool operator==(const RelatedEntity&, const RelatedEntity&) = default;
};

// Partners of `entity` by descending pmid count (then key, rtype), at most 5.
// BadKey when the key is malformed; unknown keys give an empty list.
std::vector<RelatedEntity> tool_find_related_entities(const std::string& entity, std::optional<RelationType> rtype,
                                                      std::optional<EntityType> target_type,
                                                      const IndexSnapshot& snap);

// Evidence pmids for the canonical triple, newest first, at most 20.
// SchemaError when the schema rejects the pair for `rtype`.
std::vector<Pmid> tool_export_relevant_search_results(const std::string& e1, RelationType rtype,
                                                      const std::string& e2, const IndexSnapshot& snap);

struct ArticleHit {
  Pmid pmid = 0;
  std::string title;
  int year = 0;
  std::vector<std::string> entities;  // semantic keys annotated in the article

  friend bool operator==(const ArticleHit&, const ArticleHit&) = default;
};

// Keyword search standing in for a plain literature search engine: the
// ranked top 20 for the query, with no relation awareness. Used only by the
// search-only baseline.
std::vector<ArticleHit> tool_search_articles(std::string_view query, const IndexSnapshot& snap);

// ---- chat protocol ----

enum class AgentMode { NoTool, SearchOnly, Grounded };
std::string_view to_string(AgentMode m);  // "no_tool", "search_only", "grounded"

struct ToolRequest {
  std::string id;
  std::string name;
  std::string arguments;  // JSON text as sent on the wire
};

struct ChatMessage {
  std::string role;  // system, user, assistant, tool
  std::string content;
  std::vector<ToolRequest> tool_calls;  // assistant only
  std::string tool_call_id;             // tool only
  std::string name;                     // tool only
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  Json tools = Json::array();  // function schemas offered for this turn
  double temperature = 0.0;
};

struct ChatReply {
  std::string content;
  std::vector<ToolRequest> tool_calls;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // LlmTransportError when the endpoint cannot be reached, ProtocolError for
  // a reply that is not a chat completion.
  virtual ChatReply complete(const ChatRequest& req) = 0;
};

// Function schemas for a mode (empty for NoTool).
Json tool_schemas(AgentMode mode);
std::string system_prompt(AgentMode mode);

// Wire format of a chat-completion request and reply with function calling.
Json encode_chat_request(const ChatRequest& req, const std::string& model);
ChatReply decode_chat_reply(const Json& body);

// Chat-completion endpoint over HTTP(S). `endpoint` is the full URL.
class HttpChatClient : public ChatClient {
 public:
  HttpChatClient(std::string endpoint, std::string model, std::string api_key, int timeout_seconds = 120);
  ChatReply complete(const ChatRequest& req) override;

 private:
  std::string origin_;
  std::string path_;
  std::string model_;
  std::string api_key_;
  int timeout_seconds_;
};

// ---- answers ----

struct Claim {
  std::string subject;  // semantic keys
  RelationType rtype = RelationType::ASSOCIATE;
  std::string object;
  std::vector<Pmid> pmids;

  friend bool operator==(const Claim&, const Claim&) = default;
};

// Final-message contract: prose beginning "Summary:" followed by a fenced
// block
//   ```claims
//   [{"subject": "@...", "rtype": "treat", "object": "@...", "pmids": [1, 2]}]
//   ```
// ClaimParseError when the block is missing or malformed.
std::vector<Claim> parse_claims(std::string_view message);
std::string format_claims(const std::vector<Claim>& claims);

struct ToolCall {
  std::string name;
  Json arguments;
  Json result;
  std::size_t step = 0;  // 1-based LLM turn that requested the call
};

struct AgentAnswer {
  std::string question;
  AgentMode mode = AgentMode::Grounded;
  std::string message;  // the final assistant message
  std::string summary;  // message text before the claims block
  std::vector<Claim> claims;
  bool claims_parsed = false;
  std::vector<ToolCall> transcript;
  bool degraded = false;
  std::vector<std::string> problems;
  std::vector<Pmid> fabricated;  // cited but absent from every tool result
};

// Every pmid that appears in a tool result of the transcript.
std::set<Pmid> transcript_pmids(const std::vector<ToolCall>& transcript);

// Raised when the model keeps requesting tools past the budget; carries the
// calls made so far.
class BudgetExhaustedError : public Error {
 public:
  BudgetExhaustedError(const std::string& msg, std::vector<ToolCall> partial)
      : Error(ErrorCode::BudgetExhausted, msg), transcript_(std::move(partial)) {}
  const std::vector<ToolCall>& transcript() const { return transcript_; }

 private:
  std::vector<ToolCall> transcript_;
};

struct AgentOptions {
  AgentMode mode = AgentMode::Grounded;
  std::size_t budget = 16;  // max tool calls, at least 3
};

// Decompose -> call -> synthesize. Tool requests outside the mode's tool set
// or with unreadable arguments are a ProtocolError. A final message without
// the "Summary:" prefix, without a readable claims block, or citing pmids no
// tool returned marks the answer degraded.
AgentAnswer orchestrate(const std::string& question, ChatClient& llm, const IndexSnapshot& snap,
                        const AgentOptions& opts = {});

// ---- verification ----

enum class CitationVerdict { Supported, Unsupported, Nonexistent };
std::string_view to_string(CitationVerdict v);

struct CitationCheck {
  std::size_t claim = 0;
  Pmid pmid = 0;
  CitationVerdict verdict = CitationVerdict::Unsupported;
};

struct CitationReport {
  std::vector<CitationCheck> checks;
  std::size_t supported = 0;
  std::size_t unsupported = 0;
  std::size_t nonexistent = 0;

  std::size_t total() const { return supported + unsupported + nonexistent; }
  // supported / total; 0 when nothing was cited.
  double precision() const;
  std::string cell() const;  // "supported / total"
};

// Nonexistent when the pmid is not in the snapshot; supported when the
// relation store holds the claim triple for that pmid or both entities are
// annotated in one sentence of it; unsupported otherwise. ClaimParseError
// when the answer carries no parsed claims block.
CitationReport verify_citations(const AgentAnswer& answer, const IndexSnapshot& snap);

// ---- offline evaluation ----

struct RagQuestion {
  std::string qid;
  std::string question;
};

// TSV qid <TAB> question; '#' comments.
std::vector<RagQuestion> parse_questions(std::string_view tsv);

// What the scripted model "knows" about one question: the anchor entity, the
// relation asked about, the partner type, its keyword query for the
// search-only baseline and the claims it makes from memory with no tools.
struct QuestionPlan {
  std::string anchor_text;
  std::string anchor_key;
  RelationType rtype = RelationType::ASSOCIATE;
  EntityType target_type = EntityType::Chemical;
  std::string search_query;
  std::vector<Claim> recalled;
};

// JSON object keyed by qid.
std::map<std::string, QuestionPlan> parse_plans(std::string_view json_text);

// Scripted stand-in for the chat model. It finds the question in the user
// message, looks up its plan, and follows the behaviour matching the tools on
// offer: grounded (find id -> related entities -> export evidence ->
// answer), search-only (search -> claim every partner seen in a hit), or
// no-tool (answer from `recalled`). Adversarial behaviours exercise the
// failure paths.
class MockLlm : public ChatClient {
 public:
  enum class Behaviour { Faithful, Fabricate, OverCall, UnknownTool, NoSummary };

  MockLlm(std::map<std::string, QuestionPlan> plans_by_question, Behaviour b = Behaviour::Faithful,
          std::vector<Pmid> fabricated = {});
  ChatReply complete(const ChatRequest& req) override;

  std::size_t calls() const { return calls_; }
  std::vector<double> temperatures() const { return temperatures_; }

 private:
  ChatReply grounded(const QuestionPlan& plan, const std::vector<ChatMessage>& msgs);
  ChatReply search_only(const QuestionPlan& plan, const std::vector<ChatMessage>& msgs);
  ChatReply final_answer(const std::string& prose, std::vector<Claim> claims) const;

  std::map<std::string, QuestionPlan> plans_;
  Behaviour behaviour_;
  std::vector<Pmid> fabricated_;
  std::size_t calls_ = 0;
  std::vector<double> temperatures_;
};

struct RagRow {
  std::string qid;
  std::string question;
  std::map<AgentMode, CitationReport> reports;
  std::map<AgentMode, bool> degraded;
};

// Every question under all three modes.
std::vector<RagRow> evaluate_rag(const std::vector<RagQuestion>& questions, ChatClient& llm,
                                 const IndexSnapshot& snap, std::size_t budget = 16);

// TSV: qid, question, then "x / y" per mode (no_tool, search_only, grounded)
// and a total row.
std::string format_rag_report(const std::vector<RagRow>& rows);

}  // namespace litsearch
