#include "litsearch/ragent.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "litsearch/querylang.hpp"
#include "litsearch/ranker.hpp"

namespace litsearch {

namespace {

std::string trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

// "@CHEMICAL_Breast_Cancer" -> "Breast Cancer"
std::string display_name(const std::string& key) {
  const auto us = key.find('_');
  std::string name = us == std::string::npos ? key : key.substr(us + 1);
  std::replace(name.begin(), name.end(), '_', ' ');
  return name;
}

std::optional<RelationType> api_relation(std::string_view token) {
  for (std::size_t i = 0; i < kRelationTypeCount; ++i) {
    const auto rt = static_cast<RelationType>(i);
    if (relation_api_token(rt) == token) return rt;
  }
  return std::nullopt;
}

constexpr std::string_view kFindEntityId = "find_entity_id";
constexpr std::string_view kFindRelated = "find_related_entities";
constexpr std::string_view kExport = "export_relevant_search_results";
constexpr std::string_view kSearch = "search_articles";

}  // namespace

// ---- tools ----

std::vector<std::string> tool_find_entity_id(std::string_view text, const IndexSnapshot& snap) {
  const auto t = trim(text);
  std::vector<std::string> out;
  if (t.empty()) return out;
  if (auto exact = resolve_free_term(t, snap)) out.push_back(*exact);
  for (const auto& s : suggest(t, snap, kEntityIdCap + 1)) {
    if (out.size() >= kEntityIdCap) break;
    if (std::find(out.begin(), out.end(), s.semantic_key) == out.end()) out.push_back(s.semantic_key);
  }
  return out;
}

std::vector<RelatedEntity> tool_find_related_entities(const std::string& entity, std::optional<RelationType> rtype,
                                                      std::optional<EntityType> target_type,
                                                      const IndexSnapshot& snap) {
  if (!is_well_formed_key(entity)) throw Error(ErrorCode::BadKey, "malformed semantic key '" + entity + "'");
  std::vector<RelatedEntity> out;
  for (const auto t : kAllEntityTypes) {
    if (target_type && t != *target_type) continue;
    for (const auto& row : lookup_relations(snap, EntityRef::concrete(entity), rtype, EntityRef::any(t))) {
      const auto& other = row.e1 == entity ? row.e2 : row.e1;
      RelatedEntity r{other, row.rtype, row.pmids.size()};
      if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(std::move(r));
    }
  }
  std::sort(out.begin(), out.end(), [](const RelatedEntity& a, const RelatedEntity& b) {
    if (a.pmid_count != b.pmid_count) return a.pmid_count > b.pmid_count;
    return std::tie(a.semantic_key, a.rtype) < std::tie(b.semantic_key, b.rtype);
  });
  if (out.size() > kRelatedEntityCap) out.resize(kRelatedEntityCap);
  return out;
}

std::vector<Pmid> tool_export_relevant_search_results(const std::string& e1, RelationType rtype,
                                                      const std::string& e2, const IndexSnapshot& snap) {
  for (const auto* k : {&e1, &e2}) {
    if (!is_well_formed_key(*k)) throw Error(ErrorCode::BadKey, "malformed semantic key '" + *k + "'");
  }
  const auto t1 = *key_entity_type(e1);
  const auto t2 = *key_entity_type(e2);
  if (!validate_relation_schema(rtype, t1, t2)) {
    throw Error(ErrorCode::SchemaError, std::string(to_string(rtype)) + " is not defined between " +
                                            std::string(to_string(t1)) + " and " + std::string(to_string(t2)));
  }
  Relation r{0, rtype, e1, e2, {}};
  canonicalize(r);
  std::vector<Pmid> out;
  auto it = snap.relation_store().find(RelationKey{r.rtype, r.e1, r.e2});
  if (it == snap.relation_store().end()) return out;
  for (const auto& [pmid, ev] : it->second) out.push_back(pmid);
  auto year = [&](Pmid p) {
    const auto* m = snap.meta(p);
    return m ? m->pub_year : 0;
  };
  std::sort(out.begin(), out.end(), [&](Pmid a, Pmid b) {
    if (year(a) != year(b)) return year(a) > year(b);
    return a > b;
  });
  if (out.size() > kExportCap) out.resize(kExportCap);
  return out;
}

std::vector<ArticleHit> tool_search_articles(std::string_view query, const IndexSnapshot& snap) {
  const auto result = execute(parse_query(query), snap, {}, Page{0, kSearchCap});
  std::vector<ArticleHit> out;
  for (const auto& h : result.hits) {
    ArticleHit a{h.pmid, h.title, h.pub_year, {}};
    std::set<std::string> keys;
    if (const auto* d = snap.document(h.pmid)) {
      for (const auto& p : d->passages) {
        for (const auto& an : p.annotations) keys.insert(an.semantic_key);
      }
    }
    a.entities.assign(keys.begin(), keys.end());
    out.push_back(std::move(a));
  }
  return out;
}

// ---- chat protocol ----

std::string_view to_string(AgentMode m) {
  switch (m) {
    case AgentMode::NoTool:
      return "no_tool";
    case AgentMode::SearchOnly:
      return "search_only";
    case AgentMode::Grounded:
      return "grounded";
  }
  return "?";
}

namespace {

Json function_schema(std::string_view name, std::string_view description, Json properties,
                     std::vector<std::string> required) {
  return Json{{"type", "function"},
              {"function",
               {{"name", name},
                {"description", description},
                {"parameters", {{"type", "object"}, {"properties", properties}, {"required", required}}}}}};
}

Json relation_enum() {
  Json e = Json::array();
  for (std::size_t i = 0; i < kRelationTypeCount; ++i) e.push_back(relation_api_token(static_cast<RelationType>(i)));
  return e;
}

Json type_enum() {
  Json e = Json::array();
  for (auto t : kAllEntityTypes) e.push_back(std::string(to_string(t)));
  return e;
}

}  // namespace

Json tool_schemas(AgentMode mode) {
  Json tools = Json::array();
  if (mode == AgentMode::Grounded) {
    tools.push_back(function_schema(
        kFindEntityId, "Look up the semantic identifiers (such as @DISEASE_Breast_Cancer) for a free-text entity name.",
        {{"text", {{"type", "string"}, {"description", "entity name as written by the user"}}}}, {"text"}));
    tools.push_back(function_schema(
        kFindRelated,
        "List entities related to a given entity identifier, optionally restricted to one relation type and one "
        "entity type. Returns at most five entities with the number of supporting articles.",
        {{"entity", {{"type", "string"}}},
         {"relation_type", {{"type", "string"}, {"enum", relation_enum()}}},
         {"target_type", {{"type", "string"}, {"enum", type_enum()}}}},
        {"entity"}));
    tools.push_back(function_schema(
        kExport,
        "Return PubMed identifiers of articles with textual evidence for a relation between two entity "
        "identifiers, newest first, at most twenty.",
        {{"e1", {{"type", "string"}}},
         {"relation_type", {{"type", "string"}, {"enum", relation_enum()}}},
         {"e2", {{"type", "string"}}}},
        {"e1", "relation_type", "e2"}));
  } else if (mode == AgentMode::SearchOnly) {
    tools.push_back(function_schema(
        kSearch, "Keyword search over PubMed articles. Returns up to twenty articles with their annotated entities.",
        {{"query", {{"type", "string"}}}}, {"query"}));
  }
  return tools;
}

std::string system_prompt(AgentMode mode) {
  std::string p =
      "You answer biomedical questions. Start your final message with \"Summary:\" and cite the PubMed "
      "articles (PMIDs) that support each statement. After the prose, add a fenced ```claims block holding a "
      "JSON array of {\"subject\", \"rtype\", \"object\", \"pmids\"} with entity identifiers as subject and "
      "object.";
  if (mode == AgentMode::Grounded) {
    p += " Break the question into steps the tools can answer: find the entity identifier, find the related "
         "entities for the relation asked about, then export the articles with evidence for each relation. "
         "Cite only PMIDs returned by the tools.";
  } else if (mode == AgentMode::SearchOnly) {
    p += " Use the article search tool to find evidence and cite only PMIDs it returned.";
  }
  return p;
}

Json encode_chat_request(const ChatRequest& req, const std::string& model) {
  Json msgs = Json::array();
  for (const auto& m : req.messages) {
    Json j{{"role", m.role}};
    if (m.role == "assistant" && !m.tool_calls.empty()) {
      j["content"] = m.content.empty() ? Json(nullptr) : Json(m.content);
      Json calls = Json::array();
      for (const auto& c : m.tool_calls) {
        calls.push_back({{"id", c.id}, {"type", "function"}, {"function", {{"name", c.name}, {"arguments", c.arguments}}}});
      }
      j["tool_calls"] = calls;
    } else {
      j["content"] = m.content;
    }
    if (m.role == "tool") {
      j["tool_call_id"] = m.tool_call_id;
      j["name"] = m.name;
    }
    msgs.push_back(std::move(j));
  }
  Json body{{"messages", msgs}, {"temperature", req.temperature}};
  if (!model.empty()) body["model"] = model;
  if (!req.tools.empty()) {
    body["tools"] = req.tools;
    body["tool_choice"] = "auto";
  }
  return body;
}

ChatReply decode_chat_reply(const Json& body) {
  try {
    const auto& msg = body.at("choices").at(0).at("message");
    ChatReply r;
    if (msg.contains("content") && msg["content"].is_string()) r.content = msg["content"];
    if (msg.contains("tool_calls") && msg["tool_calls"].is_array()) {
      for (const auto& c : msg["tool_calls"]) {
        const auto& f = c.at("function");
        const auto& args = f.at("arguments");
        r.tool_calls.push_back({c.value("id", ""), f.at("name"), args.is_string() ? args.get<std::string>() : args.dump()});
      }
    }
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("not a chat completion: ") + e.what());
  }
}

HttpChatClient::HttpChatClient(std::string endpoint, std::string model, std::string api_key, int timeout_seconds)
    : model_(std::move(model)), api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, url)) {
    throw Error(ErrorCode::ConfigError, "LLM endpoint must be an http(s) URL: '" + endpoint + "'");
  }
  origin_ = m[1];
  path_ = m[2].matched ? std::string(m[2]) : "/";
}

ChatReply HttpChatClient::complete(const ChatRequest& req) {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(timeout_seconds_);
  cli.set_read_timeout(timeout_seconds_);
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
    headers.emplace("api-key", api_key_);
  }
  auto res = cli.Post(path_, headers, encode_chat_request(req, model_).dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::LlmTransportError, origin_ + path_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::LlmTransportError,
                origin_ + path_ + ": HTTP " + std::to_string(res->status) + " " + res->body.substr(0, 200));
  }
  Json body;
  try {
    body = Json::parse(res->body);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("reply is not JSON: ") + e.what());
  }
  return decode_chat_reply(body);
}

// ---- answers ----

std::vector<Claim> parse_claims(std::string_view message) {
  constexpr std::string_view fence = "```claims";
  const auto start = message.find(fence);
  if (start == std::string_view::npos) throw Error(ErrorCode::ClaimParseError, "no ```claims block");
  const auto body_start = start + fence.size();
  const auto end = message.find("```", body_start);
  if (end == std::string_view::npos) throw Error(ErrorCode::ClaimParseError, "unterminated ```claims block");
  Json arr;
  try {
    arr = Json::parse(message.substr(body_start, end - body_start));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ClaimParseError, std::string("claims block is not JSON: ") + e.what());
  }
  if (!arr.is_array()) throw Error(ErrorCode::ClaimParseError, "claims block must be a JSON array");
  std::vector<Claim> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& c = arr[i];
    const auto where = "claim " + std::to_string(i);
    if (!c.is_object()) throw Error(ErrorCode::ClaimParseError, where + " is not an object");
    Claim claim;
    for (auto [field, dst] : {std::pair{"subject", &claim.subject}, std::pair{"object", &claim.object}}) {
      if (!c.contains(field) || !c[field].is_string() || !is_well_formed_key(c[field].get<std::string>())) {
        throw Error(ErrorCode::ClaimParseError, where + ": " + field + " must be a semantic key");
      }
      *dst = c[field];
    }
    const auto rt = c.contains("rtype") && c["rtype"].is_string()
                        ? relation_type_from_string(c["rtype"].get<std::string>())
                        : std::nullopt;
    if (!rt) throw Error(ErrorCode::ClaimParseError, where + ": unknown rtype");
    claim.rtype = *rt;
    if (!c.contains("pmids") || !c["pmids"].is_array()) {
      throw Error(ErrorCode::ClaimParseError, where + ": pmids must be an array");
    }
    for (const auto& p : c["pmids"]) {
      if (p.is_number_unsigned()) {
        claim.pmids.push_back(p.get<Pmid>());
      } else if (p.is_string() && !p.get<std::string>().empty() &&
                 std::all_of(p.get<std::string>().begin(), p.get<std::string>().end(), ::isdigit)) {
        claim.pmids.push_back(std::stoull(p.get<std::string>()));
      } else {
        throw Error(ErrorCode::ClaimParseError, where + ": bad pmid " + p.dump());
      }
    }
    out.push_back(std::move(claim));
  }
  return out;
}

std::string format_claims(const std::vector<Claim>& claims) {
  std::string out = "```claims\n[";
  for (std::size_t i = 0; i < claims.size(); ++i) {
    const auto& c = claims[i];
    Json j{{"subject", c.subject}, {"rtype", relation_api_token(c.rtype)}, {"object", c.object}, {"pmids", c.pmids}};
    out += (i ? ",\n " : "") + j.dump();
  }
  return out + "]\n```";
}

std::set<Pmid> transcript_pmids(const std::vector<ToolCall>& transcript) {
  std::set<Pmid> out;
  for (const auto& c : transcript) {
    if (!c.result.is_array()) continue;
    for (const auto& v : c.result) {
      if (c.name == kExport && v.is_number_unsigned()) out.insert(v.get<Pmid>());
      if (c.name == kSearch && v.is_object() && v.contains("pmid")) out.insert(v["pmid"].get<Pmid>());
    }
  }
  return out;
}

namespace {

const Json& require(const Json& args, const char* field, const std::string& tool) {
  if (!args.contains(field) || !args[field].is_string()) {
    throw Error(ErrorCode::ProtocolError, tool + ": argument '" + field + "' must be a string");
  }
  return args[field];
}

Json run_tool(const std::string& name, const Json& args, const IndexSnapshot& snap) {
  if (name == kFindEntityId) {
    return tool_find_entity_id(require(args, "text", name).get<std::string>(), snap);
  }
  if (name == kFindRelated) {
    const auto entity = require(args, "entity", name).get<std::string>();
    std::optional<RelationType> rtype;
    std::optional<EntityType> target;
    if (args.contains("relation_type") && !args["relation_type"].is_null()) {
      const auto tok = require(args, "relation_type", name).get<std::string>();
      rtype = api_relation(tok);
      if (!rtype) throw Error(ErrorCode::UnknownRelationType, "unknown relation type '" + tok + "'");
    }
    if (args.contains("target_type") && !args["target_type"].is_null()) {
      const auto tok = require(args, "target_type", name).get<std::string>();
      target = entity_type_from_string(tok);
      if (!target) throw Error(ErrorCode::SchemaError, "unknown entity type '" + tok + "'");
    }
    Json out = Json::array();
    for (const auto& r : tool_find_related_entities(entity, rtype, target, snap)) {
      out.push_back({{"semantic_key", r.semantic_key}, {"rtype", relation_api_token(r.rtype)}, {"pmid_count", r.pmid_count}});
    }
    return out;
  }
  if (name == kExport) {
    const auto tok = require(args, "relation_type", name).get<std::string>();
    const auto rtype = api_relation(tok);
    if (!rtype) throw Error(ErrorCode::UnknownRelationType, "unknown relation type '" + tok + "'");
    return tool_export_relevant_search_results(require(args, "e1", name), *rtype, require(args, "e2", name), snap);
  }
  if (name == kSearch) {
    Json out = Json::array();
    for (const auto& a : tool_search_articles(require(args, "query", name).get<std::string>(), snap)) {
      out.push_back({{"pmid", a.pmid}, {"title", a.title}, {"year", a.year}, {"entities", a.entities}});
    }
    return out;
  }
  throw Error(ErrorCode::ProtocolError, "unknown tool '" + name + "'");
}

bool tool_offered(AgentMode mode, const std::string& name) {
  for (const auto& t : tool_schemas(mode)) {
    if (t["function"]["name"] == name) return true;
  }
  return false;
}

}  // namespace

AgentAnswer orchestrate(const std::string& question, ChatClient& llm, const IndexSnapshot& snap,
                        const AgentOptions& opts) {
  if (opts.budget < 3) throw Error(ErrorCode::ConfigError, "tool-call budget must be at least 3");
  AgentAnswer ans;
  ans.question = question;
  ans.mode = opts.mode;

  ChatRequest req;
  req.tools = tool_schemas(opts.mode);
  req.temperature = 0.0;
  req.messages.push_back({"system", system_prompt(opts.mode), {}, {}, {}});
  req.messages.push_back({"user", question, {}, {}, {}});

  for (std::size_t step = 1;; ++step) {
    auto reply = llm.complete(req);
    if (reply.tool_calls.empty()) {
      if (trim(reply.content).empty()) throw Error(ErrorCode::ProtocolError, "empty reply from the model");
      ans.message = reply.content;
      break;
    }
    req.messages.push_back({"assistant", reply.content, reply.tool_calls, {}, {}});
    for (const auto& tc : reply.tool_calls) {
      if (!tool_offered(opts.mode, tc.name)) {
        throw Error(ErrorCode::ProtocolError, "model requested tool '" + tc.name + "' which was not offered");
      }
      Json args;
      try {
        args = Json::parse(tc.arguments.empty() ? "{}" : tc.arguments);
      } catch (const Json::exception&) {
        throw Error(ErrorCode::ProtocolError, tc.name + ": arguments are not JSON");
      }
      if (!args.is_object()) throw Error(ErrorCode::ProtocolError, tc.name + ": arguments must be an object");
      if (ans.transcript.size() >= opts.budget) {
        throw BudgetExhaustedError("tool-call budget of " + std::to_string(opts.budget) + " exhausted",
                                   ans.transcript);
      }
      Json result;
      try {
        result = run_tool(tc.name, args, snap);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::ProtocolError) throw;
        // Argument-level failures go back to the model as the tool's answer.
        result = Json{{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}};
      }
      ans.transcript.push_back({tc.name, args, result, step});
      req.messages.push_back({"tool", result.dump(), {}, tc.id, tc.name});
    }
  }

  const auto text = trim(ans.message);
  if (text.rfind("Summary:", 0) != 0) {
    ans.degraded = true;
    ans.problems.push_back("final message does not start with \"Summary:\"");
  }
  const auto fence = ans.message.find("```claims");
  ans.summary = trim(std::string_view(ans.message).substr(0, fence));
  try {
    ans.claims = parse_claims(ans.message);
    ans.claims_parsed = true;
  } catch (const Error& e) {
    ans.degraded = true;
    ans.problems.push_back(e.what());
  }
  const auto seen = transcript_pmids(ans.transcript);
  std::set<Pmid> fabricated;
  for (const auto& c : ans.claims) {
    for (auto p : c.pmids) {
      if (!seen.count(p)) fabricated.insert(p);
    }
  }
  if (!fabricated.empty()) {
    ans.degraded = true;
    ans.fabricated.assign(fabricated.begin(), fabricated.end());
    std::string list;
    for (auto p : ans.fabricated) list += (list.empty() ? "" : ", ") + std::to_string(p);
    ans.problems.push_back("cites PMIDs no tool returned: " + list);
  }
  return ans;
}

// ---- verification ----

std::string_view to_string(CitationVerdict v) {
  switch (v) {
    case CitationVerdict::Supported:
      return "supported";
    case CitationVerdict::Unsupported:
      return "unsupported";
    case CitationVerdict::Nonexistent:
      return "nonexistent";
  }
  return "?";
}

double CitationReport::precision() const {
  return total() == 0 ? 0.0 : static_cast<double>(supported) / static_cast<double>(total());
}

std::string CitationReport::cell() const { return std::to_string(supported) + " / " + std::to_string(total()); }

namespace {

bool share_sentence(const IndexSnapshot& snap, Pmid pmid, const std::string& a, const std::string& b) {
  const auto* pa = snap.entity(a);
  const auto* pb = snap.entity(b);
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

}  // namespace

CitationReport verify_citations(const AgentAnswer& answer, const IndexSnapshot& snap) {
  if (!answer.claims_parsed) throw Error(ErrorCode::ClaimParseError, "answer has no parsed claims block");
  CitationReport rep;
  for (std::size_t i = 0; i < answer.claims.size(); ++i) {
    const auto& c = answer.claims[i];
    Relation r{0, c.rtype, c.subject, c.object, {}};
    canonicalize(r);
    const auto it = snap.relation_store().find(RelationKey{r.rtype, r.e1, r.e2});
    for (auto pmid : c.pmids) {
      CitationVerdict v;
      if (!snap.document(pmid)) {
        v = CitationVerdict::Nonexistent;
        ++rep.nonexistent;
      } else if ((it != snap.relation_store().end() && it->second.count(pmid)) ||
                 share_sentence(snap, pmid, c.subject, c.object)) {
        v = CitationVerdict::Supported;
        ++rep.supported;
      } else {
        v = CitationVerdict::Unsupported;
        ++rep.unsupported;
      }
      rep.checks.push_back({i, pmid, v});
    }
  }
  return rep;
}

// ---- offline evaluation ----

std::vector<RagQuestion> parse_questions(std::string_view tsv) {
  std::vector<RagQuestion> out;
  std::istringstream in{std::string(tsv)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || trim(line.substr(tab + 1)).empty()) {
      throw Error(ErrorCode::SyntaxError, "questions line " + std::to_string(n) + ": expected qid<TAB>question");
    }
    out.push_back({trim(line.substr(0, tab)), trim(line.substr(tab + 1))});
  }
  return out;
}

std::map<std::string, QuestionPlan> parse_plans(std::string_view json_text) {
  std::map<std::string, QuestionPlan> out;
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::SyntaxError, std::string("plans are not JSON: ") + e.what());
  }
  try {
    for (const auto& [qid, p] : doc.items()) {
      QuestionPlan plan;
      plan.anchor_text = p.at("anchor_text");
      plan.anchor_key = p.at("anchor_key");
      const auto rt = relation_type_from_string(p.at("rtype").get<std::string>());
      const auto tt = entity_type_from_string(p.at("target_type").get<std::string>());
      if (!rt || !tt) throw Error(ErrorCode::SyntaxError, "plan " + qid + ": bad rtype or target_type");
      plan.rtype = *rt;
      plan.target_type = *tt;
      plan.search_query = p.at("search_query");
      if (p.contains("recalled")) plan.recalled = parse_claims("```claims\n" + p["recalled"].dump() + "\n```");
      out.emplace(qid, std::move(plan));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::SyntaxError, std::string("bad plan: ") + e.what());
  }
  return out;
}

// ---- mock model ----

MockLlm::MockLlm(std::map<std::string, QuestionPlan> plans_by_question, Behaviour b, std::vector<Pmid> fabricated)
    : plans_(std::move(plans_by_question)), behaviour_(b), fabricated_(std::move(fabricated)) {}

namespace {

std::size_t assistant_turns(const std::vector<ChatMessage>& msgs) {
  return std::count_if(msgs.begin(), msgs.end(), [](const ChatMessage& m) { return m.role == "assistant"; });
}

// Results of the tool calls answering the latest assistant turn.
std::vector<Json> last_results(const std::vector<ChatMessage>& msgs) {
  std::vector<Json> out;
  for (auto it = msgs.rbegin(); it != msgs.rend() && it->role == "tool"; ++it) out.push_back(Json::parse(it->content));
  std::reverse(out.begin(), out.end());
  return out;
}

ToolRequest call(std::size_t turn, std::size_t i, std::string_view name, const Json& args) {
  return {"call_" + std::to_string(turn) + "_" + std::to_string(i), std::string(name), args.dump()};
}

}  // namespace

ChatReply MockLlm::final_answer(const std::string& prose, std::vector<Claim> claims) const {
  if (behaviour_ == Behaviour::Fabricate && !claims.empty()) {
    for (auto p : fabricated_) claims.front().pmids.push_back(p);
  }
  std::string text = behaviour_ == Behaviour::NoSummary ? prose : "Summary: " + prose;
  std::string cites;
  for (const auto& c : claims) {
    std::string ids;
    for (auto p : c.pmids) ids += (ids.empty() ? "" : ", ") + std::to_string(p);
    cites += "\n- " + display_name(c.subject) + " " + relation_api_token(c.rtype) + " " + display_name(c.object) +
             " (PMIDs " + ids + ")";
  }
  return {text + cites + "\n\n" + format_claims(claims), {}};
}

ChatReply MockLlm::grounded(const QuestionPlan& plan, const std::vector<ChatMessage>& msgs) {
  const auto turn = assistant_turns(msgs);
  const auto token = relation_api_token(plan.rtype);
  if (behaviour_ == Behaviour::OverCall) return {"", {call(turn, 0, kFindEntityId, {{"text", plan.anchor_text}})}};
  if (behaviour_ == Behaviour::UnknownTool) return {"", {call(turn, 0, "delete_records", Json::object())}};

  if (turn == 0) return {"", {call(0, 0, kFindEntityId, {{"text", plan.anchor_text}})}};

  // Anchor chosen from the first tool result.
  std::string anchor;
  for (const auto& m : msgs) {
    if (m.role == "tool" && m.name == kFindEntityId) {
      auto ids = Json::parse(m.content);
      if (ids.is_array() && !ids.empty()) anchor = ids[0];
      break;
    }
  }
  if (anchor.empty()) return final_answer("No identifier was found for " + plan.anchor_text + ".", {});

  if (turn == 1) {
    return {"", {call(1, 0, kFindRelated,
                      {{"entity", anchor}, {"relation_type", token}, {"target_type", to_string(plan.target_type)}})}};
  }
  if (turn == 2) {
    const auto related = last_results(msgs).at(0);
    if (!related.is_array() || related.empty()) {
      return final_answer("No related entities were found for " + display_name(anchor) + ".", {});
    }
    ChatReply r;
    for (std::size_t i = 0; i < related.size(); ++i) {
      r.tool_calls.push_back(call(2, i, kExport,
                                  {{"e1", anchor}, {"relation_type", related[i]["rtype"]}, {"e2", related[i]["semantic_key"]}}));
    }
    return r;
  }
  // turn 3: one claim per related entity with the exported evidence.
  std::vector<Json> related;
  for (const auto& m : msgs) {
    if (m.role == "tool" && m.name == kFindRelated) {
      for (const auto& x : Json::parse(m.content)) related.push_back(x);
    }
  }
  const auto exports = last_results(msgs);
  std::vector<Claim> claims;
  for (std::size_t i = 0; i < related.size() && i < exports.size(); ++i) {
    if (!exports[i].is_array() || exports[i].empty()) continue;
    Relation rel{0, *api_relation(related[i]["rtype"].get<std::string>()), anchor, related[i]["semantic_key"], {}};
    canonicalize(rel);
    claims.push_back({rel.e1, rel.rtype, rel.e2, exports[i].get<std::vector<Pmid>>()});
  }
  return final_answer("Evidence found for " + std::to_string(claims.size()) + " relations of " +
                          display_name(anchor) + ":",
                      std::move(claims));
}

ChatReply MockLlm::search_only(const QuestionPlan& plan, const std::vector<ChatMessage>& msgs) {
  const auto turn = assistant_turns(msgs);
  if (turn == 0) return {"", {call(0, 0, kSearch, {{"query", plan.search_query}})}};
  // Every partner of the right type seen in a hit is taken as related to the
  // anchor; keyword hits say nothing about the relation itself.
  std::vector<Claim> claims;
  const auto results = last_results(msgs);
  for (const auto& hit : results.at(0)) {
    for (const auto& key : hit["entities"]) {
      const auto k = key.get<std::string>();
      if (k == plan.anchor_key || key_entity_type(k) != plan.target_type) continue;
      Relation rel{0, plan.rtype, plan.anchor_key, k, {}};
      canonicalize(rel);
      auto it = std::find_if(claims.begin(), claims.end(),
                             [&](const Claim& c) { return c.subject == rel.e1 && c.object == rel.e2; });
      if (it == claims.end()) {
        claims.push_back({rel.e1, rel.rtype, rel.e2, {}});
        it = claims.end() - 1;
      }
      it->pmids.push_back(hit["pmid"].get<Pmid>());
    }
  }
  return final_answer("Articles found by search suggest these relations of " + plan.anchor_text + ":",
                      std::move(claims));
}

ChatReply MockLlm::complete(const ChatRequest& req) {
  ++calls_;
  temperatures_.push_back(req.temperature);
  std::string question;
  for (const auto& m : req.messages) {
    if (m.role == "user") {
      question = m.content;
      break;
    }
  }
  auto it = plans_.find(question);
  if (it == plans_.end()) return final_answer("I have no information about this question.", {});
  const auto& plan = it->second;

  std::set<std::string> offered;
  for (const auto& t : req.tools) offered.insert(t["function"]["name"].get<std::string>());
  if (offered.count(std::string(kFindEntityId))) return grounded(plan, req.messages);
  if (offered.count(std::string(kSearch))) return search_only(plan, req.messages);
  return final_answer("From memory, relations of " + plan.anchor_text + ":", plan.recalled);
}

std::vector<RagRow> evaluate_rag(const std::vector<RagQuestion>& questions, ChatClient& llm,
                                 const IndexSnapshot& snap, std::size_t budget) {
  std::vector<RagRow> rows;
  for (const auto& q : questions) {
    RagRow row{q.qid, q.question, {}, {}};
    for (auto mode : {AgentMode::NoTool, AgentMode::SearchOnly, AgentMode::Grounded}) {
      CitationReport rep;
      bool degraded = true;
      try {
        const auto ans = orchestrate(q.question, llm, snap, AgentOptions{mode, budget});
        degraded = ans.degraded;
        if (ans.claims_parsed) rep = verify_citations(ans, snap);
      } catch (const Error&) {
        // Counted as an answer with no verifiable citations.
      }
      row.reports[mode] = rep;
      row.degraded[mode] = degraded;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_rag_report(const std::vector<RagRow>& rows) {
  const AgentMode modes[] = {AgentMode::NoTool, AgentMode::SearchOnly, AgentMode::Grounded};
  std::string out = "qid\tquestion";
  for (auto m : modes) out += "\t" + std::string(to_string(m));
  out += "\n";
  std::map<AgentMode, CitationReport> totals;
  for (const auto& r : rows) {
    out += r.qid + "\t" + r.question;
    for (auto m : modes) {
      const auto& rep = r.reports.at(m);
      out += "\t" + rep.cell();
      totals[m].supported += rep.supported;
      totals[m].unsupported += rep.unsupported;
      totals[m].nonexistent += rep.nonexistent;
    }
    out += "\n";
  }
  out += "total\t";
  for (auto m : modes) out += "\t" + totals[m].cell();
  return out + "\n";
}

}  // namespace litsearch
