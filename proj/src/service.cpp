#include "litsearch/service.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "litsearch/bioc.hpp"
#include "litsearch/pubtator_tsv.hpp"
#include "litsearch/querylang.hpp"
#include "litsearch/ranker.hpp"
#include "litsearch/text.hpp"

namespace litsearch {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
std::optional<T> parse_int(std::string_view s) {
  T v{};
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) pos = s.size();
    auto item = trim(s.substr(start, pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = pos + 1;
  }
  return out;
}

std::optional<std::string> param(const ApiRequest& req, const std::string& name) {
  auto it = req.params.find(name);
  if (it == req.params.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> params(const ApiRequest& req, const std::string& name) {
  std::vector<std::string> out;
  auto [lo, hi] = req.params.equal_range(name);
  for (auto it = lo; it != hi; ++it) {
    for (auto& v : split_list(it->second, ',')) out.push_back(std::move(v));
  }
  return out;
}

std::optional<std::string> header(const ApiRequest& req, std::string_view name) {
  for (const auto& [k, v] : req.headers) {
    if (k.size() == name.size() &&
        std::equal(k.begin(), k.end(), name.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
        })) {
      return v;
    }
  }
  return std::nullopt;
}

ApiResponse json_response(const json& body) {
  ApiResponse r;
  r.body = body.dump();
  return r;
}

json span_json(const CharSpan& s) { return json{{"start", s.start}, {"length", s.length}}; }

}  // namespace

// ---- config ----

ApiConfig parse_config(std::string_view text) {
  ApiConfig cfg;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    const auto eq = t.find('=');
    const auto where = "config line " + std::to_string(line_no);
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, where + ": expected key = value");
    const auto key = trim(std::string_view(t).substr(0, eq));
    auto value = trim(std::string_view(t).substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    if (key == "listen") {
      const auto colon = value.rfind(':');
      if (colon == std::string::npos) throw Error(ErrorCode::ConfigError, where + ": listen must be host:port");
      auto port = parse_int<int>(std::string_view(value).substr(colon + 1));
      if (!port) throw Error(ErrorCode::ConfigError, where + ": bad port '" + value.substr(colon + 1) + "'");
      cfg.host = value.substr(0, colon);
      cfg.port = *port;
    } else if (key == "snapshot") {
      cfg.snapshot_path = value;
    } else if (key == "rules") {
      cfg.rules_path = value;
    } else if (key == "page_size_cap") {
      auto v = parse_int<std::size_t>(value);
      if (!v) throw Error(ErrorCode::ConfigError, where + ": page_size_cap must be an integer");
      cfg.page_size_cap = *v;
    } else if (key == "cors_allow") {
      cfg.cors_allowlist = split_list(value, ',');
    } else if (key == "watch_interval_ms") {
      auto v = parse_int<long>(value);
      if (!v || *v <= 0) throw Error(ErrorCode::ConfigError, where + ": watch_interval_ms must be positive");
      cfg.watch_interval = std::chrono::milliseconds(*v);
    } else if (key == "llm_endpoint") {
      cfg.llm.endpoint = value;
    } else if (key == "llm_model") {
      cfg.llm.model = value;
    } else if (key == "llm_api_key") {
      cfg.llm.api_key = value;
    } else {
      throw Error(ErrorCode::ConfigError, where + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

void apply_env_overrides(ApiConfig& cfg, const EnvLookup& env) {
  if (auto v = env("LITSEARCH_LISTEN")) {
    auto c = parse_config("listen = " + *v);
    cfg.host = c.host;
    cfg.port = c.port;
  }
  if (auto v = env("LITSEARCH_SNAPSHOT")) cfg.snapshot_path = *v;
  if (auto v = env("LITSEARCH_LLM_ENDPOINT")) cfg.llm.endpoint = *v;
  if (auto v = env("LITSEARCH_LLM_MODEL")) cfg.llm.model = *v;
  if (auto v = env("LITSEARCH_LLM_API_KEY")) cfg.llm.api_key = *v;
}

void validate_config(const ApiConfig& cfg) {
  if (cfg.page_size_cap < 1 || cfg.page_size_cap > kMaxPageSize) {
    throw Error(ErrorCode::ConfigError, "page_size_cap must be in 1..100");
  }
  if (cfg.port < 1 || cfg.port > 65535) throw Error(ErrorCode::ConfigError, "port out of range");
  if (cfg.snapshot_path.empty()) throw Error(ErrorCode::ConfigError, "no snapshot path configured");
  if (!std::filesystem::exists(cfg.snapshot_path)) {
    throw Error(ErrorCode::ConfigError, "snapshot not found: " + cfg.snapshot_path.string());
  }
  if (!cfg.rules_path.empty() && !std::filesystem::exists(cfg.rules_path)) {
    throw Error(ErrorCode::ConfigError, "rules file not found: " + cfg.rules_path.string());
  }
}

ApiConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str());
  // Relative paths in the file are relative to the file.
  const auto base = path.parent_path();
  if (!cfg.snapshot_path.empty() && cfg.snapshot_path.is_relative()) cfg.snapshot_path = base / cfg.snapshot_path;
  if (!cfg.rules_path.empty() && cfg.rules_path.is_relative()) cfg.rules_path = base / cfg.rules_path;
  apply_env_overrides(cfg, env);
  return cfg;
}

// ---- errors ----

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::EmptyQuery:
    case ErrorCode::BadPage:
    case ErrorCode::BadKey:
    case ErrorCode::UnknownRelationType:
    case ErrorCode::BadLimit:
    case ErrorCode::TooManyIds:
    case ErrorCode::BadFormat:
    case ErrorCode::EmptyBody:
    case ErrorCode::SyntaxError:
    case ErrorCode::SchemaError:
      return 400;
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::TooLarge:
      return 413;
    case ErrorCode::SnapshotLoading:
      return 503;
    default:
      return 500;
  }
}

ApiResponse error_response(const Error& e) {
  json err{{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (const auto* pe = dynamic_cast<const ParseError*>(&e)) err["position"] = pe->position();
  ApiResponse r = json_response(json{{"error", err}});
  r.status = http_status(e.code());
  return r;
}

// ---- api ----

Lexicon lexicon_from_synonyms(const std::map<std::string, SynonymGroup>& groups) {
  Lexicon lex;
  for (const auto& [key, g] : groups) {
    for (const auto& surface : g.surfaces) {
      try {
        lex.add(surface, g.etype, g.identifier, g.preferred_name);
      } catch (const Error&) {
        // A surface claimed by two identifiers of one type: first one wins.
      }
    }
  }
  return lex;
}

Api::Api(ApiConfig cfg, std::shared_ptr<SnapshotHolder> holder, std::vector<TriggerRule> rules)
    : cfg_(std::move(cfg)), holder_(std::move(holder)), rules_(std::move(rules)) {}

std::shared_ptr<const Lexicon> Api::lexicon_for(const SnapPtr& snap) const {
  std::lock_guard lock(lex_mu_);
  if (!lexicon_ || lex_snap_.lock() != snap) {
    lexicon_ = std::make_shared<const Lexicon>(lexicon_from_synonyms(snap->synonyms()));
    lex_snap_ = snap;
  }
  return lexicon_;
}

ApiResponse Api::handle(const ApiRequest& req) const {
  ApiResponse resp;
  try {
    if (req.method == "OPTIONS") {
      resp.status = 204;
      resp.content_type.clear();
    } else {
      const bool known = req.path == "/search" || req.path == "/relations" ||
                         req.path == "/entity/autocomplete" || req.path == "/publications/export" ||
                         req.path == "/annotate";
      const bool post = req.path == "/annotate";
      if (!known || req.method != (post ? "POST" : "GET")) {
        throw Error(ErrorCode::NotFound, "no route for " + req.method + " " + req.path);
      }
      auto snap = holder_ ? holder_->get() : nullptr;
      if (!snap) throw Error(ErrorCode::SnapshotLoading, "the index snapshot is still loading");
      if (req.path == "/search") {
        resp = search(req, *snap);
      } else if (req.path == "/relations") {
        resp = relations(req, *snap);
      } else if (req.path == "/entity/autocomplete") {
        resp = autocomplete(req, *snap);
      } else if (req.path == "/publications/export") {
        resp = export_publications(req, *snap);
      } else {
        resp = annotate(req, snap);
      }
    }
  } catch (const Error& e) {
    resp = error_response(e);
  } catch (const std::exception& e) {
    resp = json_response(json{{"error", {{"code", "InternalError"}, {"message", e.what()}}}});
    resp.status = 500;
  }
  if (auto origin = header(req, "Origin")) {
    const auto& allow = cfg_.cors_allowlist;
    if (std::find(allow.begin(), allow.end(), *origin) != allow.end() ||
        std::find(allow.begin(), allow.end(), "*") != allow.end()) {
      resp.headers["Access-Control-Allow-Origin"] = *origin;
      resp.headers["Vary"] = "Origin";
      if (req.method == "OPTIONS") {
        resp.headers["Access-Control-Allow-Methods"] = "GET, POST, OPTIONS";
        resp.headers["Access-Control-Allow-Headers"] = "Content-Type";
      }
    }
  }
  return resp;
}

ApiResponse Api::search(const ApiRequest& req, const IndexSnapshot& snap) const {
  const auto ast = parse_query(param(req, "text").value_or(""));

  std::size_t page = 1;
  std::size_t page_size = 10;
  if (auto p = param(req, "page")) {
    auto v = parse_int<std::size_t>(trim(*p));
    if (!v || *v == 0) throw Error(ErrorCode::BadPage, "page must be a positive integer");
    page = *v;
  }
  if (auto p = param(req, "page_size")) {
    auto v = parse_int<std::size_t>(trim(*p));
    if (!v || *v == 0 || *v > cfg_.page_size_cap) {
      throw Error(ErrorCode::BadPage, "page_size must be in 1.." + std::to_string(cfg_.page_size_cap));
    }
    page_size = *v;
  }
  if (page > (std::size_t{1} << 32)) throw Error(ErrorCode::BadPage, "page out of range");

  SearchFilters filters;
  for (auto& j : params(req, "filter_journal")) filters.journals.insert(j);
  for (auto& t : params(req, "filter_type")) filters.pub_types.insert(t);
  for (auto& s : params(req, "filter_section")) {
    auto k = section_from_string(s);
    if (!k) throw Error(ErrorCode::BadFormat, "unknown section '" + s + "'");
    filters.sections.insert(*k);
  }
  auto year = [&](const char* name) -> std::optional<int> {
    auto p = param(req, name);
    if (!p) return std::nullopt;
    auto v = parse_int<int>(trim(*p));
    if (!v) throw Error(ErrorCode::BadFormat, std::string(name) + " must be a year");
    return v;
  };
  filters.year_from = year("filter_year_from");
  filters.year_to = year("filter_year_to");

  const auto result = execute(ast, snap, filters, Page{(page - 1) * page_size, page_size});

  json hits = json::array();
  for (const auto& h : result.hits) {
    json hl = json::array();
    for (const auto& s : h.snippet.highlights) hl.push_back(span_json(s));
    hits.push_back({{"pmid", h.pmid},
                    {"tier", std::string(to_string(h.tier))},
                    {"tier_rank", static_cast<int>(h.tier)},
                    {"score", h.score},
                    {"title", h.title},
                    {"journal", h.journal},
                    {"year", h.pub_year},
                    {"section", std::string(to_string(h.matched_section))},
                    {"snippet", h.snippet.text},
                    {"highlights", hl}});
  }
  json histogram = json::object();
  for (const auto& [y, n] : result.histogram) histogram[std::to_string(y)] = n;
  return json_response(json{{"query", print_query(ast)},
                            {"total", result.total},
                            {"page", page},
                            {"page_size", page_size},
                            {"hits", hits},
                            {"facets", result.facets},
                            {"histogram", histogram},
                            {"unknown_entities", result.unknown_entities}});
}

ApiResponse Api::relations(const ApiRequest& req, const IndexSnapshot& snap) const {
  auto e1s = param(req, "e1");
  auto e2s = param(req, "e2");
  if (!e1s || trim(*e1s).empty()) throw Error(ErrorCode::BadKey, "e1 is required");
  if (!e2s || trim(*e2s).empty()) throw Error(ErrorCode::BadKey, "e2 is required");
  const auto e1 = EntityRef::parse(trim(*e1s));
  const auto e2 = EntityRef::parse(trim(*e2s));

  std::optional<RelationType> rtype;
  if (auto t = param(req, "type"); t && !trim(*t).empty()) {
    const auto token = trim(*t);
    for (std::size_t i = 0; i < kRelationTypeCount; ++i) {
      const auto rt = static_cast<RelationType>(i);
      if (relation_api_token(rt) == token) rtype = rt;
    }
    if (!rtype) throw Error(ErrorCode::UnknownRelationType, "unknown relation type '" + token + "'");
  }

  json rows = json::array();
  for (const auto& row : lookup_relations(snap, e1, rtype, e2)) {
    std::vector<Pmid> shown(row.pmids.begin(),
                            row.pmids.begin() + std::min(row.pmids.size(), kMaxRelationPmids));
    rows.push_back({{"rtype", relation_api_token(row.rtype)},
                    {"e1", row.e1},
                    {"e2", row.e2},
                    {"pmid_count", row.pmids.size()},
                    {"pmids", shown},
                    {"pmids_truncated", shown.size() < row.pmids.size()}});
  }
  return json_response(rows);
}

ApiResponse Api::autocomplete(const ApiRequest& req, const IndexSnapshot& snap) const {
  std::size_t limit = 10;
  if (auto p = param(req, "limit")) {
    auto v = parse_int<std::size_t>(trim(*p));
    if (!v || *v < 1 || *v > kMaxAutocompleteLimit) throw Error(ErrorCode::BadLimit, "limit must be in 1..50");
    limit = *v;
  }
  json out = json::array();
  for (const auto& s : suggest(param(req, "query").value_or(""), snap, limit)) {
    out.push_back({{"name", s.name},
                   {"semantic_key", s.semantic_key},
                   {"type", std::string(to_string(s.etype))},
                   {"doc_freq", s.doc_freq},
                   {"matched", s.matched}});
  }
  return json_response(out);
}

ApiResponse Api::export_publications(const ApiRequest& req, const IndexSnapshot& snap) const {
  const auto format = trim(param(req, "format").value_or("biocjson"));
  if (format != "biocjson" && format != "biocxml" && format != "pubtator") {
    throw Error(ErrorCode::BadFormat, "format must be biocjson, biocxml or pubtator");
  }
  const auto ids = params(req, "pmids");
  if (ids.size() > kMaxExportIds) {
    throw Error(ErrorCode::TooManyIds, std::to_string(ids.size()) + " pmids requested, at most 100 allowed");
  }
  std::vector<Document> docs;
  std::vector<std::string> unknown;
  std::set<Pmid> seen;
  for (const auto& id : ids) {
    const auto pmid = parse_int<Pmid>(id);
    const Document* d = pmid ? snap.document(*pmid) : nullptr;
    if (!d) {
      unknown.push_back(id);
    } else if (seen.insert(*pmid).second) {
      docs.push_back(*d);
    }
  }

  ApiResponse r;
  if (!unknown.empty()) {
    std::string joined;
    for (const auto& u : unknown) joined += (joined.empty() ? "" : ",") + u;
    r.headers[kUnknownPmidsHeader] = joined;
  }
  if (format == "pubtator") {
    r.content_type = "text/plain; charset=utf-8";
    if (!docs.empty()) r.body = to_pubtator_tsv(docs, TsvMode::File);
  } else if (format == "biocxml") {
    r.content_type = "application/xml";
    if (!docs.empty()) r.body = serialize_bioc(docs, BiocFormat::Xml);
  } else {
    if (!docs.empty()) r.body = serialize_bioc(docs, BiocFormat::Json);
  }
  return r;
}

ApiResponse Api::annotate(const ApiRequest& req, const SnapPtr& snap) const {
  if (req.body.size() > kMaxAnnotateBytes) {
    throw Error(ErrorCode::TooLarge, "body of " + std::to_string(req.body.size()) + " bytes exceeds 102400");
  }
  if (trim(req.body).empty()) throw Error(ErrorCode::EmptyBody, "request body is empty");
  if (!text::is_valid_utf8(req.body)) throw Error(ErrorCode::BadFormat, "request body is not UTF-8");

  // The text becomes the title passage of a placeholder document, which
  // keeps it inside the sentence-scoped relation rules.
  Document doc;
  doc.pmid = 1;
  doc.title = req.body;
  Passage p;
  p.section = SectionKind::Title;
  p.text = req.body;
  doc.passages.push_back(std::move(p));

  const auto lex = lexicon_for(snap);
  auto corpus = run_pipeline({doc}, *lex, rules_);
  if (!corpus.errors.empty()) throw Error(corpus.errors.front().code, corpus.errors.front().message);
  ApiResponse r;
  r.body = serialize_bioc(corpus.documents, BiocFormat::Json);
  return r;
}

// ---- hot swap and server ----

SnapshotWatcher::SnapshotWatcher(std::filesystem::path path, std::shared_ptr<SnapshotHolder> holder)
    : path_(std::move(path)), holder_(std::move(holder)) {}

bool SnapshotWatcher::poll() {
  std::error_code ec;
  const auto mtime = std::filesystem::last_write_time(path_, ec);
  if (ec) return false;
  const auto size = std::filesystem::file_size(path_, ec);
  if (ec) return false;
  if (mtime_ && *mtime_ == mtime && size_ == size) return false;
  try {
    auto snap = std::make_shared<const IndexSnapshot>(load_snapshot(path_));
    holder_->swap(std::move(snap));
    mtime_ = mtime;
    size_ = size;
    return true;
  } catch (const Error& e) {
    // Usually a half-written replacement; the next poll retries.
    std::cerr << "snapshot reload failed: " << to_string(e.code()) << ": " << e.what() << "\n";
    return false;
  }
}

namespace {
std::atomic<httplib::Server*> g_server{nullptr};

void on_signal(int) { request_stop(); }
}  // namespace

void request_stop() {
  if (auto* s = g_server.load()) s->stop();
}

int serve(const ApiConfig& cfg, const std::vector<TriggerRule>& rules) {
  validate_config(cfg);
  auto holder = std::make_shared<SnapshotHolder>();
  Api api(cfg, holder, rules);

  std::atomic<bool> running{true};
  std::thread watcher([&] {
    SnapshotWatcher w(cfg.snapshot_path, holder);
    while (running.load()) {
      if (w.poll()) std::cerr << "snapshot loaded: generation " << holder->generation() << "\n";
      for (auto waited = std::chrono::milliseconds(0); running.load() && waited < cfg.watch_interval;
           waited += std::chrono::milliseconds(50)) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
    }
  });

  httplib::Server svr;
  svr.set_payload_max_length(kMaxAnnotateBytes * 8);
  auto handler = [&api](const httplib::Request& hreq, httplib::Response& hres) {
    ApiRequest req;
    req.method = hreq.method;
    req.path = hreq.path;
    req.body = hreq.body;
    for (const auto& [k, v] : hreq.params) req.params.emplace(k, v);
    for (const auto& [k, v] : hreq.headers) req.headers.emplace(k, v);
    auto resp = api.handle(req);
    hres.status = resp.status;
    for (const auto& [k, v] : resp.headers) hres.set_header(k, v);
    if (!resp.content_type.empty()) hres.set_content(resp.body, resp.content_type);
  };
  svr.Get(".*", handler);
  svr.Post(".*", handler);
  svr.Options(".*", handler);

  g_server.store(&svr);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << cfg.host << ":" << cfg.port << "\n";
  const bool ok = svr.listen(cfg.host, cfg.port);
  g_server.store(nullptr);
  running.store(false);
  watcher.join();
  if (!ok) {
    std::cerr << "error: IoError: cannot listen on " << cfg.host << ":" << cfg.port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace litsearch
