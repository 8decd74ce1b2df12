#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "litsearch/annotator.hpp"
#include "litsearch/error.hpp"
#include "litsearch/index.hpp"

namespace litsearch {

struct LlmSettings {
  std::string endpoint;  // chat-completion URL; empty means offline
  std::string model;
  std::string api_key;
};

struct ApiConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path snapshot_path;
  std::filesystem::path rules_path;  // trigger rules for POST /annotate
  std::size_t page_size_cap = 100;
  std::vector<std::string> cors_allowlist;
  std::chrono::milliseconds watch_interval{2000};
  LlmSettings llm;
};

// key = value lines, '#' comments, optional quotes around values. Keys:
// listen (host:port), snapshot, rules, page_size_cap, cors_allow (comma
// list), watch_interval_ms, llm_endpoint, llm_model, llm_api_key.
// ConfigError on unknown keys or bad values.
ApiConfig parse_config(std::string_view text);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

// LITSEARCH_LISTEN, LITSEARCH_SNAPSHOT, LITSEARCH_LLM_ENDPOINT,
// LITSEARCH_LLM_MODEL and LITSEARCH_LLM_API_KEY override the file.
void apply_env_overrides(ApiConfig& cfg, const EnvLookup& env = process_env);

// page_size_cap in 1..100, port in 1..65535, snapshot path present and
// existing. ConfigError otherwise.
void validate_config(const ApiConfig& cfg);

ApiConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

// The current snapshot. Readers take a shared_ptr and keep it for the whole
// request, so a swap never disturbs a request in flight.
class SnapshotHolder {
 public:
  SnapshotHolder() = default;
  explicit SnapshotHolder(std::shared_ptr<const IndexSnapshot> snap) : snap_(std::move(snap)) {}

  std::shared_ptr<const IndexSnapshot> get() const {
    std::lock_guard lock(mu_);
    return snap_;
  }
  void swap(std::shared_ptr<const IndexSnapshot> snap) {
    std::lock_guard lock(mu_);
    snap_ = std::move(snap);
    ++generation_;
  }
  std::uint64_t generation() const {
    std::lock_guard lock(mu_);
    return generation_;
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const IndexSnapshot> snap_;
  std::uint64_t generation_ = 0;
};

struct ApiRequest {
  std::string method = "GET";
  std::string path;
  std::multimap<std::string, std::string> params;
  std::map<std::string, std::string> headers;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
  std::string body;
};

inline constexpr std::size_t kMaxAnnotateBytes = 100 * 1024;
inline constexpr std::size_t kMaxExportIds = 100;
inline constexpr std::size_t kMaxAutocompleteLimit = 50;
inline constexpr std::size_t kMaxRelationPmids = 100;
inline constexpr const char* kUnknownPmidsHeader = "X-Unknown-Pmids";

int http_status(ErrorCode code);

// {"error": {"code": "...", "message": "...", "position": n?}}
ApiResponse error_response(const Error& e);

// Routes requests to the five endpoints. Every response is a function of the
// current snapshot and the request alone.
class Api {
 public:
  Api(ApiConfig cfg, std::shared_ptr<SnapshotHolder> holder, std::vector<TriggerRule> rules);

  ApiResponse handle(const ApiRequest& req) const;

  const ApiConfig& config() const { return cfg_; }

 private:
  using SnapPtr = std::shared_ptr<const IndexSnapshot>;
  ApiResponse search(const ApiRequest& req, const IndexSnapshot& snap) const;
  ApiResponse relations(const ApiRequest& req, const IndexSnapshot& snap) const;
  ApiResponse autocomplete(const ApiRequest& req, const IndexSnapshot& snap) const;
  ApiResponse export_publications(const ApiRequest& req, const IndexSnapshot& snap) const;
  ApiResponse annotate(const ApiRequest& req, const SnapPtr& snap) const;
  std::shared_ptr<const Lexicon> lexicon_for(const SnapPtr& snap) const;

  ApiConfig cfg_;
  std::shared_ptr<SnapshotHolder> holder_;
  std::vector<TriggerRule> rules_;

  mutable std::mutex lex_mu_;
  mutable std::weak_ptr<const IndexSnapshot> lex_snap_;
  mutable std::shared_ptr<const Lexicon> lexicon_;
};

// Lexicon rebuilt from the snapshot's synonym groups.
Lexicon lexicon_from_synonyms(const std::map<std::string, SynonymGroup>& groups);

// Polls the snapshot file and swaps in a new snapshot when its modification
// time or size changes. A file that fails to load leaves the old snapshot in
// place. Returns true when a swap happened.
class SnapshotWatcher {
 public:
  SnapshotWatcher(std::filesystem::path path, std::shared_ptr<SnapshotHolder> holder);
  bool poll();

 private:
  std::filesystem::path path_;
  std::shared_ptr<SnapshotHolder> holder_;
  std::optional<std::filesystem::file_time_type> mtime_;
  std::uintmax_t size_ = 0;
};

// Blocking HTTP server on cfg.host:cfg.port. The snapshot is loaded in the
// background (requests see 503 SnapshotLoading until then) and watched for
// replacement. SIGINT and SIGTERM stop it cleanly.
int serve(const ApiConfig& cfg, const std::vector<TriggerRule>& rules);

// Asks a running serve() to return; safe from any thread.
void request_stop();

}  // namespace litsearch
