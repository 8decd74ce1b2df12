#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "litsearch/annotator.hpp"
#include "litsearch/bioc.hpp"
#include "litsearch/error.hpp"
#include "litsearch/index.hpp"
#include "litsearch/pubtator_tsv.hpp"
#include "litsearch/querylang.hpp"
#include "litsearch/ragent.hpp"
#include "litsearch/ranker.hpp"
#include "litsearch/retrieval_eval.hpp"
#include "litsearch/service.hpp"

namespace fs = std::filesystem;

namespace litsearch::cli {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::IoError, "cannot open " + path.string());
}

std::vector<Document> read_documents(const fs::path& path, const std::string& format) {
  auto fmt = format;
  if (fmt == "auto") {
    const auto ext = path.extension().string();
    if (ext == ".xml") {
      fmt = "biocxml";
    } else if (ext == ".pubtator" || ext == ".tsv" || ext == ".txt") {
      fmt = "pubtator";
    } else {
      fmt = "biocjson";
    }
  }
  const auto text = read_file(path);
  if (fmt == "biocjson") return parse_bioc(text, BiocFormat::Json);
  if (fmt == "biocxml") return parse_bioc(text, BiocFormat::Xml);
  if (fmt == "pubtator") return parse_pubtator_tsv(text);
  throw Error(ErrorCode::BadFormat, "unknown input format " + format);
}

struct Options {
  // ingest
  std::vector<std::string> inputs;
  std::string input_format = "auto";
  // shared
  std::string input;
  std::string output;
  // annotate
  std::string lexicon;
  std::string rules;
  // index
  std::string base;
  // serve / eval-rag
  std::string config;
  // query
  std::string query;
  std::size_t page = 1;
  std::size_t page_size = 10;
  // eval-*
  std::string table;
  std::string llm = "mock";
  std::string plans;
  std::size_t budget = 16;
};

void cmd_ingest(const Options& o, std::ostream& out) {
  std::vector<Document> docs;
  for (const auto& f : o.inputs) {
    auto batch = read_documents(f, o.input_format);
    docs.insert(docs.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
  }
  for (const auto& d : docs) validate_document(d);
  const auto corpus = make_corpus(std::move(docs));
  write_corpus_file(corpus, o.output);
  out << "documents\t" << corpus.documents.size() << "\n";
}

void cmd_annotate(const Options& o, std::ostream& out, std::ostream& err) {
  require_file(o.input);
  require_file(o.lexicon);
  require_file(o.rules);
  const auto raw = read_corpus_file(o.input);
  const auto lex = Lexicon::load(o.lexicon);
  const auto rules = load_trigger_rules(o.rules);
  const auto corpus = run_pipeline(raw.documents, lex, rules);
  for (const auto& e : corpus.errors) {
    err << "warning: " << to_string(e.code) << ": pmid " << e.pmid << ": " << e.message << "\n";
  }
  write_corpus_file(corpus, o.output);
  out << "documents\t" << corpus.counts.documents << "\n"
      << "abbreviations\t" << corpus.counts.abbreviations << "\n"
      << "annotations\t" << corpus.counts.annotations << "\n"
      << "relations\t" << corpus.counts.relations << "\n"
      << "errors\t" << corpus.errors.size() << "\n";
}

void cmd_index(const Options& o, std::ostream& out) {
  require_file(o.input);
  const auto corpus = read_corpus_file(o.input);
  IndexSnapshot snap;
  if (o.base.empty()) {
    snap = build_index(corpus);
  } else {
    require_file(o.base);
    snap = merge(load_snapshot(o.base), corpus);
  }
  persist(snap, o.output);
  const auto& s = snap.stats();
  out << "documents\t" << s.documents << "\n"
      << "annotations\t" << s.annotations << "\n"
      << "unique_identifiers\t" << s.unique_identifiers << "\n"
      << "relations\t" << s.relations << "\n"
      << "unique_pairs\t" << s.unique_pairs << "\n";
}

void cmd_serve(const Options& o) {
  ApiConfig cfg;
  if (!o.config.empty()) {
    require_file(o.config);
    cfg = load_config(o.config);
  } else {
    apply_env_overrides(cfg);
  }
  if (!o.input.empty()) cfg.snapshot_path = o.input;
  require_file(cfg.snapshot_path);
  std::vector<TriggerRule> rules;
  if (!cfg.rules_path.empty()) {
    require_file(cfg.rules_path);
    rules = load_trigger_rules(cfg.rules_path);
  }
  serve(cfg, rules);
}

void cmd_query(const Options& o, std::ostream& out) {
  require_file(o.input);
  const auto snap = load_snapshot(o.input);
  const auto ast = parse_query(o.query);
  if (o.page == 0) throw Error(ErrorCode::BadPage, "page is 1-based");
  const auto res = execute(ast, snap, {}, Page{(o.page - 1) * o.page_size, o.page_size});
  out << "query\t" << print_query(ast) << "\n"
      << "total\t" << res.total << "\n";
  for (const auto& k : res.unknown_entities) out << "unknown_entity\t" << k << "\n";
  out << "rank\tpmid\ttier\tscore\tyear\ttitle\n";
  std::size_t rank = (o.page - 1) * o.page_size;
  for (const auto& h : res.hits) {
    std::ostringstream score;
    score << std::fixed << std::setprecision(4) << h.score;
    out << ++rank << "\t" << h.pmid << "\t" << to_string(h.tier) << "\t" << score.str() << "\t" << h.pub_year << "\t"
        << h.title << "\n";
  }
}

void cmd_eval_retrieval(const Options& o, std::ostream& out) {
  require_file(o.input);
  require_file(o.table);
  const auto snap = load_snapshot(o.input);
  const auto pairs = parse_pairs(read_file(o.table), snap);
  out << format_retrieval_report(evaluate_retrieval(pairs, snap));
}

void cmd_eval_rag(const Options& o, std::ostream& out) {
  require_file(o.input);
  require_file(o.table);
  const auto snap = load_snapshot(o.input);
  const auto questions = parse_questions(read_file(o.table));
  std::unique_ptr<ChatClient> llm;
  if (o.llm == "mock") {
    const fs::path plans_path = o.plans.empty() ? fs::path(o.table).parent_path() / "plans.json" : fs::path(o.plans);
    require_file(plans_path);
    const auto by_qid = parse_plans(read_file(plans_path));
    std::map<std::string, QuestionPlan> by_question;
    for (const auto& q : questions) {
      auto it = by_qid.find(q.qid);
      if (it != by_qid.end()) by_question[q.question] = it->second;
    }
    llm = std::make_unique<MockLlm>(std::move(by_question));
  } else {
    ApiConfig cfg;
    if (!o.config.empty()) {
      require_file(o.config);
      cfg = parse_config(read_file(o.config));
    }
    apply_env_overrides(cfg);
    if (cfg.llm.endpoint.empty()) {
      throw Error(ErrorCode::ConfigError, "--llm http needs llm_endpoint in the config or LITSEARCH_LLM_ENDPOINT");
    }
    llm = std::make_unique<HttpChatClient>(cfg.llm.endpoint, cfg.llm.model, cfg.llm.api_key);
  }
  out << format_rag_report(evaluate_rag(questions, *llm, snap, o.budget));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entity and relation aware literature search"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "Read BioC or PubTator files into a corpus file");
  ingest->add_option("files", o.inputs, "input documents")->required();
  ingest->add_option("-o,--output", o.output, "corpus file")->required();
  ingest->add_option("--format", o.input_format, "auto, biocjson, biocxml or pubtator")
      ->check(CLI::IsMember({"auto", "biocjson", "biocxml", "pubtator"}));

  auto* annotate = app.add_subcommand("annotate", "Tag entities and extract relations");
  annotate->add_option("corpus", o.input)->required();
  annotate->add_option("--lexicon", o.lexicon)->required();
  annotate->add_option("--rules", o.rules)->required();
  annotate->add_option("-o,--output", o.output)->required();

  auto* index = app.add_subcommand("index", "Build a snapshot from an annotated corpus");
  index->add_option("corpus", o.input)->required();
  index->add_option("-o,--output", o.output)->required();
  index->add_option("--merge", o.base, "existing snapshot to merge the corpus into");

  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("snapshot", o.input);
  serve_cmd->add_option("--config", o.config);

  auto* query = app.add_subcommand("query", "Run one search");
  query->add_option("snapshot", o.input)->required();
  query->add_option("query", o.query)->required();
  query->add_option("--page", o.page);
  query->add_option("--page-size", o.page_size);

  auto* eval_ret = app.add_subcommand("eval-retrieval", "Count and top-20 relevance for entity pairs");
  eval_ret->add_option("snapshot", o.input)->required();
  eval_ret->add_option("pairs", o.table)->required();

  auto* eval_rag = app.add_subcommand("eval-rag", "Citation precision of the agent in three modes");
  eval_rag->add_option("snapshot", o.input)->required();
  eval_rag->add_option("questions", o.table)->required();
  eval_rag->add_option("--llm", o.llm)->check(CLI::IsMember({"mock", "http"}));
  eval_rag->add_option("--plans", o.plans, "mock plans (default: plans.json beside the questions)");
  eval_rag->add_option("--config", o.config, "config carrying llm_* settings");
  eval_rag->add_option("--budget", o.budget, "tool calls per answer");

  std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 wants them reversed
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*ingest) cmd_ingest(o, out);
    if (*annotate) cmd_annotate(o, out, err);
    if (*index) cmd_index(o, out);
    if (*serve_cmd) cmd_serve(o);
    if (*query) cmd_query(o, out);
    if (*eval_ret) cmd_eval_retrieval(o, out);
    if (*eval_rag) cmd_eval_rag(o, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace litsearch::cli
