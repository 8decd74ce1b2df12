#include "litsearch/pubtator_tsv.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <set>
#include <tuple>

#include "litsearch/error.hpp"
#include "litsearch/text.hpp"

namespace litsearch {

namespace {

std::string one_line(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  std::replace(out.begin(), out.end(), '\t', ' ');
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto p = s.find(sep);
    out.push_back(s.substr(0, p));
    if (p == std::string_view::npos) break;
    s.remove_prefix(p + 1);
  }
  return out;
}

std::size_t to_size(std::string_view s, std::size_t line_no) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error(ErrorCode::SyntaxError,
                "line " + std::to_string(line_no) + ": expected integer, got '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

bool tsv_representable(const Document& doc) {
  if (doc.passages.size() > 2) return false;
  return doc.passages.size() < 2 || doc.passages[1].section == SectionKind::Abstract;
}

std::string to_pubtator_tsv(const Document& doc, const std::vector<Relation>& relations, TsvMode mode) {
  std::ostringstream os;
  const auto pmid = std::to_string(doc.pmid);
  std::string abstract_text;
  for (const auto& p : doc.passages) {
    if (p.section == SectionKind::Abstract) {
      abstract_text = p.text;
      break;
    }
  }
  os << pmid << "|t|" << one_line(doc.title) << "\n";
  os << pmid << "|a|" << one_line(abstract_text) << "\n";
  if (!tsv_representable(doc)) {
    os << pmid << "|w|UnsupportedDocument: " << doc.passages.size()
       << " passages; only title and abstract text are carried\n";
  }

  std::vector<const EntityAnnotation*> anns;
  for (const auto& p : doc.passages) {
    for (const auto& a : p.annotations) anns.push_back(&a);
  }
  std::stable_sort(anns.begin(), anns.end(), [](const auto* a, const auto* b) {
    return std::tie(a->span.start, a->span.length, a->semantic_key) <
           std::tie(b->span.start, b->span.length, b->semantic_key);
  });
  for (const auto* a : anns) {
    os << pmid << '\t' << a->span.start << '\t' << a->span.end() << '\t' << one_line(a->text) << '\t'
       << to_string(a->etype) << '\t' << a->identifier.str() << "\n";
  }

  std::vector<const Relation*> rels;
  for (const auto& r : relations) rels.push_back(&r);
  std::stable_sort(rels.begin(), rels.end(), [](const auto* a, const auto* b) {
    return std::tie(a->rtype, a->e1, a->e2) < std::tie(b->rtype, b->e1, b->e2);
  });
  for (const auto* r : rels) {
    os << pmid << '\t'
       << (mode == TsvMode::Api ? relation_api_token(r->rtype) : std::string(to_string(r->rtype)))
       << '\t' << r->e1 << '\t' << r->e2 << "\n";
  }
  return os.str();
}

std::string to_pubtator_tsv(const std::vector<Document>& docs, TsvMode mode) {
  std::string out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i > 0) out += "\n";
    out += to_pubtator_tsv(docs[i], docs[i].relations, mode);
  }
  return out;
}

std::vector<Document> parse_pubtator_tsv(std::string_view input, const KeyResolver& resolver) {
  std::vector<Document> docs;
  Document* cur = nullptr;
  std::size_t line_no = 0;
  std::set<Pmid> lossy;  // records that declared untransported passages

  auto start_doc = [&](Pmid pmid) -> Document& {
    if (!cur || cur->pmid != pmid) {
      docs.emplace_back();
      cur = &docs.back();
      cur->pmid = pmid;
    }
    return *cur;
  };

  for (auto line : split(input, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      cur = nullptr;
      continue;
    }
    const auto bar = line.find('|');
    const auto tab = line.find('\t');
    if (bar != std::string_view::npos && (tab == std::string_view::npos || bar < tab) &&
        line.size() >= bar + 3 && line[bar + 2] == '|') {
      const auto pmid = to_size(line.substr(0, bar), line_no);
      const char kind = line[bar + 1];
      const auto body = std::string(line.substr(bar + 3));
      auto& d = start_doc(pmid);
      if (kind == 't') {
        d.title = body;
        d.passages.insert(d.passages.begin(), Passage{SectionKind::Title, body, 0, {}});
      } else if (kind == 'a') {
        const auto offset = text::char_count(d.title) + 1;
        if (!body.empty()) d.passages.push_back(Passage{SectionKind::Abstract, body, offset, {}});
      } else if (kind == 'w') {
        lossy.insert(pmid);
      } else {
        throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line_no) + ": unknown text line kind");
      }
      continue;
    }
    const auto cols = split(line, '\t');
    if (cols.size() == 6) {
      auto& d = start_doc(to_size(cols[0], line_no));
      EntityAnnotation a;
      const auto start = to_size(cols[1], line_no);
      const auto end = to_size(cols[2], line_no);
      if (end < start) throw Error(ErrorCode::OffsetError, "line " + std::to_string(line_no) + ": end < start");
      a.span = CharSpan{start, end - start};
      a.text = std::string(cols[3]);
      auto etype = entity_type_from_string(cols[4]);
      auto ident = Identifier::parse(cols[5]);
      if (!etype || !ident) {
        throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line_no) + ": bad type or identifier");
      }
      a.etype = *etype;
      a.identifier = *ident;
      std::optional<std::string> key;
      if (resolver) key = resolver(a.identifier, a.etype, a.text);
      a.semantic_key = key ? *key : make_semantic_key(a.etype, a.text);
      auto it = std::find_if(d.passages.begin(), d.passages.end(), [&](const Passage& p) {
        return a.span.start >= p.offset && a.span.end() <= p.offset + p.length();
      });
      if (it == d.passages.end()) {
        // Offsets stay document-global, so a lossy record may list mentions
        // in passages the file does not carry.
        if (lossy.count(d.pmid)) continue;
        throw Error(ErrorCode::OffsetError, "line " + std::to_string(line_no) + ": span outside text");
      }
      it->annotations.push_back(std::move(a));
    } else if (cols.size() == 4) {
      auto& d = start_doc(to_size(cols[0], line_no));
      auto rtype = relation_type_from_string(cols[1]);
      if (!rtype) throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line_no) + ": unknown relation type");
      d.relations.push_back(Relation{d.pmid, *rtype, std::string(cols[2]), std::string(cols[3]), {}});
    } else {
      throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line_no) + ": unexpected column count");
    }
  }
  for (const auto& d : docs) validate_document(d);
  return docs;
}

}  // namespace litsearch
