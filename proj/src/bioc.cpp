#include "litsearch/bioc.hpp"

#include <algorithm>
#include <charconv>
#include <json.hpp>
#include <sstream>

#include "litsearch/error.hpp"
#include "litsearch/text.hpp"

namespace litsearch {

namespace {

using InfonMap = std::vector<std::pair<std::string, std::string>>;

struct SectionInfons {
  SectionKind kind;
  std::string_view section_type;
  std::string_view type;
};

constexpr SectionInfons kSections[] = {
    {SectionKind::Title, "TITLE", "title"},          {SectionKind::Abstract, "ABSTRACT", "abstract"},
    {SectionKind::Intro, "INTRO", "paragraph"},      {SectionKind::Methods, "METHODS", "paragraph"},
    {SectionKind::Results, "RESULTS", "paragraph"},  {SectionKind::Discussion, "DISCUSS", "paragraph"},
    {SectionKind::Other, "OTHER", "paragraph"},
};

const SectionInfons& section_infons(SectionKind k) {
  return *std::find_if(std::begin(kSections), std::end(kSections),
                       [k](const SectionInfons& s) { return s.kind == k; });
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

SectionKind section_from_infons(const std::string* section_type, const std::string* type) {
  if (section_type) {
    const auto st = upper(*section_type);
    for (const auto& s : kSections) {
      if (st == s.section_type) return s.kind;
    }
    if (st == "DISCUSSION") return SectionKind::Discussion;
    if (st == "INTRODUCTION") return SectionKind::Intro;
    if (st == "METHOD") return SectionKind::Methods;
    return SectionKind::Other;
  }
  if (type) {
    const auto t = upper(*type);
    if (t == "TITLE" || t == "FRONT") return SectionKind::Title;
    if (t == "ABSTRACT") return SectionKind::Abstract;
  }
  return SectionKind::Other;
}

const std::string* find_infon(const InfonMap& m, std::string_view key) {
  for (const auto& [k, v] : m) {
    if (k == key) return &v;
  }
  return nullptr;
}

Namespace default_namespace(EntityType t, std::string_view id) {
  switch (t) {
    case EntityType::Gene: return Namespace::NCBIGene;
    case EntityType::Disease:
    case EntityType::Chemical: return Namespace::MeSH;
    case EntityType::Variant: return id.rfind("rs", 0) == 0 ? Namespace::dbSNP : Namespace::HGNC;
    case EntityType::Species: return Namespace::NCBITaxonomy;
    case EntityType::CellLine: return Namespace::Cellosaurus;
  }
  return Namespace::MeSH;
}

std::size_t parse_size(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error(ErrorCode::SchemaError, std::string(what) + " is not a non-negative integer: '" +
                                            std::string(s) + "'");
  }
  return v;
}

// Format-independent intermediate shape shared by the XML and JSON readers.
struct RawAnnotation {
  InfonMap infons;
  std::string text;
  std::vector<std::pair<std::size_t, std::size_t>> locations;
};
struct RawPassage {
  InfonMap infons;
  std::optional<std::size_t> offset;
  std::string text;
  std::vector<RawAnnotation> annotations;
};
struct RawRelation {
  InfonMap infons;
  std::vector<std::pair<std::string, std::string>> nodes;  // (refid, role)
};
struct RawDocument {
  std::string id;
  InfonMap infons;
  std::vector<RawPassage> passages;
  std::vector<RawRelation> relations;
};

EntityAnnotation build_annotation(const RawAnnotation& raw, Pmid pmid) {
  const auto where = "document " + std::to_string(pmid) + ": annotation '" + raw.text + "'";
  const auto* type = find_infon(raw.infons, "type");
  if (!type) throw Error(ErrorCode::SchemaError, where + " has no type infon");
  auto etype = entity_type_from_string(*type);
  if (!etype) throw Error(ErrorCode::SchemaError, where + " has unknown type '" + *type + "'");
  if (raw.locations.size() != 1) {
    throw Error(ErrorCode::SchemaError, where + " must have exactly one location");
  }
  EntityAnnotation a;
  a.etype = *etype;
  a.text = raw.text;
  a.span = CharSpan{raw.locations[0].first, raw.locations[0].second};
  const auto* ident = find_infon(raw.infons, "identifier");
  if (!ident || ident->empty()) throw Error(ErrorCode::SchemaError, where + " has no identifier");
  if (auto parsed = Identifier::parse(*ident)) {
    a.identifier = *parsed;
  } else {
    std::string_view id = *ident;
    if (auto colon = id.find(':'); colon != std::string_view::npos) id = id.substr(colon + 1);
    a.identifier = Identifier{default_namespace(*etype, id), std::string(id)};
  }
  if (const auto* key = find_infon(raw.infons, "semantic_key")) {
    a.semantic_key = *key;
  } else {
    a.semantic_key = make_semantic_key(*etype, raw.text);
  }
  return a;
}

Document build_document(const RawDocument& raw) {
  Document d;
  if (raw.id.empty()) throw Error(ErrorCode::SchemaError, "document without id (pmid)");
  d.pmid = parse_size(raw.id, "document id");
  if (d.pmid == 0) throw Error(ErrorCode::SchemaError, "document pmid must be positive");
  if (const auto* v = find_infon(raw.infons, "journal")) d.journal = *v;
  if (const auto* v = find_infon(raw.infons, "year")) {
    d.pub_year = static_cast<int>(parse_size(*v, "year"));
  }
  if (const auto* v = find_infon(raw.infons, "pmcid")) d.pmcid = *v;
  if (const auto* v = find_infon(raw.infons, "pub_types")) {
    std::string_view s = *v;
    while (!s.empty()) {
      const auto semi = s.find(';');
      auto piece = s.substr(0, semi);
      if (!piece.empty()) d.pub_types.emplace(piece);
      if (semi == std::string_view::npos) break;
      s.remove_prefix(semi + 1);
    }
  }
  for (const auto& rp : raw.passages) {
    Passage p;
    p.section = section_from_infons(find_infon(rp.infons, "section_type"), find_infon(rp.infons, "type"));
    if (!rp.offset) {
      throw Error(ErrorCode::SchemaError, "document " + raw.id + ": passage without offset");
    }
    p.offset = *rp.offset;
    p.text = rp.text;
    for (const auto& ra : rp.annotations) p.annotations.push_back(build_annotation(ra, d.pmid));
    d.passages.push_back(std::move(p));
  }
  if (d.passages.empty() || d.passages.front().section != SectionKind::Title) {
    throw Error(ErrorCode::SchemaError, "document " + raw.id + ": missing title passage");
  }
  d.title = d.passages.front().text;
  for (const auto& rr : raw.relations) {
    Relation r;
    r.pmid = d.pmid;
    const auto* type = find_infon(rr.infons, "type");
    if (!type) throw Error(ErrorCode::SchemaError, "document " + raw.id + ": relation without type");
    auto rt = relation_type_from_string(*type);
    if (!rt) throw Error(ErrorCode::SchemaError, "document " + raw.id + ": unknown relation type " + *type);
    r.rtype = *rt;
    const auto* e1 = find_infon(rr.infons, "role1");
    const auto* e2 = find_infon(rr.infons, "role2");
    if (e1 && e2) {
      r.e1 = *e1;
      r.e2 = *e2;
    } else if (rr.nodes.size() == 2) {
      r.e1 = rr.nodes[0].first;
      r.e2 = rr.nodes[1].first;
    } else {
      throw Error(ErrorCode::SchemaError, "document " + raw.id + ": relation needs two endpoints");
    }
    if (const auto* ev = find_infon(rr.infons, "evidence")) {
      std::string_view s = *ev;
      while (!s.empty()) {
        const auto comma = s.find(',');
        r.evidence.push_back(parse_size(s.substr(0, comma), "relation evidence"));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
      }
    }
    d.relations.push_back(std::move(r));
  }
  validate_document(d);
  return d;
}

InfonMap document_infons(const Document& d) {
  InfonMap m;
  if (!d.journal.empty()) m.emplace_back("journal", d.journal);
  if (d.pub_year != 0) m.emplace_back("year", std::to_string(d.pub_year));
  if (d.pmcid) m.emplace_back("pmcid", *d.pmcid);
  if (!d.pub_types.empty()) {
    std::string joined;
    for (const auto& t : d.pub_types) {
      if (!joined.empty()) joined += ';';
      joined += t;
    }
    m.emplace_back("pub_types", joined);
  }
  return m;
}

InfonMap passage_infons(const Passage& p) {
  const auto& s = section_infons(p.section);
  return {{"section_type", std::string(s.section_type)}, {"type", std::string(s.type)}};
}

InfonMap annotation_infons(const EntityAnnotation& a) {
  return {{"identifier", a.identifier.str()},
          {"type", std::string(to_string(a.etype))},
          {"semantic_key", a.semantic_key}};
}

InfonMap relation_infons(const Relation& r) {
  InfonMap m{{"type", std::string(to_string(r.rtype))}, {"role1", r.e1}, {"role2", r.e2}};
  if (!r.evidence.empty()) {
    std::string ev;
    for (auto e : r.evidence) {
      if (!ev.empty()) ev += ',';
      ev += std::to_string(e);
    }
    m.emplace_back("evidence", ev);
  }
  return m;
}

// ---------------------------------------------------------------- JSON

using ojson = nlohmann::ordered_json;
using njson = nlohmann::json;

ojson infons_to_json(const InfonMap& m) {
  ojson j = ojson::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

InfonMap infons_from_json(const njson& j) {
  InfonMap m;
  if (j.is_null()) return m;
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "infons must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_string()) {
      m.emplace_back(it.key(), it.value().get<std::string>());
    } else if (it.value().is_number_integer()) {
      m.emplace_back(it.key(), std::to_string(it.value().get<long long>()));
    } else if (!it.value().is_null()) {
      m.emplace_back(it.key(), it.value().dump());
    }
  }
  return m;
}

std::size_t json_size(const njson& j, std::string_view what) {
  if (j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0)) {
    return j.get<std::size_t>();
  }
  if (j.is_string()) return parse_size(j.get<std::string>(), what);
  throw Error(ErrorCode::SchemaError, std::string(what) + " must be a non-negative integer");
}

std::string json_string(const njson& j, const char* field) {
  if (!j.contains(field) || j[field].is_null()) return {};
  if (j[field].is_string()) return j[field].get<std::string>();
  if (j[field].is_number_integer()) return std::to_string(j[field].get<long long>());
  throw Error(ErrorCode::SchemaError, std::string(field) + " must be a string");
}

const njson& json_array(const njson& j, const char* field) {
  static const njson kEmpty = njson::array();
  if (!j.contains(field) || j[field].is_null()) return kEmpty;
  if (!j[field].is_array()) throw Error(ErrorCode::SchemaError, std::string(field) + " must be an array");
  return j[field];
}

std::vector<RawDocument> read_json(std::string_view input) {
  njson root;
  try {
    root = njson::parse(input);
  } catch (const njson::parse_error& e) {
    throw Error(ErrorCode::SyntaxError, std::string("malformed BioC JSON: ") + e.what());
  }
  const njson* docs = nullptr;
  njson wrapped;
  if (root.is_array()) {
    docs = &root;
  } else if (root.is_object() && root.contains("documents")) {
    docs = &json_array(root, "documents");
  } else if (root.is_object() && root.contains("passages")) {
    wrapped = njson::array({root});
    docs = &wrapped;
  } else {
    throw Error(ErrorCode::SchemaError, "BioC JSON must be a collection, document list or document");
  }
  std::vector<RawDocument> out;
  for (const auto& jd : *docs) {
    if (!jd.is_object()) throw Error(ErrorCode::SchemaError, "document must be an object");
    RawDocument rd;
    rd.id = json_string(jd, "id");
    rd.infons = infons_from_json(jd.value("infons", njson()));
    for (const auto& jp : json_array(jd, "passages")) {
      RawPassage rp;
      rp.infons = infons_from_json(jp.value("infons", njson()));
      if (jp.contains("offset")) rp.offset = json_size(jp["offset"], "passage offset");
      rp.text = json_string(jp, "text");
      for (const auto& ja : json_array(jp, "annotations")) {
        RawAnnotation ra;
        ra.infons = infons_from_json(ja.value("infons", njson()));
        ra.text = json_string(ja, "text");
        for (const auto& jl : json_array(ja, "locations")) {
          ra.locations.emplace_back(json_size(jl.value("offset", njson()), "location offset"),
                                    json_size(jl.value("length", njson()), "location length"));
        }
        rp.annotations.push_back(std::move(ra));
      }
      rd.passages.push_back(std::move(rp));
    }
    for (const auto& jr : json_array(jd, "relations")) {
      RawRelation rr;
      rr.infons = infons_from_json(jr.value("infons", njson()));
      for (const auto& jn : json_array(jr, "nodes")) {
        rr.nodes.emplace_back(json_string(jn, "refid"), json_string(jn, "role"));
      }
      rd.relations.push_back(std::move(rr));
    }
    out.push_back(std::move(rd));
  }
  return out;
}

std::string write_json(const std::vector<Document>& docs) {
  ojson root;
  root["source"] = "litsearch";
  root["date"] = "";
  root["key"] = "litsearch.key";
  root["infons"] = ojson::object();
  root["documents"] = ojson::array();
  for (const auto& d : docs) {
    ojson jd;
    jd["id"] = std::to_string(d.pmid);
    jd["infons"] = infons_to_json(document_infons(d));
    jd["passages"] = ojson::array();
    std::size_t ann_id = 0;
    for (const auto& p : d.passages) {
      ojson jp;
      jp["infons"] = infons_to_json(passage_infons(p));
      jp["offset"] = p.offset;
      jp["text"] = p.text;
      jp["annotations"] = ojson::array();
      for (const auto& a : p.annotations) {
        ojson ja;
        ja["id"] = std::to_string(++ann_id);
        ja["infons"] = infons_to_json(annotation_infons(a));
        ja["text"] = a.text;
        ja["locations"] = ojson::array({ojson{{"offset", a.span.start}, {"length", a.span.length}}});
        jp["annotations"].push_back(std::move(ja));
      }
      jp["relations"] = ojson::array();
      jd["passages"].push_back(std::move(jp));
    }
    jd["relations"] = ojson::array();
    std::size_t rel_id = 0;
    for (const auto& r : d.relations) {
      ojson jr;
      jr["id"] = "R" + std::to_string(++rel_id);
      jr["infons"] = infons_to_json(relation_infons(r));
      jr["nodes"] = ojson::array({ojson{{"refid", r.e1}, {"role", "e1"}}, ojson{{"refid", r.e2}, {"role", "e2"}}});
      jd["relations"].push_back(std::move(jr));
    }
    root["documents"].push_back(std::move(jd));
  }
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------- XML

struct XmlNode {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<XmlNode> children;
  std::string text;  // concatenated character data of this element

  const std::string* attr(std::string_view key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return &v;
    }
    return nullptr;
  }
  const XmlNode* child(std::string_view n) const {
    for (const auto& c : children) {
      if (c.name == n) return &c;
    }
    return nullptr;
  }
};

class XmlReader {
 public:
  explicit XmlReader(std::string_view in) : in_(in) {}

  XmlNode parse_document() {
    skip_misc();
    if (!starts_with("<")) fail("expected root element");
    XmlNode root = parse_element();
    skip_misc();
    if (pos_ != in_.size()) fail("content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < in_.size(); ++i) {
      if (in_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::SyntaxError, "malformed BioC XML: " + what + " at line " +
                                            std::to_string(line) + ", column " + std::to_string(col));
  }

  bool starts_with(std::string_view s) const { return in_.substr(pos_, s.size()) == s; }

  void skip_ws() {
    while (pos_ < in_.size() && std::isspace(static_cast<unsigned char>(in_[pos_]))) ++pos_;
  }

  void skip_until(std::string_view terminator) {
    const auto end = in_.find(terminator, pos_);
    if (end == std::string_view::npos) fail("unterminated construct");
    pos_ = end + terminator.size();
  }

  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<?")) {
        skip_until("?>");
      } else if (starts_with("<!--")) {
        skip_until("-->");
      } else if (starts_with("<!DOCTYPE")) {
        skip_until(">");
      } else {
        return;
      }
    }
  }

  std::string parse_name() {
    const auto begin = pos_;
    while (pos_ < in_.size()) {
      const char c = in_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' || c == '.') {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == begin) fail("expected a name");
    return std::string(in_.substr(begin, pos_ - begin));
  }

  void append_code_point(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x110000) {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      fail("character reference out of range");
    }
  }

  void parse_reference(std::string& out) {
    ++pos_;  // '&'
    const auto semi = in_.find(';', pos_);
    if (semi == std::string_view::npos || semi - pos_ > 10) fail("bad entity reference");
    const auto ref = in_.substr(pos_, semi - pos_);
    if (ref == "lt") out += '<';
    else if (ref == "gt") out += '>';
    else if (ref == "amp") out += '&';
    else if (ref == "quot") out += '"';
    else if (ref == "apos") out += '\'';
    else if (ref.size() > 1 && ref[0] == '#') {
      unsigned long cp = 0;
      const bool hex = ref[1] == 'x' || ref[1] == 'X';
      const auto digits = ref.substr(hex ? 2 : 1);
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
      if (ec != std::errc() || p != digits.data() + digits.size() || digits.empty()) {
        fail("bad character reference");
      }
      append_code_point(out, cp);
    } else {
      fail("unknown entity '&" + std::string(ref) + ";'");
    }
    pos_ = semi + 1;
  }

  std::string parse_attr_value() {
    if (pos_ >= in_.size() || (in_[pos_] != '"' && in_[pos_] != '\'')) fail("expected quoted attribute");
    const char quote = in_[pos_++];
    std::string out;
    while (pos_ < in_.size() && in_[pos_] != quote) {
      if (in_[pos_] == '<') fail("'<' in attribute value");
      if (in_[pos_] == '&') {
        parse_reference(out);
      } else {
        out.push_back(in_[pos_++]);
      }
    }
    if (pos_ >= in_.size()) fail("unterminated attribute value");
    ++pos_;
    return out;
  }

  XmlNode parse_element() {
    if (++depth_ > 64) fail("nesting too deep");
    ++pos_;  // '<'
    XmlNode node;
    node.name = parse_name();
    for (;;) {
      skip_ws();
      if (pos_ >= in_.size()) fail("unterminated start tag");
      if (starts_with("/>")) {
        pos_ += 2;
        --depth_;
        return node;
      }
      if (in_[pos_] == '>') {
        ++pos_;
        break;
      }
      auto key = parse_name();
      skip_ws();
      if (pos_ >= in_.size() || in_[pos_] != '=') fail("expected '=' after attribute name");
      ++pos_;
      skip_ws();
      node.attrs.emplace_back(std::move(key), parse_attr_value());
    }
    for (;;) {
      if (pos_ >= in_.size()) fail("unterminated element <" + node.name + ">");
      if (starts_with("</")) {
        pos_ += 2;
        const auto close = parse_name();
        if (close != node.name) fail("mismatched closing tag </" + close + "> for <" + node.name + ">");
        skip_ws();
        if (pos_ >= in_.size() || in_[pos_] != '>') fail("expected '>'");
        ++pos_;
        --depth_;
        return node;
      }
      if (starts_with("<!--")) {
        skip_until("-->");
      } else if (starts_with("<![CDATA[")) {
        pos_ += 9;
        const auto end = in_.find("]]>", pos_);
        if (end == std::string_view::npos) fail("unterminated CDATA");
        node.text.append(in_.substr(pos_, end - pos_));
        pos_ = end + 3;
      } else if (starts_with("<?")) {
        skip_until("?>");
      } else if (in_[pos_] == '<') {
        node.children.push_back(parse_element());
      } else if (in_[pos_] == '&') {
        parse_reference(node.text);
      } else {
        node.text.push_back(in_[pos_++]);
      }
    }
  }

  std::string_view in_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

InfonMap infons_from_xml(const XmlNode& n) {
  InfonMap m;
  for (const auto& c : n.children) {
    if (c.name != "infon") continue;
    const auto* key = c.attr("key");
    if (!key) throw Error(ErrorCode::SchemaError, "infon without key attribute");
    m.emplace_back(*key, c.text);
  }
  return m;
}

std::string child_text(const XmlNode& n, std::string_view name) {
  const auto* c = n.child(name);
  return c ? c->text : std::string();
}

std::vector<RawDocument> read_xml(std::string_view input) {
  XmlNode root = XmlReader(input).parse_document();
  if (root.name != "collection") {
    throw Error(ErrorCode::SchemaError, "BioC XML root must be <collection>, got <" + root.name + ">");
  }
  std::vector<RawDocument> out;
  for (const auto& dn : root.children) {
    if (dn.name != "document") continue;
    RawDocument rd;
    rd.id = child_text(dn, "id");
    rd.infons = infons_from_xml(dn);
    for (const auto& pn : dn.children) {
      if (pn.name == "passage") {
        RawPassage rp;
        rp.infons = infons_from_xml(pn);
        if (const auto* off = pn.child("offset")) rp.offset = parse_size(off->text, "passage offset");
        rp.text = child_text(pn, "text");
        for (const auto& an : pn.children) {
          if (an.name != "annotation") continue;
          RawAnnotation ra;
          ra.infons = infons_from_xml(an);
          ra.text = child_text(an, "text");
          for (const auto& ln : an.children) {
            if (ln.name != "location") continue;
            const auto* o = ln.attr("offset");
            const auto* l = ln.attr("length");
            if (!o || !l) throw Error(ErrorCode::SchemaError, "location needs offset and length");
            ra.locations.emplace_back(parse_size(*o, "location offset"), parse_size(*l, "location length"));
          }
          rp.annotations.push_back(std::move(ra));
        }
        rd.passages.push_back(std::move(rp));
      } else if (pn.name == "relation") {
        RawRelation rr;
        rr.infons = infons_from_xml(pn);
        for (const auto& nn : pn.children) {
          if (nn.name != "node") continue;
          const auto* refid = nn.attr("refid");
          const auto* role = nn.attr("role");
          rr.nodes.emplace_back(refid ? *refid : "", role ? *role : "");
        }
        rd.relations.push_back(std::move(rr));
      }
    }
    out.push_back(std::move(rd));
  }
  return out;
}

std::string xml_escape(std::string_view s, bool attribute) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
          break;
        }
        [[fallthrough]];
      default: out.push_back(c);
    }
  }
  return out;
}

void write_infons(std::ostringstream& os, const InfonMap& m, std::string_view indent) {
  for (const auto& [k, v] : m) {
    os << indent << "<infon key=\"" << xml_escape(k, true) << "\">" << xml_escape(v, false) << "</infon>\n";
  }
}

std::string write_xml(const std::vector<Document>& docs) {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<!DOCTYPE collection SYSTEM \"BioC.dtd\">\n"
     << "<collection>\n"
     << "  <source>litsearch</source>\n"
     << "  <date></date>\n"
     << "  <key>litsearch.key</key>\n";
  for (const auto& d : docs) {
    os << "  <document>\n"
       << "    <id>" << d.pmid << "</id>\n";
    write_infons(os, document_infons(d), "    ");
    std::size_t ann_id = 0;
    for (const auto& p : d.passages) {
      os << "    <passage>\n";
      write_infons(os, passage_infons(p), "      ");
      os << "      <offset>" << p.offset << "</offset>\n"
         << "      <text>" << xml_escape(p.text, false) << "</text>\n";
      for (const auto& a : p.annotations) {
        os << "      <annotation id=\"" << ++ann_id << "\">\n";
        write_infons(os, annotation_infons(a), "        ");
        os << "        <location offset=\"" << a.span.start << "\" length=\"" << a.span.length << "\"/>\n"
           << "        <text>" << xml_escape(a.text, false) << "</text>\n"
           << "      </annotation>\n";
      }
      os << "    </passage>\n";
    }
    std::size_t rel_id = 0;
    for (const auto& r : d.relations) {
      os << "    <relation id=\"R" << ++rel_id << "\">\n";
      write_infons(os, relation_infons(r), "      ");
      os << "      <node refid=\"" << xml_escape(r.e1, true) << "\" role=\"e1\"/>\n"
         << "      <node refid=\"" << xml_escape(r.e2, true) << "\" role=\"e2\"/>\n"
         << "    </relation>\n";
    }
    os << "  </document>\n";
  }
  os << "</collection>\n";
  return os.str();
}

}  // namespace

std::vector<Document> parse_bioc(std::string_view input, BiocFormat format) {
  auto raws = format == BiocFormat::Json ? read_json(input) : read_xml(input);
  std::vector<Document> docs;
  docs.reserve(raws.size());
  for (const auto& r : raws) docs.push_back(build_document(r));
  return docs;
}

std::string serialize_bioc(const std::vector<Document>& docs, BiocFormat format) {
  return format == BiocFormat::Json ? write_json(docs) : write_xml(docs);
}

}  // namespace litsearch
