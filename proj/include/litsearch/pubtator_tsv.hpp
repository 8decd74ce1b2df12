#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "litsearch/docmodel.hpp"

namespace litsearch {

// File mode writes relation types upper-cased (TREAT); API mode lower-cased
// (treat), matching the query-string tokens.
enum class TsvMode { File, Api };

// True when the document has only a title and at most one abstract passage,
// i.e. the tab-delimited layout can carry it losslessly.
bool tsv_representable(const Document& doc);

// PMID|t|title, PMID|a|abstract, one line per annotation
// (PMID start end text type namespace:id, sorted by start) and one per
// relation (PMID rtype e1 e2, sorted by rtype). Documents with further
// passages get a `PMID|w|UnsupportedDocument ...` marker after the abstract.
std::string to_pubtator_tsv(const Document& doc, const std::vector<Relation>& relations,
                            TsvMode mode = TsvMode::File);

// Several documents separated by blank lines, each with its own relations.
std::string to_pubtator_tsv(const std::vector<Document>& docs, TsvMode mode = TsvMode::File);

// Supplies the semantic key for an annotation line (the line itself does not
// carry it). Returning nullopt falls back to the mention text.
using KeyResolver =
    std::function<std::optional<std::string>(const Identifier&, EntityType, std::string_view text)>;

// In a record carrying the `|w|` marker, annotations outside the title and
// abstract are dropped instead of rejected.
std::vector<Document> parse_pubtator_tsv(std::string_view input, const KeyResolver& resolver = {});

}  // namespace litsearch
