#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "litsearch/docmodel.hpp"

namespace litsearch {

enum class BiocFormat { Xml, Json };

// Reads a BioC collection. Annotation identifiers, types and semantic keys
// travel in `infons`; relations are document-level BioC relations.
// Throws SyntaxError, SchemaError or OffsetError.
std::vector<Document> parse_bioc(std::string_view input, BiocFormat format);

// Deterministic writer; parse_bioc(serialize_bioc(d)) == d for valid docs.
std::string serialize_bioc(const std::vector<Document>& docs, BiocFormat format);

}  // namespace litsearch
