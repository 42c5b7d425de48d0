#pragma once

#include "mst/dataset.hpp"
#include "mst/leaf_models.hpp"
#include "mst/tree.hpp"

#include <json.hpp>

#include <string>
#include <string_view>

namespace mst {

inline constexpr std::string_view kTreeFormat = "mst-v1";

nlohmann::json schema_to_json(const ContextSchema& schema);
ContextSchema schema_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const LeafModel& model);
LeafModel model_from_json(const nlohmann::json& j);

nlohmann::json tree_to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);

/// mst-v1 document. Reals are written in shortest round-trip form.
std::string serialize(const Tree& tree);
/// Throws DecodeError on malformed input or a format/version mismatch.
Tree deserialize(std::string_view document);

/// Parses JSON text and checks the "format" tag, mapping parse failures to DecodeError.
nlohmann::json parse_document(std::string_view document, std::string_view expected_format);

} // namespace mst
