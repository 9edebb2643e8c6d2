#pragma once

#include "triproxy/dag.hpp"
#include "triproxy/prob.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace triproxy {

using Json = nlohmann::json;

Json to_json(const VarSpace& v);
VarSpace var_space_from_json(const Json& j);

/// {"axes":[{"name","cardinality","levels"?}], "values":[row-major]}
Json to_json(const ProbTensor& t);
ProbTensor tensor_from_json(const Json& j);

Json to_json(const MarkovKernel& k);

/// {"nodes":[...], "edges":[["A","B"],...], "roles":{"Y":"gpa",...}}
Json to_json(const Dag& g);
Dag dag_from_json(const Json& j);

/// Serialized text is the shortest decimal form that round-trips each double.
std::string dump(const Json& j, int indent = 2);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace triproxy
