#include "triproxy/io.hpp"

#include "triproxy/error.hpp"

#include <fstream>
#include <sstream>

namespace triproxy {

Json to_json(const VarSpace& v) {
  Json j{{"name", v.name}, {"cardinality", v.cardinality}};
  if (v.levels) j["levels"] = *v.levels;
  return j;
}

VarSpace var_space_from_json(const Json& j) {
  try {
    VarSpace v;
    v.name = j.at("name").get<std::string>();
    v.cardinality = j.at("cardinality").get<std::size_t>();
    if (j.contains("levels") && !j.at("levels").is_null()) v.levels = j.at("levels").get<std::vector<double>>();
    v.validate();
    return v;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad variable description: ") + e.what());
  }
}

Json to_json(const ProbTensor& t) {
  Json axes = Json::array();
  for (const auto& a : t.axes()) axes.push_back(to_json(a));
  return Json{{"axes", axes}, {"values", std::vector<double>(t.values().begin(), t.values().end())}};
}

ProbTensor tensor_from_json(const Json& j) {
  std::vector<VarSpace> axes;
  std::vector<double> values;
  try {
    for (const auto& a : j.at("axes")) axes.push_back(var_space_from_json(a));
    values = j.at("values").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad tensor file: ") + e.what());
  }
  return ProbTensor(std::move(axes), std::move(values));
}

Json to_json(const MarkovKernel& k) {
  Json given = Json::array();
  for (const auto& g : k.given()) given.push_back(to_json(g));
  return Json{{"target", to_json(k.target())},
              {"given", given},
              {"values", std::vector<double>(k.values().begin(), k.values().end())}};
}

std::string dump(const Json& j, int indent) { return j.dump(indent) + "\n"; }

Json to_json(const Dag& g) {
  Json edges = Json::array();
  for (const auto& [a, b] : g.edges()) edges.push_back(Json::array({a, b}));
  Json j{{"nodes", g.nodes()}, {"edges", edges}};
  if (!g.roles().empty()) j["roles"] = g.roles();
  return j;
}

Dag dag_from_json(const Json& j) {
  std::vector<std::string> nodes;
  std::vector<Dag::Edge> edges;
  std::map<std::string, std::string> roles;
  try {
    nodes = j.at("nodes").get<std::vector<std::string>>();
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw Error(ErrorCode::ParseError, "edge must be a [parent, child] pair");
      edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    if (j.contains("roles")) roles = j.at("roles").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad graph file: ") + e.what());
  }
  return Dag(std::move(nodes), std::move(edges), std::move(roles));
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, "'" + path.string() + "': " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace triproxy
