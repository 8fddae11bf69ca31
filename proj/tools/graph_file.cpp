#include "graph_file.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "qgraph/errors.hpp"

namespace qg::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& ptr, const std::string& msg) {
  throw ValidationError("graph file " + (ptr.empty() ? std::string("/") : ptr) + ": " + msg);
}

const json& field(const json& obj, const std::string& ptr, const char* key) {
  if (!obj.is_object()) fail(ptr, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(ptr + "/" + key, "missing");
  return *it;
}

double number(const json& v, const std::string& ptr) {
  if (!v.is_number()) fail(ptr, "expected a number");
  return v.get<double>();
}

// ids may be strings or integers
std::string id_of(const json& v, const std::string& ptr) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  fail(ptr, "id must be a string or an integer");
}

Eigen::MatrixXd real_matrix(const json& v, const std::string& ptr, int n) {
  if (!v.is_array() || static_cast<int>(v.size()) != n) fail(ptr, "expected " + std::to_string(n) + " rows");
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    const std::string rp = ptr + "/" + std::to_string(i);
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != n) fail(rp, "expected " + std::to_string(n) + " entries");
    for (int j = 0; j < n; ++j) m(i, j) = number(v[i][j], rp + "/" + std::to_string(j));
  }
  return m;
}

VertexConditionSpec condition(const json& c, const std::string& ptr, int degree) {
  const json& t = field(c, ptr, "type");
  if (!t.is_string()) fail(ptr + "/type", "expected a string");
  const std::string type = t.get<std::string>();
  if (type == "dirichlet") return Dirichlet{};
  if (type == "kirchhoff") return Kirchhoff{};
  if (type == "delta") return Delta{number(field(c, ptr, "strength"), ptr + "/strength")};
  if (type == "robin") {
    Robin r;
    if (c.contains("values")) {
      const json& v = c["values"];
      if (!v.is_array() || static_cast<int>(v.size()) != degree)
        fail(ptr + "/values", "expected one value per incident edge end (" + std::to_string(degree) + ")");
      for (size_t i = 0; i < v.size(); ++i) r.values.push_back(number(v[i], ptr + "/values/" + std::to_string(i)));
    } else {
      r.values.assign(degree, number(field(c, ptr, "value"), ptr + "/value"));
    }
    return r;
  }
  if (type == "custom") {
    Custom cu;
    cu.P = real_matrix(field(c, ptr, "P"), ptr + "/P", degree).cast<cplx>();
    cu.L = real_matrix(field(c, ptr, "L"), ptr + "/L", degree).cast<cplx>();
    return cu;
  }
  fail(ptr + "/type", "unknown condition type '" + type + "'");
}

}  // namespace

GraphFile parse_graph(const json& doc) {
  if (!doc.is_object()) fail("", "expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "edges" && it.key() != "vertices" && it.key() != "pair_interactions" && it.key() != "domain")
      fail("/" + it.key(), "unknown key");
  const json& vs = field(doc, "", "vertices");
  const json& es = field(doc, "", "edges");
  if (!vs.is_array() || vs.empty()) fail("/vertices", "expected a non-empty array");
  if (!es.is_array() || es.empty()) fail("/edges", "expected a non-empty array");

  std::vector<std::string> vertex_ids, edge_ids;
  std::map<std::string, int> vindex;
  for (size_t i = 0; i < vs.size(); ++i) {
    const std::string p = "/vertices/" + std::to_string(i);
    const std::string id = id_of(field(vs[i], p, "id"), p + "/id");
    if (!vindex.emplace(id, static_cast<int>(i)).second) fail(p + "/id", "duplicate vertex id '" + id + "'");
    vertex_ids.push_back(id);
  }
  std::vector<Edge> edges;
  std::map<std::string, int> eindex;
  for (size_t i = 0; i < es.size(); ++i) {
    const std::string p = "/edges/" + std::to_string(i);
    const std::string id = es[i].is_object() && es[i].contains("id") ? id_of(es[i]["id"], p + "/id") : std::to_string(i);
    if (!eindex.emplace(id, static_cast<int>(i)).second) fail(p + "/id", "duplicate edge id '" + id + "'");
    Edge e;
    for (const char* end : {"from", "to"}) {
      const std::string v = id_of(field(es[i], p, end), p + "/" + end);
      auto it = vindex.find(v);
      if (it == vindex.end()) fail(p + "/" + end, "unknown vertex '" + v + "'");
      (std::string(end) == "from" ? e.from : e.to) = it->second;
    }
    e.length = number(field(es[i], p, "length"), p + "/length");
    if (!(e.length > 0) || !std::isfinite(e.length)) fail(p + "/length", "length must be positive");
    edges.push_back(e);
    edge_ids.push_back(id);
  }
  std::vector<int> degree(vs.size(), 0);
  for (const auto& e : edges) ++degree[e.from], ++degree[e.to];
  for (size_t i = 0; i < vs.size(); ++i)
    if (degree[i] == 0) fail("/vertices/" + std::to_string(i), "isolated vertex");
  GraphFile f(MetricGraph(static_cast<int>(vs.size()), edges));
  f.vertex_ids = std::move(vertex_ids);
  f.edge_ids = std::move(edge_ids);
  for (size_t i = 0; i < vs.size(); ++i) {
    const std::string p = "/vertices/" + std::to_string(i);
    const int deg = f.graph.degree(static_cast<int>(i));
    f.conditions.push_back(condition(field(vs[i], p, "condition"), p + "/condition", deg));
  }
  f.bc = assemble_conditions(f.graph, f.conditions);

  const int E = f.graph.num_edges();
  f.pair_alpha = Eigen::MatrixXd::Zero(E, E);
  if (doc.contains("pair_interactions")) {
    const json& a = field(doc["pair_interactions"], "/pair_interactions", "alpha");
    if (a.is_number()) {
      f.pair_alpha.setConstant(a.get<double>());
    } else {
      f.pair_alpha = real_matrix(a, "/pair_interactions/alpha", E);
      if ((f.pair_alpha - f.pair_alpha.transpose()).norm() != 0.0)
        fail("/pair_interactions/alpha", "table must be symmetric");
    }
  }
  if (doc.contains("domain")) {
    f.domain = doc["domain"];
    if (!f.domain.is_object()) fail("/domain", "expected an object");
  }
  return f;
}

GraphFile load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open graph file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ValidationError("graph file '" + path + "': " + e.what());
  }
  return parse_graph(doc);
}

}  // namespace qg::io
