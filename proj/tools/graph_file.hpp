#pragma once

#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "qgraph/graph.hpp"

namespace qg::io {

struct GraphFile {
  explicit GraphFile(MetricGraph g) : graph(std::move(g)) {}

  MetricGraph graph;
  std::vector<VertexConditionSpec> conditions;
  BoundaryConditions bc;
  std::vector<std::string> vertex_ids;
  std::vector<std::string> edge_ids;
  Eigen::MatrixXd pair_alpha;  // E x E, zero when absent
  nlohmann::json domain;       // passed through, null when absent
};

// Schema errors raise ValidationError naming the offending JSON pointer.
GraphFile parse_graph(const nlohmann::json& doc);
GraphFile load_graph(const std::string& path);

}  // namespace qg::io
