#include "gccsolver/model_io.hpp"

#include <fstream>
#include <sstream>

#include "gccsolver/errors.hpp"
#include "json.hpp"

namespace gccsolver {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ModelError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ModelError(where + ": bad field '" + key + "': " + e.what());
  }
}

json node_list(std::span<const NodeId> nodes) {
  json out = json::array();
  for (NodeId v : nodes) out.push_back(v);
  return out;
}

StoppingRule rule_from_ids(const json& ids, const EventTree& tree, const char* who) {
  if (!ids.is_array()) throw ModelError(std::string("rules: '") + who + "' must be an array of node ids");
  std::vector<NodeId> nodes;
  for (const auto& x : ids) {
    if (!x.is_number_unsigned() || x.get<std::uint64_t>() >= tree.size()) {
      throw ModelError(std::string("rules: '") + who + "' lists an unknown node id");
    }
    nodes.push_back(x.get<NodeId>());
  }
  return StoppingRule::from_nodes(tree, nodes);
}

}  // namespace

const AdaptedProcess& ModelFile::process(const std::string& name) const {
  auto it = processes.find(name);
  if (it == processes.end()) throw ModelError("model has no process named '" + name + "'");
  return it->second;
}

const TerminalClaim& ModelFile::claim(const std::string& name) const {
  auto it = claims.find(name);
  if (it == claims.end()) throw ModelError("model has no terminal claim named '" + name + "'");
  return it->second;
}

namespace {

ModelFile parse_model(std::istream& is) {
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ModelError(std::string("model: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ModelError("model: top level must be an object");
  const auto schema = field<std::string>(doc, "schema", "model");
  if (schema != kModelSchema) throw ModelError("model: unsupported schema '" + schema + "'");
  const auto dim = field<std::size_t>(doc, "dim", "model");
  const auto horizon = field<double>(doc, "horizon_years", "model");
  if (!doc.contains("nodes")) throw ModelError("model: missing field 'nodes'");
  const json& nodes = doc.at("nodes");
  if (!nodes.is_array() || nodes.empty()) throw ModelError("model: 'nodes' must be a non-empty array");

  // ids must be 0..n-1; entries may come in any order
  const std::size_t n = nodes.size();
  std::vector<const json*> by_id(n, nullptr);
  for (const auto& node : nodes) {
    const auto id = field<std::size_t>(node, "id", "model node");
    if (id >= n || by_id[id]) throw ModelError("model: node ids must be unique and cover 0.." + std::to_string(n - 1));
    by_id[id] = &node;
  }
  EventTree::Builder builder(dim, horizon);
  for (std::size_t id = 0; id < n; ++id) {
    builder.add_node(field<int>(*by_id[id], "time", "model node " + std::to_string(id)));
  }
  for (std::size_t id = 0; id < n; ++id) {
    const json& node = *by_id[id];
    const std::string where = "model node " + std::to_string(id);
    if (!node.contains("parent") || node.at("parent").is_null()) continue;
    const auto parent = field<std::size_t>(node, "parent", where);
    if (parent >= n) throw ModelError(where + ": unknown parent");
    const auto prob = field<double>(node, "prob", where);
    auto dS = node.contains("dS") ? field<std::vector<double>>(node, "dS", where) : std::vector<double>{};
    if (dS.size() != dim) throw ModelError(where + ": dS must have " + std::to_string(dim) + " entries");
    builder.add_branch(static_cast<NodeId>(parent), static_cast<NodeId>(id), prob, dS);
  }
  EventTree tree = [&] {
    try {
      return std::move(builder).build();
    } catch (const ContractViolation& e) {
      throw ModelError(std::string("model: ") + e.what());
    }
  }();
  require_valid(tree);

  ModelFile model{tree, {}, {}};
  if (doc.contains("processes")) {
    for (const auto& p : doc.at("processes")) {
      const auto name = field<std::string>(p, "name", "model process");
      auto values = field<std::vector<double>>(p, "values", "process " + name);
      if (values.size() != tree.size()) throw ModelError("process " + name + ": expected one value per node");
      try {
        model.processes.emplace(name, AdaptedProcess(tree, std::move(values)));
      } catch (const ContractViolation& e) {
        throw ModelError("process " + name + ": " + e.what());
      }
    }
  }
  if (doc.contains("terminal_claims")) {
    for (const auto& c : doc.at("terminal_claims")) {
      const auto name = field<std::string>(c, "name", "model claim");
      auto values = field<std::vector<double>>(c, "values", "claim " + name);
      if (values.size() != tree.terminals().size()) {
        throw ModelError("claim " + name + ": expected one value per terminal node");
      }
      try {
        model.claims.emplace(name, TerminalClaim(tree, std::move(values)));
      } catch (const ContractViolation& e) {
        throw ModelError("claim " + name + ": " + e.what());
      }
    }
  }
  return model;
}

}  // namespace

ModelFile read_model(std::istream& is) {
  try {
    return parse_model(is);
  } catch (const ContractViolation& e) {
    throw ModelError(std::string("model: ") + e.what());
  } catch (const json::exception& e) {
    throw ModelError(std::string("model: ") + e.what());
  }
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path.string());
  return read_model(in);
}

void write_model(std::ostream& os, const ModelFile& model) {
  const EventTree& tree = model.tree;
  if (tree.recombining()) throw ContractViolation("write_model: recombining lattices have no parent list");
  json doc;
  doc["schema"] = kModelSchema;
  doc["dim"] = tree.dim();
  doc["horizon_years"] = tree.horizon();
  json nodes = json::array();
  for (NodeId v = 0; v < tree.size(); ++v) {
    json node{{"id", v}, {"time", tree.time_index(v)}};
    if (v == tree.root()) {
      node["parent"] = nullptr;
    } else {
      const EdgeId e = tree.in_edge(v);
      node["parent"] = tree.parent(v);
      node["prob"] = tree.edge_probs()[e];
      const auto inc = tree.edge_increment(e);
      node["dS"] = std::vector<double>(inc.begin(), inc.end());
    }
    nodes.push_back(std::move(node));
  }
  doc["nodes"] = std::move(nodes);
  json processes = json::array();
  for (const auto& [name, p] : model.processes) {
    processes.push_back({{"name", name}, {"values", std::vector<double>(p.values().begin(), p.values().end())}});
  }
  doc["processes"] = std::move(processes);
  json claims = json::array();
  for (const auto& [name, c] : model.claims) {
    claims.push_back({{"name", name}, {"values", std::vector<double>(c.values().begin(), c.values().end())}});
  }
  doc["terminal_claims"] = std::move(claims);
  os << doc.dump(2) << '\n';
}

RulePair read_rules(std::istream& is, const EventTree& tree) {
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ModelError(std::string("rules: invalid JSON: ") + e.what());
  }
  if (doc.contains("schema") && doc.at("schema") != kRulesSchema) throw ModelError("rules: unsupported schema");
  RulePair out;
  if (doc.contains("buyer")) out.buyer = rule_from_ids(doc.at("buyer"), tree, "buyer");
  if (doc.contains("seller")) out.seller = rule_from_ids(doc.at("seller"), tree, "seller");
  return out;
}

RulePair load_rules(const std::filesystem::path& path, const EventTree& tree) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open rules file " + path.string());
  return read_rules(in, tree);
}

void write_rules(std::ostream& os, const StoppingRule& buyer, const StoppingRule& seller) {
  json doc{{"schema", kRulesSchema},
           {"buyer", node_list(buyer.first_stop_nodes())},
           {"seller", node_list(seller.first_stop_nodes())}};
  os << doc.dump(2) << '\n';
}

void write_equilibrium_report(std::ostream& os, const NashResult& result, const NepReport& verification) {
  json doc;
  doc["converged"] = result.converged;
  doc["first_mover"] = to_string(result.first_mover);
  doc["half_steps"] = result.trace.size();
  doc["theoretical_cap"] = result.theoretical_cap;
  doc["buyer_rule"] = node_list(result.buyer_rule.first_stop_nodes());
  doc["seller_rule"] = node_list(result.seller_rule.first_stop_nodes());
  doc["buyer_stops_at_root"] = result.buyer_rule.marked(result.buyer_rule.tree().root());
  doc["seller_stops_at_root"] = result.seller_rule.marked(result.seller_rule.tree().root());
  doc["j_buyer"] = result.j_buyer;
  doc["j_seller"] = result.j_seller;
  doc["verification"] = {{"method", "snell"},
                         {"buyer_gap", verification.buyer_gap},
                         {"seller_gap", verification.seller_gap},
                         {"tolerance", verification.tolerance},
                         {"is_nep", verification.is_nep()}};
  os << doc.dump(2) << '\n';
}

void write_verification_report(std::ostream& os, const StoppingRule& buyer, const StoppingRule& seller,
                               const NepReport& snell, const std::optional<NepReport>& exhaustive) {
  json doc;
  doc["buyer_rule"] = node_list(buyer.first_stop_nodes());
  doc["seller_rule"] = node_list(seller.first_stop_nodes());
  doc["j_buyer"] = snell.j_buyer;
  doc["j_seller"] = snell.j_seller;
  doc["snell"] = {{"buyer_gap", snell.buyer_gap}, {"seller_gap", snell.seller_gap}, {"is_nep", snell.is_nep()}};
  if (exhaustive) {
    json ex{{"buyer_gap", exhaustive->buyer_gap},
            {"seller_gap", exhaustive->seller_gap},
            {"is_nep", exhaustive->is_nep()}};
    if (exhaustive->buyer_deviation) ex["buyer_best_rule"] = node_list(exhaustive->buyer_deviation->first_stop_nodes());
    if (exhaustive->seller_deviation) {
      ex["seller_best_rule"] = node_list(exhaustive->seller_deviation->first_stop_nodes());
    }
    doc["exhaustive"] = std::move(ex);
  } else {
    doc["exhaustive"] = nullptr;
  }
  doc["tolerance"] = snell.tolerance;
  doc["is_nep"] = snell.is_nep() && (!exhaustive || exhaustive->is_nep());
  os << doc.dump(2) << '\n';
}

}  // namespace gccsolver
