#include "bdsim/tree_io.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

namespace bdsim {
namespace {

using nlohmann::json;

const char* terminal_name(Terminal t) {
  switch (t) {
    case Terminal::Branch: return "branch";
    case Terminal::Killed: return "killed";
    case Terminal::CensoredHorizon: return "censored_horizon";
    case Terminal::CensoredBudget: return "censored_budget";
  }
  return "?";
}

Terminal terminal_from_name(const std::string& s) {
  if (s == "branch") return Terminal::Branch;
  if (s == "killed") return Terminal::Killed;
  if (s == "censored_horizon") return Terminal::CensoredHorizon;
  if (s == "censored_budget") return Terminal::CensoredBudget;
  throw ConfigError("unknown terminal kind: " + s);
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.dim; ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const json& a) {
  if (!a.is_array() || a.empty() || a.size() > kMaxDim)
    throw ConfigError("position must be an array of 1..3 numbers");
  Vec v;
  v.dim = static_cast<int>(a.size());
  for (int i = 0; i < v.dim; ++i) v.c[static_cast<size_t>(i)] = a[static_cast<size_t>(i)].get<double>();
  return v;
}

}  // namespace

std::string tree_to_json(const MarkedTree& tree) {
  json j;
  if (std::isfinite(tree.horizon)) j["horizon"] = tree.horizon;
  if (tree.hit_particle_cap) j["hit_particle_cap"] = true;
  if (tree.hit_lifetime_budget) j["hit_lifetime_budget"] = true;
  json nodes = json::array();
  for (const TreeNode& n : tree.nodes) {
    json jn;
    jn["parent"] = n.parent;
    jn["rank"] = n.rank;
    jn["birth"] = n.birth;
    jn["death"] = n.death;
    jn["term"] = terminal_name(n.terminal);
    jn["xb"] = vec_to_json(n.x_birth);
    jn["xd"] = vec_to_json(n.x_death);
    if (n.on_spine) jn["spine"] = true;
    if (!n.interior.empty()) {
      json path = json::array();
      for (const PathSample& s : n.interior) {
        json row = json::array();
        row.push_back(s.t);
        for (int i = 0; i < s.x.dim; ++i) row.push_back(s.x[i]);
        path.push_back(std::move(row));
      }
      jn["path"] = std::move(path);
    }
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  return j.dump();
}

MarkedTree tree_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad tree JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array())
    throw ConfigError("tree JSON must be an object with a nodes array");

  MarkedTree tree;
  tree.horizon = j.value("horizon", std::numeric_limits<double>::infinity());
  tree.hit_particle_cap = j.value("hit_particle_cap", false);
  tree.hit_lifetime_budget = j.value("hit_lifetime_budget", false);

  const json& nodes = j["nodes"];
  if (nodes.empty()) throw ConfigError("tree must have at least a root node");
  tree.nodes.reserve(nodes.size());
  for (size_t id = 0; id < nodes.size(); ++id) {
    const json& jn = nodes[id];
    TreeNode n;
    n.parent = jn.at("parent").get<int32_t>();
    n.rank = jn.at("rank").get<int32_t>();
    n.birth = jn.at("birth").get<double>();
    n.death = jn.at("death").get<double>();
    n.terminal = terminal_from_name(jn.at("term").get<std::string>());
    n.x_birth = vec_from_json(jn.at("xb"));
    n.x_death = vec_from_json(jn.at("xd"));
    n.on_spine = jn.value("spine", false);
    if (jn.contains("path")) {
      for (const json& row : jn["path"]) {
        if (!row.is_array() || row.size() < 2)
          throw ConfigError("path rows must be [t, x...]");
        PathSample s;
        s.t = row[0].get<double>();
        s.x.dim = static_cast<int>(row.size()) - 1;
        if (s.x.dim > kMaxDim) throw ConfigError("path row has too many coordinates");
        for (int i = 0; i < s.x.dim; ++i)
          s.x.c[static_cast<size_t>(i)] = row[static_cast<size_t>(i + 1)].get<double>();
        n.interior.push_back(s);
      }
    }

    if (n.death < n.birth) throw ConfigError("node death precedes its birth");
    if (id == 0) {
      if (n.parent != -1) throw ConfigError("root must have parent -1");
    } else {
      if (n.parent < 0 || static_cast<size_t>(n.parent) >= id)
        throw ConfigError("parent index must precede the node (depth-first order)");
      TreeNode& par = tree.nodes[static_cast<size_t>(n.parent)];
      if (par.terminal != Terminal::Branch)
        throw ConfigError("children attached to a non-branching node");
      if (n.rank != static_cast<int32_t>(par.children.size()) + 1)
        throw ConfigError("sibling ranks must arrive in order 1,2,...");
      if (n.birth != par.death)
        throw ConfigError("child birth must equal parent death");
      par.children.push_back(static_cast<int32_t>(id));
    }
    tree.nodes.push_back(std::move(n));
    tree.total_lifetime += tree.nodes.back().lifetime();
  }
  return tree;
}

void write_trees_jsonl(std::ostream& os, const std::vector<MarkedTree>& trees) {
  for (const MarkedTree& t : trees) os << tree_to_json(t) << '\n';
}

std::vector<MarkedTree> read_trees_jsonl(std::istream& is) {
  std::vector<MarkedTree> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    // Artifact dumps open with a header object carrying the resolved config
    // and master seed; it is metadata, not a tree.
    if (line.rfind("{\"config\"", 0) == 0) continue;
    out.push_back(tree_from_json(line));
  }
  return out;
}

}  // namespace bdsim
