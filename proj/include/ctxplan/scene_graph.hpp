// Copyright 2026 The ctxplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// In-memory typed knowledge graph: entity, relation and attribute nodes
// connected by role and owns edges, plus a conjunctive pattern matcher.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <compare>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ctxplan::kg {

class OntologyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class GraphIntegrityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class PatternError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class NodeKind { kEntity, kRelation, kAttribute };

inline const char* ToString(NodeKind kind) {
  switch (kind) {
    case NodeKind::kEntity: return "entity";
    case NodeKind::kRelation: return "relation";
    case NodeKind::kAttribute: return "attribute";
  }
  return "?";
}

struct NodeId {
  std::uint64_t value = 0;
  auto operator<=>(const NodeId&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, NodeId id) {
  return os << '#' << id.value;
}

using Value = std::variant<bool, std::int64_t, double, std::string>;

inline std::string ToString(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return '"' + x + '"';
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else {
          std::ostringstream os;
          os.precision(17);
          os << x;
          return os.str();
        }
      },
      v);
}

inline std::optional<double> AsNumber(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::nullopt;
}

struct EntityType {
  std::string name;
  std::optional<std::string> parent;
};

/// Fixed traffic ontology. Entity types form a tree under "entity".
class Ontology {
 public:
  Ontology() {
    AddEntityType("entity", std::nullopt);
    AddEntityType("physical_entity", "entity");
    AddEntityType("ego", "physical_entity");
    AddEntityType("object", "physical_entity");
    AddEntityType("vehicle", "object");
    AddEntityType("car", "vehicle");
    AddEntityType("vru", "object");
    AddEntityType("pedestrian", "vru");
    AddEntityType("artificial_object", "object");
    AddEntityType("road_part", "entity");
    AddEntityType("lane", "road_part");
    AddEntityType("lane_marking", "entity");

    relation_types_ = {"is_on",         "lane_boundary",          "is_crossing",
                       "has_risk_level", "crossing_acceptability"};
    attribute_names_ = {
        "lane_marking_type", "classification_certainty", "collision_probability",
        "length",            "width",                    "height",
        "x",                 "y",                        "heading",
        "speed",             "longitudinal_offset",      "lateral_offset",
        "distance",          "oncoming",                 "track_id",
        "side",              "acceptability",            "priority",
        "risk_level",        "poly_c0",                  "poly_c1",
        "poly_c2",           "poly_c3",                  "lane_width"};
  }

  static const Ontology& Default() {
    static const Ontology instance;
    return instance;
  }

  bool IsEntityType(const std::string& name) const {
    return entity_types_.contains(name);
  }
  bool IsRelationType(const std::string& name) const {
    return relation_types_.contains(name);
  }
  bool IsAttribute(const std::string& name) const {
    return attribute_names_.contains(name);
  }

  /// True if `type` equals `ancestor` or derives from it. Relation types only
  /// match themselves.
  bool IsA(const std::string& type, const std::string& ancestor) const {
    std::optional<std::string> cur = type;
    while (cur) {
      if (*cur == ancestor) return true;
      auto it = entity_types_.find(*cur);
      if (it == entity_types_.end()) return false;
      cur = it->second.parent;
    }
    return false;
  }

  const std::map<std::string, EntityType>& entity_types() const {
    return entity_types_;
  }

 private:
  void AddEntityType(std::string name, std::optional<std::string> parent) {
    entity_types_[name] = EntityType{name, std::move(parent)};
  }

  std::map<std::string, EntityType> entity_types_;
  std::set<std::string> relation_types_;
  std::set<std::string> attribute_names_;
};

struct GraphNode {
  NodeId id;
  NodeKind kind = NodeKind::kEntity;
  std::string type;
  std::optional<Value> value;  // attributes only
};

struct EdgeLabel {
  enum class Kind { kRole, kOwns };
  Kind kind = Kind::kOwns;
  std::string role;  // empty for owns

  static EdgeLabel Role(std::string name) { return {Kind::kRole, std::move(name)}; }
  static EdgeLabel Owns() { return {Kind::kOwns, {}}; }
  bool operator==(const EdgeLabel&) const = default;
};

struct GraphEdge {
  NodeId from;
  NodeId to;
  EdgeLabel label;
};

using AttributeList = std::vector<std::pair<std::string, Value>>;
using RoleList = std::vector<std::pair<std::string, NodeId>>;

// ---------------------------------------------------------------------------
// Patterns

enum class CmpOp { kEq, kNe, kLt, kLe, kGt, kGe };

/// var is an instance of type (or a subtype).
struct Isa {
  std::string var;
  std::string type;
};

/// var owns an attribute `attribute` whose value compares true against value.
struct Has {
  std::string var;
  std::string attribute;
  CmpOp op = CmpOp::kEq;
  Value value;
};

/// A relation of relation_type with the given role players. `var` optionally
/// binds the relation node itself.
struct Rel {
  std::string relation_type;
  std::vector<std::pair<std::string, std::string>> roles;  // role -> variable
  std::string var;
};

using Conjunct = std::variant<Isa, Has, Rel>;

struct Pattern {
  std::vector<Conjunct> conjuncts;
  // Negation as failure: each sub-pattern must have no extension of the
  // current binding.
  std::vector<Pattern> absent;

  Pattern& Add(Conjunct c) {
    conjuncts.push_back(std::move(c));
    return *this;
  }
  Pattern& NotExists(Pattern p) {
    absent.push_back(std::move(p));
    return *this;
  }
};

using Binding = std::map<std::string, NodeId>;

inline bool Compare(const Value& lhs, CmpOp op, const Value& rhs) {
  const auto a = AsNumber(lhs);
  const auto b = AsNumber(rhs);
  int cmp = 0;
  if (a && b) {
    if (std::isnan(*a) || std::isnan(*b)) return op == CmpOp::kNe;
    cmp = (*a < *b) ? -1 : (*a > *b ? 1 : 0);
  } else if (lhs.index() == rhs.index()) {
    if (const auto* s = std::get_if<std::string>(&lhs)) {
      const int c = s->compare(std::get<std::string>(rhs));
      cmp = c < 0 ? -1 : (c > 0 ? 1 : 0);
    } else {
      const bool x = std::get<bool>(lhs), y = std::get<bool>(rhs);
      cmp = x == y ? 0 : (x ? 1 : -1);
    }
  } else {
    return op == CmpOp::kNe;
  }
  switch (op) {
    case CmpOp::kEq: return cmp == 0;
    case CmpOp::kNe: return cmp != 0;
    case CmpOp::kLt: return cmp < 0;
    case CmpOp::kLe: return cmp <= 0;
    case CmpOp::kGt: return cmp > 0;
    case CmpOp::kGe: return cmp >= 0;
  }
  return false;
}

// ---------------------------------------------------------------------------

struct RelationView {
  NodeId id;
  std::map<std::string, Value> attributes;
};

/// Typed property graph. Mutations bump `generation`; queries are const and
/// may run concurrently between mutations.
class SceneGraph {
 public:
  explicit SceneGraph(const Ontology& ontology = Ontology::Default())
      : ontology_(&ontology) {}

  const Ontology& ontology() const { return *ontology_; }
  std::uint64_t generation() const { return generation_; }
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }

  bool Contains(NodeId id) const {
    return id.value >= 1 && id.value <= nodes_.size();
  }

  const GraphNode& node(NodeId id) const {
    if (!Contains(id)) throw GraphIntegrityError("unknown node id");
    return nodes_[id.value - 1];
  }

  NodeId AddEntity(const std::string& type, const AttributeList& attributes = {}) {
    if (!ontology_->IsEntityType(type)) {
      throw OntologyError("unknown entity type: " + type);
    }
    CheckAttributeNames(attributes);
    const NodeId id = NewNode(NodeKind::kEntity, type, std::nullopt);
    AttachAttributes(id, attributes);
    ++generation_;
    return id;
  }

  NodeId AddRelation(const std::string& relation_type, const RoleList& roles,
                     const AttributeList& attributes = {}) {
    if (!ontology_->IsRelationType(relation_type)) {
      throw OntologyError("unknown relation type: " + relation_type);
    }
    for (const auto& [role, target] : roles) {
      if (!Contains(target)) {
        throw GraphIntegrityError("role '" + role + "' targets a missing node");
      }
      if (node(target).kind == NodeKind::kAttribute) {
        throw GraphIntegrityError("role '" + role + "' targets an attribute node");
      }
    }
    CheckAttributeNames(attributes);
    const NodeId id = NewNode(NodeKind::kRelation, relation_type, std::nullopt);
    for (const auto& [role, target] : roles) {
      AddEdge({id, target, EdgeLabel::Role(role)});
    }
    AttachAttributes(id, attributes);
    ++generation_;
    return id;
  }

  /// First attribute named `name` owned by `owner`.
  std::optional<Value> Attribute(NodeId owner, const std::string& name) const {
    for (std::size_t e : out_[owner.value - 1]) {
      const GraphEdge& edge = edges_[e];
      if (edge.label.kind != EdgeLabel::Kind::kOwns) continue;
      const GraphNode& attr = node(edge.to);
      if (attr.type == name) return attr.value;
    }
    return std::nullopt;
  }

  std::optional<double> NumberAttribute(NodeId owner, const std::string& name) const {
    auto v = Attribute(owner, name);
    if (!v) return std::nullopt;
    return AsNumber(*v);
  }

  std::map<std::string, Value> Attributes(NodeId owner) const {
    std::map<std::string, Value> out;
    for (std::size_t e : out_[owner.value - 1]) {
      const GraphEdge& edge = edges_[e];
      if (edge.label.kind != EdgeLabel::Kind::kOwns) continue;
      const GraphNode& attr = node(edge.to);
      out.emplace(attr.type, *attr.value);
    }
    return out;
  }

  /// Role players of a relation, in insertion order.
  RoleList RolePlayers(NodeId relation) const {
    RoleList out;
    for (std::size_t e : out_[relation.value - 1]) {
      const GraphEdge& edge = edges_[e];
      if (edge.label.kind == EdgeLabel::Kind::kRole) {
        out.emplace_back(edge.label.role, edge.to);
      }
    }
    return out;
  }

  /// Relations of relation_type in which `player` takes part (any role).
  std::vector<NodeId> RelationsOf(NodeId player, const std::string& relation_type) const {
    std::vector<NodeId> out;
    for (std::size_t e : in_[player.value - 1]) {
      const GraphEdge& edge = edges_[e];
      if (edge.label.kind != EdgeLabel::Kind::kRole) continue;
      if (node(edge.from).type == relation_type) out.push_back(edge.from);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Entities (or relations) whose type is `type` or a subtype of it, by id.
  std::vector<NodeId> InstancesOf(const std::string& type) const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_) {
      if (n.kind == NodeKind::kAttribute) continue;
      if (n.type == type || (n.kind == NodeKind::kEntity && ontology_->IsA(n.type, type))) {
        out.push_back(n.id);
      }
    }
    return out;
  }

  bool IsInstanceOf(NodeId id, const std::string& type) const {
    const GraphNode& n = node(id);
    if (n.kind == NodeKind::kAttribute) return false;
    return n.type == type || (n.kind == NodeKind::kEntity && ontology_->IsA(n.type, type));
  }

  std::vector<Binding> Match(const Pattern& pattern, const Binding& seed = {}) const {
    std::set<std::string> bound;
    for (const auto& [var, id] : seed) {
      if (!Contains(id)) throw PatternError("seed binds a missing node");
      bound.insert(var);
    }
    Validate(pattern, bound);
    std::vector<Binding> results;
    std::vector<const Conjunct*> remaining;
    for (const auto& c : pattern.conjuncts) remaining.push_back(&c);
    Solve(pattern, seed, remaining, results);
    std::sort(results.begin(), results.end(), [](const Binding& a, const Binding& b) {
      return std::lexicographical_compare(
          a.begin(), a.end(), b.begin(), b.end(),
          [](const auto& x, const auto& y) { return x.second < y.second; });
    });
    results.erase(std::unique(results.begin(), results.end()), results.end());
    return results;
  }

  /// Among relations of relation_type with `anchor` as a role player, the one
  /// with the largest `priority` attribute. Equal priorities resolve to the
  /// more cautious conclusion (see Severity).
  std::optional<RelationView> HighestPriorityRelation(const std::string& relation_type,
                                                      NodeId anchor) const {
    if (!Contains(anchor)) throw GraphIntegrityError("anchor does not exist");
    std::optional<RelationView> best;
    double best_priority = 0.0;
    double best_severity = 0.0;
    for (NodeId rel : RelationsOf(anchor, relation_type)) {
      RelationView view{rel, Attributes(rel)};
      double priority = 0.0;
      if (auto it = view.attributes.find("priority"); it != view.attributes.end()) {
        priority = AsNumber(it->second).value_or(0.0);
      }
      const double severity = Severity(relation_type, view.attributes);
      const bool better =
          !best || priority > best_priority ||
          (priority == best_priority &&
           (severity > best_severity || (severity == best_severity && rel < best->id)));
      if (better) {
        best = std::move(view);
        best_priority = priority;
        best_severity = severity;
      }
    }
    return best;
  }

  /// Ranks conclusions for tie-breaking: larger is more cautious.
  static double Severity(const std::string& relation_type,
                         const std::map<std::string, Value>& attributes) {
    if (relation_type == "crossing_acceptability") {
      auto it = attributes.find("acceptability");
      if (it != attributes.end()) return -AsNumber(it->second).value_or(0.0);
    } else if (relation_type == "has_risk_level") {
      auto it = attributes.find("risk_level");
      if (it != attributes.end()) {
        if (const auto* s = std::get_if<std::string>(&it->second)) {
          if (*s == "low") return 0.0;
          if (*s == "medium") return 1.0;
          if (*s == "high") return 2.0;
        }
      }
    }
    return 0.0;
  }

  /// Edge endpoints exist, owns edges end at attributes, role edges leave
  /// relations, every attribute has an owner and only attributes hold values.
  bool CheckIntegrity(std::string* why = nullptr) const {
    auto fail = [&](const std::string& msg) {
      if (why) *why = msg;
      return false;
    };
    std::vector<int> owners(nodes_.size(), 0);
    for (const auto& e : edges_) {
      if (!Contains(e.from) || !Contains(e.to)) return fail("dangling edge");
      const GraphNode& to = node(e.to);
      const GraphNode& from = node(e.from);
      if (e.label.kind == EdgeLabel::Kind::kOwns) {
        if (to.kind != NodeKind::kAttribute) return fail("owns edge to non-attribute");
        ++owners[e.to.value - 1];
      } else {
        if (from.kind != NodeKind::kRelation) return fail("role edge from non-relation");
        if (to.kind == NodeKind::kAttribute) ++owners[e.to.value - 1];
      }
    }
    for (const auto& n : nodes_) {
      if ((n.kind == NodeKind::kAttribute) != n.value.has_value()) {
        return fail("value on non-attribute node or missing attribute value");
      }
      if (n.kind == NodeKind::kAttribute && owners[n.id.value - 1] == 0) {
        return fail("dangling attribute");
      }
    }
    return true;
  }

  /// Structured-text dump: one line per node, then one line per edge.
  void Dump(std::ostream& os) const {
    os << "nodes " << nodes_.size() << '\n';
    for (const auto& n : nodes_) {
      os << "node\t" << n.id.value << '\t' << ToString(n.kind) << '\t' << n.type;
      if (n.value) os << '\t' << ToString(*n.value);
      os << '\n';
    }
    os << "edges " << edges_.size() << '\n';
    for (const auto& e : edges_) {
      os << "edge\t" << e.from.value << '\t' << e.to.value << '\t'
         << (e.label.kind == EdgeLabel::Kind::kOwns ? std::string("owns")
                                                    : "role:" + e.label.role)
         << '\n';
    }
  }

 private:
  NodeId NewNode(NodeKind kind, const std::string& type, std::optional<Value> value) {
    const NodeId id{nodes_.size() + 1};
    nodes_.push_back({id, kind, type, std::move(value)});
    out_.emplace_back();
    in_.emplace_back();
    return id;
  }

  void AddEdge(GraphEdge e) {
    out_[e.from.value - 1].push_back(edges_.size());
    in_[e.to.value - 1].push_back(edges_.size());
    edges_.push_back(std::move(e));
  }

  void CheckAttributeNames(const AttributeList& attributes) const {
    for (const auto& [name, value] : attributes) {
      if (!ontology_->IsAttribute(name)) {
        throw OntologyError("unknown attribute: " + name);
      }
    }
  }

  void AttachAttributes(NodeId owner, const AttributeList& attributes) {
    for (const auto& [name, value] : attributes) {
      const NodeId attr = NewNode(NodeKind::kAttribute, name, value);
      AddEdge({owner, attr, EdgeLabel::Owns()});
    }
  }

  static void CollectVars(const Conjunct& c, std::set<std::string>& generated,
                          std::set<std::string>& used) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Isa>) {
            generated.insert(x.var);
          } else if constexpr (std::is_same_v<T, Has>) {
            used.insert(x.var);
          } else {
            for (const auto& [role, var] : x.roles) generated.insert(var);
            if (!x.var.empty()) generated.insert(x.var);
          }
        },
        c);
  }

  void Validate(const Pattern& pattern, std::set<std::string> bound) const {
    std::set<std::string> used;
    for (const auto& c : pattern.conjuncts) {
      CollectVars(c, bound, used);
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Isa>) {
              if (x.var.empty()) throw PatternError("isa without variable");
              if (!ontology_->IsEntityType(x.type) && !ontology_->IsRelationType(x.type)) {
                throw PatternError("unknown type in pattern: " + x.type);
              }
            } else if constexpr (std::is_same_v<T, Has>) {
              if (!ontology_->IsAttribute(x.attribute)) {
                throw PatternError("unknown attribute in pattern: " + x.attribute);
              }
            } else {
              if (!ontology_->IsRelationType(x.relation_type)) {
                throw PatternError("unknown relation in pattern: " + x.relation_type);
              }
              if (x.roles.empty()) throw PatternError("relation without roles");
            }
          },
          c);
    }
    for (const auto& v : used) {
      if (!bound.contains(v)) {
        throw PatternError("variable '" + v + "' is never bound");
      }
    }
    for (const auto& neg : pattern.absent) Validate(neg, bound);
  }

  static bool Bound(const Binding& b, const std::string& var) { return b.contains(var); }

  bool IsFilter(const Conjunct& c, const Binding& b) const {
    return std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Isa>) {
            return Bound(b, x.var);
          } else if constexpr (std::is_same_v<T, Has>) {
            return Bound(b, x.var);
          } else {
            for (const auto& [role, var] : x.roles) {
              if (!Bound(b, var)) return false;
            }
            return x.var.empty() || Bound(b, x.var);
          }
        },
        c);
  }

  bool AttributeSatisfies(NodeId owner, const Has& h) const {
    for (std::size_t e : out_[owner.value - 1]) {
      const GraphEdge& edge = edges_[e];
      if (edge.label.kind != EdgeLabel::Kind::kOwns) continue;
      const GraphNode& attr = node(edge.to);
      if (attr.type == h.attribute && Compare(*attr.value, h.op, h.value)) return true;
    }
    return false;
  }

  // Extends `b` with every assignment of the relation's unbound variables.
  void MatchRelation(const Rel& r, NodeId rel, std::size_t role_index, Binding b,
                     std::vector<Binding>& out) const {
    if (role_index == r.roles.size()) {
      out.push_back(std::move(b));
      return;
    }
    const auto& [role, var] = r.roles[role_index];
    for (std::size_t e : out_[rel.value - 1]) {
      const GraphEdge& edge = edges_[e];
      if (edge.label.kind != EdgeLabel::Kind::kRole || edge.label.role != role) continue;
      auto it = b.find(var);
      if (it != b.end()) {
        if (it->second != edge.to) continue;
        MatchRelation(r, rel, role_index + 1, b, out);
      } else {
        Binding next = b;
        next.emplace(var, edge.to);
        MatchRelation(r, rel, role_index + 1, std::move(next), out);
      }
    }
  }

  std::vector<Binding> Extend(const Conjunct& c, const Binding& b) const {
    std::vector<Binding> out;
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Isa>) {
            if (auto it = b.find(x.var); it != b.end()) {
              if (IsInstanceOf(it->second, x.type)) out.push_back(b);
            } else {
              for (NodeId id : InstancesOf(x.type)) {
                Binding next = b;
                next.emplace(x.var, id);
                out.push_back(std::move(next));
              }
            }
          } else if constexpr (std::is_same_v<T, Has>) {
            if (AttributeSatisfies(b.at(x.var), x)) out.push_back(b);
          } else {
            std::vector<NodeId> candidates;
            if (!x.var.empty() && b.contains(x.var)) {
              const NodeId rel = b.at(x.var);
              if (node(rel).kind == NodeKind::kRelation && node(rel).type == x.relation_type) {
                candidates.push_back(rel);
              }
            } else {
              std::optional<NodeId> pivot;
              for (const auto& [role, var] : x.roles) {
                if (auto it = b.find(var); it != b.end()) {
                  pivot = it->second;
                  break;
                }
              }
              candidates = pivot ? RelationsOf(*pivot, x.relation_type)
                                 : InstancesOf(x.relation_type);
            }
            for (NodeId rel : candidates) {
              Binding next = b;
              if (!x.var.empty()) next[x.var] = rel;
              MatchRelation(x, rel, 0, std::move(next), out);
            }
          }
        },
        c);
    return out;
  }

  void Solve(const Pattern& pattern, const Binding& b,
             std::vector<const Conjunct*> remaining, std::vector<Binding>& results) const {
    if (remaining.empty()) {
      for (const auto& neg : pattern.absent) {
        if (!Match(neg, b).empty()) return;
      }
      results.push_back(b);
      return;
    }
    // Filters first, then the first generator that can bind something.
    std::size_t pick = remaining.size();
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (IsFilter(*remaining[i], b)) {
        pick = i;
        break;
      }
    }
    if (pick == remaining.size()) {
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        if (!std::holds_alternative<Has>(*remaining[i])) {
          pick = i;
          break;
        }
      }
    }
    if (pick == remaining.size()) throw PatternError("attribute test on unbound variable");
    const Conjunct* c = remaining[pick];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    for (auto& next : Extend(*c, b)) Solve(pattern, next, remaining, results);
  }

  const Ontology* ontology_;
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
  std::uint64_t generation_ = 0;
};

}  // namespace ctxplan::kg
