#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "martsia/errors.hpp"

namespace martsia::policy {

// Qualifier on a policy atom: either one named authority must certify the
// attribute, or at least n authorities out of the configured universe.
struct Single {
  std::string authority_id;
  bool operator==(const Single&) const = default;
};
struct AtLeast {
  uint32_t n = 0;
  bool operator==(const AtLeast&) const = default;
};
using Qualifier = std::variant<Single, AtLeast>;

struct Node;
using NodePtr = std::shared_ptr<const Node>;

enum class Kind { And, Or, Atom };

struct Node {
  Kind kind;
  std::string name;      // atom only
  Qualifier qualifier;   // atom only
  std::vector<NodePtr> children;  // and/or only, >= 2
};

NodePtr make_atom(std::string name, Qualifier q);
NodePtr make_and(std::vector<NodePtr> children);
NodePtr make_or(std::vector<NodePtr> children);
bool ast_equal(const NodePtr& a, const NodePtr& b);

struct PolicyAst {
  NodePtr root;
  bool operator==(const PolicyAst& o) const { return ast_equal(root, o.root); }
};

// Authority-expanded gate tree: every gate is a t-of-n threshold
// (AND = t=n, OR = t=1), every leaf is "name@authority".
struct Formula {
  uint32_t threshold = 0;            // gates only
  std::vector<Formula> children;     // gates only
  std::string leaf;                  // leaves only (children empty)
  bool is_leaf() const { return children.empty(); }
};

// Grammar:
//   or_expr  := and_expr ("or" and_expr)*
//   and_expr := primary ("and" primary)*
//   primary  := atom | "(" or_expr ")"
//   atom     := NAME "@" (AUTH_ID | INT "+")
// "and" binds tighter than "or"; keywords case-insensitive.
PolicyAst parse_policy(const std::string& text);

std::string pretty_print(const PolicyAst& ast);

// Prepends And(Atom(instance_id, AtLeast universe_size), ast). Idempotent if
// that exact conjunct already heads the AST.
PolicyAst inject_instance_clause(const PolicyAst& ast, const std::string& instance_id,
                                 uint32_t universe_size);

Formula expand_policy(const PolicyAst& ast, const std::vector<std::string>& universe);

bool evaluate_formula(const Formula& f, const std::set<std::string>& owned);

std::vector<std::string> formula_leaves(const Formula& f);

// Policy files: one policy per line, '#' comments and blank lines ignored.
std::vector<PolicyAst> parse_policy_file(const std::string& content);

}  // namespace martsia::policy
