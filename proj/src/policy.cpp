#include "martsia/policy.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace martsia::policy {

NodePtr make_atom(std::string name, Qualifier q) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Atom;
  n->name = std::move(name);
  n->qualifier = std::move(q);
  return n;
}

static NodePtr make_gate(Kind k, std::vector<NodePtr> children) {
  if (children.size() < 2) throw Error("gate nodes need at least two children");
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->children = std::move(children);
  return n;
}

NodePtr make_and(std::vector<NodePtr> children) { return make_gate(Kind::And, std::move(children)); }
NodePtr make_or(std::vector<NodePtr> children) { return make_gate(Kind::Or, std::move(children)); }

bool ast_equal(const NodePtr& a, const NodePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  if (a->kind == Kind::Atom) return a->name == b->name && a->qualifier == b->qualifier;
  if (a->children.size() != b->children.size()) return false;
  for (size_t i = 0; i < a->children.size(); ++i)
    if (!ast_equal(a->children[i], b->children[i])) return false;
  return true;
}

namespace {

struct Token {
  enum Type { Name, At, Plus, LParen, RParen, KwAnd, KwOr, End } type;
  std::string text;
  size_t pos;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  Token next() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    size_t start = i_;
    if (i_ >= s_.size()) return {Token::End, "", start};
    char c = s_[i_];
    if (c == '@') { ++i_; return {Token::At, "@", start}; }
    if (c == '+') { ++i_; return {Token::Plus, "+", start}; }
    if (c == '(') { ++i_; return {Token::LParen, "(", start}; }
    if (c == ')') { ++i_; return {Token::RParen, ")", start}; }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      while (i_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
        ++i_;
      std::string word = s_.substr(start, i_ - start);
      std::string lower = word;
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char ch) { return std::tolower(ch); });
      if (lower == "and") return {Token::KwAnd, word, start};
      if (lower == "or") return {Token::KwOr, word, start};
      return {Token::Name, word, start};
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", start);
  }

 private:
  const std::string& s_;
  size_t i_ = 0;
};

class Parser {
 public:
  explicit Parser(const std::string& s) : lex_(s) { advance(); }

  NodePtr parse() {
    NodePtr root = or_expr();
    if (tok_.type != Token::End) throw SyntaxError("trailing input", tok_.pos);
    return root;
  }

 private:
  void advance() { tok_ = lex_.next(); }

  NodePtr or_expr() {
    std::vector<NodePtr> kids{and_expr()};
    while (tok_.type == Token::KwOr) {
      advance();
      kids.push_back(and_expr());
    }
    return kids.size() == 1 ? kids[0] : make_or(std::move(kids));
  }

  NodePtr and_expr() {
    std::vector<NodePtr> kids{primary()};
    while (tok_.type == Token::KwAnd) {
      advance();
      kids.push_back(primary());
    }
    return kids.size() == 1 ? kids[0] : make_and(std::move(kids));
  }

  NodePtr primary() {
    if (tok_.type == Token::LParen) {
      size_t open = tok_.pos;
      advance();
      NodePtr inner = or_expr();
      if (tok_.type != Token::RParen) throw SyntaxError("unbalanced parenthesis", open);
      advance();
      return inner;
    }
    return atom();
  }

  NodePtr atom() {
    if (tok_.type != Token::Name)
      throw SyntaxError("expected attribute name", tok_.pos);
    std::string name = tok_.text;
    advance();
    if (tok_.type != Token::At) throw SyntaxError("expected '@' after attribute name", tok_.pos);
    advance();
    if (tok_.type != Token::Name)
      throw SyntaxError("expected authority id or threshold after '@'", tok_.pos);
    std::string qual = tok_.text;
    size_t qual_pos = tok_.pos;
    advance();
    if (tok_.type == Token::Plus) {
      advance();
      if (!std::all_of(qual.begin(), qual.end(),
                       [](unsigned char ch) { return std::isdigit(ch); }))
        throw SyntaxError("threshold must be numeric", qual_pos);
      unsigned long n = std::stoul(qual);
      if (n == 0) throw SyntaxError("zero threshold", qual_pos);
      return make_atom(std::move(name), AtLeast{static_cast<uint32_t>(n)});
    }
    return make_atom(std::move(name), Single{std::move(qual)});
  }

  Lexer lex_;
  Token tok_{Token::End, "", 0};
};

void print_node(const NodePtr& n, std::ostream& os) {
  if (n->kind == Kind::Atom) {
    os << n->name << '@';
    if (const auto* s = std::get_if<Single>(&n->qualifier))
      os << s->authority_id;
    else
      os << std::get<AtLeast>(n->qualifier).n << '+';
    return;
  }
  const char* sep = n->kind == Kind::And ? " and " : " or ";
  for (size_t i = 0; i < n->children.size(); ++i) {
    if (i) os << sep;
    const NodePtr& c = n->children[i];
    if (c->kind == Kind::Atom) {
      print_node(c, os);
    } else {
      os << '(';
      print_node(c, os);
      os << ')';
    }
  }
}

}  // namespace

PolicyAst parse_policy(const std::string& text) {
  if (text.empty()) throw SyntaxError("empty policy", 0);
  return PolicyAst{Parser(text).parse()};
}

std::string pretty_print(const PolicyAst& ast) {
  std::ostringstream os;
  print_node(ast.root, os);
  return os.str();
}

PolicyAst inject_instance_clause(const PolicyAst& ast, const std::string& instance_id,
                                 uint32_t universe_size) {
  if (instance_id.empty() ||
      !std::all_of(instance_id.begin(), instance_id.end(),
                   [](unsigned char c) { return std::isdigit(c); }))
    throw InvalidInstanceId("instance id must be a numeric string: " + instance_id);
  NodePtr clause = make_atom(instance_id, AtLeast{universe_size});
  if (ast.root->kind == Kind::And && !ast.root->children.empty() &&
      ast_equal(ast.root->children.front(), clause))
    return ast;
  return PolicyAst{make_and({clause, ast.root})};
}

static Formula expand_node(const NodePtr& n, const std::vector<std::string>& universe) {
  Formula f;
  if (n->kind == Kind::Atom) {
    if (const auto* s = std::get_if<Single>(&n->qualifier)) {
      if (std::find(universe.begin(), universe.end(), s->authority_id) == universe.end())
        throw UnknownAuthority("authority not in universe: " + s->authority_id);
      f.leaf = n->name + "@" + s->authority_id;
      return f;
    }
    const auto& at = std::get<AtLeast>(n->qualifier);
    if (at.n > universe.size())
      throw ThresholdTooLarge("threshold " + std::to_string(at.n) + " exceeds universe of " +
                              std::to_string(universe.size()));
    f.threshold = at.n;
    for (const auto& auth : universe) {
      Formula leaf;
      leaf.leaf = n->name + "@" + auth;
      f.children.push_back(std::move(leaf));
    }
    return f;
  }
  f.threshold = n->kind == Kind::And ? static_cast<uint32_t>(n->children.size()) : 1;
  for (const auto& c : n->children) f.children.push_back(expand_node(c, universe));
  return f;
}

Formula expand_policy(const PolicyAst& ast, const std::vector<std::string>& universe) {
  return expand_node(ast.root, universe);
}

bool evaluate_formula(const Formula& f, const std::set<std::string>& owned) {
  if (f.is_leaf()) return owned.count(f.leaf) > 0;
  uint32_t sat = 0;
  for (const auto& c : f.children)
    if (evaluate_formula(c, owned)) ++sat;
  return sat >= f.threshold;
}

static void collect_leaves(const Formula& f, std::vector<std::string>& out) {
  if (f.is_leaf()) {
    out.push_back(f.leaf);
    return;
  }
  for (const auto& c : f.children) collect_leaves(c, out);
}

std::vector<std::string> formula_leaves(const Formula& f) {
  std::vector<std::string> out;
  collect_leaves(f, out);
  return out;
}

std::vector<PolicyAst> parse_policy_file(const std::string& content) {
  std::vector<PolicyAst> out;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t\r");
    out.push_back(parse_policy(line.substr(a, b - a + 1)));
  }
  return out;
}

}  // namespace martsia::policy
