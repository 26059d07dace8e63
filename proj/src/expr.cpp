#include "pdl/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>

#include "pdl/error.hpp"

namespace pdl {
namespace expr {

struct Node {
  enum class Kind {
    Literal, Var, Attr, Index, Neg, Pos, Binary, Compare, And, Or, Not, Cond, List, Dict, Filter
  };
  Kind kind = Kind::Literal;
  Value literal;
  std::string name;                  // Var, Attr, Binary operator, Filter
  std::vector<NodePtr> children;
  std::vector<std::string> ops;      // Compare chain operators
};

namespace {

class UndefinedError : public ExprError {
 public:
  using ExprError::ExprError;
};

// ---------------------------------------------------------------- lexer

struct Token {
  enum class Kind { Number, String, Name, Op, End };
  Kind kind = Kind::End;
  std::string text;
  Value value;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.pos = i_;
      if (i_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[i_];
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && i_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_ + 1])))) {
        lex_number(t);
      } else if (c == '"' || c == '\'') {
        lex_string(t);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i_;
        while (j < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_')) ++j;
        t.kind = Token::Kind::Name;
        t.text = std::string(src_.substr(i_, j - i_));
        i_ = j;
      } else {
        lex_op(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void skip_space() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
  }

  void lex_number(Token& t) {
    std::size_t j = i_;
    bool is_float = false;
    while (j < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[j])) || src_[j] == '_')) ++j;
    if (j < src_.size() && src_[j] == '.' && j + 1 < src_.size() &&
        std::isdigit(static_cast<unsigned char>(src_[j + 1]))) {
      is_float = true;
      ++j;
      while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
    }
    if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
      if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
        is_float = true;
        j = k;
        while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
      }
    }
    std::string text;
    for (std::size_t k = i_; k < j; ++k) {
      if (src_[k] != '_') text += src_[k];
    }
    t.kind = Token::Kind::Number;
    t.text = text;
    if (is_float) {
      t.value = Value(std::stod(text));
    } else {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec == std::errc()) {
        t.value = Value(v);
      } else {
        t.value = Value(std::stod(text));
      }
    }
    i_ = j;
  }

  void lex_string(Token& t) {
    const char quote = src_[i_++];
    std::string out;
    while (i_ < src_.size() && src_[i_] != quote) {
      char c = src_[i_++];
      if (c == '\\' && i_ < src_.size()) {
        const char e = src_[i_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '\\': out += '\\'; break;
          case '\'': out += '\''; break;
          case '"': out += '"'; break;
          default: out += '\\'; out += e;
        }
      } else {
        out += c;
      }
    }
    if (i_ >= src_.size()) throw ExprError("unterminated string literal in expression");
    ++i_;
    t.kind = Token::Kind::String;
    t.value = Value(out);
    t.text = out;
  }

  void lex_op(Token& t) {
    static const char* kOps[] = {"//", "**", "==", "!=", "<=", ">=", "+", "-", "*", "/", "%", "~",
                                 "<",  ">",  "(",  ")",  "[",  "]",  "{", "}", ",", ":", ".", "|"};
    for (const char* op : kOps) {
      const std::string_view sv(op);
      if (src_.substr(i_, sv.size()) == sv) {
        t.kind = Token::Kind::Op;
        t.text = std::string(sv);
        i_ += sv.size();
        return;
      }
    }
    throw ExprError(std::string("unexpected character '") + src_[i_] + "' in expression");
  }

  std::string_view src_;
  std::size_t i_ = 0;
};

// ---------------------------------------------------------------- parser

NodePtr make(Node::Kind kind, std::vector<NodePtr> children = {}, std::string name = {}) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->children = std::move(children);
  n->name = std::move(name);
  return n;
}

class Parser {
 public:
  Parser(std::string_view src, std::vector<Token> tokens) : src_(src), toks_(std::move(tokens)) {}

  NodePtr parse_all() {
    if (peek().kind == Token::Kind::End) throw ExprError("empty expression");
    auto n = expression();
    if (peek().kind != Token::Kind::End) fail("unexpected '" + peek().text + "'");
    return n;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool is_op(std::string_view op, std::size_t k = 0) const {
    return peek(k).kind == Token::Kind::Op && peek(k).text == op;
  }
  bool is_name(std::string_view name, std::size_t k = 0) const {
    return peek(k).kind == Token::Kind::Name && peek(k).text == name;
  }
  void expect_op(std::string_view op) {
    if (!is_op(op)) fail("expected '" + std::string(op) + "'");
    next();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ExprError("syntax error in expression '" + std::string(src_) + "': " + msg);
  }

  NodePtr expression() {
    auto value = or_test();
    if (is_name("if")) {
      next();
      auto cond = or_test();
      NodePtr otherwise;
      if (is_name("else")) {
        next();
        otherwise = expression();
      } else {
        auto lit = std::make_shared<Node>();
        lit->literal = Value();
        otherwise = lit;
      }
      return make(Node::Kind::Cond, {cond, value, otherwise});
    }
    return value;
  }

  NodePtr or_test() {
    auto left = and_test();
    while (is_name("or")) {
      next();
      left = make(Node::Kind::Or, {left, and_test()});
    }
    return left;
  }

  NodePtr and_test() {
    auto left = not_test();
    while (is_name("and")) {
      next();
      left = make(Node::Kind::And, {left, not_test()});
    }
    return left;
  }

  NodePtr not_test() {
    if (is_name("not")) {
      next();
      return make(Node::Kind::Not, {not_test()});
    }
    return comparison();
  }

  NodePtr comparison() {
    auto first = concat();
    auto node = std::make_shared<Node>();
    node->kind = Node::Kind::Compare;
    node->children.push_back(first);
    for (;;) {
      std::string op;
      if (peek().kind == Token::Kind::Op &&
          (peek().text == "==" || peek().text == "!=" || peek().text == "<" || peek().text == "<=" ||
           peek().text == ">" || peek().text == ">=")) {
        op = next().text;
      } else if (is_name("in")) {
        next();
        op = "in";
      } else if (is_name("not") && is_name("in", 1)) {
        next();
        next();
        op = "not in";
      } else {
        break;
      }
      node->ops.push_back(op);
      node->children.push_back(concat());
    }
    if (node->ops.empty()) return first;
    return node;
  }

  NodePtr concat() {
    auto left = math1();
    while (is_op("~")) {
      next();
      left = make(Node::Kind::Binary, {left, math1()}, "~");
    }
    return left;
  }

  NodePtr math1() {
    auto left = math2();
    while (is_op("+") || is_op("-")) {
      const std::string op = next().text;
      left = make(Node::Kind::Binary, {left, math2()}, op);
    }
    return left;
  }

  NodePtr math2() {
    auto left = power();
    while (is_op("*") || is_op("/") || is_op("//") || is_op("%")) {
      const std::string op = next().text;
      left = make(Node::Kind::Binary, {left, power()}, op);
    }
    return left;
  }

  NodePtr power() {
    auto left = unary(true);
    while (is_op("**")) {
      next();
      left = make(Node::Kind::Binary, {left, unary(true)}, "**");
    }
    return left;
  }

  NodePtr unary(bool with_filter) {
    NodePtr node;
    if (is_op("-")) {
      next();
      node = make(Node::Kind::Neg, {unary(false)});
    } else if (is_op("+")) {
      next();
      node = make(Node::Kind::Pos, {unary(false)});
    } else {
      node = postfix(primary());
    }
    if (with_filter) node = filters(node);
    return node;
  }

  NodePtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Token::Kind::Number:
      case Token::Kind::String: {
        auto n = std::make_shared<Node>();
        n->literal = next().value;
        // adjacent string literals concatenate
        while (n->literal.is_string() && peek().kind == Token::Kind::String) {
          n->literal = Value(n->literal.as_string() + next().value.as_string());
        }
        return n;
      }
      case Token::Kind::Name: {
        const std::string name = next().text;
        auto n = std::make_shared<Node>();
        if (name == "true" || name == "True") {
          n->literal = Value(true);
        } else if (name == "false" || name == "False") {
          n->literal = Value(false);
        } else if (name == "none" || name == "None" || name == "null") {
          n->literal = Value();
        } else if (name == "and" || name == "or" || name == "not" || name == "if" || name == "else" ||
                   name == "in") {
          fail("unexpected keyword '" + name + "'");
        } else {
          n->kind = Node::Kind::Var;
          n->name = name;
        }
        return n;
      }
      case Token::Kind::Op: {
        if (t.text == "(") {
          next();
          auto inner = expression();
          if (is_op(",")) fail("tuples are not supported");
          expect_op(")");
          return inner;
        }
        if (t.text == "[") {
          next();
          auto n = std::make_shared<Node>();
          n->kind = Node::Kind::List;
          while (!is_op("]")) {
            n->children.push_back(expression());
            if (!is_op(",")) break;
            next();
          }
          expect_op("]");
          return n;
        }
        if (t.text == "{") {
          next();
          auto n = std::make_shared<Node>();
          n->kind = Node::Kind::Dict;
          while (!is_op("}")) {
            n->children.push_back(expression());
            expect_op(":");
            n->children.push_back(expression());
            if (!is_op(",")) break;
            next();
          }
          expect_op("}");
          return n;
        }
        fail("unexpected '" + t.text + "'");
      }
      case Token::Kind::End: fail("unexpected end of expression");
    }
    fail("unexpected token");
  }

  NodePtr postfix(NodePtr node) {
    for (;;) {
      if (is_op(".")) {
        next();
        if (peek().kind == Token::Kind::Name) {
          node = make(Node::Kind::Attr, {node}, next().text);
        } else if (peek().kind == Token::Kind::Number && peek().value.is_int()) {
          auto idx = std::make_shared<Node>();
          idx->literal = next().value;
          node = make(Node::Kind::Index, {node, idx});
        } else {
          fail("expected a field name after '.'");
        }
      } else if (is_op("[")) {
        next();
        auto index = expression();
        expect_op("]");
        node = make(Node::Kind::Index, {node, index});
      } else if (is_op("(")) {
        fail("function calls are not supported");
      } else {
        return node;
      }
    }
  }

  NodePtr filters(NodePtr node) {
    while (is_op("|")) {
      next();
      if (peek().kind != Token::Kind::Name) fail("expected a filter name after '|'");
      const std::string name = next().text;
      const auto& known = filter_names();
      if (std::find(known.begin(), known.end(), name) == known.end()) {
        throw ExprError("unknown filter '" + name + "'");
      }
      auto f = std::make_shared<Node>();
      f->kind = Node::Kind::Filter;
      f->name = name;
      f->children.push_back(node);
      if (is_op("(")) {
        next();
        while (!is_op(")")) {
          f->children.push_back(expression());
          if (!is_op(",")) break;
          next();
        }
        expect_op(")");
      }
      node = f;
    }
    return node;
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- helpers

std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xF0) {
      len = 4;
    } else if (c >= 0xE0) {
      len = 3;
    } else if (c >= 0xC0) {
      len = 2;
    }
    len = std::min(len, s.size() - i);
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

[[noreturn]] void type_error(const std::string& op, const Value& a, const Value& b) {
  throw ExprError("unsupported operand types for " + op + ": " + a.type_name() + " and " + b.type_name());
}

Value int_or_float(long double r) {
  if (r >= static_cast<long double>(INT64_MIN) && r <= static_cast<long double>(INT64_MAX) &&
      std::floor(r) == r) {
    return Value(static_cast<std::int64_t>(r));
  }
  return Value(static_cast<double>(r));
}

Value arithmetic(const std::string& op, const Value& a, const Value& b) {
  if (op == "~") return Value(stringify(a) + stringify(b));
  if (op == "+") {
    if (a.is_int() && b.is_int()) {
      std::int64_t r;
      if (!__builtin_add_overflow(a.as_int(), b.as_int(), &r)) return Value(r);
      return Value(static_cast<double>(a.as_int()) + static_cast<double>(b.as_int()));
    }
    if (a.is_number() && b.is_number()) return Value(a.as_number() + b.as_number());
    if (a.is_string() && b.is_string()) return Value(a.as_string() + b.as_string());
    if (a.is_array() && b.is_array()) {
      Array out = a.as_array();
      out.insert(out.end(), b.as_array().begin(), b.as_array().end());
      return Value(std::move(out));
    }
    type_error(op, a, b);
  }
  if (op == "-") {
    if (a.is_int() && b.is_int()) {
      std::int64_t r;
      if (!__builtin_sub_overflow(a.as_int(), b.as_int(), &r)) return Value(r);
      return Value(static_cast<double>(a.as_int()) - static_cast<double>(b.as_int()));
    }
    if (a.is_number() && b.is_number()) return Value(a.as_number() - b.as_number());
    type_error(op, a, b);
  }
  if (op == "*") {
    if (a.is_int() && b.is_int()) {
      std::int64_t r;
      if (!__builtin_mul_overflow(a.as_int(), b.as_int(), &r)) return Value(r);
      return Value(static_cast<double>(a.as_int()) * static_cast<double>(b.as_int()));
    }
    if (a.is_number() && b.is_number()) return Value(a.as_number() * b.as_number());
    const Value* seq = a.is_int() ? &b : &a;
    const Value* count = a.is_int() ? &a : &b;
    if (count->is_int() && (seq->is_string() || seq->is_array())) {
      const std::int64_t n = std::max<std::int64_t>(0, count->as_int());
      if (seq->is_string()) {
        std::string out;
        for (std::int64_t i = 0; i < n; ++i) out += seq->as_string();
        return Value(std::move(out));
      }
      Array out;
      for (std::int64_t i = 0; i < n; ++i) {
        out.insert(out.end(), seq->as_array().begin(), seq->as_array().end());
      }
      return Value(std::move(out));
    }
    type_error(op, a, b);
  }
  if (!a.is_number() || !b.is_number()) type_error(op, a, b);
  if (op == "/") {
    if (b.as_number() == 0) throw ExprError("division by zero");
    return Value(a.as_number() / b.as_number());
  }
  if (op == "//") {
    if (b.as_number() == 0) throw ExprError("division by zero");
    if (a.is_int() && b.is_int()) {
      std::int64_t q = a.as_int() / b.as_int();
      if ((a.as_int() % b.as_int() != 0) && ((a.as_int() < 0) != (b.as_int() < 0))) --q;
      return Value(q);
    }
    return Value(std::floor(a.as_number() / b.as_number()));
  }
  if (op == "%") {
    if (b.as_number() == 0) throw ExprError("modulo by zero");
    if (a.is_int() && b.is_int()) {
      std::int64_t r = a.as_int() % b.as_int();
      if (r != 0 && ((r < 0) != (b.as_int() < 0))) r += b.as_int();
      return Value(r);
    }
    double r = std::fmod(a.as_number(), b.as_number());
    if (r != 0 && ((r < 0) != (b.as_number() < 0))) r += b.as_number();
    return Value(r);
  }
  if (op == "**") {
    if (a.is_int() && b.is_int() && b.as_int() >= 0) {
      return int_or_float(std::pow(static_cast<long double>(a.as_int()), static_cast<long double>(b.as_int())));
    }
    return Value(std::pow(a.as_number(), b.as_number()));
  }
  throw ExprError("unknown operator " + op);
}

bool compare(const std::string& op, const Value& a, const Value& b) {
  if (op == "==") return a == b;
  if (op == "!=") return !(a == b);
  if (op == "in" || op == "not in") {
    bool found = false;
    if (b.is_string()) {
      if (!a.is_string()) type_error(op, a, b);
      found = b.as_string().find(a.as_string()) != std::string::npos;
    } else if (b.is_array()) {
      for (const auto& item : b.as_array()) {
        if (item == a) {
          found = true;
          break;
        }
      }
    } else if (b.is_object()) {
      if (!a.is_string()) type_error(op, a, b);
      found = b.as_object().contains(a.as_string());
    } else {
      type_error(op, a, b);
    }
    return op == "in" ? found : !found;
  }
  int cmp = 0;
  if (a.is_number() && b.is_number()) {
    if (a.is_int() && b.is_int()) {
      cmp = a.as_int() < b.as_int() ? -1 : (a.as_int() > b.as_int() ? 1 : 0);
    } else {
      cmp = a.as_number() < b.as_number() ? -1 : (a.as_number() > b.as_number() ? 1 : 0);
    }
  } else if (a.is_string() && b.is_string()) {
    cmp = a.as_string().compare(b.as_string());
  } else {
    type_error(op, a, b);
  }
  if (op == "<") return cmp < 0;
  if (op == "<=") return cmp <= 0;
  if (op == ">") return cmp > 0;
  return cmp >= 0;
}

std::int64_t normalize_index(std::int64_t i, std::size_t size) {
  if (i < 0) i += static_cast<std::int64_t>(size);
  if (i < 0 || i >= static_cast<std::int64_t>(size)) throw ExprError("index out of range");
  return i;
}

Value index_into(const Value& base, const Value& index) {
  if (base.is_array()) {
    if (!index.is_int()) throw ExprError(std::string("array index must be an integer, found ") + index.type_name());
    return base.as_array()[normalize_index(index.as_int(), base.as_array().size())];
  }
  if (base.is_string()) {
    if (!index.is_int()) throw ExprError(std::string("string index must be an integer, found ") + index.type_name());
    auto chars = utf8_chars(base.as_string());
    return Value(chars[normalize_index(index.as_int(), chars.size())]);
  }
  if (base.is_object()) {
    if (!index.is_string()) throw ExprError(std::string("object key must be a string, found ") + index.type_name());
    if (const Value* v = base.as_object().find(index.as_string())) return *v;
    throw UndefinedError("undefined field '" + index.as_string() + "'");
  }
  throw ExprError(std::string("cannot index into ") + base.type_name());
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

Value apply_filter(const std::string& name, const Value& v, const std::vector<Value>& args) {
  auto arity = [&](std::size_t max) {
    if (args.size() > max) throw ExprError("too many arguments to filter '" + name + "'");
  };
  if (name == "length") {
    arity(0);
    if (v.is_string()) return Value(static_cast<std::int64_t>(utf8_chars(v.as_string()).size()));
    if (v.is_array()) return Value(static_cast<std::int64_t>(v.as_array().size()));
    if (v.is_object()) return Value(static_cast<std::int64_t>(v.as_object().size()));
    throw ExprError(std::string("filter 'length' expects a string, array or object, found ") + v.type_name());
  }
  if (name == "join") {
    arity(1);
    std::string sep;
    if (!args.empty()) sep = stringify(args[0]);
    if (!v.is_array()) throw ExprError(std::string("filter 'join' expects an array, found ") + v.type_name());
    std::string out;
    bool first = true;
    for (const auto& item : v.as_array()) {
      if (!first) out += sep;
      first = false;
      out += stringify(item);
    }
    return Value(out);
  }
  if (name == "trim" || name == "lower" || name == "upper") {
    arity(0);
    if (!v.is_string()) throw ExprError("filter '" + name + "' expects a string, found " + v.type_name());
    std::string s = v.as_string();
    if (name == "trim") return Value(trim(s));
    for (auto& c : s) {
      if (static_cast<unsigned char>(c) < 0x80) {
        c = static_cast<char>(name == "lower" ? std::tolower(static_cast<unsigned char>(c))
                                              : std::toupper(static_cast<unsigned char>(c)));
      }
    }
    return Value(s);
  }
  if (name == "tojson") {
    arity(0);
    return Value(to_json(v));
  }
  throw ExprError("unknown filter '" + name + "'");
}

}  // namespace

const std::vector<std::string>& filter_names() {
  static const std::vector<std::string> names = {"length", "join", "trim", "lower", "upper", "tojson", "default"};
  return names;
}

NodePtr parse(std::string_view source) {
  Lexer lexer(source);
  Parser parser(source, lexer.run());
  return parser.parse_all();
}

Value evaluate(const Node& n, const Scope& scope) {
  switch (n.kind) {
    case Node::Kind::Literal: return n.literal;
    case Node::Kind::Var: {
      if (const Value* v = scope.lookup(n.name)) return *v;
      throw UndefinedError("undefined variable '" + n.name + "'");
    }
    case Node::Kind::Attr: {
      const Value base = evaluate(*n.children[0], scope);
      if (!base.is_object()) {
        throw ExprError("cannot access field '" + n.name + "' of " + base.type_name());
      }
      if (const Value* v = base.as_object().find(n.name)) return *v;
      throw UndefinedError("undefined field '" + n.name + "'");
    }
    case Node::Kind::Index:
      return index_into(evaluate(*n.children[0], scope), evaluate(*n.children[1], scope));
    case Node::Kind::Neg:
    case Node::Kind::Pos: {
      const Value v = evaluate(*n.children[0], scope);
      if (!v.is_number()) {
        throw ExprError(std::string("bad operand type for unary ") + (n.kind == Node::Kind::Neg ? "-" : "+") +
                        ": " + v.type_name());
      }
      if (n.kind == Node::Kind::Pos) return v;
      if (v.is_int() && v.as_int() != INT64_MIN) return Value(-v.as_int());
      return Value(-v.as_number());
    }
    case Node::Kind::Binary:
      return arithmetic(n.name, evaluate(*n.children[0], scope), evaluate(*n.children[1], scope));
    case Node::Kind::Compare: {
      Value left = evaluate(*n.children[0], scope);
      for (std::size_t i = 0; i < n.ops.size(); ++i) {
        Value right = evaluate(*n.children[i + 1], scope);
        if (!compare(n.ops[i], left, right)) return Value(false);
        left = std::move(right);
      }
      return Value(true);
    }
    case Node::Kind::And: {
      Value left = evaluate(*n.children[0], scope);
      if (!truthy(left)) return left;
      return evaluate(*n.children[1], scope);
    }
    case Node::Kind::Or: {
      Value left = evaluate(*n.children[0], scope);
      if (truthy(left)) return left;
      return evaluate(*n.children[1], scope);
    }
    case Node::Kind::Not: return Value(!truthy(evaluate(*n.children[0], scope)));
    case Node::Kind::Cond:
      return truthy(evaluate(*n.children[0], scope)) ? evaluate(*n.children[1], scope)
                                                     : evaluate(*n.children[2], scope);
    case Node::Kind::List: {
      Array items;
      for (const auto& c : n.children) items.push_back(evaluate(*c, scope));
      return Value(std::move(items));
    }
    case Node::Kind::Dict: {
      Object obj;
      for (std::size_t i = 0; i + 1 < n.children.size(); i += 2) {
        Value key = evaluate(*n.children[i], scope);
        if (!key.is_string()) throw ExprError(std::string("dict keys must be strings, found ") + key.type_name());
        obj.set(key.as_string(), evaluate(*n.children[i + 1], scope));
      }
      return Value(std::move(obj));
    }
    case Node::Kind::Filter: {
      std::vector<Value> args;
      for (std::size_t i = 1; i < n.children.size(); ++i) args.push_back(evaluate(*n.children[i], scope));
      if (n.name == "default") {
        if (args.size() > 1) throw ExprError("too many arguments to filter 'default'");
        Value fallback = args.empty() ? Value("") : args[0];
        try {
          Value v = evaluate(*n.children[0], scope);
          return v.is_null() ? fallback : v;
        } catch (const UndefinedError&) {
          return fallback;
        }
      }
      return apply_filter(n.name, evaluate(*n.children[0], scope), args);
    }
  }
  throw ExprError("corrupt expression tree");
}

}  // namespace expr

// ---------------------------------------------------------------- templates

namespace {

// Index of the `}` closing an expression that starts at `start` (just after
// `${`). Braces nest; quoted strings are skipped.
std::size_t find_expression_end(const std::string& s, std::size_t start) {
  int depth = 0;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"' || c == '\'') {
      for (++i; i < s.size() && s[i] != c; ++i) {
        if (s[i] == '\\') ++i;
      }
      continue;
    }
    if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (depth == 0) return i;
      --depth;
    }
  }
  throw ExprError("unterminated '${' in template \"" + s + "\"");
}

}  // namespace

TemplateExpr TemplateExpr::literal(Value v) {
  TemplateExpr t;
  t.kind_ = Kind::Literal;
  if (v.is_string()) {
    // Re-escape so the source round-trips through parse().
    std::string src;
    const std::string& s = v.as_string();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.compare(i, 2, "${") == 0) src += '\\';
      src += s[i];
    }
    t.source_ = Value(src);
  } else {
    t.source_ = v;
  }
  t.literal_ = std::move(v);
  return t;
}

TemplateExpr TemplateExpr::parse(const Value& scalar) {
  TemplateExpr t;
  t.source_ = scalar;
  if (!scalar.is_string()) {
    t.kind_ = Kind::Literal;
    t.literal_ = scalar;
    return t;
  }
  const std::string& s = scalar.as_string();
  if (s.find("{%") != std::string::npos) {
    throw ExprError("statement tags '{% ... %}' are not supported; use if:/for: blocks");
  }
  std::string text;
  bool has_expr = false;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '\\' && s.compare(i + 1, 2, "${") == 0) {
      text += "${";
      i += 3;
    } else if (s.compare(i, 2, "${") == 0) {
      const std::size_t end = find_expression_end(s, i + 2);
      if (!text.empty()) {
        t.segments_.emplace_back(std::move(text));
        text.clear();
      }
      t.segments_.emplace_back(expr::parse(std::string_view(s).substr(i + 2, end - i - 2)));
      has_expr = true;
      i = end + 1;
    } else {
      text += s[i++];
    }
  }
  if (!text.empty()) t.segments_.emplace_back(std::move(text));
  if (!has_expr) {
    t.kind_ = Kind::Literal;
    t.literal_ = Value(t.segments_.empty() ? std::string() : std::get<std::string>(t.segments_.front()));
    t.segments_.clear();
  } else if (t.segments_.size() == 1) {
    t.kind_ = Kind::Pure;
    t.pure_ = std::get<expr::NodePtr>(t.segments_.front());
    t.segments_.clear();
  } else {
    t.kind_ = Kind::Interpolation;
  }
  return t;
}

Value TemplateExpr::evaluate(const expr::Scope& scope) const {
  switch (kind_) {
    case Kind::Literal: return literal_;
    case Kind::Pure: return expr::evaluate(*pure_, scope);
    case Kind::Interpolation: {
      std::string out;
      for (const auto& seg : segments_) {
        if (const auto* text = std::get_if<std::string>(&seg)) {
          out += *text;
        } else {
          out += stringify(expr::evaluate(*std::get<expr::NodePtr>(seg), scope));
        }
      }
      return Value(std::move(out));
    }
  }
  return Value();
}

Value eval_expr(const expr::Scope& scope, const TemplateExpr& e) { return e.evaluate(scope); }

bool truthy(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return false;
    case ValueKind::Bool: return v.as_bool();
    case ValueKind::Int: return v.as_int() != 0;
    case ValueKind::Float: return v.as_float() != 0.0;
    case ValueKind::String: return !v.as_string().empty();
    case ValueKind::Array: return !v.as_array().empty();
    case ValueKind::Object: return !v.as_object().empty();
    case ValueKind::Closure: return true;
  }
  return false;
}

bool eval_condition(const expr::Scope& scope, const TemplateExpr& e) { return truthy(e.evaluate(scope)); }

std::string stringify(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return "";
    case ValueKind::Bool: return v.as_bool() ? "true" : "false";
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::Float: return format_number(v.as_float());
    case ValueKind::String: return v.as_string();
    case ValueKind::Array:
    case ValueKind::Object: return to_json(v);
    case ValueKind::Closure: throw ValueError("unserializable value: function");
  }
  return "";
}

}  // namespace pdl
