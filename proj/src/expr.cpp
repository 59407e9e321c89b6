#include "foliab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace foliab {

namespace {

struct Token {
  enum Kind { number, ident, op, lparen, rparen, end } kind;
  double value = 0;
  std::string name;
  char symbol = 0;
  size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  Token next() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    Token t;
    t.pos = i_;
    if (i_ >= s_.size()) { t.kind = Token::end; return t; }
    char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      char* endp = nullptr;
      t.value = std::strtod(s_.c_str() + i_, &endp);
      if (endp == s_.c_str() + i_)
        throw ExprParseError("expression: bad number at position " + std::to_string(i_));
      i_ = static_cast<size_t>(endp - s_.c_str());
      t.kind = Token::number;
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i_;
      while (j < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_'))
        ++j;
      t.kind = Token::ident;
      t.name = s_.substr(i_, j - i_);
      i_ = j;
      return t;
    }
    if (c == '(') { t.kind = Token::lparen; ++i_; return t; }
    if (c == ')') { t.kind = Token::rparen; ++i_; return t; }
    if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
      t.kind = Token::op;
      t.symbol = c;
      ++i_;
      return t;
    }
    throw ExprParseError(std::string("expression: unexpected character '") + c +
                         "' at position " + std::to_string(i_));
  }

 private:
  const std::string& s_;
  size_t i_ = 0;
};

}  // namespace

class ExprParser {
 public:
  ExprParser(const std::string& text, int n_vars)
      : lex_(text), n_vars_(n_vars) { advance(); }

  Expr run(const std::string& text) {
    Expr e;
    e.text_ = text;
    e.n_vars_ = n_vars_;
    nodes_ = &e.nodes_;
    int root = parse_sum();
    if (cur_.kind != Token::end)
      throw ExprParseError("expression: trailing input at position " +
                           std::to_string(cur_.pos));
    (void)root;  // root is always the last node by construction
    return e;
  }

 private:
  using Node = Expr::Node;
  using Op = Expr::Op;

  void advance() { cur_ = lex_.next(); }

  int push(Node n) {
    nodes_->push_back(n);
    return static_cast<int>(nodes_->size()) - 1;
  }

  int parse_sum() {
    int lhs = parse_product();
    while (cur_.kind == Token::op && (cur_.symbol == '+' || cur_.symbol == '-')) {
      char s = cur_.symbol;
      advance();
      int rhs = parse_product();
      lhs = push({s == '+' ? Op::add : Op::sub, 0, lhs, rhs});
    }
    return lhs;
  }

  int parse_product() {
    int lhs = parse_unary();
    while (cur_.kind == Token::op && (cur_.symbol == '*' || cur_.symbol == '/')) {
      char s = cur_.symbol;
      advance();
      int rhs = parse_unary();
      lhs = push({s == '*' ? Op::mul : Op::div, 0, lhs, rhs});
    }
    return lhs;
  }

  int parse_unary() {
    if (cur_.kind == Token::op && cur_.symbol == '-') {
      advance();
      int arg = parse_unary();
      return push({Op::neg, 0, arg, -1});
    }
    if (cur_.kind == Token::op && cur_.symbol == '+') {
      advance();
      return parse_unary();
    }
    return parse_power();
  }

  int parse_power() {
    int base = parse_atom();
    if (cur_.kind == Token::op && cur_.symbol == '^') {
      advance();
      // right-associative; exponent may itself be a unary-minus expression
      int expo = (cur_.kind == Token::op && cur_.symbol == '-')
                     ? [&] { advance(); int a = parse_power(); return push({Op::neg, 0, a, -1}); }()
                     : parse_power();
      // integer literal exponents take the sign-safe repeated-multiplication path
      const Node& e = (*nodes_)[static_cast<size_t>(expo)];
      if (e.op == Op::num && e.value == std::floor(e.value) && std::fabs(e.value) < 64)
        return push({Op::pow_int, e.value, base, -1});
      if (e.op == Op::neg) {
        const Node& inner = (*nodes_)[static_cast<size_t>(e.lhs)];
        if (inner.op == Op::num && inner.value == std::floor(inner.value) &&
            std::fabs(inner.value) < 64)
          return push({Op::pow_int, -inner.value, base, -1});
      }
      return push({Op::pow_gen, 0, base, expo});
    }
    return base;
  }

  int parse_atom() {
    if (cur_.kind == Token::number) {
      double v = cur_.value;
      advance();
      return push({Op::num, v, -1, -1});
    }
    if (cur_.kind == Token::lparen) {
      advance();
      int e = parse_sum();
      expect_rparen();
      return e;
    }
    if (cur_.kind == Token::ident) {
      std::string name = cur_.name;
      size_t pos = cur_.pos;
      advance();
      if (name == "pi") return push({Op::num, 3.14159265358979323846, -1, -1});
      if (cur_.kind == Token::lparen) {
        advance();
        int arg = parse_sum();
        expect_rparen();
        Op op;
        if (name == "exp") op = Op::f_exp;
        else if (name == "sin") op = Op::f_sin;
        else if (name == "cos") op = Op::f_cos;
        else if (name == "sinh") op = Op::f_sinh;
        else if (name == "cosh") op = Op::f_cosh;
        else if (name == "sqrt") op = Op::f_sqrt;
        else
          throw ExprParseError("expression: unknown function '" + name +
                               "' at position " + std::to_string(pos));
        return push({op, 0, arg, -1});
      }
      if (name.size() >= 2 && name[0] == 'x') {
        char* endp = nullptr;
        long idx = std::strtol(name.c_str() + 1, &endp, 10);
        if (*endp == '\0' && idx >= 1 && idx <= n_vars_)
          return push({Op::var, static_cast<double>(idx - 1), -1, -1});
      }
      throw ExprParseError("expression: unknown identifier '" + name +
                           "' at position " + std::to_string(pos) +
                           " (variables are x1..x" + std::to_string(n_vars_) + ")");
    }
    throw ExprParseError("expression: unexpected token at position " +
                         std::to_string(cur_.pos));
  }

  void expect_rparen() {
    if (cur_.kind != Token::rparen)
      throw ExprParseError("expression: expected ')' at position " +
                           std::to_string(cur_.pos));
    advance();
  }

  Lexer lex_;
  Token cur_;
  int n_vars_;
  std::vector<Node>* nodes_ = nullptr;
};

Expr Expr::parse(const std::string& text, int n_vars) {
  ExprParser p(text, n_vars);
  return p.run(text);
}

}  // namespace foliab
