// Copyright 2026 The Futur Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "futur/pysyntax.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <initializer_list>
#include <unordered_set>

namespace futur::py {
namespace {

bool IsDigit(char c) { return c >= '0' && c <= '9'; }

const std::unordered_set<std::string>& Keywords() {
  static const std::unordered_set<std::string> kw = {
      "False", "None",   "True",    "and",      "as",     "assert", "async",
      "await", "break",  "class",   "continue", "def",    "del",    "elif",
      "else",  "except", "finally", "for",      "from",   "global", "if",
      "import", "in",    "is",      "lambda",   "nonlocal", "not",  "or",
      "pass",  "raise",  "return",  "try",      "while",  "with",   "yield"};
  return kw;
}

bool IsStringPrefix(std::string_view id) {
  std::string l = ToLower(id);
  return l == "r" || l == "u" || l == "b" || l == "f" || l == "br" || l == "rb" ||
         l == "fr" || l == "rf";
}

constexpr std::array<std::string_view, 24> kMultiOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@="};
constexpr std::string_view kSingleOps = "+-*/%@&|^~<>()[]{},:;.=";

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> Run() {
    const size_t n = src_.size();
    bool at_line_start = true;
    while (i_ < n) {
      if (at_line_start && brackets_.empty()) {
        if (!Indentation()) break;
        at_line_start = false;
        continue;
      }
      char c = src_[i_];
      if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
        ++i_;
      } else if (c == '#') {
        while (i_ < n && src_[i_] != '\n') ++i_;
      } else if (c == '\n') {
        if (brackets_.empty()) {
          Push(TokKind::kNewline, i_, i_ + 1);
          at_line_start = true;
        }
        ++line_;
        ++i_;
      } else if (c == '\\') {
        size_t j = i_ + 1;
        if (j < n && src_[j] == '\r') ++j;
        if (j < n && src_[j] == '\n') {
          i_ = j + 1;
          ++line_;
        } else {
          throw SyntaxError("unexpected character after line continuation character", line_);
        }
      } else if (IsIdentStart(c)) {
        size_t start = i_;
        while (i_ < n && IsIdentChar(src_[i_])) ++i_;
        std::string_view id = src_.substr(start, i_ - start);
        if (i_ < n && (src_[i_] == '\'' || src_[i_] == '"') && IsStringPrefix(id)) {
          String(start);
        } else {
          Push(TokKind::kName, start, i_);
        }
      } else if (IsDigit(c) || (c == '.' && i_ + 1 < n && IsDigit(src_[i_ + 1]))) {
        Number();
      } else if (c == '\'' || c == '"') {
        String(i_);
      } else {
        Operator();
      }
    }
    if (!brackets_.empty()) {
      throw SyntaxError("unexpected EOF: '" + std::string(1, brackets_.back()) + "' was never closed",
                        line_);
    }
    if (!toks_.empty() && toks_.back().kind != TokKind::kNewline &&
        toks_.back().kind != TokKind::kDedent) {
      Push(TokKind::kNewline, n, n);
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      Push(TokKind::kDedent, n, n);
    }
    Push(TokKind::kEnd, n, n);
    return std::move(toks_);
  }

 private:
  void Push(TokKind kind, size_t b, size_t e) {
    toks_.push_back(Token{kind, std::string(src_.substr(b, e - b)), b, e, line_});
  }

  // Consumes leading whitespace of a logical line; returns false at EOF.
  bool Indentation() {
    const size_t n = src_.size();
    while (true) {
      int col = 0;
      size_t j = i_;
      while (j < n && (src_[j] == ' ' || src_[j] == '\t' || src_[j] == '\f')) {
        if (src_[j] == '\t') col = (col / 8 + 1) * 8;
        else if (src_[j] == ' ') ++col;
        else col = 0;
        ++j;
      }
      if (j >= n) {
        i_ = j;
        return false;
      }
      if (src_[j] == '#' || src_[j] == '\n' || src_[j] == '\r') {
        while (j < n && src_[j] != '\n') ++j;
        if (j < n) {
          ++j;
          ++line_;
        }
        i_ = j;
        continue;
      }
      if (col > indents_.back()) {
        if (toks_.empty() || toks_.back().kind != TokKind::kNewline) {
          throw SyntaxError("unexpected indent", line_);
        }
        indents_.push_back(col);
        Push(TokKind::kIndent, j, j);
      } else {
        while (col < indents_.back()) {
          indents_.pop_back();
          Push(TokKind::kDedent, j, j);
        }
        if (col != indents_.back()) {
          throw SyntaxError("unindent does not match any outer indentation level", line_);
        }
      }
      i_ = j;
      return true;
    }
  }

  void String(size_t start) {
    const size_t n = src_.size();
    char q = src_[i_];
    bool triple = i_ + 2 < n && src_[i_ + 1] == q && src_[i_ + 2] == q;
    int start_line = line_;
    i_ += triple ? 3 : 1;
    while (true) {
      if (i_ >= n) throw SyntaxError("unterminated string literal", start_line);
      char c = src_[i_];
      if (c == '\\') {
        if (i_ + 1 < n && src_[i_ + 1] == '\n') ++line_;
        i_ += 2;
        continue;
      }
      if (c == '\n') {
        if (!triple) throw SyntaxError("unterminated string literal", start_line);
        ++line_;
        ++i_;
        continue;
      }
      if (c == q) {
        if (!triple) {
          ++i_;
          break;
        }
        if (i_ + 2 < n && src_[i_ + 1] == q && src_[i_ + 2] == q) {
          i_ += 3;
          break;
        }
      }
      ++i_;
    }
    Push(TokKind::kString, start, i_);
  }

  void Number() {
    const size_t n = src_.size();
    size_t start = i_;
    auto digits = [&](auto pred) {
      while (i_ < n && (pred(src_[i_]) || src_[i_] == '_')) ++i_;
    };
    if (src_[i_] == '0' && i_ + 1 < n && std::strchr("xXoObB", src_[i_ + 1])) {
      i_ += 2;
      digits([](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; });
    } else {
      digits(IsDigit);
      if (i_ < n && src_[i_] == '.') {
        ++i_;
        digits(IsDigit);
      }
      if (i_ < n && (src_[i_] == 'e' || src_[i_] == 'E')) {
        size_t save = i_;
        ++i_;
        if (i_ < n && (src_[i_] == '+' || src_[i_] == '-')) ++i_;
        if (i_ < n && IsDigit(src_[i_])) {
          digits(IsDigit);
        } else {
          i_ = save;
        }
      }
      if (i_ < n && (src_[i_] == 'j' || src_[i_] == 'J')) ++i_;
    }
    if (i_ < n && IsIdentChar(src_[i_])) {
      throw SyntaxError("invalid decimal literal", line_);
    }
    Push(TokKind::kNumber, start, i_);
  }

  void Operator() {
    for (std::string_view op : kMultiOps) {
      if (src_.substr(i_, op.size()) == op) {
        Push(TokKind::kOp, i_, i_ + op.size());
        i_ += op.size();
        return;
      }
    }
    char c = src_[i_];
    if (kSingleOps.find(c) == std::string_view::npos) {
      throw SyntaxError(std::string("invalid character '") + c + "'", line_);
    }
    if (c == '(' || c == '[' || c == '{') {
      brackets_.push_back(c);
    } else if (c == ')' || c == ']' || c == '}') {
      char open = c == ')' ? '(' : c == ']' ? '[' : '{';
      if (brackets_.empty()) throw SyntaxError(std::string("unmatched '") + c + "'", line_);
      if (brackets_.back() != open) {
        throw SyntaxError(std::string("closing parenthesis '") + c +
                              "' does not match opening parenthesis '" + brackets_.back() + "'",
                          line_);
      }
      brackets_.pop_back();
    }
    Push(TokKind::kOp, i_, i_ + 1);
    ++i_;
  }

  std::string_view src_;
  size_t i_ = 0;
  int line_ = 1;
  std::vector<int> indents_{0};
  std::vector<char> brackets_;
  std::vector<Token> toks_;
};

// Shape of a parsed expression, kept only as far as assignment-target
// validation and callee naming require.
struct Expr {
  enum Kind { kName, kAttr, kSubscript, kTuple, kList, kStarred, kCall, kOther };
  Kind kind = kOther;
  int ref = -1;        // kName: index into the statement's name references
  std::string root;    // kAttr/kSubscript/kName: root identifier of the chain
  std::string dotted;  // kName/kAttr: "a.b.c" when the chain is pure names
  size_t last_name_begin = 0;
  std::vector<Expr> elts;
};

class Parser {
 public:
  Parser(std::string_view src, std::vector<Token> toks) : toks_(std::move(toks)) {
    mod_.source = std::string(src);
  }

  Module Run() {
    while (Peek().kind != TokKind::kEnd) {
      if (Peek().kind == TokKind::kNewline) {
        Next();
        continue;
      }
      if (Peek().kind == TokKind::kIndent) throw Error("unexpected indent");
      if (Peek().kind == TokKind::kDedent) throw Error("unexpected dedent");
      TopLevel();
    }
    return std::move(mod_);
  }

 private:
  struct NameRef {
    std::string name;
    bool store = false;
  };
  struct Frame {
    int call = -1;  // -1 marks a subscript (not an API input)
    int arg_index = -1;
    std::string keyword;
  };

  // ---- token helpers ------------------------------------------------------

  const Token& Peek(size_t k = 0) const {
    size_t idx = std::min(pos_ + k, toks_.size() - 1);
    return toks_[idx];
  }
  const Token& Next() {
    const Token& t = toks_[pos_];
    if (t.kind != TokKind::kNewline && t.kind != TokKind::kIndent &&
        t.kind != TokKind::kDedent && t.kind != TokKind::kEnd) {
      last_end_ = t.end;
    }
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool IsOp(std::string_view op, size_t k = 0) const {
    return Peek(k).kind == TokKind::kOp && Peek(k).text == op;
  }
  bool IsKw(std::string_view kw, size_t k = 0) const {
    return Peek(k).kind == TokKind::kName && Peek(k).text == kw;
  }
  bool IsPlainName(size_t k = 0) const {
    return Peek(k).kind == TokKind::kName && !Keywords().count(Peek(k).text);
  }
  bool AcceptOp(std::string_view op) {
    if (!IsOp(op)) return false;
    Next();
    return true;
  }
  bool AcceptKw(std::string_view kw) {
    if (!IsKw(kw)) return false;
    Next();
    return true;
  }
  SyntaxError Error(const std::string& what) const {
    const Token& t = Peek();
    std::string near = t.kind == TokKind::kNewline ? "end of line"
                       : t.kind == TokKind::kEnd   ? "end of input"
                       : t.kind == TokKind::kIndent ? "indent"
                       : t.kind == TokKind::kDedent ? "dedent"
                                                    : "'" + t.text + "'";
    return SyntaxError(what + " near " + near, t.line);
  }
  void ExpectOp(std::string_view op) {
    if (!AcceptOp(op)) throw Error("expected '" + std::string(op) + "'");
  }
  void ExpectKw(std::string_view kw) {
    if (!AcceptKw(kw)) throw Error("expected '" + std::string(kw) + "'");
  }
  std::string ExpectName() {
    if (!IsPlainName()) throw Error("expected identifier");
    return Next().text;
  }
  void ExpectNewline() {
    if (Peek().kind != TokKind::kNewline) throw Error("invalid syntax");
    Next();
  }

  // ---- statement bookkeeping ---------------------------------------------

  void BeginStatement(bool compound) {
    Statement st;
    st.begin = Peek().begin;
    st.compound = compound;
    mod_.statements.push_back(std::move(st));
    cur_ = mod_.statements.size() - 1;
    refs_.clear();
  }
  void EndStatement() {
    Statement& st = mod_.statements[cur_];
    st.end = last_end_;
    for (const NameRef& r : refs_) {
      if (!r.store) st.loads.insert(r.name);
    }
    refs_.clear();
  }
  Statement& Cur() { return mod_.statements[cur_]; }

  int AddRef(const std::string& name) {
    refs_.push_back(NameRef{name, false});
    return static_cast<int>(refs_.size()) - 1;
  }
  void Bind(const std::string& name, bool kill) {
    if (scope_depth_ > 0) return;
    Cur().binds.insert(name);
    if (kill && block_depth_ == 0) Cur().kills.insert(name);
  }

  // Converts a parsed expression into an assignment target.
  void Store(Expr& e, bool kill) {
    switch (e.kind) {
      case Expr::kName:
        refs_[static_cast<size_t>(e.ref)].store = true;
        Bind(refs_[static_cast<size_t>(e.ref)].name, kill);
        break;
      case Expr::kAttr:
      case Expr::kSubscript:
        if (!e.root.empty() && scope_depth_ == 0) Cur().modifies.insert(e.root);
        break;
      case Expr::kTuple:
      case Expr::kList:
      case Expr::kStarred:
        for (Expr& sub : e.elts) Store(sub, kill);
        break;
      default:
        throw Error("cannot assign to expression");
    }
  }

  // ---- statements ---------------------------------------------------------

  void TopLevel() {
    if (IsCompoundStart()) {
      BeginStatement(true);
      Compound();
      EndStatement();
      return;
    }
    // Each `;`-separated small statement is its own top-level statement.
    while (true) {
      BeginStatement(false);
      SmallStatement();
      EndStatement();
      if (!AcceptOp(";")) break;
      if (Peek().kind == TokKind::kNewline) break;
    }
    ExpectNewline();
  }

  bool IsCompoundStart() const {
    if (IsOp("@")) return true;
    if (Peek().kind != TokKind::kName) return false;
    const std::string& t = Peek().text;
    if (t == "async") return IsKw("def", 1) || IsKw("for", 1) || IsKw("with", 1);
    return t == "if" || t == "while" || t == "for" || t == "try" || t == "with" ||
           t == "def" || t == "class";
  }

  void NestedStatement() {
    if (IsCompoundStart()) {
      Compound();
      return;
    }
    SimpleStatements();
  }

  void SimpleStatements() {
    SmallStatement();
    while (AcceptOp(";")) {
      if (Peek().kind == TokKind::kNewline) break;
      SmallStatement();
    }
    ExpectNewline();
  }

  void Block() {
    if (Peek().kind != TokKind::kNewline) {
      ++block_depth_;
      SimpleStatements();
      --block_depth_;
      return;
    }
    Next();
    if (Peek().kind != TokKind::kIndent) throw Error("expected an indented block");
    Next();
    ++block_depth_;
    while (Peek().kind != TokKind::kDedent && Peek().kind != TokKind::kEnd) {
      if (Peek().kind == TokKind::kNewline) {
        Next();
        continue;
      }
      NestedStatement();
    }
    if (Peek().kind == TokKind::kDedent) Next();
    --block_depth_;
  }

  void Compound() {
    if (IsOp("@")) {
      while (AcceptOp("@")) {
        NamedExprTest();
        ExpectNewline();
      }
      if (IsKw("def") || IsKw("class") || (IsKw("async") && IsKw("def", 1))) {
        Compound();
        return;
      }
      throw Error("expected def or class after decorator");
    }
    AcceptKw("async");
    const std::string kw = Peek().text;
    if (kw == "if") {
      Next();
      NamedExprTest();
      ExpectOp(":");
      Block();
      while (IsKw("elif")) {
        Next();
        NamedExprTest();
        ExpectOp(":");
        Block();
      }
      if (AcceptKw("else")) {
        ExpectOp(":");
        Block();
      }
    } else if (kw == "while") {
      Next();
      NamedExprTest();
      ExpectOp(":");
      Block();
      if (AcceptKw("else")) {
        ExpectOp(":");
        Block();
      }
    } else if (kw == "for") {
      Next();
      Expr target = ExprList();
      Store(target, false);
      ExpectKw("in");
      TestList();
      ExpectOp(":");
      Block();
      if (AcceptKw("else")) {
        ExpectOp(":");
        Block();
      }
    } else if (kw == "try") {
      Next();
      ExpectOp(":");
      Block();
      bool handlers = false;
      while (IsKw("except")) {
        handlers = true;
        Next();
        AcceptOp("*");
        if (!IsOp(":")) {
          Test();
          if (AcceptKw("as")) Bind(ExpectName(), false);
          else if (AcceptOp(",")) Test();
        }
        ExpectOp(":");
        Block();
      }
      if (handlers && AcceptKw("else")) {
        ExpectOp(":");
        Block();
      }
      if (AcceptKw("finally")) {
        ExpectOp(":");
        Block();
      } else if (!handlers) {
        throw Error("expected 'except' or 'finally' block");
      }
    } else if (kw == "with") {
      Next();
      bool paren = IsOp("(") && WithParenthesized();
      if (paren) Next();
      do {
        if (paren && IsOp(")")) break;
        Test();
        if (AcceptKw("as")) {
          Expr target = Primary();
          Store(target, false);
        }
      } while (AcceptOp(","));
      if (paren) ExpectOp(")");
      ExpectOp(":");
      Block();
    } else if (kw == "def") {
      Next();
      std::string name = ExpectName();
      Bind(name, true);
      ++scope_depth_;
      ExpectOp("(");
      Parameters(")");
      ExpectOp(")");
      if (AcceptOp("->")) Test();
      ExpectOp(":");
      Block();
      --scope_depth_;
    } else if (kw == "class") {
      Next();
      std::string name = ExpectName();
      Bind(name, true);
      if (AcceptOp("(")) {
        if (!IsOp(")")) ArgList(-1);
        ExpectOp(")");
      }
      ExpectOp(":");
      ++scope_depth_;
      Block();
      --scope_depth_;
    } else {
      throw Error("invalid syntax");
    }
  }

  // Distinguishes `with (a as b, c as d):` from `with (a, b) as t:`.
  bool WithParenthesized() const {
    int depth = 0;
    for (size_t k = 0;; ++k) {
      const Token& t = Peek(k);
      if (t.kind == TokKind::kEnd || t.kind == TokKind::kNewline) return false;
      if (t.kind == TokKind::kOp) {
        if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
        if (t.text == ")" || t.text == "]" || t.text == "}") {
          if (--depth == 0) return IsOp(":", k + 1);
        }
      }
      if (depth == 1 && t.kind == TokKind::kName && t.text == "as") return true;
    }
  }

  void Parameters(std::string_view close) {
    while (!IsOp(close)) {
      if (AcceptOp("**")) {
        ExpectName();
        if (close == ")" && AcceptOp(":")) Test();
      } else if (AcceptOp("*")) {
        if (IsPlainName()) {
          Next();
          if (close == ")" && AcceptOp(":")) Test();
        }
      } else if (AcceptOp("/")) {
      } else {
        ExpectName();
        if (close == ")" && AcceptOp(":")) Test();
        if (AcceptOp("=")) Test();
      }
      if (!AcceptOp(",")) break;
    }
  }

  void SmallStatement() {
    const Token& t = Peek();
    if (t.kind == TokKind::kName) {
      const std::string& w = t.text;
      if (w == "pass" || w == "break" || w == "continue") {
        Next();
        return;
      }
      if (w == "return") {
        Next();
        if (!AtStatementEnd()) TestListStarExpr();
        return;
      }
      if (w == "raise") {
        Next();
        if (!AtStatementEnd()) {
          Test();
          if (AcceptKw("from")) Test();
        }
        return;
      }
      if (w == "global" || w == "nonlocal") {
        Next();
        do ExpectName();
        while (AcceptOp(","));
        return;
      }
      if (w == "del") {
        Next();
        Expr e = ExprList();
        DeleteTarget(e);
        return;
      }
      if (w == "assert") {
        Next();
        Test();
        if (AcceptOp(",")) Test();
        return;
      }
      if (w == "yield") {
        YieldExpr();
        return;
      }
      if (w == "import") {
        ImportName();
        return;
      }
      if (w == "from") {
        ImportFrom();
        return;
      }
    }
    ExprStatement();
  }

  bool AtStatementEnd() const { return Peek().kind == TokKind::kNewline || IsOp(";"); }

  void DeleteTarget(Expr& e) {
    switch (e.kind) {
      case Expr::kName:
        refs_[static_cast<size_t>(e.ref)].store = true;
        break;
      case Expr::kAttr:
      case Expr::kSubscript:
        if (!e.root.empty() && scope_depth_ == 0) Cur().modifies.insert(e.root);
        break;
      case Expr::kTuple:
      case Expr::kList:
        for (Expr& s : e.elts) DeleteTarget(s);
        break;
      default:
        throw Error("cannot delete expression");
    }
  }

  std::string DottedName() {
    std::string name = ExpectName();
    while (AcceptOp(".")) name += "." + ExpectName();
    return name;
  }

  void ImportName() {
    Next();
    Cur().is_import = true;
    do {
      std::string module = DottedName();
      std::string local;
      if (AcceptKw("as")) {
        local = ExpectName();
        AddImport(local, module);
      } else {
        local = module.substr(0, module.find('.'));
        AddImport(local, local);
      }
      Bind(local, true);
    } while (AcceptOp(","));
  }

  void ImportFrom() {
    Next();
    Cur().is_import = true;
    std::string module;
    while (IsOp(".") || IsOp("...")) module += Next().text;
    if (!IsKw("import")) module += DottedName();
    ExpectKw("import");
    if (AcceptOp("*")) return;
    bool paren = AcceptOp("(");
    do {
      if (paren && IsOp(")")) break;
      std::string name = ExpectName();
      std::string local = name;
      if (AcceptKw("as")) local = ExpectName();
      std::string full = module;
      if (!full.empty() && full.back() != '.') full += '.';
      full += name;
      AddImport(local, full);
      Bind(local, true);
    } while (AcceptOp(","));
    if (paren) ExpectOp(")");
  }

  void AddImport(const std::string& local, const std::string& module) {
    if (scope_depth_ > 0) return;
    mod_.imports.push_back(ImportBinding{local, module});
  }

  void ExprStatement() {
    Expr first = TestListStarExpr();
    if (IsOp(":")) {
      // annotated assignment
      Next();
      Test();
      if (AcceptOp("=")) {
        if (IsKw("yield")) YieldExpr();
        else TestListStarExpr();
        Store(first, true);
      } else if (first.kind == Expr::kName) {
        Bind(refs_[static_cast<size_t>(first.ref)].name, false);
        refs_[static_cast<size_t>(first.ref)].store = true;
      }
      return;
    }
    if (Peek().kind == TokKind::kOp && Peek().text.size() >= 2 && Peek().text.back() == '=' &&
        Peek().text != "==" && Peek().text != "<=" && Peek().text != ">=" &&
        Peek().text != "!=" && Peek().text != ":=") {
      // augmented assignment: target is both read and updated
      Next();
      if (first.kind == Expr::kName) {
        Bind(refs_[static_cast<size_t>(first.ref)].name, false);
        if (scope_depth_ == 0) Cur().modifies.insert(refs_[static_cast<size_t>(first.ref)].name);
      } else if (first.kind == Expr::kAttr || first.kind == Expr::kSubscript) {
        if (!first.root.empty() && scope_depth_ == 0) Cur().modifies.insert(first.root);
      } else {
        throw Error("illegal expression for augmented assignment");
      }
      if (IsKw("yield")) YieldExpr();
      else TestList();
      return;
    }
    std::vector<Expr> targets;
    while (AcceptOp("=")) {
      targets.push_back(std::move(first));
      if (IsKw("yield")) {
        YieldExpr();
        first = Expr{};
      } else {
        first = TestListStarExpr();
      }
    }
    for (Expr& t : targets) Store(t, true);
  }

  // ---- expressions --------------------------------------------------------

  Expr TestListStarExpr() {
    Expr first = IsOp("*") ? StarExpr() : NamedExprTest();
    if (!IsOp(",")) return first;
    Expr tuple;
    tuple.kind = Expr::kTuple;
    tuple.elts.push_back(std::move(first));
    while (AcceptOp(",")) {
      if (!StartsExpression()) break;
      tuple.elts.push_back(IsOp("*") ? StarExpr() : NamedExprTest());
    }
    return tuple;
  }

  Expr TestList() {
    Expr first = Test();
    if (!IsOp(",")) return first;
    Expr tuple;
    tuple.kind = Expr::kTuple;
    tuple.elts.push_back(std::move(first));
    while (AcceptOp(",")) {
      if (!StartsExpression()) break;
      tuple.elts.push_back(Test());
    }
    return tuple;
  }

  Expr ExprList() {
    Expr first = IsOp("*") ? StarExpr() : OrExpr();
    if (!IsOp(",")) return first;
    Expr tuple;
    tuple.kind = Expr::kTuple;
    tuple.elts.push_back(std::move(first));
    while (AcceptOp(",")) {
      if (!StartsExpression() || IsKw("in")) break;
      tuple.elts.push_back(IsOp("*") ? StarExpr() : OrExpr());
    }
    return tuple;
  }

  bool StartsExpression() const {
    const Token& t = Peek();
    switch (t.kind) {
      case TokKind::kNumber:
      case TokKind::kString:
        return true;
      case TokKind::kName:
        return !Keywords().count(t.text) || t.text == "None" || t.text == "True" ||
               t.text == "False" || t.text == "not" || t.text == "lambda" ||
               t.text == "await" || t.text == "yield";
      case TokKind::kOp:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" ||
               t.text == "+" || t.text == "~" || t.text == "*" || t.text == "..." ||
               t.text == "**";
      default:
        return false;
    }
  }

  Expr StarExpr() {
    ExpectOp("*");
    Expr e;
    e.kind = Expr::kStarred;
    e.elts.push_back(OrExpr());
    return e;
  }

  void YieldExpr() {
    ExpectKw("yield");
    if (AcceptKw("from")) {
      Test();
      return;
    }
    if (StartsExpression() && !IsOp(")")) TestListStarExpr();
  }

  Expr NamedExprTest() {
    if (IsPlainName() && IsOp(":=", 1)) {
      std::string name = Next().text;
      Next();
      Bind(name, false);
      Test();
      return Expr{};
    }
    return Test();
  }

  Expr Test() {
    if (IsKw("lambda")) {
      Lambda();
      return Expr{};
    }
    Expr e = OrTest();
    if (AcceptKw("if")) {
      OrTest();
      ExpectKw("else");
      Test();
      return Expr{};
    }
    return e;
  }

  Expr TestNoCond() {
    if (IsKw("lambda")) {
      Lambda();
      return Expr{};
    }
    return OrTest();
  }

  void Lambda() {
    ExpectKw("lambda");
    ++scope_depth_;
    Parameters(":");
    ExpectOp(":");
    Test();
    --scope_depth_;
  }

  Expr OrTest() {
    Expr e = AndTest();
    while (AcceptKw("or")) {
      AndTest();
      e = Expr{};
    }
    return e;
  }

  Expr AndTest() {
    Expr e = NotTest();
    while (AcceptKw("and")) {
      NotTest();
      e = Expr{};
    }
    return e;
  }

  Expr NotTest() {
    if (AcceptKw("not")) {
      NotTest();
      return Expr{};
    }
    return Comparison();
  }

  bool AcceptCompOp() {
    static const std::unordered_set<std::string> ops = {"<", ">", "==", ">=", "<=", "!="};
    if (Peek().kind == TokKind::kOp && ops.count(Peek().text)) {
      Next();
      return true;
    }
    if (AcceptKw("in")) return true;
    if (IsKw("not") && IsKw("in", 1)) {
      Next();
      Next();
      return true;
    }
    if (AcceptKw("is")) {
      AcceptKw("not");
      return true;
    }
    return false;
  }

  Expr Comparison() {
    Expr e = OrExpr();
    while (AcceptCompOp()) {
      OrExpr();
      e = Expr{};
    }
    return e;
  }

  template <typename Sub>
  Expr BinaryLevel(std::initializer_list<std::string_view> ops, Sub sub) {
    Expr e = (this->*sub)();
    while (true) {
      bool matched = false;
      for (std::string_view op : ops) {
        if (IsOp(op)) {
          matched = true;
          break;
        }
      }
      if (!matched) return e;
      Next();
      (this->*sub)();
      e = Expr{};
    }
  }

  Expr OrExpr() { return BinaryLevel({"|"}, &Parser::XorExpr); }
  Expr XorExpr() { return BinaryLevel({"^"}, &Parser::AndExpr); }
  Expr AndExpr() { return BinaryLevel({"&"}, &Parser::ShiftExpr); }
  Expr ShiftExpr() { return BinaryLevel({"<<", ">>"}, &Parser::ArithExpr); }
  Expr ArithExpr() { return BinaryLevel({"+", "-"}, &Parser::Term); }
  Expr Term() { return BinaryLevel({"*", "/", "%", "//", "@"}, &Parser::Factor); }

  Expr Factor() {
    if (IsOp("-") && Peek(1).kind == TokKind::kNumber && !IsOp("**", 2) && !IsOp("(", 2) &&
        !IsOp("[", 2) && !IsOp(".", 2)) {
      const Token& minus = Next();
      const Token& num = Next();
      RecordNumber(minus.begin, num.end, num.text, true);
      return Expr{};
    }
    if (IsOp("-") || IsOp("+") || IsOp("~")) {
      Next();
      Factor();
      return Expr{};
    }
    return Power();
  }

  Expr Power() {
    AcceptKw("await");
    Expr e = Primary();
    if (AcceptOp("**")) {
      Factor();
      return Expr{};
    }
    return e;
  }

  void RecordNumber(size_t begin, size_t end, const std::string& text, bool negative) {
    if (text.back() == 'j' || text.back() == 'J') return;
    NumericLiteral lit;
    lit.begin = begin;
    lit.end = end;
    lit.text = mod_.source.substr(begin, end - begin);
    lit.negative = negative;
    bool hex = text.size() > 1 && text[0] == '0' && std::strchr("xXoObB", text[1]);
    lit.is_float = !hex && text.find_first_of(".eE") != std::string::npos;
    if (!frames_.empty() && frames_.back().call >= 0) {
      lit.call = frames_.back().call;
      lit.arg_index = frames_.back().arg_index;
      lit.arg_keyword = frames_.back().keyword;
    }
    lit.stmt = cur_;
    mod_.numbers.push_back(std::move(lit));
  }

  Expr Primary() {
    Expr e = Atom();
    while (true) {
      if (IsOp("(")) {
        Call(e);
        Expr c;
        c.kind = Expr::kCall;
        c.root = e.root;
        e = std::move(c);
      } else if (IsOp("[")) {
        Next();
        frames_.push_back(Frame{});
        SubscriptList();
        frames_.pop_back();
        ExpectOp("]");
        Expr s;
        s.kind = Expr::kSubscript;
        s.root = e.root;
        e = std::move(s);
      } else if (IsOp(".")) {
        Next();
        if (!IsPlainName()) throw Error("expected attribute name");
        const Token& t = Next();
        Expr a;
        a.kind = Expr::kAttr;
        a.root = e.root;
        if (!e.dotted.empty()) a.dotted = e.dotted + "." + t.text;
        a.last_name_begin = t.begin;
        e = std::move(a);
      } else {
        return e;
      }
    }
  }

  void Call(const Expr& callee) {
    CallSite site;
    site.callee = callee.dotted;
    if (!callee.dotted.empty()) {
      size_t dot = callee.dotted.rfind('.');
      site.terminal = dot == std::string::npos ? callee.dotted : callee.dotted.substr(dot + 1);
      site.name_begin = callee.last_name_begin;
    }
    site.stmt = cur_;
    mod_.calls.push_back(std::move(site));
    int idx = static_cast<int>(mod_.calls.size()) - 1;
    Cur().calls.push_back(static_cast<size_t>(idx));
    ExpectOp("(");
    if (!IsOp(")")) ArgList(idx);
    ExpectOp(")");
  }

  void ArgList(int call) {
    int position = 0;
    int index = 0;
    while (!IsOp(")")) {
      Argument arg;
      arg.begin = Peek().begin;
      Frame frame{call, index, ""};
      if (IsOp("**")) {
        Next();
        arg.starred = true;
        arg.position = -1;
        frames_.push_back(frame);
        Test();
        frames_.pop_back();
      } else if (IsOp("*")) {
        Next();
        arg.starred = true;
        arg.position = position++;
        frames_.push_back(frame);
        Test();
        frames_.pop_back();
      } else if (IsPlainName() && IsOp("=", 1)) {
        arg.keyword = Next().text;
        Next();
        arg.begin = Peek().begin;
        arg.position = -1;
        frame.keyword = arg.keyword;
        frames_.push_back(frame);
        Test();
        frames_.pop_back();
      } else {
        arg.position = position++;
        frames_.push_back(frame);
        NamedExprTest();
        if (IsKw("for") || (IsKw("async") && IsKw("for", 1))) CompFor();
        frames_.pop_back();
      }
      arg.end = last_end_;
      arg.text = mod_.source.substr(arg.begin, arg.end - arg.begin);
      if (call >= 0) mod_.calls[static_cast<size_t>(call)].args.push_back(std::move(arg));
      ++index;
      if (!AcceptOp(",")) break;
    }
  }

  void SubscriptList() {
    do {
      if (IsOp("]")) break;
      Subscript();
    } while (AcceptOp(","));
  }

  void Subscript() {
    if (IsOp("*")) {
      StarExpr();
      return;
    }
    if (!IsOp(":")) {
      NamedExprTest();
      if (!IsOp(":")) return;
    }
    ExpectOp(":");
    if (!IsOp(":") && !IsOp("]") && !IsOp(",")) Test();
    if (AcceptOp(":")) {
      if (!IsOp("]") && !IsOp(",")) Test();
    }
  }

  void CompFor() {
    ++scope_depth_;
    while (true) {
      AcceptKw("async");
      if (!AcceptKw("for")) break;
      Expr target = ExprList();
      Store(target, false);
      ExpectKw("in");
      OrTest();
      while (AcceptKw("if")) TestNoCond();
      if (!IsKw("for") && !(IsKw("async") && IsKw("for", 1))) break;
    }
    --scope_depth_;
  }

  bool AtCompFor() const { return IsKw("for") || (IsKw("async") && IsKw("for", 1)); }

  Expr Atom() {
    const Token& t = Peek();
    switch (t.kind) {
      case TokKind::kNumber: {
        Next();
        RecordNumber(t.begin, t.end, t.text, false);
        return Expr{};
      }
      case TokKind::kString:
        while (Peek().kind == TokKind::kString) Next();
        return Expr{};
      case TokKind::kName: {
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          Next();
          return Expr{};
        }
        if (Keywords().count(t.text)) throw Error("invalid syntax");
        Next();
        Expr e;
        e.kind = Expr::kName;
        e.ref = AddRef(t.text);
        e.root = t.text;
        e.dotted = t.text;
        e.last_name_begin = t.begin;
        return e;
      }
      case TokKind::kOp:
        break;
      default:
        throw Error("invalid syntax");
    }
    if (AcceptOp("...")) return Expr{};
    if (AcceptOp("(")) {
      if (AcceptOp(")")) {
        Expr e;
        e.kind = Expr::kTuple;
        return e;
      }
      if (IsKw("yield")) {
        YieldExpr();
        ExpectOp(")");
        return Expr{};
      }
      Expr e = TestListComp(")", Expr::kTuple);
      ExpectOp(")");
      return e;
    }
    if (AcceptOp("[")) {
      Expr e;
      e.kind = Expr::kList;
      if (AcceptOp("]")) return e;
      Expr inner = TestListComp("]", Expr::kList);
      ExpectOp("]");
      if (inner.kind == Expr::kList) return inner;
      e.elts.push_back(std::move(inner));
      return e;
    }
    if (AcceptOp("{")) {
      if (!IsOp("}")) DictOrSet();
      ExpectOp("}");
      return Expr{};
    }
    throw Error("invalid syntax");
  }

  // Parenthesized/bracketed contents. A single element without a trailing
  // comma inside parentheses is just that element.
  Expr TestListComp(std::string_view close, Expr::Kind seq) {
    Expr first = IsOp("*") ? StarExpr() : NamedExprTest();
    if (AtCompFor()) {
      CompFor();
      return Expr{};
    }
    if (!IsOp(",")) {
      if (seq == Expr::kTuple) return first;
      Expr list;
      list.kind = Expr::kList;
      list.elts.push_back(std::move(first));
      return list;
    }
    Expr e;
    e.kind = seq;
    e.elts.push_back(std::move(first));
    while (AcceptOp(",")) {
      if (IsOp(close)) break;
      e.elts.push_back(IsOp("*") ? StarExpr() : NamedExprTest());
    }
    return e;
  }

  void DictOrSet() {
    bool is_dict = false;
    bool first = true;
    while (!IsOp("}")) {
      if (AcceptOp("**")) {
        OrExpr();
        is_dict = true;
      } else if (IsOp("*")) {
        StarExpr();
      } else {
        Test();
        if (AcceptOp(":")) {
          if (!first && !is_dict) throw Error("invalid syntax");
          is_dict = true;
          Test();
        } else if (is_dict) {
          throw Error("expected ':'");
        }
      }
      if (first && AtCompFor()) {
        CompFor();
        return;
      }
      first = false;
      if (!AcceptOp(",")) break;
    }
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  size_t last_end_ = 0;
  Module mod_;
  size_t cur_ = 0;
  std::vector<NameRef> refs_;
  std::vector<Frame> frames_;
  int scope_depth_ = 0;
  int block_depth_ = 0;
};

// Numeric constant folding over a token range.
class ConstEval {
 public:
  explicit ConstEval(std::vector<Token> toks) : toks_(std::move(toks)) {}

  std::optional<double> Run(bool* is_integer) {
    integer_ = true;
    std::optional<double> v = Sum();
    while (pos_ < toks_.size() && (toks_[pos_].kind == TokKind::kNewline ||
                                   toks_[pos_].kind == TokKind::kEnd)) {
      ++pos_;
    }
    if (!v || pos_ != toks_.size()) return std::nullopt;
    if (is_integer) *is_integer = integer_;
    return v;
  }

 private:
  bool IsOp(std::string_view op) const {
    return pos_ < toks_.size() && toks_[pos_].kind == TokKind::kOp && toks_[pos_].text == op;
  }

  std::optional<double> Sum() {
    auto v = Product();
    while (v && (IsOp("+") || IsOp("-"))) {
      bool minus = toks_[pos_++].text == "-";
      auto r = Product();
      if (!r) return std::nullopt;
      v = minus ? *v - *r : *v + *r;
    }
    return v;
  }

  std::optional<double> Product() {
    auto v = Unary();
    while (v && (IsOp("*") || IsOp("/") || IsOp("//"))) {
      std::string op = toks_[pos_++].text;
      auto r = Unary();
      if (!r) return std::nullopt;
      if (op == "*") {
        v = *v * *r;
      } else if (op == "/") {
        integer_ = false;
        v = *v / *r;
      } else {
        v = std::floor(*v / *r);
      }
    }
    return v;
  }

  std::optional<double> Unary() {
    if (IsOp("-")) {
      ++pos_;
      auto v = Unary();
      if (!v) return std::nullopt;
      return -*v;
    }
    if (IsOp("+")) {
      ++pos_;
      return Unary();
    }
    return Pow();
  }

  std::optional<double> Pow() {
    auto base = Atom();
    if (base && IsOp("**")) {
      ++pos_;
      auto exp = Unary();
      if (!exp) return std::nullopt;
      if (*exp < 0) integer_ = false;
      return std::pow(*base, *exp);
    }
    return base;
  }

  static std::optional<double> SpecialName(std::string_view name) {
    std::string l = ToLower(name);
    if (l == "nan") return std::nan("");
    if (l == "inf" || l == "infinity") return HUGE_VAL;
    return std::nullopt;
  }

  std::optional<double> Atom() {
    if (pos_ >= toks_.size()) return std::nullopt;
    const Token& t = toks_[pos_];
    if (t.kind == TokKind::kNumber) {
      ++pos_;
      std::string text;
      for (char c : t.text) {
        if (c != '_') text += c;
      }
      if (text.back() == 'j' || text.back() == 'J') return std::nullopt;
      bool hex = text.size() > 1 && text[0] == '0' && std::strchr("xXoObB", text[1]);
      if (hex) {
        int base = std::strchr("xX", text[1]) ? 16 : std::strchr("oO", text[1]) ? 8 : 2;
        return static_cast<double>(std::strtoull(text.c_str() + 2, nullptr, base));
      }
      if (text.find_first_of(".eE") != std::string::npos) integer_ = false;
      return std::strtod(text.c_str(), nullptr);
    }
    if (IsOp("(")) {
      ++pos_;
      auto v = Sum();
      if (!IsOp(")")) return std::nullopt;
      ++pos_;
      return v;
    }
    if (t.kind == TokKind::kName) {
      // float('nan') / float("-inf")
      if (t.text == "float" && pos_ + 3 < toks_.size() && toks_[pos_ + 1].text == "(" &&
          toks_[pos_ + 2].kind == TokKind::kString && toks_[pos_ + 3].text == ")") {
        std::string lit = toks_[pos_ + 2].text;
        lit = lit.substr(1, lit.size() - 2);
        pos_ += 4;
        integer_ = false;
        std::string_view body = Trim(lit);
        bool neg = !body.empty() && body[0] == '-';
        if (!body.empty() && (body[0] == '-' || body[0] == '+')) body.remove_prefix(1);
        if (auto s = SpecialName(body)) return neg ? -*s : *s;
        char* endp = nullptr;
        std::string b(body);
        double v = std::strtod(b.c_str(), &endp);
        if (endp == b.c_str()) return std::nullopt;
        return neg ? -v : v;
      }
      // <module>.nan, <module>.inf, math.inf, bare nan/inf names
      size_t k = pos_;
      std::string last = toks_[k].text;
      ++k;
      while (k + 1 < toks_.size() && toks_[k].text == "." &&
             toks_[k + 1].kind == TokKind::kName) {
        last = toks_[k + 1].text;
        k += 2;
      }
      if (auto s = SpecialName(last)) {
        pos_ = k;
        integer_ = false;
        return s;
      }
    }
    return std::nullopt;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  bool integer_ = true;
};

}  // namespace

std::vector<Token> Tokenize(std::string_view src) { return Lexer(src).Run(); }

Module Parse(std::string_view src) {
  Parser parser(src, Tokenize(src));
  return parser.Run();
}

bool Parses(std::string_view src, std::string* diagnostic) {
  try {
    Parse(src);
    return true;
  } catch (const SyntaxError& e) {
    if (diagnostic) *diagnostic = e.what();
    return false;
  }
}

std::string Module::Qualify(std::string_view dotted) const {
  std::string_view root = dotted.substr(0, dotted.find('.'));
  std::string_view rest = root.size() < dotted.size() ? dotted.substr(root.size()) : "";
  // Later imports shadow earlier ones.
  for (auto it = imports.rbegin(); it != imports.rend(); ++it) {
    if (it->local == root) return it->module + std::string(rest);
  }
  return std::string(dotted);
}

std::string NormalizedText(std::string_view src) {
  try {
    std::string out;
    for (const Token& t : Tokenize(src)) {
      switch (t.kind) {
        case TokKind::kNewline: out += '\n'; break;
        case TokKind::kIndent: out += "<in> "; break;
        case TokKind::kDedent: out += "<de> "; break;
        case TokKind::kEnd: break;
        default:
          out += t.text;
          out += ' ';
      }
    }
    return out;
  } catch (const SyntaxError&) {
    std::string out;
    bool space = false;
    for (char c : src) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        space = true;
        continue;
      }
      if (space && !out.empty()) out += ' ';
      space = false;
      out += c;
    }
    return out;
  }
}

std::optional<double> EvalNumeric(std::string_view expr, bool* is_integer) {
  std::vector<Token> toks;
  try {
    toks = Tokenize(expr);
  } catch (const SyntaxError&) {
    return std::nullopt;
  }
  return ConstEval(std::move(toks)).Run(is_integer);
}

}  // namespace futur::py
