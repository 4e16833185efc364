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

// Stub runner speaking the runner wire protocol for two tiny array
// libraries: `toy` (the target under test, with planted defects) and `ref`
// (a correct source-library stand-in). Seeds are a small Python subset:
// imports, assignments, calls, list/tuple literals, float('nan') and
// arithmetic on scalars.
//
// Planted defects in toy:
//   toy.eye(n, m)   exactly one dimension above 2^31-1 -> SIGSEGV;
//                   m != n silently returns an n x n identity
//   toy.full(s, v)  a negative dimension -> abort()
//   toy.cumsum(x)   on gpu: blocks of 4 without the carry, NaN read as 0
//
// FUTUR_TOY_NO_GPU=1 makes every gpu run report DeviceUnavailable.

#include <signal.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "futur/harness.h"

namespace {

using futur::harness::NumericCapture;

struct PyError {
  std::string type;
  std::string message;
};

struct Array {
  std::vector<uint64_t> shape;
  std::string dtype = "float64";
  std::vector<double> data;
};

struct Value {
  enum Kind { kNone, kInt, kFloat, kStr, kList, kArray, kModule, kFunc } kind = kNone;
  double num = 0;
  std::string str;  // string body, module name or qualified function name
  std::vector<Value> items;
  std::shared_ptr<Array> arr;

  static Value Int(double v) { Value x; x.kind = kInt; x.num = v; return x; }
  static Value Float(double v) { Value x; x.kind = kFloat; x.num = v; return x; }
  static Value Str(std::string s) { Value x; x.kind = kStr; x.str = std::move(s); return x; }
  static Value Module(std::string s) { Value x; x.kind = kModule; x.str = std::move(s); return x; }
  static Value Func(std::string s) { Value x; x.kind = kFunc; x.str = std::move(s); return x; }
  static Value Of(std::shared_ptr<Array> a) { Value x; x.kind = kArray; x.arr = std::move(a); return x; }
  bool numeric() const { return kind == kInt || kind == kFloat; }
};

struct Args {
  std::vector<Value> positional;
  std::map<std::string, Value> keyword;

  const Value* Get(size_t pos, const std::string& name) const {
    if (pos < positional.size()) return &positional[pos];
    auto it = keyword.find(name);
    return it == keyword.end() ? nullptr : &it->second;
  }
};

// ---- tokens -----------------------------------------------------------------

struct Token {
  enum Kind { kNum, kName, kStr, kOp, kEnd } kind;
  std::string text;
};

std::vector<Token> Lex(const std::string& s) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') { ++i; continue; }
    if (c == '#') break;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '.' ||
                              s[j] == '_' ||
                              ((s[j] == '+' || s[j] == '-') && (s[j - 1] == 'e' || s[j - 1] == 'E')))) {
        ++j;
      }
      out.push_back({Token::kNum, s.substr(i, j - i)});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Token::kName, s.substr(i, j - i)});
      i = j;
      continue;
    }
    if (c == '\'' || c == '"') {
      size_t j = s.find(c, i + 1);
      if (j == std::string::npos) throw PyError{"SyntaxError", "unterminated string"};
      out.push_back({Token::kStr, s.substr(i + 1, j - i - 1)});
      i = j + 1;
      continue;
    }
    if (s.compare(i, 2, "**") == 0 || s.compare(i, 2, "==") == 0) {
      out.push_back({Token::kOp, s.substr(i, 2)});
      i += 2;
      continue;
    }
    if (std::string("()[],=.+-*/:").find(c) != std::string::npos) {
      out.push_back({Token::kOp, std::string(1, c)});
      ++i;
      continue;
    }
    throw PyError{"SyntaxError", std::string("unexpected character '") + c + "'"};
  }
  out.push_back({Token::kEnd, ""});
  return out;
}

// ---- libraries -------------------------------------------------------------

constexpr double kInt32Max = 2147483647.0;
constexpr double kMaxElements = 1e6;

struct Runtime {
  std::string device;
  std::vector<std::string> observed;
  std::set<std::string> observed_set;

  void Observe(const std::string& name) {
    if (observed_set.insert(name).second) observed.push_back(name);
  }

  Value Call(const std::string& fn, const Args& a);
};

double AsInt(const Value* v, const std::string& what) {
  if (!v) throw PyError{"TypeError", "missing argument " + what};
  if (v->kind != Value::kInt) throw PyError{"TypeError", what + " must be an integer"};
  return v->num;
}

void Flatten(const Value& v, std::vector<uint64_t>& shape, std::vector<double>& data, size_t depth) {
  if (v.kind == Value::kList) {
    if (shape.size() <= depth) shape.push_back(v.items.size());
    else if (shape[depth] != v.items.size()) throw PyError{"ValueError", "ragged nested sequence"};
    for (const Value& item : v.items) Flatten(item, shape, data, depth + 1);
    return;
  }
  if (v.kind == Value::kArray) {
    data.insert(data.end(), v.arr->data.begin(), v.arr->data.end());
    return;
  }
  if (!v.numeric()) throw PyError{"TypeError", "array elements must be numbers"};
  data.push_back(v.num);
}

std::shared_ptr<Array> ToArray(const Value& v) {
  if (v.kind == Value::kArray) return v.arr;
  auto a = std::make_shared<Array>();
  Flatten(v, a->shape, a->data, 0);
  return a;
}

std::string DtypeArg(const Args& a, size_t pos, const std::string& fallback) {
  const Value* d = a.Get(pos, "dtype");
  if (!d || d->kind == Value::kNone) return fallback;
  if (d->kind != Value::kStr) throw PyError{"TypeError", "dtype must be a dtype"};
  return d->str;
}

Value Runtime::Call(const std::string& fn, const Args& a) {
  size_t dot = fn.find('.');
  std::string lib = fn.substr(0, dot);
  std::string name = fn.substr(dot + 1);
  bool toy = lib == "toy";
  bool gpu = device == "gpu";
  Observe(fn);

  if (name == "array") {
    const Value* d = a.Get(0, "data");
    if (!d) throw PyError{"TypeError", "array() missing data"};
    auto out = std::make_shared<Array>(*ToArray(*d));
    out->dtype = DtypeArg(a, 1, "float64");
    return Value::Of(out);
  }
  if (name == "eye") {
    double n = AsInt(a.Get(0, "n"), "n");
    const Value* mv = a.Get(1, "m");
    double m = (mv && mv->kind != Value::kNone) ? AsInt(mv, "m") : n;
    if (n < 0 || m < 0) throw PyError{"ValueError", "negative dimensions are not allowed"};
    if (toy && ((n > kInt32Max) != (m > kInt32Max))) raise(SIGSEGV);
    if (n * m > kMaxElements) throw PyError{"MemoryError", "cannot allocate identity matrix"};
    uint64_t rows = static_cast<uint64_t>(n);
    uint64_t cols = toy ? rows : static_cast<uint64_t>(m);
    auto out = std::make_shared<Array>();
    out->shape = {rows, cols};
    out->dtype = DtypeArg(a, 2, "float32");
    out->data.assign(rows * cols, 0.0);
    for (uint64_t i = 0; i < rows && i < cols; ++i) out->data[i * cols + i] = 1.0;
    return Value::Of(out);
  }
  if (name == "full") {
    const Value* s = a.Get(0, "shape");
    const Value* v = a.Get(1, "fill_value");
    if (!s || !v) throw PyError{"TypeError", "full() needs shape and fill_value"};
    std::vector<double> dims;
    if (s->kind == Value::kList) {
      for (const Value& d : s->items) dims.push_back(AsInt(&d, "shape entry"));
    } else {
      dims.push_back(AsInt(s, "shape"));
    }
    double count = 1;
    for (double d : dims) {
      if (d < 0) {
        if (toy) std::abort();
        throw PyError{"ValueError", "negative dimensions are not allowed"};
      }
      count *= d;
    }
    if (count > kMaxElements) throw PyError{"MemoryError", "cannot allocate array"};
    if (!v->numeric()) throw PyError{"TypeError", "fill_value must be a number"};
    auto out = std::make_shared<Array>();
    for (double d : dims) out->shape.push_back(static_cast<uint64_t>(d));
    out->dtype = DtypeArg(a, 2, v->kind == Value::kInt ? "int64" : "float64");
    out->data.assign(static_cast<size_t>(count), v->num);
    return Value::Of(out);
  }
  if (name == "cumsum") {
    const Value* x = a.Get(0, "a");
    if (!x) throw PyError{"TypeError", "cumsum() missing input"};
    std::shared_ptr<Array> in = ToArray(*x);
    auto out = std::make_shared<Array>();
    out->shape = {in->data.size()};
    out->dtype = in->dtype;
    double acc = 0;
    for (size_t i = 0; i < in->data.size(); ++i) {
      double v = in->data[i];
      if (toy && gpu) {
        if (i % 4 == 0) acc = 0;
        if (std::isnan(v)) v = 0;
      }
      acc += v;
      out->data.push_back(acc);
    }
    return Value::Of(out);
  }
  throw PyError{"AttributeError", "module '" + lib + "' has no attribute '" + name + "'"};
}

// ---- interpreter -----------------------------------------------------------

class Interpreter {
 public:
  explicit Interpreter(Runtime& rt) : rt_(rt) {}

  void Exec(const std::string& stmt) {
    toks_ = Lex(stmt);
    pos_ = 0;
    if (Peek().kind == Token::kEnd) return;
    if (Peek().kind == Token::kName && Peek().text == "import") {
      ++pos_;
      std::string mod = DottedName();
      std::string alias = mod.substr(0, mod.find('.'));
      if (Peek().kind == Token::kName && Peek().text == "as") {
        ++pos_;
        alias = Next().text;
        Import(mod);
        env_[alias] = Value::Module(mod);
      } else {
        Import(mod);
        env_[alias] = Value::Module(alias);
      }
      return;
    }
    if (Peek().kind == Token::kName && Peek().text == "from") {
      ++pos_;
      std::string mod = DottedName();
      Expect("import");
      Import(mod);
      while (true) {
        std::string name = Next().text;
        env_[name] = Attr(Value::Module(mod), name);
        if (!Accept(",")) break;
      }
      return;
    }
    if (toks_.size() > 2 && toks_[0].kind == Token::kName && toks_[1].text == "=") {
      pos_ = 2;
      Value v = Expr();
      Bind(toks_[0].text, v);
      return;
    }
    Expr();
    if (Peek().kind != Token::kEnd) throw PyError{"SyntaxError", "unexpected '" + Peek().text + "'"};
  }

  const std::map<std::string, Value>& env() const { return env_; }
  const std::vector<std::string>& binding_order() const { return order_; }

 private:
  void Bind(const std::string& name, const Value& v) {
    if (!env_.count(name)) order_.push_back(name);
    env_[name] = v;
  }

  static void Import(const std::string& mod) {
    std::string root = mod.substr(0, mod.find('.'));
    if (root != "toy" && root != "ref" && root != "math") {
      throw PyError{"ModuleNotFoundError", "No module named '" + mod + "'"};
    }
  }

  const Token& Peek() const { return toks_[pos_]; }
  const Token& Next() {
    if (toks_[pos_].kind == Token::kEnd) throw PyError{"SyntaxError", "unexpected end of line"};
    return toks_[pos_++];
  }
  bool Accept(const std::string& op) {
    if (Peek().kind == Token::kOp && Peek().text == op) {
      ++pos_;
      return true;
    }
    return false;
  }
  void Expect(const std::string& text) {
    if (Peek().text != text) throw PyError{"SyntaxError", "expected '" + text + "'"};
    ++pos_;
  }
  std::string DottedName() {
    std::string s = Next().text;
    while (Accept(".")) s += "." + Next().text;
    return s;
  }

  Value Attr(const Value& base, const std::string& name) {
    if (base.kind != Value::kModule) throw PyError{"AttributeError", "object has no attribute '" + name + "'"};
    std::string root = base.str.substr(0, base.str.find('.'));
    if (root == "math") {
      if (name == "nan") return Value::Float(std::numeric_limits<double>::quiet_NaN());
      if (name == "inf") return Value::Float(std::numeric_limits<double>::infinity());
      throw PyError{"AttributeError", "module 'math' has no attribute '" + name + "'"};
    }
    static const std::set<std::string> kDtypes = {"float16", "float32", "float64", "int32",
                                                  "int64", "bool_"};
    if (kDtypes.count(name)) return Value::Str(name);
    if (name == "nan") return Value::Float(std::numeric_limits<double>::quiet_NaN());
    if (name == "inf") return Value::Float(std::numeric_limits<double>::infinity());
    return Value::Func(root + "." + name);
  }

  Value Expr() {
    Value v = Term();
    while (Peek().kind == Token::kOp && (Peek().text == "+" || Peek().text == "-")) {
      std::string op = Next().text;
      v = Arith(v, Term(), op);
    }
    return v;
  }

  Value Term() {
    Value v = Unary();
    while (Peek().kind == Token::kOp && (Peek().text == "*" || Peek().text == "/")) {
      std::string op = Next().text;
      v = Arith(v, Unary(), op);
    }
    return v;
  }

  Value Unary() {
    if (Accept("-")) {
      Value v = Unary();
      if (!v.numeric()) throw PyError{"TypeError", "bad operand type for unary -"};
      v.num = -v.num;
      return v;
    }
    if (Accept("+")) return Unary();
    Value v = Postfix();
    if (Accept("**")) v = Arith(v, Unary(), "**");
    return v;
  }

  static Value Arith(const Value& a, const Value& b, const std::string& op) {
    if (!a.numeric() || !b.numeric()) throw PyError{"TypeError", "unsupported operand types for " + op};
    bool ints = a.kind == Value::kInt && b.kind == Value::kInt;
    double r = 0;
    if (op == "+") r = a.num + b.num;
    else if (op == "-") r = a.num - b.num;
    else if (op == "*") r = a.num * b.num;
    else if (op == "**") r = std::pow(a.num, b.num);
    else {
      if (b.num == 0) throw PyError{"ZeroDivisionError", "division by zero"};
      return Value::Float(a.num / b.num);
    }
    return ints ? Value::Int(r) : Value::Float(r);
  }

  Value Postfix() {
    Value v = Primary();
    while (true) {
      if (Accept(".")) {
        v = Attr(v, Next().text);
      } else if (Peek().kind == Token::kOp && Peek().text == "(") {
        ++pos_;
        v = Invoke(v, Arguments());
      } else {
        return v;
      }
    }
  }

  Args Arguments() {
    Args a;
    if (Accept(")")) return a;
    while (true) {
      if (Peek().kind == Token::kName && toks_[pos_ + 1].text == "=") {
        std::string key = Next().text;
        ++pos_;
        a.keyword[key] = Expr();
      } else {
        a.positional.push_back(Expr());
      }
      if (Accept(")")) return a;
      Expect(",");
      if (Accept(")")) return a;
    }
  }

  Value Invoke(const Value& callee, const Args& a) {
    if (callee.kind == Value::kFunc) {
      if (callee.str == "builtins.print") return Value();
      if (callee.str == "builtins.float") {
        const Value* x = a.Get(0, "x");
        if (!x) return Value::Float(0);
        if (x->numeric()) return Value::Float(x->num);
        if (x->kind == Value::kStr) {
          std::string s;
          for (char c : x->str) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
          if (s == "nan") return Value::Float(std::numeric_limits<double>::quiet_NaN());
          if (s == "inf" || s == "infinity") return Value::Float(INFINITY);
          if (s == "-inf" || s == "-infinity") return Value::Float(-INFINITY);
          try {
            return Value::Float(std::stod(s));
          } catch (const std::exception&) {
          }
        }
        throw PyError{"ValueError", "could not convert to float"};
      }
      if (callee.str == "builtins.int") {
        const Value* x = a.Get(0, "x");
        if (!x || !x->numeric()) throw PyError{"TypeError", "int() needs a number"};
        return Value::Int(std::trunc(x->num));
      }
      return rt_.Call(callee.str, a);
    }
    throw PyError{"TypeError", "object is not callable"};
  }

  Value Primary() {
    const Token& t = Next();
    if (t.kind == Token::kNum) {
      std::string s;
      for (char c : t.text) if (c != '_') s += c;
      bool is_float = s.find_first_of(".eE") != std::string::npos;
      double v = std::stod(s);
      return is_float ? Value::Float(v) : Value::Int(v);
    }
    if (t.kind == Token::kStr) return Value::Str(t.text);
    if (t.kind == Token::kName) {
      if (t.text == "None") return Value();
      if (t.text == "True") return Value::Int(1);
      if (t.text == "False") return Value::Int(0);
      auto it = env_.find(t.text);
      if (it != env_.end()) return it->second;
      if (t.text == "print" || t.text == "float" || t.text == "int") {
        return Value::Func("builtins." + t.text);
      }
      throw PyError{"NameError", "name '" + t.text + "' is not defined"};
    }
    if (t.text == "[" || t.text == "(") {
      std::string close = t.text == "[" ? "]" : ")";
      Value list;
      list.kind = Value::kList;
      bool tuple = false;
      while (!Accept(close)) {
        list.items.push_back(Expr());
        if (Accept(",")) {
          tuple = true;
          continue;
        }
        Expect(close);
        break;
      }
      if (close == ")" && !tuple && list.items.size() == 1) return list.items[0];
      return list;
    }
    throw PyError{"SyntaxError", "unexpected '" + t.text + "'"};
  }

  Runtime& rt_;
  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::map<std::string, Value> env_;
  std::vector<std::string> order_;
};

// Logical statements: physical lines joined while brackets are open.
std::vector<std::pair<int, std::string>> Statements(const std::string& text) {
  std::vector<std::pair<int, std::string>> out;
  std::string cur;
  int depth = 0;
  int start = 0;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (depth == 0) start = line_no;
    bool in_str = false;
    char quote = 0;
    for (char c : line) {
      if (in_str) {
        if (c == quote) in_str = false;
        continue;
      }
      if (c == '\'' || c == '"') { in_str = true; quote = c; }
      else if (c == '#') break;
      else if (c == '(' || c == '[') ++depth;
      else if (c == ')' || c == ']') --depth;
    }
    cur += line + "\n";
    if (depth <= 0) {
      out.push_back({start, cur});
      cur.clear();
      depth = 0;
    }
    if (nl == text.size()) break;
  }
  if (!cur.empty()) out.push_back({start, cur});
  return out;
}

NumericCapture Capture(const std::string& name, const Array& a) {
  NumericCapture c;
  c.name = name;
  c.shape = a.shape;
  c.dtype = a.dtype;
  c.values = a.data;
  if (a.dtype.rfind("int", 0) == 0) {
    for (double v : a.data) c.lossy |= std::fabs(v) > 9007199254740992.0;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::string seed, device = "cpu", emit;
  for (int i = 1; i + 1 < argc; i += 2) {
    std::string flag = argv[i];
    if (flag == "--seed") seed = argv[i + 1];
    else if (flag == "--device") device = argv[i + 1];
    else if (flag == "--emit") emit = argv[i + 1];
  }
  if (seed.empty() || emit.empty() || (device != "cpu" && device != "gpu")) {
    std::cerr << "usage: toy_runner --seed <path> --device <cpu|gpu> --emit <path>\n";
    return 64;
  }
  auto start = std::chrono::steady_clock::now();
  futur::harness::ResultRecord record;
  record.status = "ok";
  Runtime rt;
  rt.device = device;
  std::string text;
  try {
    text = futur::ReadFile(seed);
  } catch (const futur::Error& e) {
    std::cerr << e.what() << "\n";
    return 66;
  }
  const char* no_gpu = std::getenv("FUTUR_TOY_NO_GPU");
  if (device == "gpu" && no_gpu && std::string(no_gpu) == "1") {
    record.status = "exception";
    record.error = futur::harness::ErrorInfo{"DeviceUnavailable", "no gpu device", ""};
  } else {
    Interpreter interp(rt);
    int current = 0;
    try {
      for (const auto& [line, stmt] : Statements(text)) {
        current = line;
        interp.Exec(stmt);
      }
    } catch (const PyError& e) {
      record.status = "exception";
      record.error = futur::harness::ErrorInfo{e.type, e.message,
                                               seed + ", line " + std::to_string(current)};
    }
    std::vector<std::string> wanted;
    for (const std::string& l : futur::SplitLines(text)) {
      std::string_view t = futur::Trim(l);
      if (futur::StartsWith(t, "# CAPTURE:")) {
        for (const std::string& n : futur::Split(t.substr(10), ',')) {
          std::string name(futur::Trim(n));
          if (!name.empty()) wanted.push_back(name);
        }
      }
    }
    if (wanted.empty()) wanted = interp.binding_order();
    if (record.status == "ok") {
      for (const std::string& n : wanted) {
        auto it = interp.env().find(n);
        if (it != interp.env().end() && it->second.kind == Value::kArray) {
          record.outputs.push_back(Capture(n, *it->second.arr));
        }
      }
    }
  }
  record.api_calls_observed = rt.observed;
  record.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  futur::WriteFile(emit, futur::harness::FormatResultRecord(record));
  return 0;
}
