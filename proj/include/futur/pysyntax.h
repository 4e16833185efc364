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

// Front end for the seeds' host language (Python 3).
//
// The tokenizer follows the reference lexical rules (indentation stack,
// implicit line joining inside brackets, string prefixes, numeric literal
// forms). The parser is a recursive-descent recognizer for the statement and
// expression grammar; instead of materializing a full syntax tree it records
// the facts the pipeline needs per top-level statement: byte span, bound and
// loaded names, call sites with their argument spans, and numeric literals
// together with the call argument that contains them.

#ifndef FUTUR_PYSYNTAX_H_
#define FUTUR_PYSYNTAX_H_

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "futur/util.h"

namespace futur::py {

class SyntaxError : public ParseError {
 public:
  SyntaxError(const std::string& what, int line)
      : ParseError("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

enum class TokKind { kName, kNumber, kString, kOp, kNewline, kIndent, kDedent, kEnd };

struct Token {
  TokKind kind;
  std::string text;
  size_t begin = 0;  // byte offsets into the source
  size_t end = 0;
  int line = 1;
};

// Comments are dropped; NEWLINE/INDENT/DEDENT are synthesized.
std::vector<Token> Tokenize(std::string_view src);

struct Argument {
  std::string keyword;  // empty for positional
  int position = 0;     // index among positional args, or -1 for keywords
  bool starred = false;
  size_t begin = 0;
  size_t end = 0;
  std::string text;
};

struct CallSite {
  std::string callee;    // dotted name ("mx.eye"), empty when not a name chain
  std::string terminal;  // last identifier of the callee ("eye")
  size_t name_begin = 0; // offset of the terminal identifier
  size_t stmt = 0;       // index of the enclosing top-level statement
  std::vector<Argument> args;
};

struct NumericLiteral {
  size_t begin = 0;  // span includes a unary minus when present
  size_t end = 0;
  std::string text;
  bool is_float = false;
  bool negative = false;
  // Innermost enclosing call argument; -1 / empty when not a call input.
  int call = -1;
  int arg_index = -1;
  std::string arg_keyword;
  size_t stmt = 0;
};

struct ImportBinding {
  std::string local;   // name bound in the module namespace
  std::string module;  // fully qualified target ("mlx.core", "numpy")
};

struct Statement {
  size_t begin = 0;
  size_t end = 0;  // exclusive; excludes the trailing newline
  bool compound = false;
  bool is_import = false;
  std::set<std::string> binds;     // names bound anywhere in the statement
  std::set<std::string> kills;     // names unconditionally rebound
  std::set<std::string> modifies;  // names partially updated (x[i] = .., x.a = .., x += ..)
  std::set<std::string> loads;
  std::vector<size_t> calls;
};

struct Module {
  std::string source;
  std::vector<Statement> statements;
  std::vector<CallSite> calls;
  std::vector<NumericLiteral> numbers;
  std::vector<ImportBinding> imports;

  std::string StatementText(size_t i) const {
    return source.substr(statements[i].begin, statements[i].end - statements[i].begin);
  }
  // Resolves the root of a dotted name through import aliases
  // ("mx.eye" -> "mlx.core.eye"); unresolved names are returned unchanged.
  std::string Qualify(std::string_view dotted) const;
};

// Throws SyntaxError.
Module Parse(std::string_view src);

// True iff `src` parses; the diagnostic receives the error message otherwise.
bool Parses(std::string_view src, std::string* diagnostic = nullptr);

// Source with comments removed and whitespace collapsed, used as the
// equivalence key for duplicate detection. Falls back to whitespace
// collapsing when the text does not tokenize.
std::string NormalizedText(std::string_view src);

// Constant-folds a numeric argument expression: literals, unary signs,
// `**`/`*` of constants, float('nan'|'inf'), and `<name>.nan`/`<name>.inf`.
std::optional<double> EvalNumeric(std::string_view expr, bool* is_integer = nullptr);

}  // namespace futur::py

#endif  // FUTUR_PYSYNTAX_H_
