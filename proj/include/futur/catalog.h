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

// Target-library API catalog built from pre-scraped documentation bundles.
//
// A bundle is a directory tree of `*.api` files, one per API:
//
//   NAME: mlx.core.eye
//   DOC:
//   Create an identity matrix or a general diagonal matrix.
//   ...
//   EXAMPLE:
//   import mlx.core as mx
//   x = mx.eye(3)
//   REFS:
//   mlx.core.identity
//
// EXAMPLE may repeat. REFS lists one API name per line.

#ifndef FUTUR_CATALOG_H_
#define FUTUR_CATALOG_H_

#include <string>
#include <vector>

#include "futur/util.h"

namespace futur::catalog {

struct ApiInfo {
  std::string name;  // fully qualified, e.g. "mlx.core.eye"
  std::string doc;
  std::vector<std::string> examples;
  std::vector<std::string> references;
  std::string target_library;
  bool undocumented = false;
  std::string inherited_from;  // set when doc/examples were copied by resolution
  std::string record_path;

  // Last dotted component ("eye" for "mlx.core.eye").
  std::string terminal() const;
};

// Parses one record. `origin` only feeds error messages.
ApiInfo ParseApiRecord(std::string_view text, const std::string& library,
                       const std::string& origin = "<memory>");
std::string FormatApiRecord(const ApiInfo& api);

// Reads every *.api file below `bundle` (sorted by path). Throws ParseError
// naming both files when a name repeats.
std::vector<ApiInfo> IngestApiDocs(const fs::path& bundle, const std::string& library);

struct ResolveReport {
  std::vector<std::string> warnings;  // one per API left undocumented by a cycle
};

// Fills empty doc/examples from the first reference (depth-first, in listed
// order) that leads to a documented API. APIs with no reachable doc are
// flagged undocumented. The result does not depend on input order.
std::vector<ApiInfo> ResolveReferences(const std::vector<ApiInfo>& catalog,
                                       ResolveReport* report = nullptr);

// index.tsv: name, doc_length, example_count, flags.
void WriteCatalogIndex(const fs::path& path, const std::vector<ApiInfo>& catalog);

struct CatalogIndexRow {
  std::string name;
  size_t doc_length = 0;
  size_t example_count = 0;
  std::string flags;
};
std::vector<CatalogIndexRow> ReadCatalogIndex(const fs::path& path);

}  // namespace futur::catalog

#endif  // FUTUR_CATALOG_H_
