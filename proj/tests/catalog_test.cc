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

#include "futur/catalog.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_fixtures.h"

namespace futur::catalog {
namespace {

using futur::testing::TempDir;

ApiInfo Api(std::string name, std::string doc, std::vector<std::string> refs = {},
            std::vector<std::string> examples = {}) {
  ApiInfo a;
  a.name = std::move(name);
  a.doc = std::move(doc);
  a.references = std::move(refs);
  a.examples = std::move(examples);
  a.target_library = "mlx";
  return a;
}

const ApiInfo& Find(const std::vector<ApiInfo>& c, const std::string& name) {
  return *std::find_if(c.begin(), c.end(), [&](const ApiInfo& a) { return a.name == name; });
}

TEST(ApiRecordTest, ParsesAllSections) {
  ApiInfo a = ParseApiRecord(
      "NAME: mlx.core.eye\nDOC:\nIdentity matrix.\n\nArgs:\n  n (int): rows.\nEXAMPLE:\n"
      "import mlx.core as mx\nx = mx.eye(3)\n\nEXAMPLE:\ny = mx.eye(2, 4)\nREFS:\nmlx.core.identity\n",
      "mlx");
  EXPECT_EQ(a.name, "mlx.core.eye");
  EXPECT_EQ(a.terminal(), "eye");
  EXPECT_EQ(a.doc, "Identity matrix.\n\nArgs:\n  n (int): rows.");
  ASSERT_EQ(a.examples.size(), 2u);
  EXPECT_EQ(a.examples[0], "import mlx.core as mx\nx = mx.eye(3)\n");
  EXPECT_EQ(a.examples[1], "y = mx.eye(2, 4)\n");
  EXPECT_EQ(a.references, (std::vector<std::string>{"mlx.core.identity"}));
  EXPECT_EQ(ParseApiRecord(FormatApiRecord(a), "mlx").doc, a.doc);
  EXPECT_EQ(ParseApiRecord(FormatApiRecord(a), "mlx").examples, a.examples);
}

TEST(ApiRecordTest, EmptyDocWithSeeAlso) {
  ApiInfo a = ParseApiRecord("NAME: mlx.core.identity\nDOC:\nREFS:\nmlx.core.eye\n", "mlx");
  EXPECT_TRUE(a.doc.empty());
  EXPECT_EQ(a.references, (std::vector<std::string>{"mlx.core.eye"}));
  EXPECT_THROW(ParseApiRecord("DOC:\nx\n", "mlx"), ParseError);
}

TEST(IngestTest, OneEntryPerRecordAndDuplicatesAreFatal) {
  TempDir dir;
  for (int i = 0; i < 128; ++i) {
    WriteFile(dir / ("mlx/api" + std::to_string(i) + ".api"),
              "NAME: mlx.core.f" + std::to_string(i) + "\nDOC:\nd\n");
  }
  WriteFile(dir / "mlx/README.txt", "not a record");
  EXPECT_EQ(IngestApiDocs(dir / "mlx", "mlx").size(), 128u);
  WriteFile(dir / "mlx/zz.api", "NAME: mlx.core.f7\nDOC:\nagain\n");
  try {
    IngestApiDocs(dir / "mlx", "mlx");
    FAIL();
  } catch (const ParseError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("api7.api"), std::string::npos) << msg;
    EXPECT_NE(msg.find("zz.api"), std::string::npos) << msg;
  }
}

TEST(ResolveTest, DirectCopy) {
  auto r = ResolveReferences({Api("A", "", {"B"}), Api("B", "d", {}, {"B()\n"})});
  EXPECT_EQ(Find(r, "A").doc, "d");
  EXPECT_EQ(Find(r, "A").examples, (std::vector<std::string>{"B()\n"}));
  EXPECT_EQ(Find(r, "A").inherited_from, "B");
  EXPECT_FALSE(Find(r, "A").undocumented);
}

TEST(ResolveTest, ChainInheritsFromTheEnd) {
  auto r = ResolveReferences({Api("A", "", {"B"}), Api("B", "", {"C"}), Api("C", "c-doc")});
  EXPECT_EQ(Find(r, "A").doc, "c-doc");
  EXPECT_EQ(Find(r, "B").doc, "c-doc");
}

TEST(ResolveTest, CycleFlagsAllMembers) {
  ResolveReport rep;
  auto r = ResolveReferences({Api("A", "", {"B"}), Api("B", "", {"A"})}, &rep);
  EXPECT_TRUE(Find(r, "A").undocumented);
  EXPECT_TRUE(Find(r, "B").undocumented);
  EXPECT_EQ(rep.warnings.size(), 2u);
}

TEST(ResolveTest, FirstDocumentedReferenceWinsAndExistingFieldsStay) {
  auto r = ResolveReferences({Api("A", "", {"X", "B", "C"}, {"own()\n"}), Api("B", "b"),
                              Api("C", "c")});
  EXPECT_EQ(Find(r, "A").doc, "b");
  EXPECT_EQ(Find(r, "A").examples, (std::vector<std::string>{"own()\n"}));
}

TEST(ResolveTest, OrderIndependentAndIdempotent) {
  std::vector<ApiInfo> cat = {Api("A", "", {"B", "E"}), Api("B", "", {"A", "C"}),
                              Api("C", "", {"D"}),      Api("D", "dd"),
                              Api("E", "ee"),           Api("F", "", {"F"}),
                              Api("G", "", {"missing"})};
  auto snapshot = [](std::vector<ApiInfo> v) {
    std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.name < b.name; });
    std::string s;
    for (auto& a : v) s += a.name + "|" + a.doc + "|" + std::to_string(a.undocumented) + "\n";
    return s;
  };
  std::string base = snapshot(ResolveReferences(cat));
  std::mt19937 rng(7);
  for (int i = 0; i < 50; ++i) {
    std::shuffle(cat.begin(), cat.end(), rng);
    auto r = ResolveReferences(cat);
    EXPECT_EQ(snapshot(r), base);
    EXPECT_EQ(snapshot(ResolveReferences(r)), base);
  }
  auto r = ResolveReferences(cat);
  EXPECT_EQ(Find(r, "A").doc, "dd");  // via B -> C -> D before E
  EXPECT_TRUE(Find(r, "F").undocumented);
  EXPECT_TRUE(Find(r, "G").undocumented);
}

TEST(IndexTest, RoundTrip) {
  TempDir dir;
  auto r = ResolveReferences({Api("A", "", {"B"}), Api("B", "doc", {}, {"x\n", "y\n"}),
                              Api("C", "")});
  WriteCatalogIndex(dir / "index.tsv", r);
  auto rows = ReadCatalogIndex(dir / "index.tsv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].flags, "inherited:B");
  EXPECT_EQ(rows[1].doc_length, 3u);
  EXPECT_EQ(rows[1].example_count, 2u);
  EXPECT_EQ(rows[2].flags, "undocumented");
}

}  // namespace
}  // namespace futur::catalog
