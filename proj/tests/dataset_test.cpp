//
// Copyright 2026 The gsdsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "gsdsynth/dataset.hpp"

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

namespace gsdsynth::data {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("gsdsynth_dataset_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& contents = "") const {
    const auto p = (path_ / name).string();
    if (!contents.empty()) std::ofstream(p) << contents;
    return p;
  }

 private:
  fs::path path_;
};

SchemaPtr MixedSchema() {
  return make_schema({Attribute::categorical("color", {"red", "green", "blue"}),
                      Attribute::numeric("income"), Attribute::categorical("flag", 2)});
}

TEST(SchemaTest, OneHotLayout) {
  const auto s = MixedSchema();
  EXPECT_EQ(s->one_hot_dim(), 6u);
  EXPECT_EQ(s->one_hot_offset(0), 0u);
  EXPECT_EQ(s->one_hot_offset(1), 3u);
  EXPECT_EQ(s->one_hot_offset(2), 4u);
  EXPECT_EQ(s->categorical_indices(), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(s->numeric_indices(), (std::vector<std::size_t>{1}));
  EXPECT_EQ(s->find("flag"), 2u);
  EXPECT_FALSE(s->find("missing").has_value());
}

TEST(SchemaTest, RejectsBadAttributes) {
  EXPECT_THROW(DomainSchema({Attribute::categorical("a", 1)}), ParameterError);
  EXPECT_THROW(DomainSchema({Attribute::numeric("a"), Attribute::numeric("a")}), ParameterError);
  EXPECT_THROW(DomainSchema({Attribute::numeric("a", NumericRange{2.0, 1.0})}), ParameterError);
}

TEST(SchemaTest, JsonRoundTrip) {
  const auto s = make_schema({Attribute::categorical("c", {"x", "y"}), Attribute::numeric("n", NumericRange{5, 9})});
  const auto back = schema_from_json(schema_to_json(*s));
  EXPECT_EQ(*back, *s);
}

TEST(SchemaTest, JsonErrorsNameTheField) {
  const auto doc = nlohmann::json::parse(R"({"attributes":[{"name":"a","kind":"categorical"}]})");
  try {
    schema_from_json(doc);
    FAIL() << "expected ManifestError";
  } catch (const ManifestError& e) {
    EXPECT_NE(std::string(e.what()).find("attributes[0].categories"), std::string::npos) << e.what();
  }
}

TEST(SchemaTest, MissingFileNamesPath) {
  try {
    load_schema("/nonexistent/dir/schema.json");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/schema.json"), std::string::npos);
  }
}

TEST(DatasetTest, RandomRowsAreInDomain) {
  Rng rng(4);
  const auto d = Dataset::random(MixedSchema(), 500, rng);
  EXPECT_EQ(d.rows(), 500u);
  EXPECT_NO_THROW(d.validate());
}

TEST(DatasetTest, ValidateNamesTheCell) {
  auto d = Dataset::from_rows(MixedSchema(), {{0, 0.5, 1}, {2, 0.25, 0}});
  d.set(1, 1, 1.5);
  try {
    d.validate();
    FAIL() << "expected ParameterError";
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1, column 'income'"), std::string::npos) << e.what();
  }
}

TEST(DatasetTest, OneHotEncoding) {
  const auto s = MixedSchema();
  const std::vector<double> row{2, 0.75, 1};
  EXPECT_EQ(one_hot(row, *s), (std::vector<double>{0, 0, 1, 0.75, 0, 1}));
}

TEST(CsvTest, LoadNormalizesWithObservedRange) {
  TempDir dir;
  const auto path = dir.file("a.csv", "\xEF\xBB\xBF" "flag,color,income,extra\n1,red,10,x\n0,\"blue\",30,y\n1,green,20,z\n");
  const auto loaded = load_csv(path, MixedSchema(), true);
  const Dataset& d = loaded.data;
  ASSERT_EQ(d.rows(), 3u);
  EXPECT_EQ(d.at(1, 0), 2.0);
  EXPECT_EQ(d.at(0, 1), 0.0);
  EXPECT_EQ(d.at(1, 1), 1.0);
  EXPECT_EQ(d.at(2, 1), 0.5);
  EXPECT_EQ(d.at(0, 2), 1.0);
  ASSERT_TRUE(loaded.params[1].has_value());
  EXPECT_EQ(loaded.params[1]->min, 10.0);
  EXPECT_EQ(loaded.params[1]->max, 30.0);
}

TEST(CsvTest, DeclaredRangeWins) {
  TempDir dir;
  const auto path = dir.file("a.csv", "n\n15\n");
  const auto s = make_schema({Attribute::numeric("n", NumericRange{10, 20})});
  EXPECT_EQ(load_csv(path, s, true).data.at(0, 0), 0.5);
}

TEST(CsvTest, ConstantColumnMapsToZero) {
  TempDir dir;
  const auto path = dir.file("a.csv", "n\n7\n7\n");
  const auto s = make_schema({Attribute::numeric("n")});
  const auto d = load_csv(path, s, true).data;
  EXPECT_EQ(d.at(0, 0), 0.0);
  EXPECT_EQ(d.at(1, 0), 0.0);
}

TEST(CsvTest, ErrorsNameRowAndColumn) {
  TempDir dir;
  const auto s = MixedSchema();
  auto expect_message = [&](const std::string& contents, const std::string& needle) {
    const auto path = dir.file("bad.csv", contents);
    try {
      load_csv(path, s, true);
      ADD_FAILURE() << "expected IngestionError for " << needle;
    } catch (const IngestionError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_message("color,income\nred,1\n", "missing column 'flag'");
  expect_message("color,income,flag\nred,1,0\npurple,2,0\n", "row 2, column 'color': unknown category 'purple'");
  expect_message("color,income,flag\nred,abc,0\n", "row 1, column 'income': non-numeric value 'abc'");
}

TEST(CsvTest, UnnormalizedValuesMustBeInUnitInterval) {
  TempDir dir;
  const auto path = dir.file("a.csv", "n\n0.5\n3\n");
  const auto s = make_schema({Attribute::numeric("n")});
  EXPECT_THROW(load_csv(path, s, false), IngestionError);
}

TEST(CsvTest, MissingFileIsIoError) {
  EXPECT_THROW(load_csv("/nonexistent/file.csv", MixedSchema(), true), IoError);
}

TEST(CsvTest, SaveThenLoadRoundTrips) {
  TempDir dir;
  const auto s = MixedSchema();
  const auto d = Dataset::from_rows(s, {{0, 0.25, 1}, {2, 1.0, 0}, {1, 0.0, 0}});
  const NormalizationParams params{std::nullopt, NumericRange{100, 200}, std::nullopt};
  const auto path = dir.file("out.csv");
  save_csv(d, path, &params);
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "color,income,flag");
  EXPECT_EQ(first, "red,125,1");
  const auto back = load_csv(path, s, true, &params);
  EXPECT_EQ(back.data, d);
}

}  // namespace
}  // namespace gsdsynth::data
