#include "nested_hinf/plant_io.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nested_hinf/plantgen.h"

namespace nested_hinf {
namespace {

std::filesystem::path TempDir() {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("nested_hinf_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                    "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  std::filesystem::create_directories(dir);
  return dir;
}

PlantFile Sample() {
  GenSpec spec;
  spec.n = 6;
  spec.seed = 77;
  PlantFile f;
  f.plant = RandomStructuredPlant(spec);
  f.meta.seed = 77;
  f.meta.generator = "random";
  return f;
}

TEST(MatrixJson, RoundTripIsBitExact) {
  Philox rng(1);
  const Matrix M = rng.NormalMatrix(3, 5) * 1e-7;
  EXPECT_EQ(MatrixFromJson(Json::parse(MatrixToJson(M).dump())), M);
  const Matrix empty_cols(4, 0);
  EXPECT_EQ(MatrixFromJson(MatrixToJson(empty_cols), 4, 0).rows(), 4);
  EXPECT_EQ(MatrixFromJson(MatrixToJson(Matrix(0, 3)), 0, 3).cols(), 3);
}

TEST(MatrixJson, RejectsMalformed) {
  EXPECT_THROW(MatrixFromJson(Json::parse("[[1, 2], [3]]")), InputError);
  EXPECT_THROW(MatrixFromJson(Json::parse("[[1, \"a\"]]")), InputError);
  EXPECT_THROW(MatrixFromJson(Json::parse("[[1, 2]]"), 2, 2, "A"), InputError);
}

TEST(PlantFile, RoundTripThroughDisk) {
  const PlantFile f = Sample();
  const auto path = (TempDir() / "plant.json").string();
  SavePlantFile(path, f);
  const PlantFile g = LoadPlantFile(path);
  EXPECT_EQ(g.plant.structure, f.plant.structure);
  EXPECT_EQ(g.plant.plant.A, f.plant.plant.A);
  EXPECT_EQ(g.plant.plant.B1, f.plant.plant.B1);
  EXPECT_EQ(g.plant.plant.B2, f.plant.plant.B2);
  EXPECT_EQ(g.plant.plant.C1, f.plant.plant.C1);
  EXPECT_EQ(g.plant.plant.C2, f.plant.plant.C2);
  EXPECT_EQ(g.plant.plant.D12, f.plant.plant.D12);
  EXPECT_EQ(g.plant.plant.D21, f.plant.plant.D21);
  EXPECT_EQ(g.meta.seed, f.meta.seed);
  EXPECT_EQ(g.meta.generator, f.meta.generator);
  EXPECT_FALSE(g.meta.comment.has_value());
}

TEST(PlantFile, MissingFieldIsInputError) {
  Json j = PlantFileToJson(Sample());
  j["matrices"].erase("B2");
  try {
    PlantFileFromJson(j);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("missing field 'B2'"), std::string::npos);
  }
  Json k = PlantFileToJson(Sample());
  k.erase("structure");
  EXPECT_THROW(PlantFileFromJson(k), InputError);
}

TEST(PlantFile, ShapeMismatchIsInputError) {
  Json j = PlantFileToJson(Sample());
  j["matrices"]["A"] = MatrixToJson(Matrix::Zero(5, 5));
  EXPECT_THROW(PlantFileFromJson(j), InputError);
}

TEST(PlantFile, UnreadableFileIsInputError) {
  EXPECT_THROW(LoadPlantFile("/nonexistent/plant.json"), InputError);
  const auto path = (TempDir() / "broken.json").string();
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(LoadPlantFile(path), InputError);
}

TEST(ResultFile, RoundTripIncludingOptionalsAndNonFinite) {
  ResultFile r;
  r.gamma = 1.2345678901234567;
  r.mode = "structured";
  r.status = "ok";
  r.message = "done";
  r.conditions = {{"B1", true, 0.25, "X >= 0"}, {"C2", true, 1e-13, ""}};
  Philox rng(2);
  r.X = rng.NormalMatrix(3, 3);
  r.Yhat = rng.NormalMatrix(3, 3);
  r.controller = StateSpace(rng.NormalMatrix(2, 2), rng.NormalMatrix(2, 1),
                            rng.NormalMatrix(1, 2), Matrix::Zero(1, 1));
  r.closed_loop_stable = true;
  r.hinf_norm = 0.5;
  r.entropy = INFINITY;
  r.iterations = 9;
  r.lemma3 = CertificateRecord{true, {{"err_x", 1e-12}}, ""};
  r.timings = {{"total", 0.125}};

  const auto path = (TempDir() / "result.json").string();
  SaveResultFile(path, r);
  const ResultFile s = LoadResultFile(path);
  EXPECT_EQ(s.gamma, r.gamma);
  EXPECT_EQ(s.mode, r.mode);
  EXPECT_EQ(s.status, r.status);
  EXPECT_EQ(s.message, r.message);
  EXPECT_EQ(s.conditions, r.conditions);
  EXPECT_EQ(*s.X, *r.X);
  EXPECT_FALSE(s.Y.has_value());
  EXPECT_EQ(*s.Yhat, *r.Yhat);
  ASSERT_TRUE(s.controller.has_value());
  EXPECT_EQ(s.controller->A(), r.controller->A());
  EXPECT_EQ(s.controller->D(), r.controller->D());
  EXPECT_EQ(s.closed_loop_stable, r.closed_loop_stable);
  EXPECT_EQ(s.hinf_norm, r.hinf_norm);
  ASSERT_TRUE(s.entropy.has_value());
  EXPECT_TRUE(std::isnan(*s.entropy));
  EXPECT_EQ(s.iterations, 9);
  EXPECT_EQ(s.lemma3, r.lemma3);
  EXPECT_FALSE(s.optimality.has_value());
  EXPECT_EQ(s.timings, r.timings);
}

TEST(WriteFileAtomic, ReplacesContentAndLeavesNoTemporaries) {
  const auto dir = TempDir();
  const auto path = (dir / "out.txt").string();
  WriteFileAtomic(path, "first");
  WriteFileAtomic(path, "second");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(content, "second");
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
}

TEST(TraceCsv, HeaderAndRaggedColumns) {
  const std::string csv = TraceCsv({{1.0, 0.5, 0.0}, {0.25}});
  EXPECT_EQ(csv, "k,e_1,e_2\n0,1,0.25\n1,0.5,\n2,0,\n");
}

}  // namespace
}  // namespace nested_hinf
