#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nested_hinf/structured.h"

namespace nested_hinf {

using Json = nlohmann::json;

/// Malformed or unreadable input (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major nested arrays. An r×0 matrix is r empty rows; a 0×c matrix is
/// [] and needs `cols` to recover its shape.
Json MatrixToJson(const Matrix& M);
/// Throws InputError on ragged rows, non-numbers or a shape that disagrees
/// with a non-negative rows/cols hint.
Matrix MatrixFromJson(const Json& j, Eigen::Index rows = -1,
                      Eigen::Index cols = -1, const std::string& name = "matrix");

struct PlantMeta {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> generator;
  std::optional<std::string> comment;
};

struct PlantFile {
  StructuredPlant plant;
  PlantMeta meta;
};

/// {structure: {n, m, k}, matrices: {A, B1, B2, C1, C2, D12, D21}, meta}.
/// Parsing checks shapes only; structural assumptions are left to
/// ValidateStructuredPlant.
Json PlantFileToJson(const PlantFile& file);
PlantFile PlantFileFromJson(const Json& j);
PlantFile LoadPlantFile(const std::string& path);
void SavePlantFile(const std::string& path, const PlantFile& file);

/// {A, B, C, D}.
Json StateSpaceToJson(const StateSpace& sys);
StateSpace StateSpaceFromJson(const Json& j);

/// One named test with its measured margin (positive = satisfied).
struct ConditionRecord {
  std::string name;
  bool passed = false;
  double margin = 0.0;
  std::string detail;
  bool operator==(const ConditionRecord&) const = default;
};

struct CertificateRecord {
  bool passed = false;
  std::map<std::string, double> values;
  std::string detail;
  bool operator==(const CertificateRecord&) const = default;
};

struct ResultFile {
  double gamma = 0.0;
  std::string mode;    // "central" or "structured"
  std::string status;  // "ok", "infeasible", "inconclusive"
  std::string message;
  std::vector<ConditionRecord> conditions;
  std::optional<Matrix> X, Y, Xhat, Yhat;
  std::optional<StateSpace> controller;
  std::optional<bool> closed_loop_stable;
  std::optional<double> hinf_norm;
  std::optional<double> entropy;
  int iterations = 0;
  std::optional<CertificateRecord> lemma3;
  std::optional<CertificateRecord> optimality;
  std::map<std::string, double> timings;  // seconds
};

/// Non-finite numbers are written as null and read back as NaN. Unset
/// hinf_norm/entropy are omitted.
Json ResultFileToJson(const ResultFile& result);
ResultFile ResultFileFromJson(const Json& j);
ResultFile LoadResultFile(const std::string& path);
void SaveResultFile(const std::string& path, const ResultFile& result);

/// Writes through a temporary file in the same directory and renames it.
void WriteFileAtomic(const std::string& path, const std::string& content);
/// Throws InputError when the file cannot be read or parsed.
Json ReadJsonFile(const std::string& path);

/// "k,e_1,...,e_T" with one column per trace and one row per iteration
/// k = 0, 1, ...; shorter traces leave their cells empty.
std::string TraceCsv(const std::vector<std::vector<double>>& traces);

}  // namespace nested_hinf
