#include "nested_hinf/plant_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

namespace nested_hinf {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json Number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double ReadNumber(const Json& j, const std::string& name) {
  if (j.is_null()) return kNaN;
  if (!j.is_number()) throw InputError(name + ": expected a number");
  return j.get<double>();
}

const Json& Field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) {
    throw InputError(where + ": missing field '" + key + "'");
  }
  return *it;
}

BlockSplit ReadSplit(const Json& s, const char* key) {
  const Json& v = Field(s, key, "structure");
  if (!v.is_array() || v.size() != 2) {
    throw InputError(std::string("structure.") + key +
                     ": expected two non-negative integers");
  }
  BlockSplit split;
  for (int i = 0; i < 2; ++i) {
    if (!v[i].is_number_integer() || v[i].get<long long>() < 0) {
      throw InputError(std::string("structure.") + key +
                       ": expected two non-negative integers");
    }
  }
  split.first = v[0].get<Eigen::Index>();
  split.second = v[1].get<Eigen::Index>();
  return split;
}

Json SplitToJson(const BlockSplit& s) { return Json::array({s.first, s.second}); }

std::optional<Matrix> OptionalMatrix(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return MatrixFromJson(*it, -1, -1, key);
}

Json CertificateToJson(const CertificateRecord& c) {
  Json values = Json::object();
  for (const auto& [k, v] : c.values) values[k] = Number(v);
  return {{"passed", c.passed}, {"values", values}, {"detail", c.detail}};
}

CertificateRecord CertificateFromJson(const Json& j) {
  CertificateRecord c;
  c.passed = Field(j, "passed", "certificate").get<bool>();
  for (const auto& [k, v] : Field(j, "values", "certificate").items()) {
    c.values[k] = ReadNumber(v, k);
  }
  c.detail = j.value("detail", "");
  return c;
}

}  // namespace

Json MatrixToJson(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(Number(M(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix MatrixFromJson(const Json& j, Eigen::Index rows, Eigen::Index cols,
                      const std::string& name) {
  if (!j.is_array()) throw InputError(name + ": expected an array of rows");
  const auto r = static_cast<Eigen::Index>(j.size());
  Eigen::Index c = r > 0 ? -1 : (cols >= 0 ? cols : 0);
  for (const Json& row : j) {
    if (!row.is_array()) throw InputError(name + ": expected an array of rows");
    const auto len = static_cast<Eigen::Index>(row.size());
    if (c >= 0 && len != c) throw InputError(name + ": ragged rows");
    c = len;
  }
  std::ostringstream shape;
  if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols)) {
    shape << name << ": expected " << rows << "x" << cols << ", got " << r
          << "x" << c;
    throw InputError(shape.str());
  }
  Matrix M(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index k = 0; k < c; ++k) {
      M(i, k) = ReadNumber(j[i][k], name);
    }
  }
  return M;
}

Json PlantFileToJson(const PlantFile& file) {
  const PartitionedPlant& p = file.plant.plant;
  const BlockStructure& s = file.plant.structure;
  Json meta = Json::object();
  if (file.meta.seed) meta["seed"] = *file.meta.seed;
  if (file.meta.generator) meta["generator"] = *file.meta.generator;
  if (file.meta.comment) meta["comment"] = *file.meta.comment;
  return {
      {"structure",
       {{"n", SplitToJson(s.n)}, {"m", SplitToJson(s.m)}, {"k", SplitToJson(s.k)}}},
      {"matrices",
       {{"A", MatrixToJson(p.A)},
        {"B1", MatrixToJson(p.B1)},
        {"B2", MatrixToJson(p.B2)},
        {"C1", MatrixToJson(p.C1)},
        {"C2", MatrixToJson(p.C2)},
        {"D12", MatrixToJson(p.D12)},
        {"D21", MatrixToJson(p.D21)}}},
      {"meta", meta}};
}

PlantFile PlantFileFromJson(const Json& j) {
  PlantFile file;
  const Json& s = Field(j, "structure", "plant file");
  BlockStructure& st = file.plant.structure;
  st.n = ReadSplit(s, "n");
  st.m = ReadSplit(s, "m");
  st.k = ReadSplit(s, "k");
  const Json& mats = Field(j, "matrices", "plant file");
  const Eigen::Index n = st.n.total(), m = st.m.total(), k = st.k.total();
  const auto get = [&](const char* key, Eigen::Index rows, Eigen::Index cols) {
    return MatrixFromJson(Field(mats, key, "matrices"), rows, cols, key);
  };
  PartitionedPlant& p = file.plant.plant;
  p.A = get("A", n, n);
  p.B2 = get("B2", n, m);
  p.C2 = get("C2", k, n);
  p.D12 = get("D12", -1, m);
  p.D21 = get("D21", k, -1);
  p.B1 = get("B1", n, p.D21.cols());
  p.C1 = get("C1", p.D12.rows(), n);
  if (const auto it = j.find("meta"); it != j.end() && it->is_object()) {
    if (it->contains("seed")) {
      const Json& seed = (*it)["seed"];
      if (!seed.is_number_unsigned()) {
        throw InputError("meta.seed: expected a non-negative integer");
      }
      file.meta.seed = seed.get<std::uint64_t>();
    }
    if (it->contains("generator")) {
      file.meta.generator = (*it)["generator"].get<std::string>();
    }
    if (it->contains("comment")) {
      file.meta.comment = (*it)["comment"].get<std::string>();
    }
  }
  return file;
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

PlantFile LoadPlantFile(const std::string& path) {
  try {
    return PlantFileFromJson(ReadJsonFile(path));
  } catch (const Json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void SavePlantFile(const std::string& path, const PlantFile& file) {
  WriteFileAtomic(path, PlantFileToJson(file).dump(2) + "\n");
}

Json StateSpaceToJson(const StateSpace& sys) {
  return {{"A", MatrixToJson(sys.A())},
          {"B", MatrixToJson(sys.B())},
          {"C", MatrixToJson(sys.C())},
          {"D", MatrixToJson(sys.D())}};
}

StateSpace StateSpaceFromJson(const Json& j) {
  const Matrix D = MatrixFromJson(Field(j, "D", "system"), -1, -1, "D");
  const Matrix A = MatrixFromJson(Field(j, "A", "system"), -1, -1, "A");
  const Eigen::Index n = A.rows();
  if (A.cols() != n && !(n == 0)) throw InputError("A: not square");
  const Matrix B = MatrixFromJson(Field(j, "B", "system"), n, D.cols(), "B");
  const Matrix C = MatrixFromJson(Field(j, "C", "system"), D.rows(), n, "C");
  try {
    return StateSpace(n == 0 ? Matrix(0, 0) : A, B, C, D);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("system: ") + e.what());
  }
}

Json ResultFileToJson(const ResultFile& r) {
  Json j;
  j["gamma"] = Number(r.gamma);
  j["mode"] = r.mode;
  j["status"] = r.status;
  j["message"] = r.message;
  Json conditions = Json::array();
  for (const ConditionRecord& c : r.conditions) {
    conditions.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"margin", Number(c.margin)},
                          {"detail", c.detail}});
  }
  j["conditions"] = conditions;
  const auto put = [&](const char* key, const std::optional<Matrix>& M) {
    j[key] = M ? MatrixToJson(*M) : Json(nullptr);
  };
  put("X", r.X);
  put("Y", r.Y);
  put("Xhat", r.Xhat);
  put("Yhat", r.Yhat);
  j["controller"] = r.controller ? StateSpaceToJson(*r.controller) : Json(nullptr);
  j["closed_loop_stable"] =
      r.closed_loop_stable ? Json(*r.closed_loop_stable) : Json(nullptr);
  // Absent means not computed; null means computed but not finite.
  if (r.hinf_norm) j["hinf_norm"] = Number(*r.hinf_norm);
  if (r.entropy) j["entropy"] = Number(*r.entropy);
  j["iterations"] = r.iterations;
  j["lemma3"] = r.lemma3 ? CertificateToJson(*r.lemma3) : Json(nullptr);
  j["optimality"] = r.optimality ? CertificateToJson(*r.optimality) : Json(nullptr);
  Json timings = Json::object();
  for (const auto& [k, v] : r.timings) timings[k] = Number(v);
  j["timings"] = timings;
  return j;
}

ResultFile ResultFileFromJson(const Json& j) {
  try {
    ResultFile r;
    r.gamma = ReadNumber(Field(j, "gamma", "result"), "gamma");
    r.mode = j.value("mode", "");
    r.status = j.value("status", "");
    r.message = j.value("message", "");
    if (const auto it = j.find("conditions"); it != j.end()) {
      for (const Json& c : *it) {
        r.conditions.push_back({c.at("name").get<std::string>(),
                                c.at("passed").get<bool>(),
                                ReadNumber(c.at("margin"), "margin"),
                                c.value("detail", "")});
      }
    }
    r.X = OptionalMatrix(j, "X");
    r.Y = OptionalMatrix(j, "Y");
    r.Xhat = OptionalMatrix(j, "Xhat");
    r.Yhat = OptionalMatrix(j, "Yhat");
    if (const auto it = j.find("controller"); it != j.end() && !it->is_null()) {
      r.controller = StateSpaceFromJson(*it);
    }
    if (const auto it = j.find("closed_loop_stable");
        it != j.end() && !it->is_null()) {
      r.closed_loop_stable = it->get<bool>();
    }
    if (const auto it = j.find("hinf_norm"); it != j.end()) {
      r.hinf_norm = ReadNumber(*it, "hinf_norm");
    }
    if (const auto it = j.find("entropy"); it != j.end()) {
      r.entropy = ReadNumber(*it, "entropy");
    }
    r.iterations = j.value("iterations", 0);
    if (const auto it = j.find("lemma3"); it != j.end() && !it->is_null()) {
      r.lemma3 = CertificateFromJson(*it);
    }
    if (const auto it = j.find("optimality"); it != j.end() && !it->is_null()) {
      r.optimality = CertificateFromJson(*it);
    }
    if (const auto it = j.find("timings"); it != j.end()) {
      for (const auto& [k, v] : it->items()) r.timings[k] = ReadNumber(v, k);
    }
    return r;
  } catch (const Json::exception& e) {
    throw InputError(std::string("result: ") + e.what());
  }
}

ResultFile LoadResultFile(const std::string& path) {
  return ResultFileFromJson(ReadJsonFile(path));
}

void SaveResultFile(const std::string& path, const ResultFile& result) {
  WriteFileAtomic(path, ResultFileToJson(result).dump(2) + "\n");
}

void WriteFileAtomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw InputError("cannot replace " + path + ": " + ec.message());
  }
}

std::string TraceCsv(const std::vector<std::vector<double>>& traces) {
  std::ostringstream os;
  char buf[32];
  os << "k";
  for (std::size_t t = 0; t < traces.size(); ++t) os << ",e_" << t + 1;
  os << "\n";
  std::size_t rows = 0;
  for (const auto& trace : traces) rows = std::max(rows, trace.size());
  for (std::size_t k = 0; k < rows; ++k) {
    os << k;
    for (const auto& trace : traces) {
      os << ",";
      if (k < trace.size()) {
        const auto res = std::to_chars(buf, buf + sizeof buf, trace[k]);
        os.write(buf, res.ptr - buf);
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace nested_hinf
