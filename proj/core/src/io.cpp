#include "spar/io.hpp"

#include "spar/dataset.hpp"
#include "spar/error.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace fs = std::filesystem;

namespace spar {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Matrix read_csv_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<double> values;
  Index rows = 0, cols = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Index count = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t end = line.find(',', pos);
      const std::string cell = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      char* stop = nullptr;
      const double v = std::strtod(cell.c_str(), &stop);
      if (stop == cell.c_str()) raise(ErrorCode::IoError, path.string() + ": bad number '" + cell + "'");
      values.push_back(v);
      ++count;
      if (end == std::string::npos) break;
      pos = end + 1;
    }
    if (cols < 0) cols = count;
    if (count != cols) raise(ErrorCode::IoError, path.string() + ": ragged row " + std::to_string(rows + 1));
    ++rows;
  }
  if (cols < 0) cols = 0;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

void write_csv_matrix(const fs::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) raise(ErrorCode::IoError, "write failed: " + path.string());
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(std::move(row));
  }
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const Index r = static_cast<Index>(rows.size());
  const Index c = r ? static_cast<Index>(rows.front().size()) : 0;
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    require(static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) == c, ErrorCode::IoError,
            "json matrix: ragged rows");
    for (Index k = 0; k < c; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return m;
}

nlohmann::json vector_to_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

nlohmann::json to_json(const GroundTruth& t) {
  nlohmann::json j{{"beta", vector_to_json(t.beta)},
                   {"alpha", matrix_to_json(t.alpha)},
                   {"delta", vector_to_json(t.delta)},
                   {"sigma_eps_x", matrix_to_json(t.sigma_eps_x)},
                   {"U", matrix_to_json(t.U)},
                   {"q", t.q}};
  j["eta"] = t.eta ? matrix_to_json(*t.eta) : nlohmann::json(nullptr);
  j["lambda_w"] = t.lambda_w ? vector_to_json(*t.lambda_w) : nlohmann::json(nullptr);
  return j;
}

GroundTruth truth_from_json(const nlohmann::json& j) {
  try {
    GroundTruth t;
    t.beta = vector_from_json(j.at("beta"));
    t.alpha = matrix_from_json(j.at("alpha"));
    t.delta = vector_from_json(j.at("delta"));
    t.sigma_eps_x = matrix_from_json(j.at("sigma_eps_x"));
    t.U = matrix_from_json(j.at("U"));
    t.q = j.at("q").get<int>();
    if (j.contains("eta") && !j["eta"].is_null()) t.eta = matrix_from_json(j["eta"]);
    if (j.contains("lambda_w") && !j["lambda_w"].is_null()) t.lambda_w = vector_from_json(j["lambda_w"]);
    return t;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::IoError, std::string("truth.json: ") + e.what());
  }
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::IoError, path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) raise(ErrorCode::IoError, "write failed: " + path.string());
}

void write_bundle(const fs::path& dir, const Dataset& d, const nlohmann::json& meta, const GroundTruth* truth) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  write_csv_matrix(dir / "X.csv", d.X);
  write_csv_matrix(dir / "Y.csv", d.Y);
  if (d.W) write_csv_matrix(dir / "W.csv", *d.W);
  nlohmann::json m = meta;
  m["n"] = d.n();
  m["p"] = d.p();
  m["r"] = d.r();
  write_json_file(dir / "meta.json", m);
  if (truth) write_json_file(dir / "truth.json", to_json(*truth));
}

Bundle read_bundle(const fs::path& dir) {
  Bundle b;
  b.data.X = read_csv_matrix(dir / "X.csv");
  const Matrix y = read_csv_matrix(dir / "Y.csv");
  require(y.cols() == 1 || y.rows() == 0, ErrorCode::IoError, "Y.csv must have one column");
  b.data.Y = y.rows() ? Vector(y.col(0)) : Vector(0);
  if (fs::exists(dir / "W.csv")) b.data.W = read_csv_matrix(dir / "W.csv");
  b.meta = fs::exists(dir / "meta.json") ? read_json_file(dir / "meta.json") : nlohmann::json::object();
  if (fs::exists(dir / "truth.json")) b.truth = truth_from_json(read_json_file(dir / "truth.json"));
  validate_dataset(b.data);
  return b;
}

}  // namespace spar
