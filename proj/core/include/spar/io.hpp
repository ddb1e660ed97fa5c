#pragma once

#include "spar/simulate.hpp"
#include "spar/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace spar {

/// Formats with 17 significant digits.
std::string format_double(double v);

/// Plain CSV without header. A single column reads as an n x 1 matrix.
Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GroundTruth& t);
GroundTruth truth_from_json(const nlohmann::json& j);

struct Bundle {
  Dataset data;
  nlohmann::json meta;
  std::optional<GroundTruth> truth;
};

/// Writes X.csv, Y.csv, optional W.csv, meta.json and optional truth.json.
void write_bundle(const std::filesystem::path& dir, const Dataset& d, const nlohmann::json& meta,
                  const GroundTruth* truth = nullptr);
Bundle read_bundle(const std::filesystem::path& dir);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace spar
