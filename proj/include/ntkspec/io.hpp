#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntkspec/measure.hpp"
#include "ntkspec/simulator.hpp"
#include "ntkspec/spectra.hpp"

namespace ntkspec {

using json = nlohmann::json;

// Reads CSV (optional header row, '#' comment lines) or KSPC binary; the
// format is detected from the magic bytes. See docs/formats.md.
Matrix read_matrix(const std::string& path);
void write_matrix_csv(const std::string& path, const Matrix& X);
void write_matrix_kspc(const std::string& path, const Matrix& X);

// One value per row; a non-numeric first row is treated as a header.
std::vector<double> read_eigenvalues(const std::string& path);

void write_curve_csv(const std::string& path, const DensityCurve& curve, const json& meta);
void write_curve_json(const std::string& path, const DensityCurve& curve, const json& meta);
// Reads a curve CSV. Metadata lines are returned through `meta` when given.
DensityCurve read_curve_csv(const std::string& path, json* meta = nullptr);

void write_eigenvalues_csv(const std::string& path, const EigenSpectrum& spec, const json& meta);
void write_histogram_csv(const std::string& path, const Histogram& h, const json& meta);

json to_json(const ComparisonReport& r);
json to_json(const OrthonormalityReport& r);
json to_json(const DensityCurve& curve);

// Pretty-printed JSON with sorted keys and a trailing newline.
void write_json(const std::string& path, const json& doc);
void write_text(const std::string& path, const std::string& text);

}  // namespace ntkspec
