#include "ntkspec/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ntkspec/errors.hpp"

namespace ntkspec {

namespace {

constexpr char kMagic[4] = {'K', 'S', 'P', 'C'};

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IngestionError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Shortest representation that round-trips.
std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_meta_lines(std::ostream& out, const json& meta) {
  if (!meta.is_null()) out << "# meta: " << meta.dump() << '\n';
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

Matrix read_kspc(const std::string& path, const std::string& bytes) {
  if (bytes.size() < 16) throw IngestionError("'" + path + "': truncated KSPC header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t rows = read_u32(p + 4);
  const std::uint32_t cols = read_u32(p + 8);
  const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
  if (bytes.size() != 16 + 8 * count) {
    std::ostringstream msg;
    msg << "'" << path << "': KSPC header declares " << rows << " x " << cols << " ("
        << 16 + 8 * count << " bytes), file has " << bytes.size() << " bytes";
    throw IngestionError(msg.str());
  }
  Matrix X(rows, cols);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = bits << 8 | p[16 + 8 * i + b];
    X.data()[i] = std::bit_cast<double>(bits);
  }
  if (!X.allFinite()) throw IngestionError("'" + path + "': non-finite matrix entries");
  return X;
}

Matrix read_csv_matrix(const std::string& path, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split(t);
    std::vector<double> row;
    bool numeric = true;
    for (const auto& f : fields) {
      double v = 0.0;
      if (!parse_double(f, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty()) continue;
      throw IngestionError("'" + path + "' line " + std::to_string(lineno) + ": non-numeric field");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream msg;
      msg << "'" << path << "' line " << lineno << ": expected " << rows.front().size()
          << " columns, found " << row.size();
      throw IngestionError(msg.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IngestionError("'" + path + "': no numeric rows");
  Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) X(i, j) = rows[i][j];
  if (!X.allFinite()) throw IngestionError("'" + path + "': non-finite matrix entries");
  return X;
}

}  // namespace

Matrix read_matrix(const std::string& path) {
  auto in = open_in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) return read_kspc(path, bytes);
  return read_csv_matrix(path, bytes);
}

void write_matrix_csv(const std::string& path, const Matrix& X) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) out << (j ? "," : "") << fmt(X(i, j));
    out << '\n';
  }
}

void write_matrix_kspc(const std::string& path, const Matrix& X) {
  if (X.rows() > 0xffffffffLL || X.cols() > 0xffffffffLL) throw InvalidArgument("matrix too large for KSPC");
  auto out = open_out(path, std::ios::binary);
  out.write(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(X.rows()));
  put_u32(out, static_cast<std::uint32_t>(X.cols()));
  put_u32(out, 0);
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(X.data()[i]);
    char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<char>(bits >> (8 * k));
    out.write(b, 8);
  }
}

std::vector<double> read_eigenvalues(const std::string& path) {
  auto in = open_in(path);
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::string field = split(t).front();
    double v = 0.0;
    if (!parse_double(field, v)) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw IngestionError("'" + path + "' line " + std::to_string(lineno) + ": not a number");
    }
    if (!std::isfinite(v)) throw IngestionError("'" + path + "' line " + std::to_string(lineno) + ": non-finite value");
    header_allowed = false;
    values.push_back(v);
  }
  if (values.empty()) throw IngestionError("'" + path + "': no eigenvalues");
  return values;
}

void write_curve_csv(const std::string& path, const DensityCurve& curve, const json& meta) {
  auto out = open_out(path);
  write_meta_lines(out, meta);
  out << "x,density,converged,iterations,reinits\n";
  for (std::size_t j = 0; j < curve.size(); ++j) {
    const auto& d = curve.diagnostics[j];
    out << fmt(curve.grid[j]) << ',' << fmt(curve.density[j]) << ',' << (d.converged ? 1 : 0) << ','
        << d.iterations << ',' << d.reinits << '\n';
  }
}

json to_json(const DensityCurve& curve) {
  json points = json::array();
  for (std::size_t j = 0; j < curve.size(); ++j) {
    const auto& d = curve.diagnostics[j];
    json p = {{"x", curve.grid[j]},
              {"density", curve.density[j]},
              {"converged", d.converged},
              {"iterations", d.iterations},
              {"reinits", d.reinits}};
    if (d.negative_clipped) p["negative_clipped"] = true;
    if (!d.failure.empty()) p["failure"] = d.failure;
    points.push_back(std::move(p));
  }
  return {{"eta", curve.eta},
          {"mass", curve.mass()},
          {"unconverged_fraction", curve.unconverged_fraction()},
          {"points", std::move(points)}};
}

void write_curve_json(const std::string& path, const DensityCurve& curve, const json& meta) {
  json doc = to_json(curve);
  doc["metadata"] = meta;
  write_json(path, doc);
}

DensityCurve read_curve_csv(const std::string& path, json* meta) {
  auto in = open_in(path);
  DensityCurve curve;
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  json found;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const std::string tag = "# meta: ";
      if (t.rfind(tag, 0) == 0) {
        try {
          found = json::parse(t.substr(tag.size()));
        } catch (const json::exception& e) {
          throw IngestionError("'" + path + "': bad metadata line: " + e.what());
        }
      }
      continue;
    }
    const auto fields = split(t);
    if (!saw_header) {
      if (fields.size() < 2 || fields[0] != "x" || fields[1] != "density") {
        throw IngestionError("'" + path + "': expected header x,density,...");
      }
      saw_header = true;
      continue;
    }
    double x = 0.0;
    double rho = 0.0;
    if (fields.size() < 2 || !parse_double(fields[0], x) || !parse_double(fields[1], rho)) {
      throw IngestionError("'" + path + "' line " + std::to_string(lineno) + ": malformed row");
    }
    PointDiagnostics d;
    double v = 0.0;
    if (fields.size() > 2 && parse_double(fields[2], v)) d.converged = v != 0.0;
    if (fields.size() > 3 && parse_double(fields[3], v)) d.iterations = static_cast<int>(v);
    if (fields.size() > 4 && parse_double(fields[4], v)) d.reinits = static_cast<int>(v);
    if (!curve.grid.empty() && !(x > curve.grid.back())) {
      throw IngestionError("'" + path + "' line " + std::to_string(lineno) + ": grid not increasing");
    }
    curve.grid.push_back(x);
    curve.density.push_back(rho);
    curve.diagnostics.push_back(d);
  }
  if (curve.size() < 2) throw IngestionError("'" + path + "': curve needs at least two points");
  if (found.is_object() && found.contains("eta")) curve.eta = found["eta"].get<double>();
  if (meta) *meta = found;
  return curve;
}

void write_eigenvalues_csv(const std::string& path, const EigenSpectrum& spec, const json& meta) {
  auto out = open_out(path);
  write_meta_lines(out, meta);
  out << "eigenvalue\n";
  for (double v : spec.values) out << fmt(v) << '\n';
}

void write_histogram_csv(const std::string& path, const Histogram& h, const json& meta) {
  auto out = open_out(path);
  write_meta_lines(out, meta);
  out << "left,right,density\n";
  for (std::size_t b = 0; b < h.density.size(); ++b) {
    out << fmt(h.edges[b]) << ',' << fmt(h.edges[b + 1]) << ',' << fmt(h.density[b]) << '\n';
  }
}

json to_json(const ComparisonReport& r) {
  return {{"kolmogorov", r.kolmogorov},
          {"stieltjes_sup", r.stieltjes_sup},
          {"mass_limit", r.mass_limit},
          {"unconverged_fraction", r.unconverged_fraction},
          {"coverage_warning", r.coverage_warning}};
}

json to_json(const OrthonormalityReport& r) {
  return {{"epsilon_diag", r.epsilon_diag},   {"epsilon_offdiag", r.epsilon_offdiag},
          {"op_norm", r.op_norm},             {"diag_sq_sum", r.diag_sq_sum},
          {"epsilon", r.epsilon},             {"B", r.B},
          {"pass_diag", r.pass_diag},         {"pass_offdiag", r.pass_offdiag},
          {"pass_op_norm", r.pass_op_norm},   {"pass_diag_sq", r.pass_diag_sq},
          {"pass", r.pass()}};
}

void write_json(const std::string& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace ntkspec
