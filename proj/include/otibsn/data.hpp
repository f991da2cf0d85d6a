// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "otibsn/core.hpp"

namespace otibsn {

/// Seeded generator built on std::mt19937_64, whose output sequence is fixed
/// by the C++ standard. Doubles take the top 53 bits; exact zeros are redrawn.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1).
  double uniform() {
    while (true) {
      const std::uint64_t bits = engine_() >> 11;
      if (bits != 0) return static_cast<double>(bits) * 0x1.0p-53;
    }
  }

  /// Uniform on the unit sphere by Marsaglia's method.
  Eigen::Vector3d sphere_point() {
    while (true) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s >= 1.0) continue;
      const double r = 2.0 * std::sqrt(1.0 - s);
      return {u * r, v * r, 1.0 - 2.0 * s};
    }
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

inline void check_size(Index m, Index n) {
  if (m < 1 || n < 1) throw Error(ErrorCode::InvalidConfig, "instance sizes must be positive");
}

inline Vector random_marginal(Rng& rng, Index size) {
  Vector v(size);
  for (Index i = 0; i < size; ++i) v[i] = rng.uniform();
  return renormalize_marginal(v);
}

}  // namespace detail

/// Uniform random costs and marginals.
inline OtProblem gen_uniform(Index m, Index n, std::uint64_t seed) {
  detail::check_size(m, n);
  Rng rng(seed);
  Matrix cost(m, n);
  for (Index k = 0; k < cost.size(); ++k) cost.data()[k] = rng.uniform();
  Vector a = detail::random_marginal(rng, m);
  Vector b = detail::random_marginal(rng, n);
  return OtProblem::from_raw(cost, std::move(a), std::move(b));
}

/// C_ij = (i - j)^2 scaled by its maximum (max(m, n) - 1)^2, random marginals.
inline OtProblem gen_square(Index m, Index n, std::uint64_t seed) {
  detail::check_size(m, n);
  Rng rng(seed);
  Matrix cost(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double d = static_cast<double>(i - j);
      cost(i, j) = d * d;
    }
  }
  Vector a = detail::random_marginal(rng, m);
  Vector b = detail::random_marginal(rng, n);
  return OtProblem::from_raw(cost, std::move(a), std::move(b));
}

/// Great-circle distances between m + n uniform points on the unit sphere.
inline OtProblem gen_spherical(Index m, Index n, std::uint64_t seed) {
  detail::check_size(m, n);
  Rng rng(seed);
  std::vector<Eigen::Vector3d> xs;
  std::vector<Eigen::Vector3d> ys;
  for (Index i = 0; i < m; ++i) xs.push_back(rng.sphere_point());
  for (Index j = 0; j < n; ++j) ys.push_back(rng.sphere_point());
  Matrix cost(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      cost(i, j) = std::acos(std::clamp(xs[i].dot(ys[j]), -1.0, 1.0));
    }
  }
  Vector a = detail::random_marginal(rng, m);
  Vector b = detail::random_marginal(rng, n);
  return OtProblem::from_raw(cost, std::move(a), std::move(b));
}

/// A grayscale image as row-major intensities.
struct GrayImage {
  Index height = 0;
  Index width = 0;
  std::vector<double> pixels;
};

namespace detail {

inline Error load_error(const std::string& path, const std::string& what) {
  return Error(ErrorCode::LoadError, path + ": " + what);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw load_error(path, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Next whitespace-separated header token, skipping '#' comments.
inline std::string pnm_token(const std::string& data, std::size_t& pos) {
  while (pos < data.size()) {
    if (data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  return data.substr(start, pos - start);
}

inline long pnm_number(const std::string& data, std::size_t& pos, const std::string& path) {
  const std::string tok = pnm_token(data, pos);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), ::isdigit)) {
    throw load_error(path, "malformed PGM header");
  }
  return std::stol(tok);
}

inline GrayImage parse_pgm(const std::string& data, const std::string& path) {
  std::size_t pos = 0;
  const std::string magic = pnm_token(data, pos);
  if (magic != "P2" && magic != "P5") throw load_error(path, "not a grayscale PGM image");
  GrayImage img;
  img.width = pnm_number(data, pos, path);
  img.height = pnm_number(data, pos, path);
  const long maxval = pnm_number(data, pos, path);
  if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 65535) {
    throw load_error(path, "PGM dimensions or maxval out of range");
  }
  const std::size_t count = static_cast<std::size_t>(img.width * img.height);
  img.pixels.reserve(count);
  if (magic == "P2") {
    for (std::size_t k = 0; k < count; ++k) {
      const long v = pnm_number(data, pos, path);
      if (v > maxval) throw load_error(path, "pixel above maxval");
      img.pixels.push_back(static_cast<double>(v));
    }
    return img;
  }
  ++pos;  // single whitespace byte before the raster
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  if (data.size() < pos + count * bytes) throw load_error(path, "truncated PGM raster");
  for (std::size_t k = 0; k < count; ++k) {
    const auto* p = reinterpret_cast<const unsigned char*>(data.data() + pos + k * bytes);
    const unsigned v = bytes == 2 ? (static_cast<unsigned>(p[0]) << 8) | p[1] : p[0];
    img.pixels.push_back(static_cast<double>(v));
  }
  return img;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ',')) out.push_back(field);
  return out;
}

inline double parse_real(const std::string& text, const std::string& path, Index line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used == 0 || used != text.size()) {
    throw load_error(path, "line " + std::to_string(line) + ": bad number '" + text + "'");
  }
  return v;
}

/// Rows of comma-separated reals; blank lines and lines starting with '#' are skipped.
inline std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw load_error(path, "cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    std::vector<double> row;
    for (const auto& f : split_csv_line(line)) row.push_back(parse_real(f, path, line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline GrayImage parse_csv_grid(const std::string& path) {
  const auto rows = read_csv_rows(path);
  if (rows.empty()) throw load_error(path, "empty CSV grid");
  GrayImage img;
  img.height = static_cast<Index>(rows.size());
  img.width = static_cast<Index>(rows[0].size());
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != img.width) throw load_error(path, "ragged CSV grid");
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw load_error(path, "negative or non-finite pixel");
      img.pixels.push_back(v);
    }
  }
  return img;
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Reads a PGM (P2 or P5) or, failing the magic number, a CSV grid.
inline GrayImage load_gray_image(const std::string& path) {
  const std::string data = detail::read_file(path);
  if (data.size() >= 2 && data[0] == 'P') return detail::parse_pgm(data, path);
  return detail::parse_csv_grid(path);
}

inline constexpr double kPixelFloor = 1e-9;

/// Histogram transport between two same-sized grayscale images: marginals are
/// the intensities plus 1e-9, normalized; the cost is the squared distance
/// between pixel coordinates, scaled to unit maximum.
inline OtProblem load_image_pair(const std::string& path1, const std::string& path2) {
  const GrayImage first = load_gray_image(path1);
  const GrayImage second = load_gray_image(path2);
  if (first.height != second.height || first.width != second.width) {
    throw detail::load_error(path2, "image dimensions differ from " + path1);
  }
  const Index size = first.height * first.width;
  auto marginal = [&](const GrayImage& img) {
    Vector v(size);
    for (Index k = 0; k < size; ++k) v[k] = img.pixels[static_cast<std::size_t>(k)] + kPixelFloor;
    return renormalize_marginal(v);
  };
  Matrix cost(size, size);
  for (Index p = 0; p < size; ++p) {
    for (Index q = 0; q < size; ++q) {
      const double dr = static_cast<double>(p / first.width - q / first.width);
      const double dc = static_cast<double>(p % first.width - q % first.width);
      cost(p, q) = dr * dr + dc * dc;
    }
  }
  return OtProblem::from_raw(cost, marginal(first), marginal(second));
}

/// Cost CSV with a leading "# m n" line.
inline void write_cost_csv(const std::string& path, const Matrix& cost) {
  std::ofstream out(path);
  if (!out) throw detail::load_error(path, "cannot write file");
  out << "# " << cost.rows() << ' ' << cost.cols() << '\n';
  for (Index i = 0; i < cost.rows(); ++i) {
    for (Index j = 0; j < cost.cols(); ++j) {
      if (j > 0) out << ',';
      out << detail::format_real(cost(i, j));
    }
    out << '\n';
  }
  if (!out) throw detail::load_error(path, "write failed");
}

/// Cost CSV; an optional "# m n" first line is checked against the body.
inline Matrix read_cost_csv(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw detail::load_error(path, "cannot open file");
  std::string first;
  std::getline(probe, first);
  long hm = -1;
  long hn = -1;
  if (!first.empty() && first[0] == '#') {
    std::istringstream hs(first.substr(1));
    if (!(hs >> hm >> hn)) hm = hn = -1;
  }
  const auto rows = detail::read_csv_rows(path);
  if (rows.empty()) throw detail::load_error(path, "empty cost file");
  Matrix cost(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw detail::load_error(path, "ragged cost rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      cost(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  if (hm >= 0 && (hm != cost.rows() || hn != cost.cols())) {
    throw detail::load_error(path, "header size disagrees with the data");
  }
  return cost;
}

/// One value per line.
inline void write_marginal_csv(const std::string& path, const Vector& v) {
  std::ofstream out(path);
  if (!out) throw detail::load_error(path, "cannot write file");
  for (Index i = 0; i < v.size(); ++i) out << detail::format_real(v[i]) << '\n';
  if (!out) throw detail::load_error(path, "write failed");
}

inline Vector read_marginal_csv(const std::string& path) {
  const auto rows = detail::read_csv_rows(path);
  std::vector<double> values;
  for (const auto& row : rows) {
    if (row.size() != 1) throw detail::load_error(path, "expected one value per line");
    values.push_back(row[0]);
  }
  if (values.empty()) throw detail::load_error(path, "empty marginal file");
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

/// Instance from cost and marginal files; the cost is scaled to unit maximum.
inline OtProblem load_problem(const std::string& cost_path, const std::string& a_path,
                              const std::string& b_path) {
  return OtProblem::from_raw(read_cost_csv(cost_path), read_marginal_csv(a_path),
                             read_marginal_csv(b_path));
}

}  // namespace otibsn
