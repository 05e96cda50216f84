#pragma once

// Matrix Market (.mtx) reading/writing and one-value-per-line vector files.
// Values are written with 17 significant digits so files round-trip exactly.

#include "lpcg/linop.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>

namespace lpcg::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_mtx(std::ostream& os, const DenseMatrix& a) {
  os << "%%MatrixMarket matrix array real general\n";
  os << a.rows() << ' ' << a.cols() << '\n';
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) os << format_double(a(i, j)) << '\n';
}

inline void write_mtx(std::ostream& os, const CsrMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nonzeros() << '\n';
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& v = a.values();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index k = rp[i]; k < rp[i + 1]; ++k)
      os << (i + 1) << ' ' << (ci[k] + 1) << ' ' << format_double(v[k]) << '\n';
}

using AnyMatrix = std::variant<DenseMatrix, CsrMatrix>;

namespace detail {

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool next_data_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace detail

// Reads "array" files as DenseMatrix and "coordinate" files as CsrMatrix.
// Supports real/integer fields with general or symmetric storage.
inline AnyMatrix read_mtx(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw FormatError("mtx: empty input");
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || detail::lower(object) != "matrix")
    throw FormatError("mtx: missing %%MatrixMarket matrix banner");
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (field != "real" && field != "integer" && field != "double")
    throw FormatError("mtx: unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw FormatError("mtx: unsupported symmetry '" + symmetry + "'");
  const bool symmetric = symmetry == "symmetric";

  std::string line;
  if (!detail::next_data_line(is, line)) throw FormatError("mtx: missing size line");
  std::istringstream ss(line);

  if (format == "array") {
    Index rows = 0, cols = 0;
    if (!(ss >> rows >> cols) || rows < 0 || cols < 0) throw FormatError("mtx: bad array size line");
    DenseMatrix a(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = symmetric ? j : 0; i < rows; ++i) {
        if (!detail::next_data_line(is, line)) throw FormatError("mtx: truncated array data");
        std::istringstream vs(line);
        if (!(vs >> a(i, j))) throw FormatError("mtx: bad array value: " + line);
        if (symmetric) a(j, i) = a(i, j);
      }
    }
    return a;
  }
  if (format == "coordinate") {
    Index rows = 0, cols = 0, nnz = 0;
    if (!(ss >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
      throw FormatError("mtx: bad coordinate size line");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
    for (Index k = 0; k < nnz; ++k) {
      if (!detail::next_data_line(is, line)) throw FormatError("mtx: truncated coordinate data");
      std::istringstream es(line);
      Index i = 0, j = 0;
      double v = 0.0;
      if (!(es >> i >> j >> v)) throw FormatError("mtx: bad coordinate entry: " + line);
      if (i < 1 || i > rows || j < 1 || j > cols) throw FormatError("mtx: entry index out of range");
      t.push_back({i - 1, j - 1, v});
      if (symmetric && i != j) t.push_back({j - 1, i - 1, v});
    }
    return CsrMatrix(rows, cols, std::move(t));
  }
  throw FormatError("mtx: unsupported format '" + format + "'");
}

inline void write_vector(std::ostream& os, const Vector& v) {
  for (Index k = 0; k < v.size(); ++k) os << format_double(v[k]) << '\n';
}

inline Vector read_vector(std::istream& is) {
  std::vector<double> vals;
  std::string line;
  while (detail::next_data_line(is, line)) {
    std::istringstream ls(line);
    double v = 0.0;
    if (!(ls >> v)) throw FormatError("vector: bad value: " + line);
    vals.push_back(v);
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
}

template <class Writer>
void write_file(const std::string& path, Writer&& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FileError("cannot open '" + path + "' for writing");
  w(os);
  if (!os) throw FileError("write to '" + path + "' failed");
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileError("cannot open '" + path + "' for reading");
  return is;
}

inline AnyMatrix read_mtx_file(const std::string& path) {
  auto is = open_input(path);
  return read_mtx(is);
}

inline Vector read_vector_file(const std::string& path) {
  auto is = open_input(path);
  return read_vector(is);
}

inline void write_vector_file(const std::string& path, const Vector& v) {
  write_file(path, [&](std::ostream& os) { write_vector(os, v); });
}

inline Operator to_operator(AnyMatrix m) {
  return std::visit([](auto&& a) { return Operator(std::move(a)); }, std::move(m));
}

}  // namespace lpcg::io
