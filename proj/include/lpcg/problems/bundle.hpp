#pragma once

// A problem bundle is a directory holding
//
//   A.mtx         operator (Matrix Market)
//   b_clean.txt   noise-free data
//   b_noisy.txt   data with Gaussian noise
//   b_outliers.txt  noisy data plus sparse outliers
//   x_true.txt    ground-truth model (optional)
//   meta.json     generator parameters and seeds
//
// Vectors are plain text, one value per line, written with 17 significant digits.

#include "lpcg/matrix_market.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>

namespace lpcg::problems {

struct Bundle {
  io::AnyMatrix A;
  Vector b_clean;
  Vector b_noisy;
  Vector b_outliers;
  std::optional<Vector> x_true;
  nlohmann::json meta = nlohmann::json::object();
};

inline void write_bundle(const std::filesystem::path& dir, const Bundle& bundle) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io::FileError("cannot create directory '" + dir.string() + "': " + ec.message());
  io::write_file((dir / "A.mtx").string(), [&](std::ostream& os) {
    std::visit([&](const auto& a) { io::write_mtx(os, a); }, bundle.A);
  });
  io::write_vector_file((dir / "b_clean.txt").string(), bundle.b_clean);
  io::write_vector_file((dir / "b_noisy.txt").string(), bundle.b_noisy);
  io::write_vector_file((dir / "b_outliers.txt").string(), bundle.b_outliers);
  if (bundle.x_true) io::write_vector_file((dir / "x_true.txt").string(), *bundle.x_true);
  io::write_file((dir / "meta.json").string(), [&](std::ostream& os) { os << bundle.meta.dump(2) << '\n'; });
}

inline Bundle read_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw io::FileError("bundle directory '" + dir.string() + "' not found");
  Bundle b;
  b.A = io::read_mtx_file((dir / "A.mtx").string());
  b.b_clean = io::read_vector_file((dir / "b_clean.txt").string());
  b.b_noisy = io::read_vector_file((dir / "b_noisy.txt").string());
  b.b_outliers = io::read_vector_file((dir / "b_outliers.txt").string());
  if (std::filesystem::exists(dir / "x_true.txt")) b.x_true = io::read_vector_file((dir / "x_true.txt").string());
  if (std::filesystem::exists(dir / "meta.json")) {
    auto is = io::open_input((dir / "meta.json").string());
    try {
      b.meta = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      throw io::FormatError(std::string("meta.json: ") + e.what());
    }
  }
  const Index m = std::visit([](const auto& a) { return a.rows(); }, b.A);
  const Index n = std::visit([](const auto& a) { return a.cols(); }, b.A);
  for (const Vector* v : {&b.b_clean, &b.b_noisy, &b.b_outliers})
    if (v->size() != m) throw io::FormatError("bundle: data length does not match A");
  if (b.x_true && b.x_true->size() != n) throw io::FormatError("bundle: x_true length does not match A");
  return b;
}

}  // namespace lpcg::problems
