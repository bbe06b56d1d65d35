#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nvens {

/// Uniform 2-D grid with physical extent (mm). Row 0 is the +y edge.
struct GridSpec {
  double width_mm = 5.0;
  double height_mm = 5.0;
  int nx = 500;
  int ny = 500;

  void validate() const;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  double dx() const { return width_mm / nx; }
  double dy() const { return height_mm / ny; }
  // Pixel-centre coordinates.
  double x(int col) const { return -0.5 * width_mm + (col + 0.5) * dx(); }
  double y(int row) const { return 0.5 * height_mm - (row + 0.5) * dy(); }
  int center_row() const { return ny / 2; }
  int center_col() const { return nx / 2; }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(col);
  }
  std::size_t center_index() const { return index(center_row(), center_col()); }

  bool operator==(const GridSpec&) const = default;
};

/// Real-valued quantity on a GridSpec, row-major.
class ScalarField2D {
 public:
  ScalarField2D() = default;
  ScalarField2D(GridSpec grid, std::string unit, double fill = 0.0);
  ScalarField2D(GridSpec grid, std::string unit, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  const std::string& unit() const { return unit_; }
  void set_unit(std::string unit) { unit_ = std::move(unit); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double at(int row, int col) const { return values_[grid_.index(row, col)]; }
  double& at(int row, int col) { return values_[grid_.index(row, col)]; }
  double center() const { return values_[grid_.center_index()]; }
  std::size_t size() const { return values_.size(); }

 private:
  GridSpec grid_{};
  std::string unit_;
  std::vector<double> values_;
};

/// Boolean membership field over a grid (sensor subsets, uniformity disks, hologram regions).
class Mask {
 public:
  Mask() = default;
  explicit Mask(GridSpec grid, bool fill = false);

  const GridSpec& grid() const { return grid_; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  bool at(int row, int col) const { return bits_[grid_.index(row, col)] != 0; }
  std::size_t size() const { return bits_.size(); }
  std::size_t count() const;
  bool empty() const { return count() == 0; }

  Mask operator|(const Mask& other) const;
  Mask operator&(const Mask& other) const;
  Mask operator~() const;
  bool operator==(const Mask&) const = default;

  ScalarField2D to_field() const;

 private:
  GridSpec grid_{};
  std::vector<unsigned char> bits_;
};

/// Disk of pixels whose centres lie within `radius_px` pixel pitches of (row, col).
Mask disk_mask(const GridSpec& grid, double center_row, double center_col, double radius_px);

/// Pixel mask dilated by a Euclidean radius in pixels.
Mask dilate(const Mask& mask, double radius_px);

// CSV grid format:
//   # grid nx=<int> ny=<int> width_mm=<float> height_mm=<float> unit=<string>
//   ny rows of nx comma-separated values, top row = +y edge.
void write_csv_grid(const ScalarField2D& field, std::ostream& out);
void write_csv_grid(const ScalarField2D& field, const std::filesystem::path& path);
ScalarField2D read_csv_grid(std::istream& in);
ScalarField2D read_csv_grid(const std::filesystem::path& path);

/// 8-bit binary PGM; `lo` maps to 0 and `hi` to 255.
void write_pgm(const ScalarField2D& field, double lo, double hi, const std::filesystem::path& path);

/// Nearest-neighbour resampling of a mask onto `target`. `fraction` is the share of the
/// target extent that the source grid covers (centred); outside of it the result is false.
Mask resample_nearest(const Mask& mask, const GridSpec& target, double fraction = 1.0);

}  // namespace nvens
