#include "nvens/field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "nvens/error.hpp"
#include "nvens/format.hpp"

namespace nvens {

void GridSpec::validate() const {
  if (nx < 2 || ny < 2) throw DomainError("grid needs nx >= 2 and ny >= 2");
  if (!(width_mm > 0.0) || !(height_mm > 0.0)) throw DomainError("grid extent must be positive");
}

ScalarField2D::ScalarField2D(GridSpec grid, std::string unit, double fill)
    : grid_(grid), unit_(std::move(unit)), values_(grid.size(), fill) {}

ScalarField2D::ScalarField2D(GridSpec grid, std::string unit, std::vector<double> values)
    : grid_(grid), unit_(std::move(unit)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw DomainError("field value count does not match grid");
}

Mask::Mask(GridSpec grid, bool fill) : grid_(grid), bits_(grid.size(), fill ? 1 : 0) {}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

Mask Mask::operator|(const Mask& other) const {
  if (!(grid_ == other.grid_)) throw DomainError("mask grids differ");
  Mask out(grid_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] | other.bits_[i];
  return out;
}

Mask Mask::operator&(const Mask& other) const {
  if (!(grid_ == other.grid_)) throw DomainError("mask grids differ");
  Mask out(grid_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & other.bits_[i];
  return out;
}

Mask Mask::operator~() const {
  Mask out(grid_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] ? 0 : 1;
  return out;
}

ScalarField2D Mask::to_field() const {
  ScalarField2D f(grid_, "mask");
  for (std::size_t i = 0; i < bits_.size(); ++i) f[i] = bits_[i] ? 1.0 : 0.0;
  return f;
}

Mask disk_mask(const GridSpec& grid, double center_row, double center_col, double radius_px) {
  Mask m(grid);
  const double r2 = radius_px * radius_px;
  for (int r = 0; r < grid.ny; ++r) {
    for (int c = 0; c < grid.nx; ++c) {
      const double dr = r - center_row;
      const double dc = c - center_col;
      if (dr * dr + dc * dc <= r2) m.set(grid.index(r, c), true);
    }
  }
  return m;
}

Mask dilate(const Mask& mask, double radius_px) {
  const GridSpec& g = mask.grid();
  const int reach = static_cast<int>(std::floor(radius_px));
  const double r2 = radius_px * radius_px;
  Mask out(g);
  for (int r = 0; r < g.ny; ++r) {
    for (int c = 0; c < g.nx; ++c) {
      if (!mask.at(r, c)) continue;
      for (int dr = -reach; dr <= reach; ++dr) {
        for (int dc = -reach; dc <= reach; ++dc) {
          if (dr * dr + dc * dc > r2) continue;
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || rr >= g.ny || cc < 0 || cc >= g.nx) continue;
          out.set(g.index(rr, cc), true);
        }
      }
    }
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void write_csv_grid(const ScalarField2D& field, std::ostream& out) {
  const GridSpec& g = field.grid();
  out << "# grid nx=" << g.nx << " ny=" << g.ny << " width_mm=" << fmt_double(g.width_mm)
      << " height_mm=" << fmt_double(g.height_mm) << " unit=" << (field.unit().empty() ? "none" : field.unit())
      << '\n';
  std::string line;
  for (int r = 0; r < g.ny; ++r) {
    line.clear();
    for (int c = 0; c < g.nx; ++c) {
      if (c) line += ',';
      line += fmt_double(field.at(r, c));
    }
    line += '\n';
    out << line;
  }
}

void write_csv_grid(const ScalarField2D& field, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  write_csv_grid(field, out);
  if (!out) throw Error("write failed: " + path.string());
}

ScalarField2D read_csv_grid(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("empty file, missing grid header", 0, 0);
  std::istringstream hs(header);
  std::string tok;
  hs >> tok;
  if (tok != "#") throw ParseError("header must start with '# grid'", 0, 0);
  hs >> tok;
  if (tok != "grid") throw ParseError("header must start with '# grid'", 0, 0);
  std::map<std::string, std::string> kv;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError("malformed header token '" + tok + "'", 0, 0);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"nx", "ny", "width_mm", "height_mm", "unit"}) {
    if (!kv.count(key)) throw ParseError(std::string("header is missing '") + key + "'", 0, 0);
  }
  GridSpec grid;
  try {
    std::size_t pos = 0;
    grid.nx = std::stoi(kv["nx"], &pos);
    if (pos != kv["nx"].size()) throw std::invalid_argument("nx");
    grid.ny = std::stoi(kv["ny"], &pos);
    if (pos != kv["ny"].size()) throw std::invalid_argument("ny");
    grid.width_mm = std::stod(kv["width_mm"]);
    grid.height_mm = std::stod(kv["height_mm"]);
  } catch (const std::exception&) {
    throw ParseError("malformed numeric value in grid header", 0, 0);
  }
  try {
    grid.validate();
  } catch (const DomainError& e) {
    throw ParseError(std::string("invalid grid header: ") + e.what(), 0, 0);
  }

  std::vector<double> values;
  values.reserve(grid.size());
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (row >= grid.ny) throw ParseError("more data rows than ny=" + std::to_string(grid.ny), row + 1, 0);
    int col = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string cell = trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (col >= grid.nx) throw ParseError("row has more than nx=" + std::to_string(grid.nx) + " columns", row + 1, col + 1);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw ParseError("malformed value '" + cell + "'", row + 1, col + 1);
      if (!std::isfinite(v)) throw ParseError("non-finite value '" + cell + "'", row + 1, col + 1);
      values.push_back(v);
      ++col;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (col != grid.nx) throw ParseError("row has " + std::to_string(col) + " columns, expected " + std::to_string(grid.nx), row + 1, col);
    ++row;
  }
  if (row != grid.ny) throw ParseError("file has " + std::to_string(row) + " data rows, expected " + std::to_string(grid.ny), row + 1, 0);
  return ScalarField2D(grid, kv["unit"], std::move(values));
}

ScalarField2D read_csv_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open for reading: " + path.string());
  return read_csv_grid(in);
}

void write_pgm(const ScalarField2D& field, double lo, double hi, const std::filesystem::path& path) {
  const GridSpec& g = field.grid();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << "P5\n" << g.nx << ' ' << g.ny << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(g.nx));
  const double span = hi - lo;
  for (int r = 0; r < g.ny; ++r) {
    for (int c = 0; c < g.nx; ++c) {
      double t = span > 0.0 ? (field.at(r, c) - lo) / span : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      row[static_cast<std::size_t>(c)] = static_cast<unsigned char>(std::lround(t * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error("write failed: " + path.string());
}

Mask resample_nearest(const Mask& mask, const GridSpec& target, double fraction) {
  const GridSpec& src = mask.grid();
  Mask out(target);
  const double span_cols = fraction * target.nx;
  const double span_rows = fraction * target.ny;
  const double col0 = 0.5 * (target.nx - span_cols);
  const double row0 = 0.5 * (target.ny - span_rows);
  for (int r = 0; r < target.ny; ++r) {
    const double v = (r + 0.5 - row0) / span_rows;
    if (v < 0.0 || v >= 1.0) continue;
    const int sr = std::min(src.ny - 1, static_cast<int>(std::floor(v * src.ny)));
    for (int c = 0; c < target.nx; ++c) {
      const double u = (c + 0.5 - col0) / span_cols;
      if (u < 0.0 || u >= 1.0) continue;
      const int sc = std::min(src.nx - 1, static_cast<int>(std::floor(u * src.nx)));
      out.set(target.index(r, c), mask.at(sr, sc));
    }
  }
  return out;
}

}  // namespace nvens
