#include "mosquito/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mosquito::io {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return os;
}

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path, const std::string& header,
                                           std::size_t columns) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw std::runtime_error(path.string() + ": expected header '" + header + "'");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != columns) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(columns) + " columns");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool close(double a, double b, double scale) { return std::abs(a - b) <= 1e-9 * std::max(1.0, scale); }

}  // namespace

void write_field_csv(std::ostream& os, const Field<double>& f) {
  const auto& g = f.grid();
  os << "a,t,x,value\n";
  for (int i = 0; i <= g.n_a; ++i) {
    const std::string a = format_double(g.age(i));
    for (int n = 0; n <= g.n_t; ++n) {
      const std::string t = format_double(g.time(n));
      for (int k = 0; k < g.n_x; ++k) {
        os << a << ',' << t << ',' << format_double(g.x_center(k)) << ',' << format_double(f(i, n, k)) << '\n';
      }
    }
  }
}

void write_field_csv(const std::filesystem::path& path, const Field<double>& f) {
  auto os = open_out(path);
  write_field_csv(os, f);
}

Field<double> read_field_csv(const std::filesystem::path& path, const Grid<double>& g) {
  const auto rows = read_rows(path, "a,t,x,value", 4);
  if (rows.size() != g.node_count()) {
    throw std::runtime_error(path.string() + ": expected " + std::to_string(g.node_count()) + " rows, found " +
                             std::to_string(rows.size()));
  }
  Field<double> f(g);
  std::size_t r = 0;
  for (int i = 0; i <= g.n_a; ++i) {
    for (int n = 0; n <= g.n_t; ++n) {
      for (int k = 0; k < g.n_x; ++k, ++r) {
        const auto& row = rows[r];
        if (!close(row[0], g.age(i), g.a_max) || !close(row[1], g.time(n), g.t_max) ||
            !close(row[2], g.x_center(k), kDayHours)) {
          throw std::runtime_error(path.string() + ": row " + std::to_string(r + 2) +
                                   " coordinates do not match the grid");
        }
        f(i, n, k) = row[3];
      }
    }
  }
  return f;
}

Slice<double> read_age_slice_csv(const std::filesystem::path& path, const Grid<double>& g) {
  const auto rows = read_rows(path, "a,x,value", 3);
  const std::size_t expected = static_cast<std::size_t>(g.n_a + 1) * static_cast<std::size_t>(g.n_x);
  if (rows.size() != expected) {
    throw std::runtime_error(path.string() + ": expected " + std::to_string(expected) + " rows");
  }
  Slice<double> s(g.n_a + 1, g.n_x);
  std::size_t r = 0;
  for (int i = 0; i <= g.n_a; ++i) {
    for (int k = 0; k < g.n_x; ++k, ++r) {
      if (!close(rows[r][0], g.age(i), g.a_max) || !close(rows[r][1], g.x_center(k), kDayHours)) {
        throw std::runtime_error(path.string() + ": row " + std::to_string(r + 2) +
                                 " coordinates do not match the grid");
      }
      s(i, k) = rows[r][2];
    }
  }
  return s;
}

void write_boundary_csv(const std::filesystem::path& path, const Grid<double>& g, const Boundary<double>& b) {
  auto os = open_out(path);
  os << "t,x,b\n";
  for (int n = 0; n <= g.n_t; ++n) {
    const std::string t = format_double(g.time(n));
    for (int k = 0; k < g.n_x; ++k) os << t << ',' << format_double(g.x_center(k)) << ',' << format_double(b(n, k)) << '\n';
  }
}

void write_switching_csv(const std::filesystem::path& path, const Field<double>& q) {
  const auto& g = q.grid();
  auto os = open_out(path);
  os << "a,t,x,indicator\n";
  for (int i = 0; i <= g.n_a; ++i) {
    for (int n = 0; n <= g.n_t; ++n) {
      for (int k = 0; k < g.n_x; ++k) {
        const double s = q(i, n, k) + 1.0;
        const int indicator = s > 0 ? 1 : (s < 0 ? -1 : 0);
        os << format_double(g.age(i)) << ',' << format_double(g.time(n)) << ',' << format_double(g.x_center(k)) << ','
           << indicator << '\n';
      }
    }
  }
}

}  // namespace mosquito::io
