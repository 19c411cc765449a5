#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mosquito/grid.hpp"

namespace mosquito::io {

/// Shortest decimal that round-trips a double (always >= 12 significant digits
/// of precision).
std::string format_double(double v);

/// Field CSV: header `a,t,x,value`, rows ordered by age, then time, then x.
void write_field_csv(std::ostream& os, const Field<double>& f);
void write_field_csv(const std::filesystem::path& path, const Field<double>& f);
Field<double> read_field_csv(const std::filesystem::path& path, const Grid<double>& grid);

/// Age x biting-time table with header `a,x,value`.
Slice<double> read_age_slice_csv(const std::filesystem::path& path, const Grid<double>& grid);

/// Newborn table with header `t,x,b`.
void write_boundary_csv(const std::filesystem::path& path, const Grid<double>& grid, const Boundary<double>& b);

/// Sign of q + 1 per node with header `a,t,x,indicator` (+1, 0 or -1).
void write_switching_csv(const std::filesystem::path& path, const Field<double>& q);

}  // namespace mosquito::io
