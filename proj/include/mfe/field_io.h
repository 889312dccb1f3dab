#pragma once

#include "mfe/grid.h"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace mfe {

/// Field CSV: a geometry comment line ("# " + GridSpec::describe()), then a header
/// `r,theta,value` (annulus) or `x,y,value` (torus) and one row per node in flat-index
/// order. Numbers are written with 17 significant digits, so a round trip is exact.
void write_field_csv(std::ostream& out, const Field& f);
Field read_field_csv(std::istream& in);

void save_field(const Field& f, const std::filesystem::path& path);
Field load_field(const std::filesystem::path& path);
/// Loads and requires the stored geometry to equal `expected` (ConfigError otherwise).
Field load_field(const std::filesystem::path& path, const GridPtr& expected);

/// Parses a descriptor produced by GridSpec::describe() back into a grid.
GridPtr grid_from_descriptor(const std::string& descriptor);

/// printf("%.17g").
std::string format_double(double x);

}  // namespace mfe
