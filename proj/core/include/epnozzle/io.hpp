#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "epnozzle/grid.hpp"

namespace epn::io {

/// Writes `content` to a sibling temp file and renames it over `path`.
/// Throws Error(io_error) on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Formats with 17 significant digits (round-trippable doubles).
std::string format_double(double v);

/// Field CSV with header "x1,x2,value", one node per row.
std::string field_csv(const ScalarField& f);
void write_field_csv(const ScalarField& f, const std::filesystem::path& path);

/// Reads a field CSV written by `write_field_csv` back onto `grid`.
ScalarField read_field_csv(const Grid2D& grid, const std::filesystem::path& path);

/// ASCII PGM (P2) heatmap, top row = x2 = 1. The linear value-to-gray map
/// (min, max) goes to `<path>.txt`.
void write_field_pgm(const ScalarField& f, const std::filesystem::path& path);

struct Series {
  std::string label;
  std::vector<double> y;
};

/// Minimal SVG line chart of several series over shared abscissae; each series
/// is drawn on its own min-max scale inside a stacked panel.
std::string svg_line_chart(const std::string& title, const std::vector<double>& x,
                           const std::vector<Series>& series);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace epn::io
