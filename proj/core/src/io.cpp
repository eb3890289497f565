#include "epnozzle/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "epnozzle/error.hpp"

namespace epn::io {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::io_error, "short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot rename onto " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string format_double(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::string field_csv(const ScalarField& f) {
  const Grid2D& g = f.grid();
  std::string out = "x1,x2,value\n";
  out.reserve(g.size() * 64);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      out += format_double(g.x1(i));
      out += ',';
      out += format_double(g.x2(j));
      out += ',';
      out += format_double(f(i, j));
      out += '\n';
    }
  return out;
}

void write_field_csv(const ScalarField& f, const fs::path& path) {
  write_file_atomic(path, field_csv(f));
}

ScalarField read_field_csv(const Grid2D& grid, const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  if (line != "x1,x2,value") throw Error(ErrorCode::io_error, path.string() + ": bad header");
  std::vector<double> values;
  values.reserve(grid.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto last = line.rfind(',');
    if (last == std::string::npos) throw Error(ErrorCode::io_error, path.string() + ": bad row");
    values.push_back(std::stod(line.substr(last + 1)));
  }
  if (values.size() != grid.size())
    throw Error(ErrorCode::grid_mismatch,
                path.string() + " holds " + std::to_string(values.size()) + " nodes, grid has " +
                    std::to_string(grid.size()));
  return ScalarField(grid, std::move(values));
}

void write_field_pgm(const ScalarField& f, const fs::path& path) {
  const Grid2D& g = f.grid();
  const auto [lo_it, hi_it] = std::minmax_element(f.values().begin(), f.values().end());
  const double lo = *lo_it, hi = *hi_it;
  const double span = hi > lo ? hi - lo : 1.0;
  std::string out = "P2\n" + std::to_string(g.nx()) + " " + std::to_string(g.ny()) + "\n255\n";
  for (int j = g.n2(); j >= 0; --j) {
    for (int i = 0; i < g.nx(); ++i) {
      const int gray = static_cast<int>(std::lround(255.0 * (f(i, j) - lo) / span));
      out += std::to_string(std::clamp(gray, 0, 255));
      out += i + 1 < g.nx() ? ' ' : '\n';
    }
  }
  write_file_atomic(path, out);
  fs::path side = path;
  side += ".txt";
  write_file_atomic(side, "gray = round(255 * (value - min) / (max - min))\nmin: " +
                              format_double(lo) + "\nmax: " + format_double(hi) + "\n");
}

std::string svg_line_chart(const std::string& title, const std::vector<double>& x,
                           const std::vector<Series>& series) {
  constexpr double width = 640, panel = 160, margin = 50;
  const double height = margin + panel * static_cast<double>(series.size()) + 20;
  const double x_lo = x.empty() ? 0.0 : x.front();
  const double x_hi = x.empty() ? 1.0 : x.back();
  const double x_span = x_hi > x_lo ? x_hi - x_lo : 1.0;
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<text x=\"" << margin << "\" y=\"24\" font-size=\"15\">" << title << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ys = series[s].y;
    const double top = margin + panel * static_cast<double>(s);
    const double plot_h = panel - 30;
    double lo = ys.empty() ? 0.0 : *std::min_element(ys.begin(), ys.end());
    double hi = ys.empty() ? 1.0 : *std::max_element(ys.begin(), ys.end());
    if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(hi)))) {
      lo -= 0.5;
      hi += 0.5;
    }
    os << "<rect x=\"" << margin << "\" y=\"" << top << "\" width=\"" << width - 2 * margin
       << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#888\"/>\n";
    os << "<text x=\"" << margin + 4 << "\" y=\"" << top + 14 << "\">" << series[s].label
       << "  [" << lo << ", " << hi << "]</text>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < ys.size() && k < x.size(); ++k) {
      const double px = margin + (x[k] - x_lo) / x_span * (width - 2 * margin);
      const double py = top + plot_h - (ys[k] - lo) / (hi - lo) * plot_h;
      os << px << ',' << py << ' ';
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::io_error, "SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 0xF];
  }
  return out;
}

}  // namespace epn::io
