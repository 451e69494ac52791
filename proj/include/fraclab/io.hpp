#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/fields.hpp"

namespace fraclab::io {

/// Shortest round-trip decimal; locale independent. NaN is written as "nan".
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view text, const char* what) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw domain_error(detail::concat(what, ": cannot parse number '", text, "'"));
  return v;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// "0.1,0.2" -> {0.1, 0.2}
inline std::vector<double> parse_list(std::string_view text, const char* what) {
  std::vector<double> out;
  for (auto tok : split(text, ',')) out.push_back(parse_number(tok, what));
  return out;
}

/// "0.1,0;0.5,0.5" -> points separated by ';'.
inline std::vector<Point> parse_points(std::string_view text, int d, const char* what) {
  std::vector<Point> out;
  for (auto tok : split(text, ';')) {
    if (tok.empty()) continue;
    Point p = parse_list(tok, what);
    if (static_cast<int>(p.size()) != d)
      throw domain_error(detail::concat(what, ": point '", tok, "' has ", p.size(), " coordinates, expected ", d));
    out.push_back(std::move(p));
  }
  if (out.empty()) throw domain_error(detail::concat(what, ": no points given"));
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline Table read_csv(std::istream& in, const std::string& name) {
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      for (auto tok : split(line, ',')) t.header.emplace_back(tok);
      have_header = true;
      continue;
    }
    std::vector<double> row;
    for (auto tok : split(line, ',')) row.push_back(parse_number(tok, name.c_str()));
    if (row.size() != t.header.size())
      throw domain_error(detail::concat(name, ": line ", lineno, " has ", row.size(), " fields, header has ",
                                        t.header.size()));
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw domain_error(detail::concat(name, ": missing header row"));
  return t;
}

inline Table read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw domain_error(detail::concat("cannot open ", path));
  return read_csv(in, path);
}

/// Header plus rows written in order with format_number.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_number(values[i]);
    out_ << '\n';
  }

 private:
  std::ostream& out_;
};

inline std::vector<std::string> coordinate_header(int d) {
  std::vector<std::string> h;
  for (int i = 1; i <= d; ++i) h.push_back(detail::concat("x", i));
  return h;
}

inline std::vector<Point> read_points_file(const std::string& path, int d) {
  const Table t = read_csv_file(path);
  if (static_cast<int>(t.header.size()) < d)
    throw domain_error(detail::concat(path, ": expected at least ", d, " coordinate columns"));
  std::vector<Point> out;
  for (const auto& r : t.rows) out.emplace_back(r.begin(), r.begin() + d);
  if (out.empty()) throw domain_error(detail::concat(path, ": no points"));
  return out;
}

/// Samples `x1..xd, value` on a tensor grid, interpolated multilinearly and zero off
/// the grid box. The box's circumscribed ball is the support and its sphere is declared
/// as a feature, so PV quadrature breaks there.
inline ScalarField field_from_table(const Table& t, int d, int smoothness = 0) {
  if (static_cast<int>(t.header.size()) != d + 1)
    throw domain_error(detail::concat("field csv: expected ", d, " coordinate columns and one value column"));
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
  for (const auto& r : t.rows)
    for (int a = 0; a < d; ++a) axes[static_cast<std::size_t>(a)].push_back(r[static_cast<std::size_t>(a)]);
  std::size_t total = 1;
  for (auto& ax : axes) {
    std::sort(ax.begin(), ax.end());
    ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
    if (ax.size() < 2) throw domain_error("field csv: every axis needs at least two distinct nodes");
    total *= ax.size();
  }
  if (total != t.rows.size()) throw domain_error("field csv: samples do not form a complete tensor grid");
  auto values = std::make_shared<std::vector<double>>(total, 0.0);
  auto flat_of = [&axes](std::span<const std::size_t> idx) {
    std::size_t f = 0;
    for (std::size_t a = 0; a < axes.size(); ++a) f = f * axes[a].size() + idx[a];
    return f;
  };
  for (const auto& r : t.rows) {
    std::vector<std::size_t> idx(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a)
      idx[a] = static_cast<std::size_t>(std::lower_bound(axes[a].begin(), axes[a].end(), r[a]) - axes[a].begin());
    (*values)[flat_of(idx)] = r.back();
  }
  Point center(static_cast<std::size_t>(d));
  double radius2 = 0.0;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    center[a] = 0.5 * (axes[a].front() + axes[a].back());
    const double h = 0.5 * (axes[a].back() - axes[a].front());
    radius2 += h * h;
  }
  const double radius = std::sqrt(radius2);
  auto shared_axes = std::make_shared<const std::vector<std::vector<double>>>(std::move(axes));
  return ScalarField(
      d,
      [shared_axes, values](std::span<const double> y) {
        const auto& ax = *shared_axes;
        const std::size_t dim = ax.size();
        std::vector<std::size_t> lo(dim);
        std::vector<double> frac(dim);
        for (std::size_t a = 0; a < dim; ++a) {
          if (y[a] < ax[a].front() || y[a] > ax[a].back()) return 0.0;
          auto it = std::upper_bound(ax[a].begin(), ax[a].end(), y[a]);
          std::size_t i = static_cast<std::size_t>(it - ax[a].begin());
          i = std::clamp<std::size_t>(i, 1, ax[a].size() - 1) - 1;
          lo[a] = i;
          frac[a] = (y[a] - ax[a][i]) / (ax[a][i + 1] - ax[a][i]);
        }
        double acc = 0.0;
        for (std::size_t corner = 0; corner < (std::size_t{1} << dim); ++corner) {
          double w = 1.0;
          std::size_t f = 0;
          for (std::size_t a = 0; a < dim; ++a) {
            const bool up = (corner >> a) & 1u;
            w *= up ? frac[a] : 1.0 - frac[a];
            f = f * ax[a].size() + lo[a] + (up ? 1 : 0);
          }
          if (w != 0.0) acc += w * (*values)[f];
        }
        return acc;
      },
      Support::ball(center, radius), smoothness, {Feature{center, radius, false}});
}

}  // namespace fraclab::io
