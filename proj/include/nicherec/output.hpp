#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace nicherec {

// Shortest decimal string that parses back to exactly the same double
// (IEEE-754 round-trip formatting).
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("parse_double: not a number: " + std::string(s));
  }
  return x;
}

// Plain rectangular table; all emitted fields are comma-free so no quoting
// dialect is needed.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::string to_csv(const Table& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  return out.str();
}

inline Table parse_csv(std::string_view text) {
  Table table;
  bool first = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        fields.emplace_back(line.substr(start));
        break;
      }
      fields.emplace_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

inline void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Minimal static SVG emission (no external dependencies, no interactivity).
// ---------------------------------------------------------------------------

struct SvgPoint {
  double x = 0.0;
  double y = 0.0;
  std::string label;
  std::string color = "black";
};

// Scatter of labeled points with annotation text lines in the top-left
// corner; used for the two-policy engagement/utility comparison.
inline std::string svg_scatter(const std::vector<SvgPoint>& points,
                               const std::vector<std::string>& annotations,
                               const std::string& x_label, const std::string& y_label) {
  constexpr double kW = 640, kH = 480, kPad = 70;
  double x_min = points.front().x, x_max = x_min;
  double y_min = points.front().y, y_max = y_min;
  for (const auto& p : points) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
    y_min = std::min(y_min, p.y);
    y_max = std::max(y_max, p.y);
  }
  const double x_span = x_max - x_min, y_span = y_max - y_min;
  x_min -= 0.25 * (x_span > 0 ? x_span : 1.0);
  x_max += 0.25 * (x_span > 0 ? x_span : 1.0);
  y_min -= 0.25 * (y_span > 0 ? y_span : 1.0);
  y_max += 0.25 * (y_span > 0 ? y_span : 1.0);
  auto sx = [&](double x) { return kPad + (x - x_min) / (x_max - x_min) * (kW - 2 * kPad); };
  auto sy = [&](double y) { return kH - kPad - (y - y_min) / (y_max - y_min) * (kH - 2 * kPad); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad
      << "\" y2=\"" << kH - kPad << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\""
      << kH - kPad << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 20
      << "\" text-anchor=\"middle\" font-size=\"14\">" << x_label << "</text>\n";
  svg << "<text x=\"20\" y=\"" << kH / 2 << "\" text-anchor=\"middle\" font-size=\"14\" "
      << "transform=\"rotate(-90 20 " << kH / 2 << ")\">" << y_label << "</text>\n";
  for (const auto& p : points) {
    svg << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"6\" fill=\""
        << p.color << "\"/>\n";
    svg << "<text x=\"" << sx(p.x) + 10 << "\" y=\"" << sy(p.y) - 10
        << "\" font-size=\"13\" fill=\"" << p.color << "\">" << p.label << "</text>\n";
  }
  double ty = kPad;
  for (const auto& a : annotations) {
    svg << "<text x=\"" << kPad + 10 << "\" y=\"" << ty << "\" font-size=\"13\">" << a
        << "</text>\n";
    ty += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

struct SvgBarGroup {
  std::string label;      // x tick label
  double eng_rel = 0.0;   // engagement ratio - 1
  double util_rel = 0.0;  // utility ratio - 1
};

// Grouped bar chart of relative changes around a zero baseline.
inline std::string svg_grouped_bars(const std::vector<SvgBarGroup>& groups,
                                    const std::string& title) {
  constexpr double kW = 720, kH = 480, kPad = 70;
  double lo = 0.0, hi = 0.0;
  for (const auto& g : groups) {
    lo = std::min({lo, g.eng_rel, g.util_rel});
    hi = std::max({hi, g.eng_rel, g.util_rel});
  }
  const double span = (hi - lo) > 0 ? (hi - lo) : 1.0;
  lo -= 0.1 * span;
  hi += 0.1 * span;
  auto sy = [&](double v) { return kH - kPad - (v - lo) / (hi - lo) * (kH - 2 * kPad); };
  const double group_w = (kW - 2 * kPad) / static_cast<double>(groups.size());
  const double bar_w = group_w * 0.3;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"30\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << sy(0.0) << "\" x2=\"" << kW - kPad
      << "\" y2=\"" << sy(0.0) << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const double x0 = kPad + group_w * (static_cast<double>(i) + 0.5);
    auto bar = [&](double v, double dx, const char* color) {
      const double top = std::min(sy(v), sy(0.0));
      const double h = std::abs(sy(v) - sy(0.0));
      svg << "<rect x=\"" << x0 + dx - bar_w / 2 << "\" y=\"" << top << "\" width=\"" << bar_w
          << "\" height=\"" << h << "\" fill=\"" << color << "\"/>\n";
    };
    bar(groups[i].eng_rel, -bar_w * 0.6, "steelblue");
    bar(groups[i].util_rel, bar_w * 0.6, "firebrick");
    svg << "<text x=\"" << x0 << "\" y=\"" << kH - kPad + 20
        << "\" text-anchor=\"middle\" font-size=\"13\">" << groups[i].label << "</text>\n";
  }
  svg << "<text x=\"" << kW - kPad << "\" y=\"" << kPad
      << "\" text-anchor=\"end\" font-size=\"13\" fill=\"steelblue\">engagement</text>\n";
  svg << "<text x=\"" << kW - kPad << "\" y=\"" << kPad + 18
      << "\" text-anchor=\"end\" font-size=\"13\" fill=\"firebrick\">utility</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace nicherec
