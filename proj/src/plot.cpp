#include "intgrad/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace intgrad {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// evenly spaced "nice" tick values covering [lo, hi]
std::vector<double> linear_ticks(double lo, double hi) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + step * 1e-9; v += step)
    t.push_back(v);
  return t;
}

std::vector<double> log_ticks(double lo, double hi) {
  std::vector<double> t;
  for (int e = static_cast<int>(std::floor(std::log10(lo)));
       e <= static_cast<int>(std::ceil(std::log10(hi))); ++e) {
    const double v = std::pow(10.0, e);
    if (v >= lo / 1.0001 && v <= hi * 1.0001) t.push_back(v);
  }
  if (t.empty()) t = {lo, hi};
  return t;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw PlotError("missing column \"" + name + "\"");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PlotError("cannot open CSV file: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) return t;  // empty file: no columns, no rows
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::istringstream h(line);
    std::string name;
    while (std::getline(h, name, ',')) t.columns.push_back(name);
  }
  t.data.assign(t.columns.size(), {});
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream r(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(r, cell, ',')) {
      if (c >= t.columns.size())
        throw PlotError(path + ":" + std::to_string(lineno) + ": more cells than columns");
      double v = 0.0;
      const char* b = cell.data();
      const char* e = b + cell.size();
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || p != e)
        throw PlotError(path + ":" + std::to_string(lineno) + ": bad number \"" + cell + "\"");
      t.data[c++].push_back(v);
    }
    if (c != t.columns.size())
      throw PlotError(path + ":" + std::to_string(lineno) + ": fewer cells than columns");
  }
  return t;
}

void write_line_plot_svg(const std::string& path, const std::vector<PlotSeries>& series,
                         const PlotOptions& opt) {
  const double ml = 72, mr = 16, mt = 36, mb = 46;  // margins
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;

  // data ranges; log-y only if every y (and band edge) is strictly positive
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false, log_y = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double lo = s.lo.empty() ? s.y[i] : s.lo[i];
      const double hi = s.hi.empty() ? s.y[i] : s.hi[i];
      if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(s.x[i])) continue;
      if (!any) {
        xmin = xmax = s.x[i];
        ymin = lo;
        ymax = hi;
        any = true;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, lo);
        ymax = std::max(ymax, hi);
      }
      if (lo <= 0.0) log_y = false;
    }
  }
  if (!any) {
    log_y = false;
  } else {
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) {
      ymax = ymin + (ymin == 0 ? 1 : std::fabs(ymin) * 0.5);
      if (log_y) ymax = ymin * 10;
    }
  }

  const auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  const auto sy = [&](double y) {
    const double t = log_y ? (std::log10(y) - std::log10(ymin)) /
                                 (std::log10(ymax) - std::log10(ymin))
                           : (y - ymin) / (ymax - ymin);
    return mt + ph - t * ph;
  };

  std::ofstream out(path);
  if (!out) throw PlotError("cannot write plot file: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
      << opt.height << "\" viewBox=\"0 0 " << opt.width << " " << opt.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << opt.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << opt.title << "</text>\n";

  // axes frame
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";

  if (any) {
    const auto yticks = log_y ? log_ticks(ymin, ymax) : linear_ticks(ymin, ymax);
    for (double v : yticks) {
      const double y = sy(v);
      out << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + pw << "\" y2=\"" << y
          << "\" stroke=\"#ddd\"/>\n"
          << "<text x=\"" << ml - 6 << "\" y=\"" << y + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
          << (log_y ? ("1e" + fmt(std::log10(v))) : fmt(v)) << "</text>\n";
    }
    for (double v : linear_ticks(xmin, xmax)) {
      const double x = sx(v);
      out << "<line x1=\"" << x << "\" y1=\"" << mt << "\" x2=\"" << x << "\" y2=\"" << mt + ph
          << "\" stroke=\"#eee\"/>\n"
          << "<text x=\"" << x << "\" y=\"" << mt + ph + 16
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v)
          << "</text>\n";
    }
  }

  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << opt.height - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << opt.x_label
      << "</text>\n"
      << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
      << mt + ph / 2 << ")\">" << opt.y_label << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
    if (!s.lo.empty() && s.lo.size() == s.y.size() && s.hi.size() == s.y.size()) {
      std::ostringstream pts;
      for (std::size_t i = 0; i < s.x.size(); ++i)
        pts << sx(s.x[i]) << "," << sy(s.hi[i]) << " ";
      for (std::size_t i = s.x.size(); i-- > 0;)
        pts << sx(s.x[i]) << "," << sy(s.lo[i]) << " ";
      out << "<polygon points=\"" << pts.str() << "\" fill=\"" << color
          << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    }
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      pts << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
    out << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.6\"/>\n";
    // legend entry
    const double lx = ml + 10, ly = mt + 14 + 16.0 * static_cast<double>(si);
    out << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 22 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << lx + 28 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

std::vector<std::string> emit_plots(const std::vector<std::string>& summary_paths,
                                    const std::vector<std::string>& labels,
                                    const std::string& out_dir) {
  if (summary_paths.size() != labels.size())
    throw PlotError("one label per summary file is required");
  std::filesystem::create_directories(out_dir);

  std::vector<PlotSeries> gap_series, int_series;
  for (std::size_t i = 0; i < summary_paths.size(); ++i) {
    const CsvTable t = read_csv(summary_paths[i]);
    PlotSeries gap{labels[i], {}, {}, {}, {}};
    PlotSeries mi{labels[i], {}, {}, {}, {}};
    if (!t.columns.empty()) {
      const auto kc = t.column("k");
      const auto med = t.column("gap_median");
      const auto q25 = t.column("gap_q25");
      const auto q75 = t.column("gap_q75");
      const auto mic = t.column("max_int_median");
      gap.x = t.data[kc];
      gap.y = t.data[med];
      gap.lo = t.data[q25];
      gap.hi = t.data[q75];
      mi.x = t.data[kc];
      mi.y = t.data[mic];
    }
    gap_series.push_back(std::move(gap));
    int_series.push_back(std::move(mi));
  }

  const std::string gap_path = (std::filesystem::path(out_dir) / "gap.svg").string();
  const std::string int_path = (std::filesystem::path(out_dir) / "max_int.svg").string();
  PlotOptions g;
  g.title = "objective gap (median, IQR band)";
  g.x_label = "iteration";
  g.y_label = "f(x) - f*";
  write_line_plot_svg(gap_path, gap_series, g);
  PlotOptions m;
  m.title = "max aggregated integer (median)";
  m.x_label = "iteration";
  m.y_label = "max |sum of integers|";
  write_line_plot_svg(int_path, int_series, m);
  return {gap_path, int_path};
}

}  // namespace intgrad
