#ifndef INTGRAD_PLOT_HPP
#define INTGRAD_PLOT_HPP

// Self-contained SVG line plots for the experiment summaries: median curve
// per run, optional interquartile band, log-scale y whenever every plotted
// value is positive. No external plotting dependency -- the files are plain
// SVG 1.1 and open in any browser.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace intgrad {

struct PlotError : std::runtime_error {
  explicit PlotError(const std::string& what) : std::runtime_error(what) {}
};

// numeric CSV held column-wise; header row required
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // data[c][r], column-major

  std::size_t rows() const { return columns.empty() ? 0 : data.front().size(); }
  // index of a named column; throws PlotError naming the column when absent
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> lo, hi;  // optional band around y (empty = none)
};

struct PlotOptions {
  std::string title, x_label, y_label;
  int width = 760, height = 480;
};

// writes an SVG line chart; empty series (or series with no points) give an
// empty-axes chart rather than an error
void write_line_plot_svg(const std::string& path, const std::vector<PlotSeries>& series,
                         const PlotOptions& opt);

// one file per metric from experiment summary CSVs: gap median with IQR band,
// and max-integer median. labels[i] names summary_paths[i]'s curve. Returns
// the files written.
std::vector<std::string> emit_plots(const std::vector<std::string>& summary_paths,
                                    const std::vector<std::string>& labels,
                                    const std::string& out_dir);

}  // namespace intgrad

#endif  // INTGRAD_PLOT_HPP
