#include "maskpinn/cli/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace maskpinn::cli {

namespace fs = std::filesystem;

std::string preact_header() {
  std::string h = "iter,layer,mean,var,min,max";
  for (int b = 0; b < diag::Histogram::kBins; ++b) h += ",bin_" + std::to_string(b);
  return h;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_metrics(std::ostream& out, const train::MetricsLog& log) {
  out << kMetricsHeader << '\n';
  for (const auto& r : log.rows) {
    out << r.iter << ',' << format_number(r.loss_total) << ',' << format_number(r.loss_ic) << ','
        << format_number(r.loss_bc) << ',' << format_number(r.loss_r) << ',' << format_number(r.rel_l2) << ','
        << format_number(r.wall_ms) << '\n';
  }
}

void write_preact(std::ostream& out, const diag::PreActStats& stats) {
  out << preact_header() << '\n';
  for (const auto& r : stats.rows) {
    out << r.iter << ',' << r.layer << ',' << format_number(r.mean) << ',' << format_number(r.var) << ','
        << format_number(r.min) << ',' << format_number(r.max);
    for (const auto c : r.bins) out << ',' << c;
    out << '\n';
  }
}

void write_metrics(const fs::path& path, const train::MetricsLog& log) {
  auto out = open_out(path);
  write_metrics(out, log);
}

void write_preact(const fs::path& path, const diag::PreActStats& stats) {
  auto out = open_out(path);
  write_preact(out, stats);
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("csv has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double Table::number(std::size_t row, std::size_t col) const {
  const std::string& cell = rows.at(row).at(col);
  if (cell.empty() || cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw std::runtime_error("not a number: '" + cell + "'");
  }
  return v;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) return t;
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split(line));
    t.rows.back().resize(t.header.size());
  }
  return t;
}

fs::path versioned_dir(const fs::path& base) {
  if (!fs::exists(base / "manifest.txt")) return base;
  for (int k = 1;; ++k) {
    fs::path candidate = base;
    candidate += "-" + std::to_string(k);
    if (!fs::exists(candidate / "manifest.txt")) return candidate;
  }
}

void write_manifest(const fs::path& path, const Manifest& m) {
  auto out = open_out(path);
  out << "engine " << kEngineVersion << '\n'
      << "command " << m.command << '\n'
      << "config " << m.config_path << '\n'
      << "config_hash " << std::hex << std::setw(16) << std::setfill('0') << m.config_hash << std::dec << '\n'
      << "trials " << m.trials.size() << '\n';
  for (const auto& t : m.trials) {
    out << "trial seed=" << t.seed << " status=" << t.status;
    if (t.status == "converged") out << " final_rel_l2=" << format_number(t.final_rel_l2);
    for (const auto& a : t.artifacts) out << " artifact=" << a;
    if (!t.detail.empty()) out << " detail=\"" << t.detail << '"';
    out << '\n';
  }
}

// SVG ------------------------------------------------------------------------

namespace {

constexpr double kW = 720.0;
constexpr double kH = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << v;
  return s.str();
}

struct Axis {
  bool log = false;
  double lo = 0.0;
  double hi = 1.0;

  [[nodiscard]] double t(double v) const {
    const double a = log ? std::log10(v) : v;
    return (a - lo) / (hi - lo);
  }
  [[nodiscard]] bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

Axis fit_axis(bool log, const std::vector<double>& values) {
  Axis ax{log, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const double v : values) {
    if (!ax.usable(v)) continue;
    const double a = log ? std::log10(v) : v;
    ax.lo = std::min(ax.lo, a);
    ax.hi = std::max(ax.hi, a);
  }
  if (!std::isfinite(ax.lo)) {
    ax.lo = 0.0;
    ax.hi = 1.0;
  }
  if (ax.hi - ax.lo < 1e-12) {
    ax.lo -= 0.5;
    ax.hi += 0.5;
  }
  if (log) {
    ax.lo = std::floor(ax.lo);
    ax.hi = std::ceil(ax.hi);
  }
  return ax;
}

}  // namespace

std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& s : series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  const Axis ax = fit_axis(spec.log_x, xs);
  const Axis ay = fit_axis(spec.log_y, ys);
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.t(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.t(v)) * ph; };

  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW
    << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title)
    << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#333\"/>\n";

  auto ticks = [](const Axis& a) {
    std::vector<double> t;
    if (a.log) {
      for (double e = a.lo; e <= a.hi + 1e-9; e += 1.0) t.push_back(std::pow(10.0, e));
    } else {
      for (int k = 0; k <= 5; ++k) t.push_back(a.lo + (a.hi - a.lo) * k / 5.0);
    }
    return t;
  };
  for (const double v : ticks(ax)) {
    const double x = px(v);
    o << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x << "\" y2=\"" << kTop + ph + 5
      << "\" stroke=\"#333\"/>\n<text x=\"" << x << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
      << tick_label(v) << "</text>\n";
  }
  for (const double v : ticks(ay)) {
    const double y = py(v);
    o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
      << "\" stroke=\"#333\"/>\n<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
      << tick_label(v) << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15 << "\" text-anchor=\"middle\">" << escape(spec.x_label)
    << "</text>\n";
  o << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(spec.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kColors[i % std::size(kColors)];
    std::ostringstream pts;
    pts << std::fixed << std::setprecision(2);
    std::size_t kept = 0;
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!ax.usable(s.x[k]) || !ay.usable(s.y[k])) continue;
      pts << (kept++ ? " " : "") << px(s.x[k]) << ',' << py(s.y[k]);
    }
    if (kept > 1) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"" << pts.str()
        << "\"/>\n";
    } else if (kept == 1) {
      const std::string p = pts.str();
      const auto comma = p.find(',');
      o << "<circle cx=\"" << p.substr(0, comma) << "\" cy=\"" << p.substr(comma + 1) << "\" r=\"3\" fill=\""
        << color << "\"/>\n";
    }
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(i);
    o << "<line x1=\"" << kW - kRight + 12 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 36 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n<text x=\"" << kW - kRight + 42 << "\" y=\"" << ly + 4
      << "\">" << escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace maskpinn::cli
