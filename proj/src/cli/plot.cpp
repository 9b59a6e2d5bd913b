#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "maskpinn/cli/commands.hpp"

namespace maskpinn::cli {

namespace fs = std::filesystem;

namespace {

std::string label_for(const fs::path& file, const fs::path& root) {
  const fs::path rel = fs::relative(file.parent_path(), root);
  const std::string s = rel.generic_string();
  return s.empty() || s == "." ? root.filename().string() : s;
}

std::vector<fs::path> find_all(const fs::path& root, const std::string& name) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() == name) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Series column_series(const Table& t, const std::string& label, const std::string& x, const std::string& y) {
  Series s{label, {}, {}};
  const std::size_t cx = t.column(x);
  const std::size_t cy = t.column(y);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    s.x.push_back(t.number(r, cx));
    s.y.push_back(t.number(r, cy));
  }
  return s;
}

void write_svg(const fs::path& path, const std::string& svg, std::vector<fs::path>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << svg;
  written.push_back(path);
}

}  // namespace

std::vector<fs::path> plot_directory(const fs::path& in, const fs::path& out) {
  if (!fs::is_directory(in)) throw std::runtime_error("not a directory: " + in.string());
  fs::create_directories(out);
  std::vector<fs::path> written;

  const auto metrics = find_all(in, "metrics.csv");
  if (!metrics.empty()) {
    std::vector<Series> err;
    std::vector<Series> loss;
    for (const auto& f : metrics) {
      const Table t = read_csv(f);
      const std::string label = label_for(f, in);
      err.push_back(column_series(t, label, "iter", "rel_l2"));
      loss.push_back(column_series(t, label, "iter", "loss_total"));
    }
    write_svg(out / "rel_l2.svg", line_chart_svg({"Relative L2 error", "iteration", "rel L2", false, true}, err),
              written);
    write_svg(out / "loss.svg", line_chart_svg({"Total loss", "iteration", "loss", false, true}, loss), written);
  }

  const auto preacts = find_all(in, "preact.csv");
  if (!preacts.empty()) {
    std::vector<Series> var;
    for (const auto& f : preacts) {
      const Table t = read_csv(f);
      const std::size_t ci = t.column("iter");
      const std::size_t cv = t.column("var");
      std::map<double, double> peak;
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double it = t.number(r, ci);
        const double v = t.number(r, cv);
        auto [pos, fresh] = peak.emplace(it, v);
        if (!fresh) pos->second = std::max(pos->second, v);
      }
      Series s{label_for(f, in), {}, {}};
      for (const auto& [it, v] : peak) {
        s.x.push_back(it);
        s.y.push_back(v);
      }
      var.push_back(std::move(s));
    }
    write_svg(out / "variance.svg",
              line_chart_svg({"Largest pre-activation variance", "iteration", "variance", false, true}, var), written);
  }

  const auto sweeps = find_all(in, "sweep.csv");
  if (!sweeps.empty()) {
    std::map<std::string, std::map<double, std::pair<double, int>>> cells;
    for (const auto& f : sweeps) {
      const Table t = read_csv(f);
      const std::size_t cw = t.column("width");
      const std::size_t cvar = t.column("variant");
      const std::size_t cact = t.column("activation");
      const std::size_t ce = t.column("final_rel_l2");
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double e = t.number(r, ce);
        if (!std::isfinite(e)) continue;
        auto& cell = cells[t.rows[r][cvar] + "/" + t.rows[r][cact]][t.number(r, cw)];
        cell.first += e;
        cell.second += 1;
      }
    }
    std::vector<Series> series;
    for (const auto& [label, by_width] : cells) {
      Series s{label, {}, {}};
      for (const auto& [w, acc] : by_width) {
        s.x.push_back(w);
        s.y.push_back(acc.first / acc.second);
      }
      series.push_back(std::move(s));
    }
    write_svg(out / "sweep.svg", line_chart_svg({"Width sweep", "width", "mean final rel L2", true, true}, series),
              written);
  }
  if (written.empty()) throw std::runtime_error("no metrics.csv, preact.csv or sweep.csv under " + in.string());
  return written;
}

}  // namespace maskpinn::cli
