#include "maskpinn/cli/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace maskpinn::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string status_text(const train::TrainResult& r) {
  return r.status == train::RunStatus::Converged ? "converged" : "diverged@" + std::to_string(r.diverged_at);
}

void write_config_copy(const fs::path& dir, const ExperimentConfig& cfg) {
  auto out = open_text(dir / "config.toml");
  out << serialize(cfg);
}

void write_summary(const fs::path& path, const std::vector<TrialRecord>& trials) {
  std::vector<double> finals;
  int diverged = 0;
  int errors = 0;
  for (const auto& t : trials) {
    if (t.status == "converged") {
      finals.push_back(t.final_rel_l2);
    } else if (t.status == "error") {
      ++errors;
    } else {
      ++diverged;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const diag::Spread s = finals.empty() ? diag::Spread{nan, nan} : diag::mean_spread(finals);
  auto out = open_text(path);
  out << "statistic,value\n"
      << "trials," << trials.size() << '\n'
      << "converged," << finals.size() << '\n'
      << "diverged," << diverged << '\n'
      << "errors," << errors << '\n'
      << "mean_final_rel_l2," << format_number(s.mean) << '\n'
      << "std_final_rel_l2," << format_number(s.stddev) << '\n';
}

int exit_for(const std::vector<TrialRecord>& trials) {
  for (const auto& t : trials) {
    if (t.status == "converged") return kOk;
  }
  return kAllDiverged;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, const std::string& config_path, const fs::path& out,
                         std::ostream& log) {
  RunReport report;
  report.dir = versioned_dir(out);
  fs::create_directories(report.dir);
  write_config_copy(report.dir, cfg);
  report.manifest.command = "run";
  report.manifest.config_path = config_path;
  report.manifest.config_hash = config_hash(cfg);

  const pde::Problem problem(cfg.problem, cfg.problem_params);
  for (const auto seed : cfg.trials) {
    TrialRecord rec;
    rec.seed = seed;
    const std::string sub = "trial_" + std::to_string(seed);
    try {
      train::TrainConfig tc = cfg.training;
      tc.seed = seed;
      const train::TrainResult r = train::train(problem, cfg.arch, tc);
      fs::create_directories(report.dir / sub);
      write_metrics(report.dir / sub / "metrics.csv", r.metrics);
      rec.artifacts.push_back(sub + "/metrics.csv");
      if (tc.capture_preact) {
        write_preact(report.dir / sub / "preact.csv", r.preact);
        rec.artifacts.push_back(sub + "/preact.csv");
      }
      rec.status = status_text(r);
      rec.detail = r.note;
      rec.final_rel_l2 = r.final_rel_l2();
    } catch (const std::exception& e) {
      rec.status = "error";
      rec.detail = e.what();
    }
    log << "trial seed=" << seed << ' ' << rec.status;
    if (rec.status == "converged") log << " final_rel_l2=" << format_number(rec.final_rel_l2);
    if (!rec.detail.empty()) log << " (" << rec.detail << ')';
    log << '\n';
    report.manifest.trials.push_back(std::move(rec));
  }
  write_summary(report.dir / "summary.csv", report.manifest.trials);
  write_manifest(report.dir / "manifest.txt", report.manifest);
  report.exit_code = exit_for(report.manifest.trials);
  return report;
}

SweepReport sweep_experiment(const ExperimentConfig& cfg, const std::string& config_path,
                             const std::vector<int>& widths, const fs::path& out, std::ostream& log) {
  SweepReport report;
  report.dir = versioned_dir(out);
  fs::create_directories(report.dir);
  write_config_copy(report.dir, cfg);
  report.manifest.command = "sweep-width";
  report.manifest.config_path = config_path;
  report.manifest.config_hash = config_hash(cfg);

  const pde::Problem problem(cfg.problem, cfg.problem_params);
  auto observer = [&](const diag::SweepRun& run, const train::TrainResult& r) {
    TrialRecord rec;
    rec.seed = run.seed;
    rec.status = status_text(r);
    rec.detail = "width=" + std::to_string(run.width) + (r.note.empty() ? "" : " " + r.note);
    rec.final_rel_l2 = run.final_rel_l2;
    const std::string sub = "w" + std::to_string(run.width) + "_s" + std::to_string(run.seed);
    fs::create_directories(report.dir / sub);
    write_metrics(report.dir / sub / "metrics.csv", r.metrics);
    rec.artifacts.push_back(sub + "/metrics.csv");
    log << "width=" << run.width << " seed=" << run.seed << ' ' << rec.status;
    if (rec.status == "converged") log << " final_rel_l2=" << format_number(rec.final_rel_l2);
    log << '\n';
    report.manifest.trials.push_back(std::move(rec));
  };
  report.result = diag::width_sweep(problem, cfg.arch, widths, cfg.trials, cfg.training, observer);

  const std::string variant(nn::to_string(cfg.arch.variant));
  const std::string activation(nn::to_string(cfg.arch.activation));
  {
    auto csv = open_text(report.dir / "sweep.csv");
    csv << kSweepHeader << '\n';
    for (const auto& run : report.result.runs) {
      const bool ok = run.status == train::RunStatus::Converged;
      csv << run.width << ',' << variant << ',' << activation << ',' << run.seed << ','
          << (ok ? format_number(run.final_rel_l2) : "") << ',' << (ok ? "converged" : "diverged") << '\n';
    }
  }
  {
    auto csv = open_text(report.dir / "sweep_summary.csv");
    csv << "width,variant,activation,depth,parameters,mean_rel_l2,std_rel_l2,converged,diverged\n";
    for (const auto& c : report.result.cells) {
      csv << c.width << ',' << variant << ',' << activation << ',' << c.depth << ',' << c.parameters << ','
          << format_number(c.error.mean) << ',' << format_number(c.error.stddev) << ',' << c.converged << ','
          << c.diverged << '\n';
    }
  }
  write_manifest(report.dir / "manifest.txt", report.manifest);
  report.exit_code = exit_for(report.manifest.trials);
  return report;
}

std::vector<int> parse_width_list(const std::string& text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string item = text.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    int v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() || v < 1) {
      throw ConfigError("--widths", "expected comma-separated positive integers, got '" + text + "'");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] <= out[i - 1]) throw ConfigError("--widths", "widths must be strictly increasing");
  }
  return out;
}

}  // namespace maskpinn::cli
