#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "maskpinn/cli/commands.hpp"
#include "maskpinn/cli/config.hpp"
#include "maskpinn/cli/io.hpp"
#include "maskpinn/diagnostics/sweep.hpp"

using namespace maskpinn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("maskpinn_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

const char* kTiny = R"(
[problem]
name = "heat"

[architecture]
variant = "mask"
depth = 2
width = 8

[training]
iterations = 12
log_every = 5
n_interior = 32
n_initial = 8
n_boundary = 8
eval_grid = [9, 9]
probe_size = 16
trials = [1, 2]

[output]
timing = false
)";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MASKPINN_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config round-trips through its canonical text") {
  auto cfg = cli::parse_config(kTiny);
  CHECK(cfg.arch.variant == nn::Variant::Mask);
  CHECK(cfg.trials == std::vector<std::uint64_t>{1, 2});
  CHECK(cli::parse_config(cli::serialize(cfg)) == cfg);
  cfg.problem = pde::ProblemKind::Helmholtz;
  cfg.problem_params.source = pde::HelmholtzSource::AsPrinted;
  cfg.problem_params.k = 0.1 + 0.2;
  cfg.arch.alpha_init = 5.0;
  cfg.training.lr = 3e-4;
  cfg.training.lambda.ic = 1.0 / 3.0;
  cfg.output_dir = "runs/with \"quote\"";
  cfg.ci = false;
  CHECK(cli::parse_config(cli::serialize(cfg)) == cfg);
  CHECK(cli::config_hash(cfg) == cli::config_hash(cli::parse_config(cli::serialize(cfg))));
  auto other = cfg;
  other.output_dir = "elsewhere";
  CHECK(cli::config_hash(cfg) == cli::config_hash(other));
  other.training.iterations += 1;
  CHECK(cli::config_hash(cfg) != cli::config_hash(other));
}

TEST_CASE("config errors name the key") {
  auto key_of = [](const std::string& text) {
    try {
      (void)cli::parse_config(text);
    } catch (const cli::ConfigError& e) {
      return e.key();
    }
    return std::string("<accepted>");
  };
  CHECK(key_of("[problem]\nname = \"heat\"\n[architecture]\nactivation = \"relu\"\n") == "architecture.activation");
  CHECK(key_of("[problem]\nname = \"heat\"\n[training]\nlearning_rate = 1e-3\n") == "training.learning_rate");
  CHECK(key_of("[problem]\nname = \"burgers\"\n") == "problem.name");
  CHECK(key_of("[problem]\nname = \"heat\"\n[training]\niterations = \"ten\"\n") == "training.iterations");
  CHECK(key_of("[problem]\nname = \"heat\"\n[architecture]\nvariant = \"mask\"\ndepth = 3\n") == "architecture.depth");
  CHECK(key_of("[problem]\nname = \"heat\"\n[extra]\n") == "extra");
  CHECK(key_of("[problem]\n") == "problem.name");
  CHECK(key_of("[problem]\nname = \"heat\"\n") == "<accepted>");
}

TEST_CASE("width lists") {
  CHECK(cli::parse_width_list("16,64,256") == std::vector<int>{16, 64, 256});
  CHECK_THROWS_AS((void)cli::parse_width_list("64,16"), cli::ConfigError);
  CHECK_THROWS_AS((void)cli::parse_width_list("16,,64"), cli::ConfigError);
  CHECK_THROWS_AS((void)cli::parse_width_list("0"), cli::ConfigError);
  CHECK_THROWS_AS((void)cli::parse_width_list(""), cli::ConfigError);
}

TEST_CASE("csv headers") {
  CHECK(std::string(cli::kMetricsHeader) == "iter,loss_total,loss_ic,loss_bc,loss_r,rel_l2,wall_ms");
  CHECK(std::string(cli::kSweepHeader) == "width,variant,activation,seed,final_rel_l2,status");
  const std::string pre = cli::preact_header();
  CHECK(pre.starts_with("iter,layer,mean,var,min,max,bin_0,bin_1,"));
  CHECK(pre.ends_with(",bin_64,bin_65"));
  CHECK(cli::format_number(0.1) == "0.1");
  CHECK(cli::format_number(1e-300) == "1e-300");
}

TEST_CASE("run writes trials, summary and manifest and versions reruns") {
  const fs::path out = scratch("run");
  const auto cfg = cli::parse_config(kTiny);
  std::ostringstream log;
  const auto first = cli::run_experiment(cfg, "tiny.toml", out, log);
  CHECK(first.exit_code == cli::kOk);
  CHECK(first.dir == out);
  for (const char* f : {"config.toml", "summary.csv", "manifest.txt", "trial_1/metrics.csv", "trial_2/preact.csv"}) {
    CHECK(fs::exists(out / f));
  }
  const auto metrics = cli::read_csv(out / "trial_1" / "metrics.csv");
  CHECK(metrics.rows.size() == 4);  // 0, 5, 10, 12
  CHECK(metrics.number(3, metrics.column("iter")) == 12.0);
  CHECK(cli::parse_config(slurp(out / "config.toml")) == cfg);
  CHECK(slurp(out / "manifest.txt").find("status=converged") != std::string::npos);

  const auto second = cli::run_experiment(cfg, "tiny.toml", out, log);
  CHECK(second.dir != out);
  CHECK(slurp(second.dir / "trial_1" / "metrics.csv") == slurp(out / "trial_1" / "metrics.csv"));
  fs::remove_all(out);
  fs::remove_all(second.dir);
}

TEST_CASE("all-diverged runs exit 3 and diverged sweep rows have empty error cells") {
  auto cfg = cli::parse_config(kTiny);
  cfg.arch.variant = nn::Variant::Vanilla;
  cfg.training.lr = 1e300;
  std::ostringstream log;
  const fs::path out = scratch("diverged");
  const auto run = cli::run_experiment(cfg, "tiny.toml", out, log);
  CHECK(run.exit_code == cli::kAllDiverged);
  CHECK(run.manifest.trials[0].status.starts_with("diverged@"));

  const fs::path sweep_out = scratch("sweep");
  const auto sweep = cli::sweep_experiment(cfg, "tiny.toml", {4, 8}, sweep_out, log);
  CHECK(sweep.exit_code == cli::kAllDiverged);
  const auto t = cli::read_csv(sweep_out / "sweep.csv");
  REQUIRE(t.rows.size() == 4);
  for (const auto& row : t.rows) {
    CHECK(row[t.column("final_rel_l2")].empty());
    CHECK(row[t.column("status")] == "diverged");
  }
  fs::remove_all(out);
  fs::remove_all(sweep_out);
}

TEST_CASE("sweep output and plots") {
  const auto cfg = cli::parse_config(kTiny);
  std::ostringstream log;
  const fs::path out = scratch("sweep_ok");
  const auto rep = cli::sweep_experiment(cfg, "tiny.toml", {4, 8}, out, log);
  CHECK(rep.exit_code == cli::kOk);
  const auto t = cli::read_csv(out / "sweep.csv");
  CHECK(t.header == std::vector<std::string>{"width", "variant", "activation", "seed", "final_rel_l2", "status"});
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0][0] == "4");
  CHECK(t.rows[0][1] == "mask");
  CHECK(std::isfinite(t.number(0, 4)));
  CHECK(fs::exists(out / "w8_s2" / "metrics.csv"));
  const auto written = cli::plot_directory(out, out / "plots");
  CHECK(fs::exists(out / "plots" / "sweep.svg"));
  CHECK(slurp(out / "plots" / "sweep.svg").starts_with("<svg"));
  CHECK_FALSE(written.empty());
  CHECK_THROWS((void)cli::plot_directory(out / "plots", out / "plots2"));
  fs::remove_all(out);
}

TEST_CASE("command-line exit codes") {
  const std::string src = MASKPINN_SOURCE_DIR;
  const fs::path out = scratch("exit");
  CHECK(run_cli("run --config " + src + "/tests/data/bad_activation.toml --out " + out.string()) == 1);
  CHECK(run_cli("run --config /nonexistent.toml --out " + out.string()) == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("check --filter mask.") == 0);
  CHECK(run_cli("check --filter no_such_check") == 1);
  CHECK(run_cli("sweep-width --config " + src + "/configs/heat_mask_desk.toml --widths 64,16 --out " + out.string()) ==
        1);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("shipped configs parse and keep parameter parity") {
  const fs::path root = fs::path(MASKPINN_SOURCE_DIR) / "configs";
  int parsed = 0;
  std::map<std::string, std::map<std::string, std::size_t>> counts;  // bench -> variant -> params
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.path().extension() != ".toml") continue;
    CAPTURE(e.path().string());
    const auto cfg = cli::load_config(e.path().string());
    ++parsed;
    if (cfg.problem == pde::ProblemKind::Helmholtz) {
      const double want = cfg.arch.activation == nn::Activation::Tanh       ? 5.0
                          : cfg.arch.activation == nn::Activation::Softplus ? 2.0
                                                                            : 1.0;
      CHECK(cfg.arch.alpha_init == want);
    }
    const std::string bench = e.path().parent_path().string() + "/" + std::string(nn::to_string(cfg.arch.activation));
    counts[bench][std::string(nn::to_string(cfg.arch.variant))] = nn::Network(cfg.arch).parameter_count();
  }
  CHECK(parsed >= 4 * 6 * 4);
  for (const auto& [bench, by_variant] : counts) {
    if (!by_variant.contains("vanilla")) continue;
    const auto base = static_cast<double>(by_variant.at("vanilla"));
    for (const auto& [variant, n] : by_variant) {
      CAPTURE(bench);
      CAPTURE(variant);
      CHECK(std::abs(static_cast<double>(n) - base) / base < 0.05);
    }
  }
}

TEST_CASE("heat_mask_desk example logs iterations/log_every + 1 rows") {
  const auto cfg = cli::load_config(std::string(MASKPINN_SOURCE_DIR) + "/configs/heat_mask_desk.toml");
  CHECK(cfg.arch.variant == nn::Variant::Mask);
  CHECK(cfg.training.iterations % cfg.training.log_every == 0);
}
