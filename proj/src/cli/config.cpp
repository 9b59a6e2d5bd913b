#include "maskpinn/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <toml.hpp>

namespace maskpinn::cli {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

std::string_view source_name(pde::HelmholtzSource s) {
  return s == pde::HelmholtzSource::Squared ? "squared" : "as_printed";
}

/// Reads one section, remembering which keys were consumed.
class Section {
 public:
  Section(const toml::table& root, std::string name) : name_(std::move(name)) {
    const toml::node* node = root.get(name_);
    if (node == nullptr) return;
    table_ = node->as_table();
    if (table_ == nullptr) throw ConfigError(name_, "must be a table");
  }

  [[nodiscard]] std::string key(std::string_view k) const { return name_ + "." + std::string(k); }

  const toml::node* find(std::string_view k) {
    seen_.insert(std::string(k));
    return table_ == nullptr ? nullptr : table_->get(k);
  }

  void read(std::string_view k, double& out) {
    const toml::node* n = find(k);
    if (n == nullptr) return;
    if (const auto* f = n->as_floating_point()) {
      out = f->get();
    } else if (const auto* i = n->as_integer()) {
      out = static_cast<double>(i->get());
    } else {
      throw ConfigError(key(k), "expected a number");
    }
  }

  void read(std::string_view k, int& out) {
    const toml::node* n = find(k);
    if (n == nullptr) return;
    const auto* i = n->as_integer();
    if (i == nullptr) throw ConfigError(key(k), "expected an integer");
    if (i->get() < std::numeric_limits<int>::min() || i->get() > std::numeric_limits<int>::max()) {
      throw ConfigError(key(k), "integer out of range");
    }
    out = static_cast<int>(i->get());
  }

  void read(std::string_view k, bool& out) {
    const toml::node* n = find(k);
    if (n == nullptr) return;
    const auto* b = n->as_boolean();
    if (b == nullptr) throw ConfigError(key(k), "expected true or false");
    out = b->get();
  }

  bool read(std::string_view k, std::string& out) {
    const toml::node* n = find(k);
    if (n == nullptr) return false;
    const auto* s = n->as_string();
    if (s == nullptr) throw ConfigError(key(k), "expected a string");
    out = s->get();
    return true;
  }

  const toml::array* array(std::string_view k) {
    const toml::node* n = find(k);
    if (n == nullptr) return nullptr;
    const auto* a = n->as_array();
    if (a == nullptr) throw ConfigError(key(k), "expected an array");
    return a;
  }

  void reject_unknown() const {
    if (table_ == nullptr) return;
    for (const auto& [k, v] : *table_) {
      if (!seen_.contains(std::string(k.str()))) throw ConfigError(key(k.str()), "unknown key");
    }
  }

 private:
  std::string name_;
  const toml::table* table_ = nullptr;
  std::set<std::string> seen_;
};

std::vector<std::int64_t> integer_list(Section& sec, std::string_view k, const toml::array& a) {
  std::vector<std::int64_t> out;
  for (const auto& n : a) {
    const auto* i = n.as_integer();
    if (i == nullptr) throw ConfigError(sec.key(k), "expected an array of integers");
    out.push_back(i->get());
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError("<toml>", msg.str());
  }
  for (const auto& [k, v] : root) {
    const std::string name(k.str());
    if (name != "problem" && name != "architecture" && name != "training" && name != "output") {
      throw ConfigError(name, "unknown section");
    }
  }

  ExperimentConfig cfg;

  Section prob(root, "problem");
  std::string name;
  if (!prob.read("name", name)) throw ConfigError("problem.name", "missing");
  const auto kind = pde::parse_problem(name);
  if (!kind) throw ConfigError("problem.name", "unknown problem '" + name + "'");
  cfg.problem = *kind;
  prob.read("beta", cfg.problem_params.beta);
  prob.read("c", cfg.problem_params.c);
  prob.read("a1", cfg.problem_params.a1);
  prob.read("a2", cfg.problem_params.a2);
  prob.read("k", cfg.problem_params.k);
  std::string source;
  if (prob.read("source", source)) {
    if (source == "squared") {
      cfg.problem_params.source = pde::HelmholtzSource::Squared;
    } else if (source == "as_printed") {
      cfg.problem_params.source = pde::HelmholtzSource::AsPrinted;
    } else {
      throw ConfigError("problem.source", "expected \"squared\" or \"as_printed\"");
    }
  }
  prob.reject_unknown();

  Section arch(root, "architecture");
  std::string text_value;
  if (arch.read("variant", text_value)) {
    const auto v = nn::parse_variant(text_value);
    if (!v) throw ConfigError("architecture.variant", "unknown variant '" + text_value + "'");
    cfg.arch.variant = *v;
  }
  if (arch.read("activation", text_value)) {
    const auto a = nn::parse_activation(text_value);
    if (!a) throw ConfigError("architecture.activation", "unknown activation '" + text_value + "'");
    cfg.arch.activation = *a;
  }
  arch.read("depth", cfg.arch.depth);
  arch.read("width", cfg.arch.width);
  arch.read("alpha_init", cfg.arch.alpha_init);
  arch.read("input_dim", cfg.arch.input_dim);
  arch.read("output_dim", cfg.arch.output_dim);
  arch.reject_unknown();

  Section tr(root, "training");
  train::TrainConfig& t = cfg.training;
  tr.read("lambda_ic", t.lambda.ic);
  tr.read("lambda_bc", t.lambda.bc);
  tr.read("lambda_r", t.lambda.r);
  tr.read("lr", t.lr);
  tr.read("iterations", t.iterations);
  tr.read("n_interior", t.counts.interior);
  tr.read("n_initial", t.counts.initial);
  tr.read("n_boundary", t.counts.boundary);
  tr.read("log_every", t.log_every);
  tr.read("probe_size", t.probe_size);
  tr.read("threads", t.threads);
  if (const auto* a = tr.array("eval_grid")) {
    const auto v = integer_list(tr, "eval_grid", *a);
    if (v.size() != 2) throw ConfigError("training.eval_grid", "expected two integers");
    t.eval_grid = {static_cast<int>(v[0]), static_cast<int>(v[1])};
  }
  if (const auto* a = tr.array("trials")) {
    cfg.trials.clear();
    for (const auto s : integer_list(tr, "trials", *a)) {
      if (s < 0) throw ConfigError("training.trials", "seeds must be >= 0");
      cfg.trials.push_back(static_cast<std::uint64_t>(s));
    }
  }
  tr.reject_unknown();

  Section out(root, "output");
  out.read("dir", cfg.output_dir);
  out.read("timing", t.record_time);
  out.read("preact", t.capture_preact);
  out.read("ci", cfg.ci);
  out.reject_unknown();

  cfg.training.seed = cfg.trials.empty() ? 0 : cfg.trials.front();
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string serialize_body(const ExperimentConfig& cfg) {
  std::ostringstream s;
  const auto& p = cfg.problem_params;
  s << "[problem]\n"
    << "name = " << quoted(std::string(pde::to_string(cfg.problem))) << "\n"
    << "beta = " << format_double(p.beta) << "\n"
    << "c = " << format_double(p.c) << "\n"
    << "a1 = " << format_double(p.a1) << "\n"
    << "a2 = " << format_double(p.a2) << "\n"
    << "k = " << format_double(p.k) << "\n"
    << "source = " << quoted(std::string(source_name(p.source))) << "\n\n";
  const auto& a = cfg.arch;
  s << "[architecture]\n"
    << "variant = " << quoted(std::string(nn::to_string(a.variant))) << "\n"
    << "depth = " << a.depth << "\n"
    << "width = " << a.width << "\n"
    << "activation = " << quoted(std::string(nn::to_string(a.activation))) << "\n"
    << "alpha_init = " << format_double(a.alpha_init) << "\n"
    << "input_dim = " << a.input_dim << "\n"
    << "output_dim = " << a.output_dim << "\n\n";
  const auto& t = cfg.training;
  s << "[training]\n"
    << "lambda_ic = " << format_double(t.lambda.ic) << "\n"
    << "lambda_bc = " << format_double(t.lambda.bc) << "\n"
    << "lambda_r = " << format_double(t.lambda.r) << "\n"
    << "lr = " << format_double(t.lr) << "\n"
    << "iterations = " << t.iterations << "\n"
    << "n_interior = " << t.counts.interior << "\n"
    << "n_initial = " << t.counts.initial << "\n"
    << "n_boundary = " << t.counts.boundary << "\n"
    << "log_every = " << t.log_every << "\n"
    << "eval_grid = [" << t.eval_grid[0] << ", " << t.eval_grid[1] << "]\n"
    << "probe_size = " << t.probe_size << "\n"
    << "threads = " << t.threads << "\n"
    << "trials = [";
  for (std::size_t i = 0; i < cfg.trials.size(); ++i) s << (i ? ", " : "") << cfg.trials[i];
  s << "]\n";
  return s.str();
}

}  // namespace

std::string serialize(const ExperimentConfig& cfg) {
  std::ostringstream s;
  s << serialize_body(cfg) << "\n[output]\n"
    << "dir = " << quoted(cfg.output_dir) << "\n"
    << "timing = " << (cfg.training.record_time ? "true" : "false") << "\n"
    << "preact = " << (cfg.training.capture_preact ? "true" : "false") << "\n"
    << "ci = " << (cfg.ci ? "true" : "false") << "\n";
  return s.str();
}

void validate(const ExperimentConfig& cfg) {
  try {
    nn::validate(cfg.arch);
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    throw ConfigError(what.substr(0, what.find(' ')), what);
  }
  try {
    cfg.training.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    throw ConfigError(what.substr(0, what.find(' ')), what);
  }
  if (cfg.arch.input_dim != 2) throw ConfigError("architecture.input_dim", "must be 2 for the shipped problems");
  if (cfg.arch.output_dim != 1) throw ConfigError("architecture.output_dim", "must be 1");
  if (cfg.arch.variant == nn::Variant::BatchNorm &&
      (cfg.training.counts.interior < 2 || cfg.training.counts.boundary < 1 ||
       (cfg.problem != pde::ProblemKind::Helmholtz && cfg.training.counts.initial < 2))) {
    throw ConfigError("training.n_interior", "batch norm needs at least 2 points per sample set");
  }
  if (cfg.trials.empty()) throw ConfigError("training.trials", "must list at least one seed");
  const auto& p = cfg.problem_params;
  for (const auto& [key, value] : {std::pair{"problem.beta", p.beta}, {"problem.c", p.c}, {"problem.a1", p.a1},
                                   {"problem.a2", p.a2}, {"problem.k", p.k}}) {
    if (!std::isfinite(value)) throw ConfigError(key, "must be finite");
  }
  if (cfg.output_dir.empty()) throw ConfigError("output.dir", "must not be empty");
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : serialize_body(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace maskpinn::cli
