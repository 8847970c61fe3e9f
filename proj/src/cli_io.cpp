#include "starklab/cli_io.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "starklab/errors.hpp"
#include "starklab/format.hpp"
#include "starklab/parallel.hpp"
#include "starklab/wkb.hpp"

namespace starklab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string to_string(Subcommand s) {
  switch (s) {
    case Subcommand::solve: return "solve";
    case Subcommand::wkb_compare: return "wkb-compare";
    case Subcommand::ensemble: return "ensemble";
    case Subcommand::diagnose_smoothness: return "diagnose-smoothness";
  }
  return "?";
}

Subcommand parse_subcommand(const std::string& name) {
  if (name == "solve") return Subcommand::solve;
  if (name == "wkb-compare") return Subcommand::wkb_compare;
  if (name == "ensemble") return Subcommand::ensemble;
  if (name == "diagnose-smoothness") return Subcommand::diagnose_smoothness;
  throw std::invalid_argument("unknown subcommand '" + name + "'");
}

long RunConfig::task_count() const {
  const long ne = static_cast<long>(energies.size());
  switch (subcommand) {
    case Subcommand::solve:
    case Subcommand::wkb_compare: return ne;
    case Subcommand::ensemble: return ensemble.realizations * ne;
    case Subcommand::diagnose_smoothness: return 1;
  }
  return 0;
}

bool RunManifest::ok() const {
  return std::all_of(tasks.begin(), tasks.end(), [](const TaskStatus& t) { return t.ok; });
}

// ---------------------------------------------------------------- parsing

namespace {

int line_of(const YAML::Node& n) {
  const auto m = n.Mark();
  return m.is_null() ? 0 : m.line + 1;
}

/// Map view that remembers which keys were read; finish() rejects the rest.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap()) throw ConfigError(path_, line_of(node_), "expected a mapping");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  int line() const { return line_of(node_); }

  bool has(const std::string& key) {
    used_.insert(key);
    return static_cast<bool>(node_[key]);
  }

  YAML::Node node(const std::string& key) {
    used_.insert(key);
    return node_[key];
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(node_[key], field(key));
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key), line(), "missing required key");
    return convert<T>(node_[key], field(key));
  }

  Section child(const std::string& key) { return Section(node(key), field(key)); }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) throw ConfigError(field(key), line_of(kv.first), "unknown key");
    }
  }

  template <class T>
  static T convert(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) throw ConfigError(field, line_of(n), "expected a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(field, line_of(n), "cannot read value '" + n.Scalar() + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

std::pair<double, double> read_window(Section& s, const std::string& key, std::pair<double, double> fallback) {
  if (!s.has(key)) return fallback;
  const YAML::Node n = s.node(key);
  if (!n.IsSequence() || n.size() != 2) throw ConfigError(s.field(key), line_of(n), "expected [lo, hi]");
  const double lo = Section::convert<double>(n[0], s.field(key));
  const double hi = Section::convert<double>(n[1], s.field(key));
  if (!(hi > lo) || !(lo > 0)) throw ConfigError(s.field(key), line_of(n), "window needs 0 < lo < hi");
  return {lo, hi};
}

template <class F>
void checked(const std::string& field, int line, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(field, line, e.what());
  }
}

std::shared_ptr<const BumpFunction> read_bump(Section& p, const fs::path& base) {
  if (!p.has("bump")) return std::make_shared<BumpFunction>(BumpFunction::default_bump());
  const YAML::Node n = p.node("bump");
  if (n.IsScalar()) {
    const auto name = n.as<std::string>();
    if (name == "default") return std::make_shared<BumpFunction>(BumpFunction::default_bump());
    if (name == "standard") return std::make_shared<BumpFunction>(BumpFunction::standard());
    throw ConfigError(p.field("bump"), line_of(n), "unknown bump '" + name + "'");
  }
  Section b(n, p.field("bump"));
  const auto kind = b.get<std::string>("kind", "default");
  std::shared_ptr<const BumpFunction> out;
  checked(b.field("kind"), b.line(), [&] {
    if (kind == "default") {
      out = std::make_shared<BumpFunction>(BumpFunction::default_bump());
    } else if (kind == "standard") {
      out = std::make_shared<BumpFunction>(BumpFunction::standard());
    } else if (kind == "table") {
      fs::path path = b.require<std::string>("path");
      if (path.is_relative()) path = base / path;
      out = std::make_shared<BumpFunction>(BumpFunction::load_table(path));
    } else {
      throw ConfigError(b.field("kind"), b.line(), "unknown bump kind '" + kind + "'");
    }
  });
  const double scale = b.get<double>("scale", 1.0);
  if (!std::isfinite(scale)) throw ConfigError(b.field("scale"), b.line(), "must be finite");
  if (scale != 1.0) out = std::make_shared<BumpFunction>(out->scaled(scale));
  b.finish();
  return out;
}

PotentialSpec read_potential(Section& p, std::uint64_t master_seed, const fs::path& base) {
  const auto type = p.require<std::string>("type");
  PotentialSpec spec;
  if (type == "zero") {
    spec = ZeroPotential{};
  } else if (type == "power_decay") {
    PowerDecay pd;
    pd.amplitude = p.get<double>("amplitude", pd.amplitude);
    pd.exponent = p.get<double>("exponent", pd.exponent);
    if (!(pd.exponent > 0.0))
      throw ConfigError(p.field("exponent"), line_of(p.node("exponent")), "power-decay exponent must be positive");
    if (!std::isfinite(pd.amplitude))
      throw ConfigError(p.field("amplitude"), line_of(p.node("amplitude")), "must be finite");
    spec = pd;
  } else if (type == "wigner_von_neumann") {
    WignerVonNeumannLike w;
    w.c1 = p.get<double>("c1", w.c1);
    w.c2 = p.get<double>("c2", w.c2);
    spec = w;
  } else if (type == "random_bump") {
    RandomBump rb;
    rb.bump = read_bump(p, base);
    rb.seed = p.get<std::uint64_t>("seed", master_seed);
    rb.phase_shift = p.get<double>("phase_shift", 0.0);
    spec = rb;
  } else {
    throw ConfigError(p.field("type"), line_of(p.node("type")), "unknown potential variant '" + type + "'");
  }
  checked(p.field("type"), p.line(), [&] { validate(spec); });
  p.finish();
  return spec;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  return parse_config_text(text, fs::current_path());
}

RunConfig parse_config_text(const std::string& text, const fs::path& base,
                            std::optional<std::uint64_t> seed_override) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError("", 0, "empty configuration");
  Section top(root, "");
  RunConfig cfg;
  cfg.text = text;
  {
    const auto sub = top.require<std::string>("subcommand");
    checked("subcommand", line_of(top.node("subcommand")), [&] { cfg.subcommand = parse_subcommand(sub); });
  }
  cfg.seed = top.get<std::uint64_t>("seed", 0);
  if (seed_override) cfg.seed = *seed_override;
  cfg.jobs = top.get<int>("jobs", 0);
  cfg.output = top.get<std::string>("output", cfg.output.string());

  if (top.has("potential")) {
    Section p = top.child("potential");
    cfg.potential = read_potential(p, cfg.seed, base);
  } else if (cfg.subcommand != Subcommand::solve) {
    throw ConfigError("potential", top.line(), "missing required key");
  }

  if (top.has("energies") && top.has("energy_range"))
    throw ConfigError("energy_range", line_of(top.node("energy_range")), "give either energies or energy_range");
  if (top.has("energies")) {
    const YAML::Node n = top.node("energies");
    cfg.energies.clear();
    if (n.IsScalar()) {
      cfg.energies.push_back(Section::convert<double>(n, "energies"));
    } else if (n.IsSequence()) {
      for (const auto& e : n) cfg.energies.push_back(Section::convert<double>(e, "energies"));
    } else {
      throw ConfigError("energies", line_of(n), "expected a number or a list");
    }
    if (cfg.energies.empty()) throw ConfigError("energies", line_of(n), "empty energy list");
    for (double e : cfg.energies)
      if (!std::isfinite(e)) throw ConfigError("energies", line_of(n), "energies must be finite");
  } else if (top.has("energy_range")) {
    Section r = top.child("energy_range");
    const double a = r.require<double>("start"), b = r.require<double>("stop");
    const long count = r.require<long>("count");
    r.finish();
    if (count < 1) throw ConfigError("energy_range.count", r.line(), "count must be at least 1");
    if (count > 1 && !(b > a)) throw ConfigError("energy_range.stop", r.line(), "stop must exceed start");
    cfg.energies.clear();
    for (long i = 0; i < count; ++i) cfg.energies.push_back(count == 1 ? a : a + (b - a) * i / (count - 1));
  }

  if (top.has("integration")) {
    Section s = top.child("integration");
    auto& ic = cfg.integration;
    ic.rtol = s.get<double>("rtol", ic.rtol);
    ic.atol = s.get<double>("atol", ic.atol);
    ic.max_step = s.get<double>("max_step", ic.max_step);
    ic.min_step = s.get<double>("min_step", ic.min_step);
    ic.stride = s.get<double>("stride", ic.stride);
    ic.method = s.get<std::string>("method", ic.method);
    s.finish();
    checked("integration", s.line(), [&] { ic.validate(); });
  }

  if (top.has("solve")) {
    Section s = top.child("solve");
    auto& so = cfg.solve;
    so.form = s.get<std::string>("form", so.form);
    if (so.form != "prufer" && so.form != "direct")
      throw ConfigError("solve.form", s.line(), "form must be prufer or direct");
    so.xi_min = s.get<double>("xi_min", so.xi_min);
    so.xi_max = s.get<double>("xi_max", so.xi_max);
    so.beta = s.get<double>("beta", so.beta);
    so.x_min = s.get<double>("x_min", so.x_min);
    so.x_max = s.get<double>("x_max", so.x_max);
    so.u0 = s.get<double>("u0", so.u0);
    so.du0 = s.get<double>("du0", so.du0);
    so.binary = s.get<bool>("binary", so.binary);
    so.growth = s.get<bool>("growth", so.growth);
    s.finish();
    if (!(so.xi_min >= 1.0)) throw ConfigError("solve.xi_min", s.line(), "xi_min must be at least 1");
    if (!(so.xi_max > so.xi_min)) throw ConfigError("solve.xi_max", s.line(), "xi_max must exceed xi_min");
    if (!(so.x_min > 0.0)) throw ConfigError("solve.x_min", s.line(), "x_min must be positive");
    if (!(so.x_max > so.x_min)) throw ConfigError("solve.x_max", s.line(), "x_max must exceed x_min");
  }

  if (top.has("wkb")) {
    Section s = top.child("wkb");
    auto& w = cfg.wkb;
    w.fit_window = read_window(s, "fit_window", w.fit_window);
    w.test_window = read_window(s, "test_window", w.test_window);
    w.beta = s.get<double>("beta", w.beta);
    w.split = s.get<std::string>("split", w.split);
    s.finish();
    if (w.split != "auto" && w.split != "analytic" && w.split != "mollified")
      throw ConfigError("wkb.split", s.line(), "split must be auto, analytic or mollified");
    if (w.fit_window.second > w.test_window.first)
      throw ConfigError("wkb.test_window", s.line(), "test window must start after the fit window");
  }

  auto& en = cfg.ensemble;
  if (top.has("ensemble")) {
    Section s = top.child("ensemble");
    en.realizations = s.get<long>("realizations", en.realizations);
    en.n_min = s.get<long>("n_min", en.n_min);
    en.n_max = s.get<long>("n_max", en.n_max);
    en.antithetic = s.get<bool>("antithetic", en.antithetic);
    en.random_theta = s.get<bool>("random_theta", en.random_theta);
    en.theta0 = s.get<double>("theta0", en.theta0);
    en.beta = s.get<double>("beta", en.beta);
    en.bootstrap = s.get<int>("bootstrap", en.bootstrap);
    en.L_per_decade = s.get<int>("L_per_decade", en.L_per_decade);
    auto& eo = cfg.ensemble_options;
    eo.mode = s.get<std::string>("mode", eo.mode);
    eo.block = s.get<long>("block", eo.block);
    if (s.has("kappa")) {
      const YAML::Node k = s.node("kappa");
      const auto word = k.IsScalar() ? k.Scalar() : std::string{};
      if (word == "derived")
        eo.kappa = kDerivedKappa;
      else if (word == "published")
        eo.kappa = 1.0;
      else
        eo.kappa = Section::convert<double>(k, "ensemble.kappa");
      if (!(eo.kappa > 0.0)) throw ConfigError("ensemble.kappa", line_of(k), "kappa must be positive");
    }
    s.finish();
    if (eo.mode != "chain" && eo.mode != "block")
      throw ConfigError("ensemble.mode", s.line(), "mode must be chain or block");
    if (eo.mode == "block" && eo.block < 1) throw ConfigError("ensemble.block", s.line(), "block must be >= 1");
  }
  en.energies = cfg.energies;
  en.master_seed = cfg.seed;
  en.integration = cfg.integration;
  en.jobs = cfg.jobs;
  if (cfg.subcommand == Subcommand::ensemble) {
    checked("ensemble", top.line(), [&] { en.validate(); });
    if (!std::holds_alternative<RandomBump>(cfg.potential))
      throw ConfigError("potential.type", top.line(), "ensemble runs need a random_bump potential");
  }

  if (top.has("smoothness")) {
    Section s = top.child("smoothness");
    auto& so = cfg.smoothness;
    so.alpha = s.get<double>("alpha", so.alpha);
    so.x_min = s.get<double>("x_min", so.x_min);
    so.x_max = s.get<double>("x_max", so.x_max);
    so.density = s.get<int>("density", so.density);
    so.eps_min = s.get<double>("eps_min", so.eps_min);
    so.eps_points = s.get<int>("eps_points", so.eps_points);
    s.finish();
    if (!(so.alpha > 0.0 && so.alpha <= 1.0)) throw ConfigError("smoothness.alpha", s.line(), "alpha must be in (0, 1]");
    if (!(so.x_max > so.x_min)) throw ConfigError("smoothness.x_max", s.line(), "x_max must exceed x_min");
    if (so.density < 1) throw ConfigError("smoothness.density", s.line(), "density must be >= 1");
    if (!(so.eps_min > 0.0 && so.eps_min < 1.0))
      throw ConfigError("smoothness.eps_min", s.line(), "eps_min must be in (0, 1)");
    if (so.eps_points < 2) throw ConfigError("smoothness.eps_points", s.line(), "eps_points must be >= 2");
  }
  cfg.smoothness.jobs = cfg.jobs;

  top.finish();
  return cfg;
}

RunConfig parse_config_file(const fs::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.has_parent_path() ? path.parent_path() : fs::current_path(),
                           seed_override);
}

// ---------------------------------------------------------------- execution

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void prepare_output(const fs::path& dir) {
  if (!fs::exists(dir)) {
    fs::create_directories(dir);
    return;
  }
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    json m = json::parse(in, nullptr, false);
    if (m.is_discarded() || !m.contains("files"))
      throw std::runtime_error(manifest.string() + " is not a starklab manifest");
    for (const auto& f : m["files"]) fs::remove(dir / f.at("path").get<std::string>());
    fs::remove(manifest);
  }
  if (!fs::is_empty(dir))
    throw std::runtime_error("output directory " + dir.string() + " holds files not listed in a previous manifest");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string energy_tag(std::size_t i) { return "E" + std::to_string(i); }

/// Per-task outcome filled inside the parallel loop; files are recorded in
/// task order afterwards.
struct TaskOut {
  TaskStatus status;
  std::vector<std::string> files;
  json summary;
};

template <class F>
void run_parallel(std::vector<TaskOut>& tasks, int jobs, F&& body) {
  const long n = static_cast<long>(tasks.size());
  const int workers = resolve_jobs(jobs);
  (void)workers;
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (workers > 1)
  for (long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i), tasks[static_cast<std::size_t>(i)]);
    } catch (const std::exception& e) {
      tasks[static_cast<std::size_t>(i)].status.ok = false;
      tasks[static_cast<std::size_t>(i)].status.message = e.what();
    }
  }
}

json growth_json(const GrowthFit& g) {
  return json{{"exponent", g.exponent}, {"intercept", g.intercept}, {"residual", g.residual},
              {"L_min", g.fit_L_min},  {"L_max", g.fit_L_max}};
}

void run_solve(const RunConfig& cfg, const fs::path& dir, std::vector<TaskOut>& tasks) {
  const auto spec = std::make_shared<const PotentialSpec>(cfg.potential);
  const auto& so = cfg.solve;
  run_parallel(tasks, cfg.jobs, [&](std::size_t i, TaskOut& t) {
    const double E = cfg.energies[i];
    Trajectory traj = so.form == "prufer"
                          ? integrate_prufer(spec, E, so.xi_min, so.xi_max, so.beta, cfg.integration)
                          : integrate_direct(spec, E, so.x_min, so.x_max, {so.u0, so.du0}, cfg.integration);
    const std::string base = "trajectory_" + energy_tag(i);
    write_trajectory_csv(traj, dir / (base + ".csv"));
    t.files.push_back(base + ".csv");
    if (so.binary) {
      write_trajectory_binary(traj, dir / (base + ".bin"));
      t.files.push_back(base + ".bin");
    }
    json s{{"E", E}, {"form", so.form}, {"captures", traj.size()}, {"steps", traj.stats.accepted}};
    if (traj.size() > 0) {
      const std::size_t k = traj.size() - 1;
      const auto [u, du] = traj.u_at(k);
      s["final"] = {{"xi", traj.xi[k]}, {"x", traj.x[k]}, {"u", u}, {"du", du}};
      if (traj.kind == TrajectoryKind::prufer) {
        s["final"]["logR"] = traj.prufer[k].logR;
        s["final"]["theta"] = traj.prufer[k].theta;
      }
    }
    if (so.growth) {
      const double a = traj.x.front(), b = traj.x.back();
      s["growth"] = growth_json(l2_growth(traj, log_grid(std::max(a, 1.0), b, 20)));
    }
    t.summary = std::move(s);
  });
}

void run_wkb(const RunConfig& cfg, const fs::path& dir, std::vector<TaskOut>& tasks) {
  const auto& wo = cfg.wkb;
  std::shared_ptr<const Decomposition> d;
  if (wo.split == "analytic")
    d = std::make_shared<Decomposition>(analytic_decompose(cfg.potential));
  else if (wo.split == "mollified")
    d = std::make_shared<Decomposition>(
        mollify_decompose(cfg.potential, std::make_shared<BumpFunction>(BumpFunction::default_mollifier())));
  else
    d = std::make_shared<Decomposition>(decompose(cfg.potential));
  run_parallel(tasks, cfg.jobs, [&](std::size_t i, TaskOut& t) {
    const double E = cfg.energies[i];
    WkbSolution w(d, E);
    const std::string name = "wkb_" + energy_tag(i) + ".csv";
    std::ofstream out(dir / name, std::ios::binary);
    out << "x,u,wkb_re,wkb_im\n";
    // every 20th capture keeps the table readable at stride 0.05
    long k = 0;
    const auto res = wkb_residual_streaming(cfg.potential, w, wo.beta, {{wo.fit_window, wo.test_window}},
                                            cfg.integration, [&](double x, double u, std::complex<double> up) {
                                              if (k++ % 20 == 0)
                                                out << fmt17(x) << ',' << fmt17(u) << ',' << fmt17(up.real())
                                                    << ',' << fmt17(up.imag()) << '\n';
                                            });
    out.close();
    if (!out) throw std::runtime_error("cannot write " + name);
    t.files.push_back(name);
    const auto& r = res.front();
    t.summary = json{{"E", E},
                     {"split", d->kind == SplitKind::analytic ? "analytic" : "mollified"},
                     {"anchor", w.anchor()},
                     {"fit_window", {r.fit_window.first, r.fit_window.second}},
                     {"test_window", {r.test_window.first, r.test_window.second}},
                     {"A", {r.A.real(), r.A.imag()}},
                     {"residual", r.residual},
                     {"fit_points", r.fit_points},
                     {"test_points", r.test_points}};
  });
}

void run_smoothness(const RunConfig& cfg, const fs::path& dir, std::vector<TaskOut>& tasks) {
  auto& t = tasks.front();
  try {
    const auto rep = smoothness_report(cfg.potential, cfg.smoothness);
    std::ofstream out(dir / "holder.csv", std::ios::binary);
    out << "x,holder\n";
    for (std::size_t i = 0; i < rep.x.size(); ++i) out << fmt17(rep.x[i]) << ',' << fmt17(rep.holder[i]) << '\n';
    out.close();
    t.files.push_back("holder.csv");
    t.summary = json{{"alpha", rep.alpha},
                     {"holder_sup", rep.holder_sup},
                     {"zygmund", rep.zygmund},
                     {"dini", rep.dini},
                     {"dini_uses_derivative", rep.dini_uses_derivative},
                     {"x_min", rep.x_min},
                     {"x_max", rep.x_max},
                     {"probe_offsets", rep.probe_offsets},
                     {"eps_min", rep.eps_min},
                     {"eps_points", rep.eps_points}};
  } catch (const std::exception& e) {
    t.status.ok = false;
    t.status.message = e.what();
  }
}

/// Ensemble tasks are realizations; the per-energy kernels already map them
/// over the worker pool, so failures surface per energy and mark that
/// energy's realizations failed.
void run_ensemble(const RunConfig& cfg, const fs::path& dir, std::vector<TaskOut>& tasks, json& summary) {
  const auto& rb = std::get<RandomBump>(cfg.potential);
  const auto& en = cfg.ensemble;
  const auto& eo = cfg.ensemble_options;
  const long M = en.realizations;
  json per_energy = json::array();
  std::vector<double> lambdas;
  std::vector<double> lambda_energies;
  for (std::size_t ie = 0; ie < cfg.energies.size(); ++ie) {
    const double E = cfg.energies[ie];
    const auto mark = [&](const std::string& msg) {
      for (long r = 0; r < M; ++r) {
        auto& st = tasks[ie * M + r].status;
        st.ok = false;
        st.message = msg;
      }
    };
    const std::string name = "increments_" + energy_tag(ie) + ".csv";
    try {
      json e{{"E", E}};
      std::ofstream out(dir / name, std::ios::binary);
      if (eo.mode == "block") {
        const auto inc = run_block_ensemble(rb.bump, E, eo.block, en);
        out << "realization,n,theta_n,I_n\n";
        for (const auto& b : inc)
          out << b.realization << ',' << b.n << ',' << fmt17(b.theta_start) << ',' << fmt17(b.I) << '\n';
        const auto st = increment_stats(inc, en.antithetic);
        const double unit = expected_increment(*rb.bump, E, eo.block, 1.0);
        e["n"] = eo.block;
        e["mean"] = st.mean;
        e["stderr"] = st.stderr_;
        e["variance"] = st.variance;
        e["expected_published"] = unit;
        e["kappa_ratio"] = st.mean / unit;
        e["expected_scaled"] = eo.kappa * unit;
        e["envelope"] = increment_envelope(*rb.bump, E, eo.block);
      } else {
        const auto chains = run_chain_ensemble(rb.bump, E, en);
        out << "realization,n,I_n,logR_cum\n";
        for (const auto& c : chains)
          for (std::size_t k = 0; k < c.increments.size(); ++k)
            out << c.realization << ',' << c.n[k] << ',' << fmt17(c.increments[k]) << ',' << fmt17(c.logR[k])
                << '\n';
        auto est = estimate_lyapunov(chains, E, en.n_min, en.n_max, en.bootstrap, en.master_seed, en.antithetic);
        est.theory = lyapunov_theoretical(*rb.bump, E, 1.0, ArgumentReading::liouville_c);
        est.theory_unit = lyapunov_theoretical(*rb.bump, E, 1.0, ArgumentReading::unit);
        est.kappa = eo.kappa;
        est.theory_scaled = eo.kappa * est.theory;
        const auto g = growth_exponents(chains, est.slope);
        e["lambda_hat"] = est.slope;
        e["stderr"] = est.stderr_;
        e["fit_n"] = {est.fit_n_min, est.fit_n_max};
        e["lambda_theory"] = est.theory;
        e["lambda_theory_unit_reading"] = est.theory_unit;
        e["kappa"] = est.kappa;
        e["lambda_theory_scaled"] = est.theory_scaled;
        e["ratio_to_scaled"] = est.slope / est.theory_scaled;
        e["growth"] = {{"generic_mean", g.generic_mean},
                       {"generic_stderr", g.generic_stderr},
                       {"predicted_growing", g.predicted_growing},
                       {"minimal_mean", g.minimal_mean},
                       {"minimal_stderr", g.minimal_stderr},
                       {"minimal_count", g.minimal_count},
                       {"predicted_decaying", g.predicted_decaying}};
        lambdas.push_back(est.slope);
        lambda_energies.push_back(E);
      }
      out.close();
      if (!out) throw std::runtime_error("cannot write " + name);
      tasks[ie * M].files.push_back(name);
      per_energy.push_back(std::move(e));
    } catch (const std::exception& ex) {
      mark(ex.what());
      per_energy.push_back(json{{"E", E}, {"error", ex.what()}});
    }
  }
  summary["mode"] = eo.mode;
  summary["realizations"] = M;
  summary["blocks"] = {en.n_min, en.n_max};
  summary["antithetic"] = en.antithetic;
  summary["bump"] = rb.bump->label();
  summary["energies"] = std::move(per_energy);
  if (!lambdas.empty()) {
    const auto rep = dimension_report_from_lambda(lambda_energies, lambdas, eo.kappa);
    json dims = json::array();
    for (const auto& d : rep.entries) {
      json j{{"E", d.E}, {"lambda", d.lambda}, {"pure_point", d.pure_point}, {"boundary", d.boundary}};
      j["d"] = d.d ? json(*d.d) : json(nullptr);
      dims.push_back(std::move(j));
    }
    summary["dimension"] = std::move(dims);
  }
}

}  // namespace

RunManifest execute(const RunConfig& cfg) {
  RunManifest man;
  man.config = cfg.text;
  man.seed = cfg.seed;
  man.jobs = resolve_jobs(cfg.jobs);
  man.started = utc_now();
  const fs::path dir = cfg.output;
  prepare_output(dir);

  std::vector<TaskOut> tasks(static_cast<std::size_t>(cfg.task_count()));
  json summary;
  summary["subcommand"] = to_string(cfg.subcommand);
  summary["version"] = kVersion;
  summary["seed"] = cfg.seed;
  summary["potential"] = describe(cfg.potential);

  switch (cfg.subcommand) {
    case Subcommand::solve:
      for (std::size_t i = 0; i < tasks.size(); ++i) tasks[i].status.name = "solve " + energy_tag(i);
      run_solve(cfg, dir, tasks);
      break;
    case Subcommand::wkb_compare:
      for (std::size_t i = 0; i < tasks.size(); ++i) tasks[i].status.name = "wkb-compare " + energy_tag(i);
      run_wkb(cfg, dir, tasks);
      break;
    case Subcommand::diagnose_smoothness:
      tasks.front().status.name = "diagnose-smoothness";
      run_smoothness(cfg, dir, tasks);
      break;
    case Subcommand::ensemble: {
      const long M = cfg.ensemble.realizations;
      for (std::size_t i = 0; i < tasks.size(); ++i)
        tasks[i].status.name = "ensemble " + energy_tag(i / M) + " r" + std::to_string(i % M);
      run_ensemble(cfg, dir, tasks, summary);
      break;
    }
  }

  if (cfg.subcommand != Subcommand::ensemble) {
    json results = json::array();
    for (const auto& t : tasks) results.push_back(t.status.ok ? t.summary : json{{"error", t.status.message}});
    summary["results"] = std::move(results);
  }
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  std::vector<std::string> files;
  for (auto& t : tasks) {
    man.tasks.push_back(t.status);
    for (auto& f : t.files) files.push_back(f);
  }
  files.push_back("summary.json");
  for (const auto& f : files) man.files.push_back({f, fs::file_size(dir / f), sha256_file(dir / f)});
  man.finished = utc_now();

  json m;
  m["version"] = man.version;
  m["config"] = man.config;
  m["seed"] = man.seed;
  m["jobs"] = man.jobs;
  m["started"] = man.started;
  m["finished"] = man.finished;
  m["ok"] = man.ok();
  json tj = json::array();
  for (const auto& t : man.tasks) {
    json j{{"name", t.name}, {"ok", t.ok}};
    if (!t.ok) j["message"] = t.message;
    tj.push_back(std::move(j));
  }
  m["tasks"] = std::move(tj);
  json fj = json::array();
  for (const auto& f : man.files) fj.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  m["files"] = std::move(fj);
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  return man;
}

}  // namespace starklab
