#ifndef SSLSPEC_EXPERIMENTS_HPP
#define SSLSPEC_EXPERIMENTS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "closed_form.hpp"
#include "downstream.hpp"
#include "graph.hpp"
#include "graph_estimation.hpp"
#include "io.hpp"
#include "losses.hpp"
#include "optim.hpp"

namespace sslspec {

struct ExperimentSpec {
  std::string name;
  std::map<std::string, std::string> params;
  std::string output_dir;  // empty: nothing is written
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string relation;  // how measured is compared to threshold
};

struct ExperimentReport {
  std::string name;
  json spec;
  std::vector<std::string> files;
  std::vector<CheckResult> checks;
  json measured = json::object();

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
};

struct SyntheticTask {
  MatrixXd x;
  std::vector<int> labels;
  MatrixXd y;
};

namespace detail {

inline std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Fisher-Yates with a fixed generator so label order is reproducible across
// standard library implementations.
inline void shuffle_labels(std::vector<int>& v, std::uint64_t seed) {
  std::uint64_t s = seed;
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(splitmix(s) % i);
    std::swap(v[i - 1], v[j]);
  }
}

inline MatrixXd one_hot(const std::vector<int>& labels, int classes) {
  MatrixXd y = MatrixXd::Zero(static_cast<Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Index>(i), labels[i]) = 1.0;
  return y;
}

inline std::vector<int> modulo_labels(Index n, Index classes) {
  std::vector<int> l(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) l[static_cast<std::size_t>(i)] = static_cast<int>(i % classes);
  return l;
}

}  // namespace detail

// Gaussian class blobs with balanced, shuffled labels.
inline SyntheticTask make_synthetic_task(Index n, Index classes, Index dim, std::uint64_t seed,
                                         double mean_scale = 1.0) {
  if (n < 1 || dim < 1) throw std::invalid_argument("make_synthetic_task: n and dim must be positive");
  if (classes < 1) throw std::invalid_argument("make_synthetic_task: classes must be positive");
  if (classes > n) throw std::invalid_argument("make_synthetic_task: more classes than samples");
  SyntheticTask t;
  t.labels = detail::modulo_labels(n, classes);
  detail::shuffle_labels(t.labels, seed);
  const MatrixXd means = gaussian_matrix(classes, dim, seed ^ 0x5851F42D4C957F2DULL, mean_scale);
  t.x = gaussian_matrix(n, dim, seed ^ 0x14057B7EF767814FULL);
  for (Index i = 0; i < n; ++i) t.x.row(i) += means.row(t.labels[static_cast<std::size_t>(i)]);
  t.y = detail::one_hot(t.labels, static_cast<int>(classes));
  return t;
}

namespace detail {

template <class F>
void parallel_for(std::size_t count, int jobs, F&& f) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(m);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

inline std::vector<double> logspace(double lo, double hi, int points) {
  std::vector<double> v;
  if (points == 1) return {lo};
  for (int i = 0; i < points; ++i)
    v.push_back(std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * i / (points - 1)));
  return v;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("parameter " + key + ": not a number: '" + v + "'");
  return d;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long d = 0;
  try {
    d = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("parameter " + key + ": not an integer: '" + v + "'");
  return d;
}

// Typed access to the k=v map. Every lookup is echoed with its resolved
// value; keys never looked up are rejected by finish().
class Params {
 public:
  explicit Params(const std::map<std::string, std::string>& raw) : raw_(raw) {}

  long long integer(const std::string& key, long long def, long long lo = 1) {
    const long long v = has(key) ? parse_int(key, raw_.at(key)) : def;
    if (v < lo) throw std::invalid_argument("parameter " + key + " must be >= " + std::to_string(lo));
    echo_[key] = v;
    return v;
  }

  double real(const std::string& key, double def, bool positive = false) {
    const double v = has(key) ? parse_double(key, raw_.at(key)) : def;
    if (!std::isfinite(v) || (positive ? !(v > 0.0) : !(v >= 0.0)))
      throw std::invalid_argument("parameter " + key + (positive ? " must be positive" : " must be nonnegative"));
    echo_[key] = v;
    return v;
  }

  std::vector<double> reals(const std::string& key, const std::vector<double>& def) {
    std::vector<double> v = def;
    if (has(key)) {
      v.clear();
      for (const auto& s : split_list(raw_.at(key))) v.push_back(parse_double(key, s));
    }
    if (v.empty()) throw std::invalid_argument("parameter " + key + " needs at least one value");
    for (double d : v)
      if (!std::isfinite(d) || d < 0.0) throw std::invalid_argument("parameter " + key + " entries must be nonnegative");
    echo_[key] = v;
    return v;
  }

  std::vector<long long> integers(const std::string& key, const std::vector<long long>& def) {
    std::vector<long long> v = def;
    if (has(key)) {
      v.clear();
      for (const auto& s : split_list(raw_.at(key))) v.push_back(parse_int(key, s));
    }
    if (v.empty()) throw std::invalid_argument("parameter " + key + " needs at least one value");
    for (long long d : v)
      if (d < 1) throw std::invalid_argument("parameter " + key + " entries must be positive");
    echo_[key] = v;
    return v;
  }

  std::vector<std::string> words(const std::string& key, const std::vector<std::string>& def,
                                 const std::set<std::string>& allowed) {
    std::vector<std::string> v = has(key) ? split_list(raw_.at(key)) : def;
    if (v.empty()) throw std::invalid_argument("parameter " + key + " needs at least one value");
    for (const auto& w : v)
      if (!allowed.count(w)) throw std::invalid_argument("parameter " + key + ": unknown value '" + w + "'");
    echo_[key] = v;
    return v;
  }

  void finish(const std::string& experiment) const {
    for (const auto& [k, v] : raw_) {
      if (echo_.contains(k)) continue;
      std::string known;
      for (auto it = echo_.begin(); it != echo_.end(); ++it) known += (known.empty() ? "" : ", ") + it.key();
      throw std::invalid_argument("unknown parameter '" + k + "' for experiment " + experiment +
                                  " (accepted: " + known + ")");
    }
  }

  const json& echo() const { return echo_; }

 private:
  bool has(const std::string& k) const { return raw_.count(k) != 0; }
  std::map<std::string, std::string> raw_;
  json echo_ = json::object();
};

struct Context {
  Params& p;
  ExperimentReport& report;
  std::filesystem::path out;
  std::uint64_t seed;
  int jobs;

  void write(const std::string& name, const std::string& content) {
    if (out.empty()) return;
    std::filesystem::create_directories(out);
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    f << content;
    report.files.push_back(name);
  }

  // pass when measured <= threshold (or >= when `at_least`)
  void check(const std::string& name, double measured, double threshold, bool at_least = false) {
    CheckResult c;
    c.name = name;
    c.measured = measured;
    c.threshold = threshold;
    c.relation = at_least ? ">=" : "<=";
    c.pass = at_least ? measured >= threshold : measured <= threshold;
    report.checks.push_back(c);
  }

  void check_true(const std::string& name, bool ok) {
    CheckResult c;
    c.name = name;
    c.measured = ok ? 1.0 : 0.0;
    c.threshold = 1.0;
    c.relation = "==";
    c.pass = ok;
    report.checks.push_back(c);
  }
};

inline std::string num(double v) { return format_number(v); }

inline std::string tag(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline std::string trajectory_csv(const Trajectory& t, Index k) {
  std::ostringstream os;
  write_trajectory_csv(os, t, k);
  return os.str();
}

// Centered rank of the row-normalized embedding.
inline Index centered_rank(const MatrixXd& z, double tol, bool normalize_rows) {
  MatrixXd u = z;
  if (normalize_rows) u = (u.array().colwise() / guarded_row_norms(z, 1e-300).array()).matrix();
  return numerical_rank(singular_values(center_columns(u)), tol);
}

inline double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-13) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline double xlogx(double w) { return w > 0.0 ? w * std::log(w) : 0.0; }

// ---------------------------------------------------------------- experiments

inline void run_vicreg_spectrum(Context& ctx) {
  auto& p = ctx.p;
  const Index n = p.integer("N", 256, 2);
  const Index k = p.integer("K", 32);
  const Index classes = p.integer("rank_g", 8);
  const double alpha = p.real("alpha", 1.0, true);
  const double gmin = p.real("gamma_min", 1e-4, true), gmax = p.real("gamma_max", 1.0, true);
  const int points = static_cast<int>(p.integer("gamma_points", 24));
  const int null_samples = static_cast<int>(p.integer("null_samples", 20, 2));
  if (k >= n) throw std::invalid_argument("vicreg-spectrum: K must be < N");
  const SyntheticTask task = make_synthetic_task(n, classes, 1, ctx.seed);
  const RelationGraph g = build_supervised_graph(task.labels);
  std::vector<double> gammas{0.0};
  for (double v : logspace(gmin, gmax, points)) gammas.push_back(v);

  struct Row {
    VectorXd lambda;
    Index rank = 0;
    double acc = 0.0;
  };
  std::vector<Row> rows(gammas.size());
  parallel_for(gammas.size(), ctx.jobs, [&](std::size_t i) {
    const VicregOptimum o = vicreg_optimal(g, alpha, gammas[i], k);
    rows[i].lambda = o.spectrum.values;
    rows[i].rank = matrix_rank(o.z_star);
    rows[i].acc = probe_accuracy(o.z_star, task.y);
  });
  std::vector<double> null(static_cast<std::size_t>(null_samples));
  parallel_for(null.size(), ctx.jobs, [&](std::size_t i) {
    null[i] = probe_accuracy(gaussian_matrix(n, k, ctx.seed + 1000 + i), task.y);
  });
  double mean = 0.0, sd = 0.0;
  for (double a : null) mean += a / null_samples;
  for (double a : null) sd += (a - mean) * (a - mean) / (null_samples - 1);
  sd = std::sqrt(sd);

  std::ostringstream csv;
  csv << "gamma,series,value\n";
  double band_lo = -1.0, band_hi = -1.0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    for (Index j = 0; j < k; ++j) csv << num(gammas[i]) << ",lambda_" << j + 1 << "," << num(rows[i].lambda(j)) << "\n";
    csv << num(gammas[i]) << ",rank," << rows[i].rank << "\n";
    csv << num(gammas[i]) << ",probe_accuracy," << num(rows[i].acc) << "\n";
    if (rows[i].rank == k && rows[i].acc == 1.0) {
      if (band_lo < 0.0) band_lo = gammas[i];
      band_hi = gammas[i];
    }
  }
  ctx.write("spectrum.csv", csv.str());
  std::ostringstream ncsv;
  ncsv << "sample,series,value\n";
  for (std::size_t i = 0; i < null.size(); ++i) ncsv << i << ",null_accuracy," << num(null[i]) << "\n";
  ctx.write("null_accuracy.csv", ncsv.str());

  auto& m = ctx.report.measured;
  m["sweet_spot_gamma_lo"] = band_lo;
  m["sweet_spot_gamma_hi"] = band_hi;
  m["accuracy_gamma0"] = rows[0].acc;
  m["null_accuracy_mean"] = mean;
  m["null_accuracy_sd"] = sd;
  m["uniform_chance"] = 1.0 / static_cast<double>(classes);
  Index band_points = 0;
  for (const Row& r : rows) band_points += (r.rank == k && r.acc == 1.0);
  ctx.check("sweet_spot_points", static_cast<double>(band_points), 1.0, true);
  ctx.check("gamma0_accuracy_within_null", rows[0].acc, mean + 3.0 * sd);
}

inline void run_vicreg_landscape(Context& ctx) {
  auto& p = ctx.p;
  const Index n = p.integer("N", 256, 2);
  const Index k = p.integer("K", 16);
  const Index classes = p.integer("rank_g", 4);
  const double alpha = p.real("alpha", 1.0, true);
  const double gamma = p.real("gamma", 0.1);
  const std::vector<long long> shifts = p.integers("shifts", {1, 2, 3, 4, 8, 16});
  const int points = static_cast<int>(p.integer("points", 32, 2));
  const SyntheticTask task = make_synthetic_task(n, classes, 1, ctx.seed);
  const RelationGraph g = build_supervised_graph(task.labels);
  const SpectralDecomposition full = sym_eig(vicreg_combined_matrix(g, alpha, gamma));
  LossConfig cfg;
  cfg.alpha = cfg.beta = alpha;
  cfg.gamma = gamma;
  cfg.variance_mode = VarianceMode::squared;

  auto selection = [&](Index s) {
    if (s + k > n) throw std::invalid_argument("vicreg-landscape: shift + K exceeds N");
    return vicreg_embedding(full.vectors.middleCols(s, k), full.values.segment(s, k), full.values.cwiseAbs().maxCoeff());
  };
  const MatrixXd z0 = selection(0);
  const double loss0 = vicreg_loss(z0, g, cfg);
  const double pred0 = vicreg_selection_loss(full.values.head(k), alpha);
  const double grad0 = grad_vicreg(z0, g, cfg).norm();

  std::vector<double> sel_loss(shifts.size()), sel_pred(shifts.size());
  std::vector<std::vector<double>> path(shifts.size());
  parallel_for(shifts.size(), ctx.jobs, [&](std::size_t i) {
    const MatrixXd zs = selection(shifts[i]);
    sel_loss[i] = vicreg_loss(zs, g, cfg);
    sel_pred[i] = vicreg_selection_loss(full.values.segment(shifts[i], k), alpha);
    for (int t = 0; t < points; ++t) {
      const double a = static_cast<double>(t) / (points - 1);
      path[i].push_back(vicreg_loss((1.0 - a) * z0 + a * zs, g, cfg));
    }
  });

  std::ostringstream sel, land;
  sel << "shift,series,value\n0,evaluated," << num(loss0) << "\n0,predicted," << num(pred0) << "\n";
  land << "t,series,value\n";
  double worst_match = std::abs(loss0 - pred0) / std::max(1.0, std::abs(pred0));
  double min_margin = std::numeric_limits<double>::infinity(), path_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    sel << shifts[i] << ",evaluated," << num(sel_loss[i]) << "\n" << shifts[i] << ",predicted," << num(sel_pred[i]) << "\n";
    for (int t = 0; t < points; ++t)
      land << num(static_cast<double>(t) / (points - 1)) << ",shift_" << shifts[i] << "," << num(path[i][t]) << "\n";
    worst_match = std::max(worst_match, std::abs(sel_loss[i] - sel_pred[i]) / std::max(1.0, std::abs(sel_pred[i])));
    min_margin = std::min(min_margin, sel_loss[i] - loss0);
    path_min = std::min(path_min, *std::min_element(path[i].begin(), path[i].end()));
  }
  ctx.write("selections.csv", sel.str());
  ctx.write("landscape.csv", land.str());
  auto& m = ctx.report.measured;
  m["min_loss"] = pred0;
  m["evaluated_loss"] = loss0;
  m["gradient_norm"] = grad0;
  m["top_eigenvalues"] = std::vector<double>(full.values.data(), full.values.data() + k);
  ctx.check("optimum_loss_relative_error", std::abs(loss0 - pred0) / std::max(1e-300, std::abs(pred0)), 1e-8);
  ctx.check("optimum_gradient_norm", grad0, 1e-6);
  ctx.check("selection_loss_formula_error", worst_match, 1e-8);
  ctx.check("shifted_selection_margin", min_margin, 0.0, true);
  ctx.check("path_minus_optimum", path_min - loss0, -1e-8 * std::max(1.0, loss0), true);
}

struct SimclrRun {
  std::string name;
  SimclrVariant variant;
  int default_steps;
};

inline std::vector<SimclrRun> simclr_variants(double tau_log) {
  std::vector<SimclrRun> v(4);
  v[0].name = "cosine_log";
  v[0].variant.tau = tau_log;
  v[0].default_steps = 1000;
  v[1].name = "l2_log";
  v[1].variant.metric = DistanceMetric::l2_squared;
  v[1].variant.tau = tau_log;
  v[1].default_steps = 2000;
  for (int i = 2; i < 4; ++i) {
    v[i].variant.estimator = Estimator::frobenius;
    v[i].variant.constraint = ConstraintSet::simple;
    v[i].variant.matching = Matching::euclidean;
    v[i].default_steps = 1000;
  }
  // unit rows: max cosine distance is 2, max squared distance 4
  v[2].name = "cosine_relu";
  v[2].variant.tau = 2.0;
  v[3].name = "l2_relu";
  v[3].variant.metric = DistanceMetric::l2_squared;
  v[3].variant.tau = 4.0;
  return v;
}

inline void run_simclr_collapse(Context& ctx) {
  auto& p = ctx.p;
  const Index n = p.integer("N", 256, 2);
  const Index k = p.integer("K", 64);
  const std::vector<long long> ranks = p.integers("ranks", {8, 16, 32});
  const double tau = p.real("tau", 0.5, true);
  const double lr = p.real("lr", 1.0, true);
  const long long steps = p.integer("steps", 0, 0);
  const double tol = p.real("rank_tol", 1e-6, true);
  const int rec = static_cast<int>(p.integer("record_every", 100));
  const std::vector<SimclrRun> variants = simclr_variants(tau);

  std::vector<RelationGraph> graphs;
  for (long long r : ranks) {
    if (r + 1 > n) throw std::invalid_argument("simclr-collapse: rank must be < N");
    std::vector<int> labels = detail::modulo_labels(n, r + 1);
    shuffle_labels(labels, ctx.seed);
    graphs.push_back(build_supervised_graph(labels));
  }
  struct Out {
    Index rank = 0;
    Trajectory traj;
  };
  const std::size_t runs = ranks.size() * variants.size();
  std::vector<Out> out(runs);
  parallel_for(runs, ctx.jobs, [&](std::size_t idx) {
    const std::size_t ri = idx / variants.size(), vi = idx % variants.size();
    OptimizerConfig o;
    o.kind = OptimizerKind::sgd;
    o.learning_rate = lr;
    o.max_steps = static_cast<int>(steps > 0 ? steps : variants[vi].default_steps);
    o.record_every = rec;
    o.record_singular_values = true;
    TrainSpec spec;
    spec.kind = LossKind::simclr;
    spec.simclr = variants[vi].variant;
    out[idx].traj = train_embedding(spec, graphs[ri], gaussian_matrix(n, k, ctx.seed + idx), o);
    out[idx].rank = centered_rank(out[idx].traj.final_params, tol, true);
  });

  std::ostringstream csv;
  csv << "rank_g,series,value\n";
  json table = json::array();
  for (std::size_t ri = 0; ri < ranks.size(); ++ri) {
    const Index expected = std::min<Index>(k, ranks[ri]);
    const SimclrOptimum so = simclr_optimal(graphs[ri], k);
    const Index cf = numerical_rank(singular_values(so.z_star), tol);
    const Index rel = relation_rank(graphs[ri]);
    csv << ranks[ri] << ",expected," << expected << "\n" << ranks[ri] << ",relation_rank," << rel << "\n";
    csv << ranks[ri] << ",closed_form," << cf << "\n";
    json row = {{"rank_g", ranks[ri]}, {"expected", expected}, {"relation_rank", rel}, {"closed_form", cf}};
    ctx.check("closed_form_rank_error/rank_g=" + std::to_string(ranks[ri]), std::abs(double(cf - expected)), 0.0);
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      const Out& o = out[ri * variants.size() + vi];
      csv << ranks[ri] << "," << variants[vi].name << "," << o.rank << "\n";
      row[variants[vi].name] = o.rank;
      ctx.check(variants[vi].name + "_rank_error/rank_g=" + std::to_string(ranks[ri]),
                std::abs(double(o.rank - expected)), 0.0);
      ctx.write("trajectory_" + variants[vi].name + "_rank" + std::to_string(ranks[ri]) + ".csv",
                trajectory_csv(o.traj, k));
    }
    table.push_back(row);
  }
  ctx.write("ranks.csv", csv.str());
  ctx.report.measured["rank_table"] = table;
}

inline void run_bt_collapse(Context& ctx) {
  auto& p = ctx.p;
  const Index n = p.integer("N", 512, 2);
  const Index k = p.integer("K", 128);
  const std::vector<long long> ranks = p.integers("ranks", {32, 128});
  const std::vector<long long> inits = p.integers("init_ranks", {4, 8, 16, 64});
  const long long steps = p.integer("steps", 2500, 0);
  const double lr = p.real("lr", 1e-2, true);
  const double alpha_bt = p.real("alpha_bt", 0.0);
  const double ratio = p.real("ratio", 1e-3, true);
  const int rec = static_cast<int>(p.integer("record_every", 100));

  std::vector<RelationGraph> graphs;
  for (long long r : ranks) {
    if (r + 1 > n) throw std::invalid_argument("bt-collapse: rank must be < N");
    std::vector<int> labels = detail::modulo_labels(n, r + 1);
    shuffle_labels(labels, ctx.seed);
    graphs.push_back(build_supervised_graph(labels));
  }
  struct Out {
    double beyond = 0.0;
    Index init_rank = 0;
    Trajectory traj;
  };
  const std::size_t runs = ranks.size() * inits.size();
  std::vector<Out> out(runs);
  parallel_for(runs, ctx.jobs, [&](std::size_t idx) {
    const std::size_t ri = idx / inits.size(), ii = idx % inits.size();
    const Index r0 = inits[ii];
    const std::uint64_t s = ctx.seed + idx;
    const MatrixXd z0 = gaussian_matrix(n, r0, 2 * s) * gaussian_matrix(r0, k, 2 * s + 1) /
                        std::sqrt(static_cast<double>(r0));
    OptimizerConfig o;
    o.kind = OptimizerKind::rmsprop;
    o.learning_rate = lr;
    o.max_steps = static_cast<int>(steps);
    o.record_every = rec;
    o.record_singular_values = true;
    TrainSpec spec;
    spec.kind = LossKind::barlow_twins;
    spec.loss.alpha_bt = alpha_bt;
    out[idx].init_rank = centered_rank(z0, kRankTol, false);
    out[idx].traj = train_embedding(spec, graphs[ri], z0, o);
    const VectorXd sv = singular_values(center_columns(out[idx].traj.final_params));
    const Index r = ranks[ri];
    out[idx].beyond = (r < sv.size() && sv(0) > 0.0) ? sv.tail(sv.size() - r).maxCoeff() / sv(0) : 0.0;
  });

  std::ostringstream csv;
  csv << "init_rank,series,value\n";
  json table = json::array();
  for (std::size_t ri = 0; ri < ranks.size(); ++ri)
    for (std::size_t ii = 0; ii < inits.size(); ++ii) {
      const Out& o = out[ri * inits.size() + ii];
      const std::string id = "rank_g_" + std::to_string(ranks[ri]);
      csv << inits[ii] << "," << id << "_beyond_ratio," << num(o.beyond) << "\n";
      csv << inits[ii] << "," << id << "_final_loss," << num(o.traj.final_loss) << "\n";
      table.push_back({{"rank_g", ranks[ri]}, {"init_rank", inits[ii]}, {"measured_init_rank", o.init_rank},
                       {"beyond_ratio", o.beyond}, {"final_loss", o.traj.final_loss}});
      ctx.check("beyond_ratio/rank_g=" + std::to_string(ranks[ri]) + "/init=" + std::to_string(inits[ii]), o.beyond,
                ratio);
      ctx.write("trajectory_rank" + std::to_string(ranks[ri]) + "_init" + std::to_string(inits[ii]) + ".csv",
                trajectory_csv(o.traj, k));
    }
  ctx.write("bt_collapse.csv", csv.str());
  ctx.report.measured["runs"] = table;
}

inline void run_convergence(Context& ctx) {
  auto& p = ctx.p;
  const Index n = p.integer("N", 512, 2);
  const Index dim = p.integer("D", 64);
  const Index classes = p.integer("classes", 8);
  const std::vector<long long> ks = p.integers("K", {8, 32, 64});
  const std::vector<double> gammas = p.reals("gamma", {0.0, 0.01});
  const std::vector<std::string> opts = p.words("optimizers", {"sgd", "rmsprop"}, {"sgd", "rmsprop"});
  const std::vector<std::string> models = p.words("models", {"embedding", "linear"}, {"embedding", "linear"});
  const long long seeds = p.integer("seeds", 10);
  const long long max_steps = p.integer("max_steps", 5000);
  const double target = p.real("target_gap_sq", 1e-4, true);
  const long long min_pass = p.integer("min_pass", 9, 0);
  const double lr_emb_sgd = p.real("lr_embedding_sgd", 1.0, true);
  const double lr_emb_rms = p.real("lr_embedding_rmsprop", 1e-2, true);
  const double lr_lin_sgd = p.real("lr_linear_sgd", 3e-3, true);
  const double lr_lin_rms = p.real("lr_linear_rmsprop", 3e-2, true);
  const double class_scale = p.real("class_scale", 0.5);
  const int rec = static_cast<int>(p.integer("record_every", 100));
  const bool traj_files = p.integer("write_trajectories", 1, 0) != 0;
  const double alpha = 1.0;

  const SyntheticTask task = make_synthetic_task(n, classes, dim, ctx.seed, class_scale);
  const RelationGraph g = build_supervised_graph(task.labels);

  struct Setting {
    std::string model, opt;
    Index k;
    double gamma;
    double reference = 0.0;
  };
  std::vector<Setting> settings;
  for (const auto& model : models)
    for (long long k : ks)
      for (double gm : gammas)
        for (const auto& o : opts) {
          if (k > (model == "linear" ? dim : n)) throw std::invalid_argument("convergence: K too large");
          settings.push_back({model, o, static_cast<Index>(k), gm, 0.0});
        }
  parallel_for(settings.size(), ctx.jobs, [&](std::size_t i) {
    Setting& s = settings[i];
    s.reference = s.model == "linear" ? vicreg_linear_min_loss(task.x, g, alpha, s.gamma, s.k)
                                      : vicreg_optimal(g, alpha, s.gamma, s.k).min_loss;
  });

  struct Out {
    bool ok = false;
    bool diverged = false;
    double gap = 0.0;
    int steps = 0;
    Trajectory traj;
  };
  const std::size_t runs = settings.size() * static_cast<std::size_t>(seeds);
  std::vector<Out> out(runs);
  parallel_for(runs, ctx.jobs, [&](std::size_t idx) {
    const Setting& s = settings[idx / static_cast<std::size_t>(seeds)];
    const std::uint64_t rs = ctx.seed + idx;
    LossConfig cfg;
    cfg.alpha = cfg.beta = alpha;
    cfg.gamma = s.gamma;
    cfg.variance_mode = VarianceMode::squared;
    OptimizerConfig o;
    o.kind = s.opt == "sgd" ? OptimizerKind::sgd : OptimizerKind::rmsprop;
    o.max_steps = static_cast<int>(max_steps);
    o.record_every = rec;
    o.record_singular_values = traj_files;
    o.stop_gap_sq = target;
    const bool lin = s.model == "linear";
    o.learning_rate = lin ? (s.opt == "sgd" ? lr_lin_sgd : lr_lin_rms) : (s.opt == "sgd" ? lr_emb_sgd : lr_emb_rms);
    try {
      if (lin) {
        const MatrixXd w0 = gaussian_matrix(dim, s.k, rs, 1.0 / std::sqrt(static_cast<double>(dim)));
        out[idx].traj = train_linear(cfg, task.x, g, w0, o, s.reference);
      } else {
        TrainSpec spec;
        spec.kind = LossKind::vicreg;
        spec.loss = cfg;
        out[idx].traj = train_embedding(spec, g, gaussian_matrix(n, s.k, rs), o, s.reference);
      }
      out[idx].gap = out[idx].traj.final_gap_sq;
      out[idx].steps = out[idx].traj.steps_taken;
      out[idx].ok = out[idx].gap <= target;
    } catch (const DivergenceError&) {
      out[idx].diverged = true;
      out[idx].gap = std::numeric_limits<double>::infinity();
      out[idx].steps = -1;
    }
  });

  std::ostringstream csv;
  csv << "model,optimizer,K,gamma,seed,series,value\n";
  json table = json::array();
  for (std::size_t si = 0; si < settings.size(); ++si) {
    const Setting& s = settings[si];
    const std::string id = s.model + "/" + s.opt + "/K=" + std::to_string(s.k) + "/gamma=" + tag(s.gamma);
    long long passed = 0;
    int worst_steps = 0;
    for (long long sd = 0; sd < seeds; ++sd) {
      const Out& o = out[si * static_cast<std::size_t>(seeds) + static_cast<std::size_t>(sd)];
      const std::string pre = s.model + "," + s.opt + "," + std::to_string(s.k) + "," + num(s.gamma) + "," +
                              std::to_string(sd) + ",";
      csv << pre << "final_gap_sq," << num(o.gap) << "\n" << pre << "steps," << o.steps << "\n";
      csv << pre << "diverged," << (o.diverged ? 1 : 0) << "\n";
      passed += o.ok;
      worst_steps = std::max(worst_steps, o.steps);
      if (traj_files && !o.diverged)
        ctx.write("trajectory_" + s.model + "_" + s.opt + "_K" + std::to_string(s.k) + "_gamma" + tag(s.gamma) + "_seed" +
                      std::to_string(sd) + ".csv",
                  trajectory_csv(o.traj, s.k));
    }
    table.push_back({{"setting", id}, {"reference_loss", s.reference}, {"seeds_passed", passed},
                     {"max_steps_taken", worst_steps}});
    ctx.check("seeds_converged/" + id, static_cast<double>(passed), static_cast<double>(min_pass), true);
  }
  ctx.write("convergence.csv", csv.str());
  ctx.report.measured["settings"] = table;
}

inline void run_probe_optimality(Context& ctx) {
  auto& p = ctx.p;
  const Index n = p.integer("N", 128, 2);
  const Index classes = p.integer("classes", 4);
  const Index k = p.integer("K", 8);
  const double gamma = p.real("gamma", 0.01);
  const long long instances = p.integer("instances", 200);
  const long long bt_steps = p.integer("bt_steps", 20000, 0);
  const double tol = p.real("tol", 1e-6, true);

  // optima of the three losses on a supervised graph probed on its own labels
  const SyntheticTask task = make_synthetic_task(n, classes, 1, ctx.seed);
  const RelationGraph g = build_supervised_graph(task.labels);
  const VicregOptimum vo = vicreg_optimal(g, 1.0, gamma, k);
  const SimclrOptimum so = simclr_optimal(g, k);
  OptimizerConfig o;
  o.max_steps = static_cast<int>(bt_steps);
  o.record_every = std::max(1, o.max_steps);
  TrainSpec spec;
  spec.kind = LossKind::barlow_twins;
  spec.loss.alpha_bt = 0.0;
  const Trajectory bt = train_embedding(spec, g, gaussian_matrix(n, k, ctx.seed + 1), o);
  const double lv = minimal_probe_loss(with_bias(vo.z_star), task.y);
  const double ls = minimal_probe_loss(with_bias(so.z_star), task.y);
  const double lb = minimal_probe_loss(with_bias(bt.final_params), task.y);

  // random instances, every other one rank deficient
  std::vector<double> rel(static_cast<std::size_t>(instances)), grad(static_cast<std::size_t>(instances));
  parallel_for(rel.size(), ctx.jobs, [&](std::size_t i) {
    const std::uint64_t s = ctx.seed + 100 + 3 * i;
    const Index rows = 20 + static_cast<Index>(i % 7), cols = 3 + static_cast<Index>(i % 5);
    const Index c = 1 + static_cast<Index>(i % 4);
    MatrixXd z = gaussian_matrix(rows, cols, s);
    if (i % 2 == 1) {
      const Index r = std::max<Index>(1, cols - 2);
      z = gaussian_matrix(rows, r, s) * gaussian_matrix(r, cols, s + 1);
    }
    const MatrixXd y = gaussian_matrix(rows, c, s + 2);
    const ProbeResult pr = least_squares_probe(z, y);
    rel[i] = std::abs(pr.achieved_loss - pr.min_loss) / std::max(1e-300, std::abs(pr.min_loss));
    grad[i] = (z.transpose() * (y - z * pr.w_star)).norm() / std::max(1.0, z.norm() * y.norm());
  });
  const double worst_rel = *std::max_element(rel.begin(), rel.end());
  const double worst_grad = *std::max_element(grad.begin(), grad.end());

  // constructed instances for the span condition
  const Index rows = 30;
  const MatrixXd basis = orthonormal_basis(gaussian_matrix(rows, 6, ctx.seed + 7));
  const MatrixXd zin = basis.leftCols(3) * gaussian_matrix(3, 4, ctx.seed + 8);
  struct Case {
    const char* name;
    MatrixXd y;
  };
  const std::vector<Case> cases = {
      {"aligned", basis.leftCols(3) * gaussian_matrix(3, 2, ctx.seed + 9)},
      {"rotated_within_span", basis.leftCols(3) * orthonormal_basis(gaussian_matrix(3, 3, ctx.seed + 10))},
      {"orthogonal", basis.rightCols(3)},
      {"partial", basis.middleCols(2, 2)},
  };
  bool equivalence = true;
  std::ostringstream spans;
  spans << "instance,series,value\n";
  for (const Case& c : cases) {
    const SpanCheck sc = span_condition(zin, c.y, 1e-8);
    const double loss = minimal_probe_loss(zin, c.y);
    const bool zero = loss <= 1e-12 * std::max(1.0, c.y.squaredNorm());
    equivalence = equivalence && (sc.holds == zero);
    spans << c.name << ",angle," << num(sc.angle) << "\n" << c.name << ",span_holds," << sc.holds << "\n";
    spans << c.name << ",minimal_loss," << num(loss) << "\n";
  }

  std::ostringstream csv;
  csv << "method,series,value\n";
  csv << "vicreg,probe_loss," << num(lv) << "\nsimclr,probe_loss," << num(ls) << "\nbarlow_twins,probe_loss," << num(lb)
      << "\n";
  ctx.write("probe_losses.csv", csv.str());
  ctx.write("span_cases.csv", spans.str());
  auto& m = ctx.report.measured;
  m["vicreg_probe_loss"] = lv;
  m["simclr_probe_loss"] = ls;
  m["barlow_twins_probe_loss"] = lb;
  m["barlow_twins_final_loss"] = bt.final_loss;
  ctx.check("vicreg_probe_loss", lv, tol);
  ctx.check("simclr_probe_loss", ls, tol);
  ctx.check("barlow_twins_probe_loss", lb, tol);
  ctx.check("minimal_vs_achieved_relative", worst_rel, 1e-8);
  ctx.check("normal_equation_residual", worst_grad, 1e-8);
  ctx.check_true("span_condition_iff_zero_loss", equivalence);
}

// Within-block contrasts e_j - mean over the block, j < size - 1.
inline MatrixXd block_contrasts(Index n, Index start, Index size) {
  MatrixXd y = MatrixXd::Zero(n, size - 1);
  for (Index j = 0; j + 1 < size; ++j) {
    y.block(start, j, size, 1).setConstant(-1.0 / static_cast<double>(size));
    y(start + j, j) += 1.0;
  }
  return y;
}

inline void run_rank_bounds(Context& ctx) {
  auto& p = ctx.p;
  const Index small = p.integer("small_block", 10, 2);
  const Index large = p.integer("large_block", 30, 2);
  const Index blocks = p.integer("large_blocks", 7);
  const Index k = p.integer("K", 16);
  const double gamma = p.real("gamma", 0.01);
  const double alpha = p.real("alpha", 1.0, true);
  const double near = p.real("upper_fraction", 0.95, true);

  std::vector<Index> sizes{small};
  for (Index b = 0; b < blocks; ++b) sizes.push_back(large);
  const RelationGraph g = build_clique_graph(sizes);
  const Index n = g.n();
  std::vector<int> labels;
  for (std::size_t c = 0; c < sizes.size(); ++c)
    for (Index i = 0; i < sizes[c]; ++i) labels.push_back(static_cast<int>(c));
  const MatrixXd y_adv = block_contrasts(n, 0, small);
  const MatrixXd y_al = detail::one_hot(labels, static_cast<int>(sizes.size()));
  const RankBoundResult adv = rank_bound_gap(g, y_adv, k, alpha, gamma);
  const RankBoundResult al = rank_bound_gap(g, y_al, k, alpha, gamma);

  std::ostringstream csv;
  csv << "instance,series,value\n";
  for (const auto& [name, r] : {std::pair<const char*, const RankBoundResult&>{"adversarial", adv}, {"aligned", al}}) {
    csv << name << ",lower," << num(r.lower) << "\n" << name << ",upper," << num(r.upper) << "\n";
    csv << name << ",simclr_loss," << num(r.simclr_loss) << "\n" << name << ",vicreg_loss," << num(r.vicreg_loss) << "\n";
    csv << name << ",gap," << num(r.gap) << "\n" << name << ",relation_rank," << r.relation_rank << "\n";
    csv << name << ",target_rank," << r.target_rank << "\n";
    ctx.report.measured[name] = {{"lower", r.lower},
                                 {"upper", r.upper},
                                 {"gap", r.gap},
                                 {"simclr_loss", r.simclr_loss},
                                 {"vicreg_loss", r.vicreg_loss},
                                 {"relation_rank", r.relation_rank},
                                 {"target_rank", r.target_rank},
                                 {"target_rank_exceeds_k", r.target_rank_exceeds_k}};
  }
  ctx.write("rank_bounds.csv", csv.str());
  const double slack = 1e-9 * std::max(1.0, adv.upper);
  ctx.check("adversarial_gap_minus_lower", adv.gap - adv.lower, -slack, true);
  ctx.check("adversarial_gap_minus_upper", adv.gap - adv.upper, slack);
  ctx.check("adversarial_gap_over_upper", adv.gap / adv.upper, near, true);
  ctx.check("aligned_abs_gap", std::abs(al.gap), 1e-6);
  ctx.check_true("target_rank_within_k", !adv.target_rank_exceeds_k && !al.target_rank_exceeds_k);
}

inline void run_graph_estimate_check(Context& ctx) {
  auto& p = ctx.p;
  const Index n = p.integer("N", 16, 2);
  const Index dim = p.integer("dim", 5);
  const double tau = p.real("tau", 0.5, true);
  const long long instances = p.integer("instances", 20);

  double soft_cos = 0.0, soft_l2 = 0.0, log_simple = 0.0, log_rs = 0.0, fro_simple = 0.0, fro_rs = 0.0, gap = 0.0;
  std::ostringstream csv;
  csv << "instance,series,value\n";
  for (long long t = 0; t < instances; ++t) {
    const std::uint64_t s = ctx.seed + 10 * static_cast<std::uint64_t>(t);
    const MatrixXd z = gaussian_matrix(n, dim, s);
    const double ec = (estimate_graph_log(pairwise_distance(z, DistanceMetric::cosine), tau,
                                          ConstraintSet::right_stochastic) -
                       simclr_estimate(z, tau, Metric::cosine))
                          .cwiseAbs()
                          .maxCoeff();
    const double el = (estimate_graph_log(pairwise_distance(z, DistanceMetric::l2_squared), tau,
                                          ConstraintSet::right_stochastic) -
                       simclr_estimate(z, tau, Metric::l2))
                          .cwiseAbs()
                          .maxCoeff();
    gap = std::max(gap, estimate_graph_frobenius_full(pairwise_distance(z, DistanceMetric::l2_squared),
                                                      default_frobenius_tau(pairwise_distance(z, DistanceMetric::l2_squared)),
                                                      ConstraintSet::right_stochastic)
                            .feasibility_gap);

    // N = 3: every entry (Simple) or row (right-stochastic) is a 1-D convex problem
    const MatrixXd d = pairwise_distance(gaussian_matrix(3, dim, s + 1), DistanceMetric::l2_squared);
    const double tf = default_frobenius_tau(d);
    const MatrixXd wl = estimate_graph_log(d, tau, ConstraintSet::simple);
    const MatrixXd wlr = estimate_graph_log(d, tau, ConstraintSet::right_stochastic);
    const MatrixXd wf = estimate_graph_frobenius(d, tf, ConstraintSet::simple);
    const MatrixXd wfr = estimate_graph_frobenius(d, tf, ConstraintSet::right_stochastic);
    double e1 = 0.0, e2 = 0.0, e3 = 0.0, e4 = 0.0;
    for (Index i = 0; i < 3; ++i) {
      const Index a = (i + 1) % 3, b = (i + 2) % 3;
      for (Index j : {a, b}) {
        const double dij = d(i, j);
        e1 = std::max(e1, std::abs(wl(i, j) - golden_section([&](double w) { return dij * w + tau * (xlogx(w) - w); },
                                                              0.0, 1.5)));
        e3 = std::max(e3, std::abs(wf(i, j) - golden_section([&](double w) { return dij * w + tf * (0.5 * w * w - w); },
                                                              0.0, 2.0)));
      }
      const double wr = golden_section(
          [&](double w) {
            return d(i, a) * w + d(i, b) * (1.0 - w) + tau * (xlogx(w) - w + xlogx(1.0 - w) - (1.0 - w));
          },
          0.0, 1.0);
      e2 = std::max({e2, std::abs(wlr(i, a) - wr), std::abs(wlr(i, b) - (1.0 - wr))});
      const double wq = golden_section(
          [&](double w) {
            return d(i, a) * w + d(i, b) * (1.0 - w) + tf * (0.5 * w * w - w + 0.5 * (1.0 - w) * (1.0 - w) - (1.0 - w));
          },
          0.0, 1.0);
      e4 = std::max({e4, std::abs(wfr(i, a) - wq), std::abs(wfr(i, b) - (1.0 - wq))});
    }
    csv << t << ",softmax_cosine," << num(ec) << "\n" << t << ",softmax_l2," << num(el) << "\n";
    csv << t << ",log_simple_oracle," << num(e1) << "\n" << t << ",log_rs_oracle," << num(e2) << "\n";
    csv << t << ",frobenius_simple_oracle," << num(e3) << "\n" << t << ",frobenius_rs_oracle," << num(e4) << "\n";
    soft_cos = std::max(soft_cos, ec);
    soft_l2 = std::max(soft_l2, el);
    log_simple = std::max(log_simple, e1);
    log_rs = std::max(log_rs, e2);
    fro_simple = std::max(fro_simple, e3);
    fro_rs = std::max(fro_rs, e4);
  }
  ctx.write("estimates.csv", csv.str());
  ctx.report.measured["frobenius_rs_feasibility_gap_max"] = gap;
  ctx.check("softmax_cosine_max_abs", soft_cos, 1e-12);
  ctx.check("softmax_l2_max_abs", soft_l2, 1e-12);
  ctx.check("log_simple_oracle_max_abs", log_simple, 1e-6);
  ctx.check("log_right_stochastic_oracle_max_abs", log_rs, 1e-6);
  ctx.check("frobenius_simple_oracle_max_abs", fro_simple, 1e-6);
  ctx.check("frobenius_right_stochastic_oracle_max_abs", fro_rs, 1e-6);
}

}  // namespace detail

using ExperimentFn = std::function<void(detail::Context&)>;

inline const std::vector<std::pair<std::string, ExperimentFn>>& experiment_registry() {
  static const std::vector<std::pair<std::string, ExperimentFn>> r = {
      {"vicreg-spectrum", detail::run_vicreg_spectrum},
      {"vicreg-landscape", detail::run_vicreg_landscape},
      {"simclr-collapse", detail::run_simclr_collapse},
      {"bt-collapse", detail::run_bt_collapse},
      {"convergence", detail::run_convergence},
      {"probe-optimality", detail::run_probe_optimality},
      {"rank-bounds", detail::run_rank_bounds},
      {"graph-estimate-check", detail::run_graph_estimate_check},
  };
  return r;
}

inline std::vector<std::string> registered_experiments() {
  std::vector<std::string> names;
  for (const auto& e : experiment_registry()) names.push_back(e.first);
  return names;
}

inline json report_to_json(const ExperimentReport& r) {
  json j;
  j["experiment"] = r.name;
  j["spec"] = r.spec;
  j["files"] = r.files;
  json checks = json::array();
  for (const CheckResult& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"measured", c.measured},
                      {"threshold", c.threshold},
                      {"relation", c.relation}});
  j["checks"] = checks;
  j["measured"] = r.measured;
  j["pass"] = r.passed();
  return j;
}

// Runs a registered experiment. When spec.output_dir is set, CSVs and a
// summary.json land there.
inline ExperimentReport run(const ExperimentSpec& spec) {
  const auto& reg = experiment_registry();
  auto it = std::find_if(reg.begin(), reg.end(), [&](const auto& e) { return e.first == spec.name; });
  if (it == reg.end()) {
    std::string names;
    for (const auto& e : reg) names += (names.empty() ? "" : ", ") + e.first;
    throw std::invalid_argument("unknown experiment '" + spec.name + "'; registered: " + names);
  }
  if (spec.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  ExperimentReport report;
  report.name = spec.name;
  detail::Params params(spec.params);
  detail::Context ctx{params, report, std::filesystem::path(spec.output_dir), spec.seed, spec.jobs};
  it->second(ctx);
  params.finish(spec.name);
  report.spec = {{"name", spec.name}, {"seed", spec.seed}, {"params", params.echo()}};
  if (!spec.output_dir.empty()) {
    std::filesystem::create_directories(ctx.out);
    std::ofstream f(ctx.out / "summary.json", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write summary.json");
    f << report_to_json(report).dump(2) << "\n";
  }
  return report;
}

// {"name": ..., "params": {...}, "output_dir": ..., "seed": ..., "jobs": ...}
inline ExperimentSpec spec_from_json(const json& j) {
  ExperimentSpec s;
  if (!j.is_object() || !j.contains("name")) throw std::invalid_argument("spec file: missing \"name\"");
  s.name = j.at("name").get<std::string>();
  if (j.contains("params")) {
    for (auto it = j.at("params").begin(); it != j.at("params").end(); ++it) {
      const json& v = it.value();
      std::string str;
      if (v.is_string()) {
        str = v.get<std::string>();
      } else if (v.is_array()) {
        for (const json& e : v) str += (str.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
      } else {
        str = v.dump();
      }
      s.params[it.key()] = str;
    }
  }
  if (j.contains("output_dir")) s.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("jobs")) s.jobs = j.at("jobs").get<int>();
  return s;
}

}  // namespace sslspec

#endif  // SSLSPEC_EXPERIMENTS_HPP
