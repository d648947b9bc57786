#include "lsrecon/pipeline.hpp"

#include "lsrecon/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace lsrecon {

namespace {

ExportOptions parse_exports(const nlohmann::json& v) {
  std::vector<std::string> items;
  if (v.is_string()) {
    std::stringstream ss(v.get<std::string>());
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) items.push_back(tok);
  } else if (v.is_array()) {
    for (const auto& e : v) items.push_back(e.get<std::string>());
  } else {
    throw ConfigError("export must be a string or an array of strings");
  }
  ExportOptions e{false, false, false};
  for (const auto& s : items) {
    if (s == "vtk") e.vtk = true;
    else if (s == "csv") e.csv = true;
    else if (s == "obj") e.obj = true;
    else throw ConfigError("unknown export kind: " + s);
  }
  return e;
}

std::string exports_string(const ExportOptions& e) {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ",";
    s += name;
  };
  add(e.vtk, "vtk");
  add(e.csv, "csv");
  add(e.obj, "obj");
  return s;
}

AdaptMap identity_map(std::size_t n) {
  AdaptMap m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = {LeafOrigin::Kind::Kept, static_cast<LeafIndex>(i)};
  return m;
}

bool is_identity(const AdaptMap& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].kind != LeafOrigin::Kind::Kept || m[i].source != i) return false;
  return true;
}

double mean_of(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return pairwise_sum(v.begin(), v.end()) / static_cast<double>(v.size());
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "input") c.input = v.get<std::string>();
      else if (key == "format") c.format = v.get<std::string>();
      else if (key == "outdir") c.outdir = v.get<std::string>();
      else if (key == "runs") c.runs = v.get<int>();
      else if (key == "cs") c.cs = v.get<double>();
      else if (key == "domain_halfwidth") c.half_width = v.get<double>();
      else if (key == "min_level") c.min_level = v.get<int>();
      else if (key == "dt_factor") c.dt_factor = v.get<double>();
      else if (key == "stop_tolerance") c.stop_tolerance = v.get<double>();
      else if (key == "min_iterations") c.min_iterations = v.get<int>();
      else if (key == "max_iterations") c.max_iterations = v.get<int>();
      else if (key == "cavity_mode") c.cavity_mode = v.get<bool>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "workers") c.workers = v.get<int>();
      else if (key == "sample_fraction") c.sample_fraction = v.get<double>();
      else if (key == "reinit_every") c.reinit_every = v.get<int>();
      else if (key == "mu_coarse") c.mu_coarse = v.get<double>();
      else if (key == "mu_final") c.mu_final = v.get<double>();
      else if (key == "export") c.exports = parse_exports(v);
      else if (key == "exact") c.exact = v.get<std::string>();
      else throw ConfigError("unknown config key: " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"input", c.input},
          {"format", c.format},
          {"outdir", c.outdir},
          {"runs", c.runs},
          {"cs", c.cs},
          {"domain_halfwidth", c.half_width},
          {"min_level", c.min_level},
          {"dt_factor", c.dt_factor},
          {"stop_tolerance", c.stop_tolerance},
          {"min_iterations", c.min_iterations},
          {"max_iterations", c.max_iterations},
          {"cavity_mode", c.cavity_mode},
          {"seed", c.seed},
          {"workers", c.workers},
          {"sample_fraction", c.sample_fraction},
          {"reinit_every", c.reinit_every},
          {"mu_coarse", c.mu_coarse},
          {"mu_final", c.mu_final},
          {"export", exports_string(c.exports)},
          {"exact", c.exact}};
}

void validate(const RunConfig& c) {
  if (c.runs < 1) throw ConfigError("runs must be at least 1");
  if (!(c.cs > 0.0)) throw ConfigError("cs must be positive");
  if (!(c.half_width > 1.0)) throw ConfigError("domain_halfwidth must exceed 1");
  if (c.min_level < 0) throw ConfigError("min_level must be non-negative");
  if (!(c.dt_factor > 0.0)) throw ConfigError("dt_factor must be positive");
  if (!(c.stop_tolerance > 0.0)) throw ConfigError("stop_tolerance must be positive");
  if (c.min_iterations < 1 || c.max_iterations < c.min_iterations)
    throw ConfigError("need 1 <= min_iterations <= max_iterations");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  if (!(c.sample_fraction > 0.0 && c.sample_fraction <= 1.0))
    throw ConfigError("sample_fraction must lie in (0, 1]");
  if (c.reinit_every < 1) throw ConfigError("reinit_every must be at least 1");
  if (!(c.mu_coarse >= 0.0 && c.mu_final >= 0.0)) throw ConfigError("mu must be non-negative");
  if (!c.format.empty() && c.format != "xyz" && c.format != "ply")
    throw ConfigError("format must be xyz or ply");
}

Resolution resolution_schedule(double h_s, double cs, double half_width, int run,
                               double dt_factor) {
  if (run < 1) throw ConfigError("run index starts at 1");
  if (!(h_s > 0.0) || !(cs > 0.0)) throw ConfigError("resolution needs h_s > 0 and cs > 0");
  const double target = cs * h_s * (1.0 + 1e-12);
  int level = 0;
  while (2.0 * half_width / static_cast<double>(std::uint64_t{1} << level) > target) {
    if (++level > kMaxDepth) throw ConfigError("requested resolution exceeds the tree depth");
  }
  level += run - 1;
  if (level > kMaxDepth) throw ConfigError("requested resolution exceeds the tree depth");
  Resolution r;
  r.level = level;
  r.dx_min = 2.0 * half_width / static_cast<double>(std::uint64_t{1} << level);
  r.dt = dt_factor * r.dx_min;
  return r;
}

RunSchedule run_schedule(int run, int runs, const RunConfig& c) {
  RunSchedule s;
  s.p = run == 1 ? 1 : 2;
  s.mu = run < runs ? c.mu_coarse : c.mu_final;
  s.op = run < runs ? Reconstruction::P1 : Reconstruction::Cweno;
  return s;
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::None: return "none";
    case StopReason::FlatEnergy: return "flat-energy";
    case StopReason::MaxIterations: return "max-iterations";
  }
  return "none";
}

void StoppingRule::reset(double initial_energy) {
  history_.assign(1, initial_energy);
  delta_ = kInf;
}

double StoppingRule::push(double energy) {
  history_.push_back(energy);
  const int n = iterations();
  const int k = std::min(n, window_);
  double now = 0.0, before = 0.0;
  for (int i = n - k + 1; i <= n; ++i) now += history_[i];
  for (int i = n - k; i <= n - 1; ++i) before += history_[i];
  now /= k;
  before /= k;
  if (now > 0.0) delta_ = std::abs(before - now) / now;
  else delta_ = before == now ? 0.0 : kInf;
  return delta_;
}

StopReason StoppingRule::check() const {
  const int n = iterations();
  if (n >= min_ && delta_ < tolerance_) return StopReason::FlatEnergy;
  if (n >= max_) return StopReason::MaxIterations;
  return StopReason::None;
}

template <int Dim>
EnclosingSphere<Dim> initial_sphere(const PointCloud<Dim>& cloud, double dx_min,
                                    double half_width) {
  if (cloud.points.empty()) throw DegenerateInput("empty cloud");
  Vec<Dim> lo = cloud.points.front(), hi = lo;
  for (const auto& q : cloud.points) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  EnclosingSphere<Dim> s;
  s.center = 0.5 * (lo + hi);
  double r = 0.0;
  for (const auto& q : cloud.points) r = std::max(r, (q - s.center).norm());
  s.radius = r + 4.0 * dx_min;
  if (s.radius + s.center.cwiseAbs().maxCoeff() > half_width)
    throw ConfigError("initial sphere leaves the domain; increase domain_halfwidth");
  return s;
}

template <int Dim>
double cloud_error(const PolynomialField<Dim>& recon, std::span<const Vec<Dim>> points) {
  const Forest<Dim>& f = recon.forest();
  std::vector<double> err(points.size());
  for (std::size_t t = 0; t < points.size(); ++t) {
    const LeafIndex j = f.locate(points[t]);
    LocalPolynomial<Dim> poly = recon.at(j);
    if (poly.degenerate) {
      // Nearest neighbour with a full-rank fit.
      double best = kInf;
      for (auto i : f.neighbors(j)) {
        const auto alt = recon.at(i);
        const double dist = (f.center(i) - points[t]).norm();
        if (!alt.degenerate && dist < best) {
          best = dist;
          poly = alt;
        }
      }
    }
    err[t] = std::abs(poly.evaluate(points[t]));
  }
  return mean_of(err);
}

template <int Dim>
double l1_error(const Forest<Dim>& forest, std::span<const double> phi,
                std::span<const LeafIndex> leaves,
                const std::function<double(const Vec<Dim>&)>& exact) {
  std::vector<double> num(leaves.size()), den(leaves.size());
  for (std::size_t t = 0; t < leaves.size(); ++t) {
    const LeafIndex j = leaves[t];
    den[t] = forest.volume(j);
    num[t] = den[t] * std::abs(phi[j] - exact(forest.center(j)));
  }
  const double v = pairwise_sum(den.begin(), den.end());
  return v > 0.0 ? pairwise_sum(num.begin(), num.end()) / v : 0.0;
}

template <int Dim>
AdaptMap refine_band(Forest<Dim>& forest, std::vector<double>& phi, double gamma,
                     Reconstruction op, const CwenoParams& cweno, int workers) {
  const Forest<Dim> original = forest;
  const std::vector<double> original_phi = phi;
  PolynomialField<Dim> recon(original, original_phi, op, cweno);
  AdaptMap total = identity_map(forest.size());
  const int max_level = forest.domain().max_level;

  auto apply = [&](const AdaptMap& step) {
    total = compose(total, step);
    std::vector<LeafIndex> sources;
    for (const auto& o : total)
      if (o.kind == LeafOrigin::Kind::Refined) sources.push_back(o.source);
    recon.precompute(sources, workers);
    phi = transfer_field<Dim>(forest, total, original_phi, [&](LeafIndex s, const Vec<Dim>& x) {
      return recon.cached(s)->evaluate(x);
    });
  };

  for (;;) {
    std::vector<LeafIndex> marks;
    for (LeafIndex j = 0; j < forest.size(); ++j)
      if (forest.level(j) < max_level && std::abs(phi[j]) < gamma) marks.push_back(j);
    if (marks.empty()) break;
    apply(forest.refine(marks));
    // Balancing can split coarse leaves that then fall inside the band.
    const AdaptMap b = balance_2to1(forest);
    if (!is_identity(b)) apply(b);
  }
  forest.mark_balanced();
  return total;
}

template <int Dim>
AdaptMap coarsen_far(Forest<Dim>& forest, std::vector<double>& phi, double gamma,
                     std::span<const char> keep) {
  constexpr int kChildren = Forest<Dim>::kChildren;
  forest.build_neighbor_table();
  const int min_level = forest.domain().min_level;
  std::vector<LeafIndex> firsts;
  for (LeafIndex i = 0; i < forest.size();) {
    if (!forest.is_family(i)) {
      ++i;
      continue;
    }
    const int l = forest.level(i);
    bool ok = l > min_level;
    for (int c = 0; ok && c < kChildren; ++c) {
      const LeafIndex m = i + c;
      if (std::abs(phi[m]) < gamma || (!keep.empty() && keep[m])) ok = false;
      for (auto k : forest.neighbors(m))
        if ((k < i || k >= i + kChildren) && forest.level(k) > l) ok = false;
    }
    if (ok) firsts.push_back(i);
    i += kChildren;
  }
  if (firsts.empty()) return identity_map(forest.size());
  const AdaptMap map = forest.coarsen(firsts);
  forest.mark_balanced();
  phi = transfer_field<Dim>(forest, map, phi, [](LeafIndex, const Vec<Dim>&) { return 0.0; });
  return map;
}

template <int Dim>
void DistanceField<Dim>::rebuild(const Forest<Dim>& forest, const PointCloud<Dim>& cloud,
                                 int workers) {
  const LeafBins bins = bin_points(cloud, forest);
  state_ = init_distance_exact(forest, bins, cloud);
  propagate(state_, forest, workers);
}

template <int Dim>
void DistanceField<Dim>::transfer(const Forest<Dim>& forest, const AdaptMap& map,
                                  const PointCloud<Dim>& cloud, int workers) {
  constexpr int kChildren = Forest<Dim>::kChildren;
  const std::size_t n = map.size();
  std::vector<double> value(n, kInf);
  std::vector<Vec<Dim>> ref(n, Vec<Dim>::Zero());
  std::vector<LeafIndex> fresh;
  for (std::size_t i = 0; i < n; ++i) {
    const LeafOrigin& o = map[i];
    const Vec<Dim> x = forest.center(static_cast<LeafIndex>(i));
    switch (o.kind) {
      case LeafOrigin::Kind::Kept:
        value[i] = state_.value[o.source];
        ref[i] = state_.reference[o.source];
        break;
      case LeafOrigin::Kind::Refined:
        if (std::isfinite(state_.value[o.source])) {
          ref[i] = state_.reference[o.source];
          value[i] = (x - ref[i]).norm();
        }
        fresh.push_back(static_cast<LeafIndex>(i));
        break;
      case LeafOrigin::Kind::Coarsened:
        for (int c = 0; c < kChildren; ++c) {
          const LeafIndex s = o.source + c;
          if (!std::isfinite(state_.value[s])) continue;
          const double dist = (x - state_.reference[s]).norm();
          if (dist < value[i]) {
            value[i] = dist;
            ref[i] = state_.reference[s];
          }
        }
        fresh.push_back(static_cast<LeafIndex>(i));
        break;
    }
  }
  const LeafBins bins = bin_points(cloud, forest);
  for (auto i : fresh) {
    const Vec<Dim> x = forest.center(i);
    for (auto p : bins.of(i)) {
      const double dist = (x - cloud.points[p]).norm();
      if (dist < value[i]) {
        value[i] = dist;
        ref[i] = cloud.points[p];
      }
    }
  }
  state_.mode = PropagationMode::Distance;
  state_.value = std::move(value);
  state_.reference = std::move(ref);
  state_.frozen.clear();
  state_.region.clear();
  state_.frontier = std::move(fresh);
  state_.sweeps = 0;
  if (!state_.frontier.empty()) propagate(state_, forest, workers);
}

nlohmann::json to_json(const RunReport& r, const RunConfig& c) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& s : r.runs) {
    nlohmann::json e = {{"run", s.run},
                        {"level", s.level},
                        {"dx_min", s.dx_min},
                        {"dt", s.dt},
                        {"p", s.p},
                        {"mu", s.mu},
                        {"operator", s.op == Reconstruction::P1 ? "P1" : "CWENO"},
                        {"iterations", s.iterations},
                        {"stop_reason", to_string(s.reason)},
                        {"err_s", s.err_s},
                        {"leaves", s.leaves},
                        {"wall_ms", s.wall_ms}};
    e["err_1"] = s.err_1 ? nlohmann::json(*s.err_1) : nlohmann::json(nullptr);
    runs.push_back(e);
  }
  nlohmann::json out = {{"config", to_json(c)},
                        {"dimension", r.dimension},
                        {"points", r.points},
                        {"h_s", r.h_s},
                        {"seed", r.seed},
                        {"runs", runs},
                        {"total_iterations", r.total_iterations}};
  if (!r.runs.empty()) {
    const auto& last = r.runs.back();
    out["final"] = {{"err_s", last.err_s},
                    {"err_1", last.err_1 ? nlohmann::json(*last.err_1) : nlohmann::json(nullptr)},
                    {"stop_reason", to_string(last.reason)}};
  }
  return out;
}

void write_run_log(const std::string& path, const RunReport& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "r,n,E2,deltaE,band_size,ErrS,Err1,wall_ms\n";
  out << std::setprecision(10);
  for (const auto& row : r.records) {
    out << row.run << ',' << row.iteration << ',' << row.e2 << ',';
    if (std::isfinite(row.delta)) out << row.delta;
    else out << "inf";
    out << ',' << row.band_size << ',' << row.err_s << ',';
    if (row.err_1) out << *row.err_1;
    out << ',' << row.wall_ms << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

template <int Dim>
Reconstructor<Dim>::Reconstructor(RunConfig config, PointCloud<Dim> cloud)
    : config_(std::move(config)), cloud_(std::move(cloud)) {
  validate(config_);
}

template <int Dim>
double Reconstructor<Dim>::energy() const {
  const auto front = detect_front<Dim>(*forest_, phi_);
  return compute_energy<Dim>(front, distance_.values(), res_.dx_min, 2);
}

template <int Dim>
void Reconstructor<Dim>::start_first_run(const Resolution& res) {
  Domain dom;
  dom.half_width = config_.half_width;
  dom.max_level = res.level;
  dom.min_level = std::min(config_.min_level, res.level);
  forest_.emplace(dom, dom.min_level);
  const auto sphere = initial_sphere(cloud_, res.dx_min, config_.half_width);
  // The initial field is exact, so refine every cell that can meet the band.
  const double reach = 0.5 * std::sqrt(static_cast<double>(Dim));
  for (;;) {
    std::vector<LeafIndex> marks;
    for (LeafIndex j = 0; j < forest_->size(); ++j)
      if (forest_->level(j) < res.level &&
          std::abs(sphere(forest_->center(j))) < band_.gamma + reach * forest_->edge(j))
        marks.push_back(j);
    if (marks.empty()) break;
    forest_->refine(marks);
  }
  balance_2to1(*forest_);
  phi_.resize(forest_->size());
  for (LeafIndex j = 0; j < forest_->size(); ++j) phi_[j] = sphere(forest_->center(j));
  cut(phi_, band_.gamma);
  distance_.rebuild(*forest_, cloud_, config_.workers);
}

template <int Dim>
void Reconstructor<Dim>::start_next_run(const Resolution& res, Reconstruction op) {
  forest_->set_max_level(res.level);
  cut(phi_, band_.gamma);
  refine_band<Dim>(*forest_, phi_, band_.gamma, op, {}, config_.workers);
  cut(phi_, band_.gamma);
  coarsen_far<Dim>(*forest_, phi_, band_.gamma);
  distance_.rebuild(*forest_, cloud_, config_.workers);
}

template <int Dim>
RunReport Reconstructor<Dim>::run() {
  using Clock = std::chrono::steady_clock;
  RunReport report;
  report.dimension = Dim;
  report.points = cloud_.size();
  report.h_s = cloud_.resolution;
  report.seed = cloud_.resolution_seed;

  for (int r = 1; r <= config_.runs; ++r) {
    const auto run_start = Clock::now();
    const Resolution res = resolution_schedule(cloud_.resolution, config_.cs, config_.half_width,
                                               r, config_.dt_factor);
    const RunSchedule sched = run_schedule(r, config_.runs, config_);
    op_ = sched.op;
    res_ = res;
    band_ = BandConstants::from(res.dt, res.dx_min);
    if (r == 1) start_first_run(res);
    else start_next_run(res, op_);

    SolverParams sp;
    sp.p = sched.p;
    sp.mu = sched.mu;
    sp.dt = res.dt;
    sp.cavity_mode = config_.cavity_mode;
    sp.op = op_;
    sp.workers = config_.workers;
    ReinitParams rp;
    rp.workers = config_.workers;

    StoppingRule rule(config_.stop_tolerance, config_.min_iterations, config_.max_iterations);
    double e2 = energy();
    rule.reset(e2);
    StopReason reason = StopReason::None;
    IterationRecord rec;
    while (reason == StopReason::None) {
      const auto t0 = Clock::now();
      const int n = rule.iterations() + 1;
      const auto band = select_band<Dim>(*forest_, phi_, band_);
      if (band.active.empty()) throw NumericalFailure("empty band: the zero level set was lost");
      const auto grad_d = p1_gradients<Dim>(*forest_, distance_.values(), band.active, config_.workers);

      StepStats st;
      std::vector<double> next;
      {
        PolynomialField<Dim> recon(*forest_, phi_, op_);
        recon.precompute(band.reinit, config_.workers);
        next = sl_step<Dim>(recon, distance_.values(), grad_d, band, e2, sp, &st);
      }
      ReinitStats rs;
      if (n % config_.reinit_every == 0) {
        const auto band2 = select_band<Dim>(*forest_, next, band_);
        next = reinitialize<Dim>(*forest_, next, band2.reinit, band_.gamma, op_, {}, rp, &rs);
      } else {
        cut(next, band_.gamma);
      }
      phi_ = std::move(next);

      const AdaptMap grown = refine_band<Dim>(*forest_, phi_, band_.gamma, op_, {}, config_.workers);
      cut(phi_, band_.gamma);
      std::vector<char> keep(forest_->size(), 0);
      for (std::size_t i = 0; i < grown.size(); ++i)
        keep[i] = grown[i].kind != LeafOrigin::Kind::Kept;
      const AdaptMap shrunk = coarsen_far<Dim>(*forest_, phi_, band_.gamma, keep);
      const AdaptMap total = compose(grown, shrunk);
      if (!is_identity(total)) distance_.transfer(*forest_, total, cloud_, config_.workers);

      e2 = energy();
      rec = {};
      rec.run = r;
      rec.iteration = n;
      rec.e2 = e2;
      rec.delta = rule.push(e2);
      const auto final_band = select_band<Dim>(*forest_, phi_, band_);
      rec.band_size = final_band.active.size();
      {
        PolynomialField<Dim> recon(*forest_, phi_, op_);
        rec.err_s = cloud_error<Dim>(recon, cloud_.points);
      }
      if (exact_) rec.err_1 = l1_error<Dim>(*forest_, phi_, final_band.active, exact_);
      rec.leaves = forest_->size();
      rec.fallback = st.fallback;
      rec.cavity_switch = st.cavity_switch;
      rec.clamped_feet = st.clamped_feet;
      rec.newton_fallback = rs.newton_fallback;
      rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      report.records.push_back(rec);
      if (observer_) observer_(rec);
      reason = rule.check();
    }

    RunSummary s;
    s.run = r;
    s.level = res.level;
    s.dx_min = res.dx_min;
    s.dt = res.dt;
    s.p = sched.p;
    s.mu = sched.mu;
    s.op = op_;
    s.iterations = rule.iterations();
    s.reason = reason;
    s.err_s = rec.err_s;
    s.err_1 = rec.err_1;
    s.leaves = forest_->size();
    s.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - run_start).count();
    report.runs.push_back(s);
    report.total_iterations += s.iterations;
    if (run_hook_) run_hook_(s);
  }
  return report;
}

#define LSRECON_INSTANTIATE_PIPELINE(D)                                                         \
  template EnclosingSphere<D> initial_sphere<D>(const PointCloud<D>&, double, double);         \
  template double cloud_error<D>(const PolynomialField<D>&, std::span<const Vec<D>>);          \
  template double l1_error<D>(const Forest<D>&, std::span<const double>,                       \
                              std::span<const LeafIndex>,                                      \
                              const std::function<double(const Vec<D>&)>&);                    \
  template AdaptMap refine_band<D>(Forest<D>&, std::vector<double>&, double, Reconstruction,   \
                                   const CwenoParams&, int);                                   \
  template AdaptMap coarsen_far<D>(Forest<D>&, std::vector<double>&, double,                   \
                                   std::span<const char>);                                     \
  template class DistanceField<D>;                                                             \
  template class Reconstructor<D>;

LSRECON_INSTANTIATE_PIPELINE(2)
LSRECON_INSTANTIATE_PIPELINE(3)

}  // namespace lsrecon
