#pragma once

// Multi-run reconstruction driver: schedules, stopping rule, metrics, adaptivity
// and the iteration loop tying the modules together.

#include "lsrecon/common.hpp"
#include "lsrecon/forest.hpp"
#include "lsrecon/point_cloud.hpp"
#include "lsrecon/propagation.hpp"
#include "lsrecon/recon.hpp"
#include "lsrecon/reinit.hpp"
#include "lsrecon/sl_solver.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lsrecon {

struct ExportOptions {
  bool vtk = true;
  bool csv = true;
  bool obj = true;
};

struct RunConfig {
  std::string input;
  std::string format;  // "xyz" | "ply" | "" (from the extension)
  std::string outdir = "out";
  int runs = 3;
  double cs = 1.0;
  double half_width = 1.2;
  int min_level = 2;
  double dt_factor = 1.5;
  double stop_tolerance = 1e-4;
  int min_iterations = 10;
  int max_iterations = 100;
  bool cavity_mode = false;
  std::uint64_t seed = 0;
  int workers = 1;
  double sample_fraction = 0.1;
  int reinit_every = 1;
  double mu_coarse = 0.05;
  double mu_final = 1.0;
  ExportOptions exports;
  std::string exact;  // "" or a shape id understood by the caller
};

// Flat JSON object; unknown keys raise ConfigError.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::json to_json(const RunConfig& c);
void validate(const RunConfig& c);

struct Resolution {
  int level = 0;
  double dx_min = 0.0;
  double dt = 0.0;
};

// L^1 is the smallest level with 2M/2^L <= C_S h_S; each later run adds one level.
Resolution resolution_schedule(double h_s, double cs, double half_width, int run,
                               double dt_factor = 1.5);

struct RunSchedule {
  int p = 1;
  double mu = 0.05;
  Reconstruction op = Reconstruction::P1;
};

RunSchedule run_schedule(int run, int runs, const RunConfig& c = {});

enum class StopReason { None, FlatEnergy, MaxIterations };
const char* to_string(StopReason r);

// Delta_E over running means of the last k = min(n, 10) energies.  The history
// starts with the energy of the run's initial field (index 0).
class StoppingRule {
 public:
  StoppingRule(double tolerance = 1e-4, int min_iterations = 10, int max_iterations = 100,
               int window = 10)
      : tolerance_(tolerance), min_(min_iterations), max_(max_iterations), window_(window) {}

  void reset(double initial_energy);
  // Record E_2(phi^n) for the next n and return Delta_E^n.
  double push(double energy);
  StopReason check() const;
  int iterations() const { return static_cast<int>(history_.size()) - 1; }
  double last_delta() const { return delta_; }
  const std::vector<double>& history() const { return history_; }

 private:
  double tolerance_;
  int min_;
  int max_;
  int window_;
  std::vector<double> history_;
  double delta_ = kInf;
};

// Sphere enclosing the cloud: bbox centre, radius max|q - c| + 4 dx_min.
template <int Dim>
struct EnclosingSphere {
  Vec<Dim> center = Vec<Dim>::Zero();
  double radius = 0.0;
  double operator()(const Vec<Dim>& x) const { return (x - center).norm() - radius; }
};

template <int Dim>
EnclosingSphere<Dim> initial_sphere(const PointCloud<Dim>& cloud, double dx_min,
                                    double half_width);

// Mean of |R[phi](q)| over the cloud with the leaf polynomial containing q.
template <int Dim>
double cloud_error(const PolynomialField<Dim>& recon, std::span<const Vec<Dim>> points);

// Volume-weighted mean of |phi_j - exact(x_j)| over the listed leaves.
template <int Dim>
double l1_error(const Forest<Dim>& forest, std::span<const double> phi,
                std::span<const LeafIndex> leaves,
                const std::function<double(const Vec<Dim>&)>& exact);

// Refine every leaf with |phi| < gamma up to the forest's max level, recursively
// (descendants take the original ancestor's reconstruction), then 2:1 balance.
// `phi` is replaced by the transferred field; the map takes old ids to new ones.
template <int Dim>
AdaptMap refine_band(Forest<Dim>& forest, std::vector<double>& phi, double gamma,
                     Reconstruction op, const CwenoParams& cweno = {}, int workers = 1);

// Coarsen every family whose members all have |phi| >= gamma, above the minimum
// level, when the parent would not break the grading.  `keep` lists leaves that
// must not be merged (may be empty).
template <int Dim>
AdaptMap coarsen_far(Forest<Dim>& forest, std::vector<double>& phi, double gamma,
                     std::span<const char> keep = {});

// Unsigned cloud distance with reference points, carried across adapt steps.
template <int Dim>
class DistanceField {
 public:
  void rebuild(const Forest<Dim>& forest, const PointCloud<Dim>& cloud, int workers = 1);
  // New leaves start from their source's reference point (or their own points)
  // and the propagation restarts from them.
  void transfer(const Forest<Dim>& forest, const AdaptMap& map, const PointCloud<Dim>& cloud,
                int workers = 1);
  std::span<const double> values() const { return state_.value; }
  std::span<const Vec<Dim>> references() const { return state_.reference; }

 private:
  PropagationState<Dim> state_;
};

struct IterationRecord {
  int run = 0;
  int iteration = 0;
  double e2 = 0.0;
  double delta = 0.0;
  std::size_t band_size = 0;
  double err_s = 0.0;
  std::optional<double> err_1;
  double wall_ms = 0.0;
  std::size_t leaves = 0;
  std::size_t fallback = 0;
  std::size_t cavity_switch = 0;
  std::size_t clamped_feet = 0;
  std::size_t newton_fallback = 0;
};

struct RunSummary {
  int run = 0;
  int level = 0;
  double dx_min = 0.0;
  double dt = 0.0;
  int p = 1;
  double mu = 0.0;
  Reconstruction op = Reconstruction::P1;
  int iterations = 0;
  StopReason reason = StopReason::None;
  double err_s = 0.0;
  std::optional<double> err_1;
  std::size_t leaves = 0;
  double wall_ms = 0.0;
};

struct RunReport {
  int dimension = 2;
  std::size_t points = 0;
  double h_s = 0.0;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> records;
  std::vector<RunSummary> runs;
  int total_iterations = 0;
};

nlohmann::json to_json(const RunReport& r, const RunConfig& c);
void write_run_log(const std::string& path, const RunReport& r);

template <int Dim>
class Reconstructor {
 public:
  using Exact = std::function<double(const Vec<Dim>&)>;  // in scaled coordinates
  using Observer = std::function<void(const IterationRecord&)>;

  Reconstructor(RunConfig config, PointCloud<Dim> cloud);

  void set_exact(Exact exact) { exact_ = std::move(exact); }
  void set_observer(Observer obs) { observer_ = std::move(obs); }
  // Called after each run with the run's summary; forest and fields are final for that run.
  void set_run_hook(std::function<void(const RunSummary&)> hook) { run_hook_ = std::move(hook); }

  RunReport run();

  const RunConfig& config() const { return config_; }
  const PointCloud<Dim>& cloud() const { return cloud_; }
  const Forest<Dim>& forest() const { return *forest_; }
  std::span<const double> phi() const { return phi_; }
  std::span<const double> distance() const { return distance_.values(); }
  Reconstruction op() const { return op_; }
  const Resolution& resolution() const { return res_; }
  double gamma() const { return band_.gamma; }

 private:
  void start_first_run(const Resolution& res);
  void start_next_run(const Resolution& res, Reconstruction op);
  double energy() const;

  RunConfig config_;
  PointCloud<Dim> cloud_;
  Exact exact_;
  Observer observer_;
  std::function<void(const RunSummary&)> run_hook_;
  std::optional<Forest<Dim>> forest_;
  std::vector<double> phi_;
  DistanceField<Dim> distance_;
  Resolution res_;
  BandConstants band_;
  Reconstruction op_ = Reconstruction::P1;
};

}  // namespace lsrecon
