#pragma once

#include "lsrecon/common.hpp"
#include "lsrecon/forest.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lsrecon {

enum class CloudFormat { Xyz, Ply };

CloudFormat format_from_path(const std::string& path);

// Points as read from disk, before the dimension is fixed.
struct RawCloud {
  int dimension = 0;
  std::vector<std::array<double, 3>> points;
};

RawCloud read_cloud(const std::string& path, CloudFormat format);
RawCloud parse_xyz(std::istream& in);
RawCloud parse_ply(std::istream& in);

// scaled = (original - center) * scale
template <int Dim>
struct CloudTransform {
  double scale = 1.0;
  Vec<Dim> center = Vec<Dim>::Zero();

  Vec<Dim> to_scaled(const Vec<Dim>& x) const { return (x - center) * scale; }
  Vec<Dim> to_original(const Vec<Dim>& y) const { return y / scale + center; }
};

template <int Dim>
struct PointCloud {
  std::vector<Vec<Dim>> points;  // rescaled into [-1, 1]^Dim
  CloudTransform<Dim> transform;
  double resolution = 0.0;       // h_S, zero until estimated
  std::uint64_t resolution_seed = 0;

  std::size_t size() const { return points.size(); }
};

// Map the bounding box onto [-1, 1]^Dim: longest side to [-1, 1], aspect
// ratio kept, box centre to the origin.
template <int Dim>
PointCloud<Dim> make_cloud(std::span<const Vec<Dim>> original);

template <int Dim>
PointCloud<Dim> make_cloud(const RawCloud& raw);

template <int Dim>
PointCloud<Dim> load_cloud(const std::string& path, CloudFormat format);

// Mean distance to the nearest other point over a random sample of
// ceil(fraction * #distinct points) distinct points, drawn without replacement.
template <int Dim>
double estimate_resolution(const PointCloud<Dim>& cloud, double sample_fraction,
                           std::uint64_t seed);

// Bucket grid over a point set for exact nearest-neighbour queries.
template <int Dim>
class PointGrid {
 public:
  PointGrid(std::span<const Vec<Dim>> points, double cell);

  struct Hit {
    std::size_t index = static_cast<std::size_t>(-1);
    double distance = kInf;
  };

  // Nearest point other than `exclude` (pass size_t(-1) to consider all).
  Hit nearest(const Vec<Dim>& x, std::size_t exclude = static_cast<std::size_t>(-1)) const;

  bool empty() const { return points_.empty(); }

 private:
  std::array<std::int64_t, Dim> cell_of(const Vec<Dim>& x) const;
  std::uint64_t pack(const std::array<std::int64_t, Dim>& c) const;
  bool valid(const std::array<std::int64_t, Dim>& c) const;
  void scan_cell(const std::array<std::int64_t, Dim>& c, const Vec<Dim>& x, std::size_t exclude,
                 Hit& best) const;

  std::span<const Vec<Dim>> points_;
  double cell_;
  Vec<Dim> origin_;
  std::array<std::int64_t, Dim> dims_{};
  std::vector<std::uint64_t> keys_;      // sorted distinct cell keys
  std::vector<std::uint32_t> offsets_;   // keys_.size() + 1
  std::vector<std::uint32_t> members_;   // point ids grouped by cell
};

// Partition of point ids by containing leaf (CSR over leaf ids).
struct LeafBins {
  std::vector<std::uint32_t> offsets;    // forest.size() + 1
  std::vector<std::uint32_t> points;
  std::vector<LeafIndex> leaf_of_point;

  std::span<const std::uint32_t> of(LeafIndex leaf) const {
    return {points.data() + offsets[leaf], offsets[leaf + 1] - offsets[leaf]};
  }
};

template <int Dim>
LeafBins bin_points(const PointCloud<Dim>& cloud, const Forest<Dim>& forest);

}  // namespace lsrecon
