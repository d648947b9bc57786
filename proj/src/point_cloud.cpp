#include "lsrecon/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace lsrecon {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool parse_double(const std::string& token, double& out) {
  char* end = nullptr;
  out = std::strtod(token.c_str(), &end);
  return end != token.c_str() && *end == '\0' && std::isfinite(out);
}

}  // namespace

CloudFormat format_from_path(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : lower(path.substr(dot + 1));
  if (ext == "ply") return CloudFormat::Ply;
  return CloudFormat::Xyz;
}

RawCloud parse_xyz(std::istream& in) {
  RawCloud raw;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::vector<double> values;
    std::string token;
    while (fields >> token) {
      double v = 0.0;
      if (!parse_double(token, v)) throw ParseError("bad number '" + token + "'", number);
      values.push_back(v);
    }
    if (values.size() != 2 && values.size() != 3)
      throw ParseError("expected 2 or 3 coordinates", number);
    const int dim = static_cast<int>(values.size());
    if (raw.dimension == 0) raw.dimension = dim;
    if (dim != raw.dimension) throw ParseError("inconsistent column count", number);
    raw.points.push_back({values[0], values[1], dim == 3 ? values[2] : 0.0});
  }
  return raw;
}

RawCloud parse_ply(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || line != "ply") throw ParseError("missing 'ply' magic", number);

  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> properties;
    bool has_list = false;
  };
  std::vector<Element> elements;
  bool ascii = false;
  while (true) {
    if (!next()) throw ParseError("unterminated header", number);
    std::istringstream words(line);
    std::string head;
    words >> head;
    if (head == "end_header") break;
    if (head == "format") {
      std::string kind;
      words >> kind;
      if (kind != "ascii") throw ParseError("only ascii ply is supported", number);
      ascii = true;
    } else if (head == "element") {
      Element e;
      if (!(words >> e.name >> e.count)) throw ParseError("bad element line", number);
      elements.push_back(e);
    } else if (head == "property") {
      if (elements.empty()) throw ParseError("property before element", number);
      std::string type, name;
      words >> type;
      if (type == "list") {
        elements.back().has_list = true;
        std::string count_type, item_type;
        words >> count_type >> item_type;
      }
      words >> name;
      elements.back().properties.push_back(name);
    } else if (head != "comment" && head != "obj_info" && !head.empty()) {
      throw ParseError("unknown header keyword '" + head + "'", number);
    }
  }
  if (!ascii) throw ParseError("missing format line", number);

  RawCloud raw;
  for (const auto& e : elements) {
    if (e.name != "vertex") {
      for (std::size_t k = 0; k < e.count; ++k)
        if (!next()) throw ParseError("truncated element '" + e.name + "'", number);
      continue;
    }
    const auto find = [&](const char* p) {
      const auto it = std::find(e.properties.begin(), e.properties.end(), p);
      return it == e.properties.end() ? -1 : static_cast<int>(it - e.properties.begin());
    };
    const int ix = find("x"), iy = find("y"), iz = find("z");
    if (ix < 0 || iy < 0) throw ParseError("vertex element lacks x/y properties", number);
    if (e.has_list) throw ParseError("list properties on vertices are not supported", number);
    raw.dimension = iz < 0 ? 2 : 3;
    for (std::size_t k = 0; k < e.count; ++k) {
      if (!next()) throw ParseError("truncated vertex list", number);
      std::istringstream fields(line);
      std::vector<double> values;
      std::string token;
      while (fields >> token) {
        double v = 0.0;
        if (!parse_double(token, v)) throw ParseError("bad number '" + token + "'", number);
        values.push_back(v);
      }
      if (values.size() != e.properties.size()) throw ParseError("wrong vertex arity", number);
      raw.points.push_back({values[ix], values[iy], iz < 0 ? 0.0 : values[iz]});
    }
  }
  if (raw.dimension == 0) throw ParseError("no vertex element", number);
  return raw;
}

RawCloud read_cloud(const std::string& path, CloudFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return format == CloudFormat::Ply ? parse_ply(in) : parse_xyz(in);
}

template <int Dim>
PointCloud<Dim> make_cloud(std::span<const Vec<Dim>> original) {
  if (original.size() < 2) throw DegenerateInput("a cloud needs at least 2 distinct points");
  Vec<Dim> lo = original[0], hi = original[0];
  for (const auto& p : original) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double longest = (hi - lo).maxCoeff();
  if (!(longest > 0.0)) throw DegenerateInput("bounding box has zero extent");
  PointCloud<Dim> cloud;
  cloud.transform.center = 0.5 * (lo + hi);
  cloud.transform.scale = 2.0 / longest;
  cloud.points.reserve(original.size());
  for (const auto& p : original) cloud.points.push_back(cloud.transform.to_scaled(p));
  return cloud;
}

template <int Dim>
PointCloud<Dim> make_cloud(const RawCloud& raw) {
  if (raw.dimension != Dim)
    throw DegenerateInput("cloud has dimension " + std::to_string(raw.dimension));
  std::vector<Vec<Dim>> pts;
  pts.reserve(raw.points.size());
  for (const auto& p : raw.points) {
    Vec<Dim> v;
    for (int d = 0; d < Dim; ++d) v[d] = p[d];
    pts.push_back(v);
  }
  return make_cloud<Dim>(std::span<const Vec<Dim>>(pts));
}

template <int Dim>
PointCloud<Dim> load_cloud(const std::string& path, CloudFormat format) {
  return make_cloud<Dim>(read_cloud(path, format));
}

template <int Dim>
PointGrid<Dim>::PointGrid(std::span<const Vec<Dim>> points, double cell)
    : points_(points), cell_(cell) {
  if (!(cell > 0.0)) throw ContractViolation("point grid cell size must be positive");
  if (points.empty()) return;
  Vec<Dim> lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  origin_ = lo;
  for (int d = 0; d < Dim; ++d) {
    dims_[d] = static_cast<std::int64_t>(std::floor((hi[d] - lo[d]) / cell_)) + 1;
    if (dims_[d] > (std::int64_t{1} << 20))
      throw ContractViolation("point grid too fine for its extent");
  }
  std::vector<std::pair<std::uint64_t, std::uint32_t>> tagged(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    tagged[i] = {pack(cell_of(points[i])), static_cast<std::uint32_t>(i)};
  std::sort(tagged.begin(), tagged.end());
  members_.resize(points.size());
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    if (i == 0 || tagged[i].first != tagged[i - 1].first) {
      keys_.push_back(tagged[i].first);
      offsets_.push_back(static_cast<std::uint32_t>(i));
    }
    members_[i] = tagged[i].second;
  }
  offsets_.push_back(static_cast<std::uint32_t>(tagged.size()));
}

template <int Dim>
std::array<std::int64_t, Dim> PointGrid<Dim>::cell_of(const Vec<Dim>& x) const {
  std::array<std::int64_t, Dim> c{};
  for (int d = 0; d < Dim; ++d)
    c[d] = static_cast<std::int64_t>(std::floor((x[d] - origin_[d]) / cell_));
  return c;
}

template <int Dim>
std::uint64_t PointGrid<Dim>::pack(const std::array<std::int64_t, Dim>& c) const {
  std::uint64_t key = 0;
  for (int d = 0; d < Dim; ++d) key = (key << 21) | static_cast<std::uint64_t>(c[d]);
  return key;
}

template <int Dim>
bool PointGrid<Dim>::valid(const std::array<std::int64_t, Dim>& c) const {
  for (int d = 0; d < Dim; ++d)
    if (c[d] < 0 || c[d] >= dims_[d]) return false;
  return true;
}

template <int Dim>
void PointGrid<Dim>::scan_cell(const std::array<std::int64_t, Dim>& c, const Vec<Dim>& x,
                               std::size_t exclude, Hit& best) const {
  if (!valid(c)) return;
  const auto key = pack(c);
  const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return;
  const auto slot = static_cast<std::size_t>(it - keys_.begin());
  for (std::uint32_t m = offsets_[slot]; m < offsets_[slot + 1]; ++m) {
    const std::size_t id = members_[m];
    if (id == exclude) continue;
    const double dist = (points_[id] - x).norm();
    if (dist < best.distance || (dist == best.distance && id < best.index)) best = {id, dist};
  }
}

template <int Dim>
typename PointGrid<Dim>::Hit PointGrid<Dim>::nearest(const Vec<Dim>& x,
                                                     std::size_t exclude) const {
  Hit best;
  if (points_.empty()) return best;
  // Clamp the query into the grid; rings still cover every cell.
  std::array<std::int64_t, Dim> home = cell_of(x);
  for (int d = 0; d < Dim; ++d) home[d] = std::clamp<std::int64_t>(home[d], 0, dims_[d] - 1);
  // Lower bound on the distance from x to any cell outside ring r.
  auto ring_clearance = [&](std::int64_t r) {
    double clear = kInf;
    for (int d = 0; d < Dim; ++d) {
      const double lo = origin_[d] + static_cast<double>(home[d] - r) * cell_;
      const double hi = origin_[d] + static_cast<double>(home[d] + r + 1) * cell_;
      clear = std::min({clear, x[d] - lo, hi - x[d]});
    }
    return clear;
  };
  std::int64_t max_ring = 0;
  for (int d = 0; d < Dim; ++d) max_ring = std::max(max_ring, dims_[d]);
  for (std::int64_t r = 0; r <= max_ring; ++r) {
    // Visit the cells with Chebyshev distance exactly r from home.
    std::array<std::int64_t, Dim> off{};
    for (int d = 0; d < Dim; ++d) off[d] = -r;
    while (true) {
      std::int64_t cheb = 0;
      for (int d = 0; d < Dim; ++d) cheb = std::max(cheb, std::abs(off[d]));
      if (cheb == r) {
        std::array<std::int64_t, Dim> c{};
        for (int d = 0; d < Dim; ++d) c[d] = home[d] + off[d];
        scan_cell(c, x, exclude, best);
      }
      int d = 0;
      for (; d < Dim; ++d) {
        if (off[d] < r) {
          ++off[d];
          break;
        }
        off[d] = -r;
      }
      if (d == Dim) break;
    }
    if (best.distance <= ring_clearance(r)) break;
  }
  return best;
}

template <int Dim>
double estimate_resolution(const PointCloud<Dim>& cloud, double sample_fraction,
                           std::uint64_t seed) {
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
    throw ContractViolation("sample fraction must lie in (0, 1]");
  // Exact duplicates would give zero nearest distances.
  std::vector<Vec<Dim>> distinct(cloud.points.begin(), cloud.points.end());
  std::sort(distinct.begin(), distinct.end(), [](const Vec<Dim>& a, const Vec<Dim>& b) {
    return std::lexicographical_compare(a.data(), a.data() + Dim, b.data(), b.data() + Dim);
  });
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const std::size_t m = distinct.size();
  if (m < 2) throw DegenerateInput("a cloud needs at least 2 distinct points");

  Vec<Dim> lo = distinct[0], hi = distinct[0];
  for (const auto& p : distinct) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double cell = (hi - lo).norm() / std::pow(static_cast<double>(m), 1.0 / Dim);
  const PointGrid<Dim> grid(std::span<const Vec<Dim>>(distinct), cell);

  const auto count = std::min<std::size_t>(
      m, static_cast<std::size_t>(std::ceil(sample_fraction * static_cast<double>(m) - 1e-9)));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates; explicit modulo keeps the draw library-independent.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (m - i));
    std::swap(order[i], order[j]);
  }
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::vector<double> dists(count);
  for (std::size_t i = 0; i < count; ++i)
    dists[i] = grid.nearest(distinct[order[i]], order[i]).distance;
  return std::accumulate(dists.begin(), dists.end(), 0.0) / static_cast<double>(count);
}

template <int Dim>
LeafBins bin_points(const PointCloud<Dim>& cloud, const Forest<Dim>& forest) {
  LeafBins bins;
  const std::size_t n = forest.size();
  bins.leaf_of_point.resize(cloud.size());
  std::vector<std::uint32_t> counts(n, 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    bins.leaf_of_point[i] = forest.locate(cloud.points[i]);
    ++counts[bins.leaf_of_point[i]];
  }
  bins.offsets.assign(n + 1, 0);
  for (std::size_t j = 0; j < n; ++j) bins.offsets[j + 1] = bins.offsets[j] + counts[j];
  bins.points.resize(cloud.size());
  std::vector<std::uint32_t> cursor(bins.offsets.begin(), bins.offsets.end() - 1);
  for (std::size_t i = 0; i < cloud.size(); ++i)
    bins.points[cursor[bins.leaf_of_point[i]]++] = static_cast<std::uint32_t>(i);
  return bins;
}

#define LSRECON_INSTANTIATE_CLOUD(D)                                                      \
  template PointCloud<D> make_cloud<D>(std::span<const Vec<D>>);                          \
  template PointCloud<D> make_cloud<D>(const RawCloud&);                                  \
  template PointCloud<D> load_cloud<D>(const std::string&, CloudFormat);                  \
  template double estimate_resolution<D>(const PointCloud<D>&, double, std::uint64_t);     \
  template class PointGrid<D>;                                                            \
  template LeafBins bin_points<D>(const PointCloud<D>&, const Forest<D>&);

LSRECON_INSTANTIATE_CLOUD(2)
LSRECON_INSTANTIATE_CLOUD(3)

}  // namespace lsrecon
