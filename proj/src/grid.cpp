#include "kolmo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "kolmo/parallel.hpp"

namespace kolmo {

Box Box::unit_cylinder(int n_space) {
  Box b;
  b.lo.assign(n_space + 1, -1.0);
  b.hi.assign(n_space + 1, 1.0);
  return b;
}

GridFunction::GridFunction(Box box, std::vector<int> resolution)
    : box_(std::move(box)), res_(std::move(resolution)) {
  const int n = box_.n_axes();
  if (n < 2) throw std::invalid_argument("GridFunction: need at least one spatial axis plus time");
  if (static_cast<int>(res_.size()) != n)
    throw std::invalid_argument("GridFunction: resolution must name every axis");
  for (int i = 0; i < n; ++i) {
    if (!(box_.hi[i] > box_.lo[i])) throw std::invalid_argument("GridFunction: degenerate box");
    const int min_res = (i == n - 1) ? 1 : 8;
    if (res_[i] < min_res)
      throw std::invalid_argument("GridFunction: resolution below minimum on axis " + std::to_string(i));
  }
  h_.resize(n);
  cell_volume_ = 1.0;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    h_[i] = box_.length(i) / res_[i];
    cell_volume_ *= h_[i];
    total *= static_cast<std::size_t>(res_[i]);
  }
  strides_.assign(n, 1);
  for (int i = n - 2; i >= 0; --i)
    strides_[i] = strides_[i + 1] * static_cast<std::size_t>(res_[i + 1]);
  values_.assign(total, 0.0);
}

GridFunction GridFunction::sample(Box box, std::vector<int> resolution,
                                  const std::function<double(const Vector&, double)>& f) {
  GridFunction g(std::move(box), std::move(resolution));
  parallel_map(g.size(), [&](std::size_t i) {
    Vector x;
    double t;
    g.node_coords(i, x, t);
    g[i] = f(x, t);
  });
  return g;
}

std::size_t GridFunction::flat_index(const std::vector<int>& idx) const {
  std::size_t flat = 0;
  for (int i = 0; i < n_axes(); ++i) flat += static_cast<std::size_t>(idx[i]) * strides_[i];
  return flat;
}

void GridFunction::unflatten(std::size_t flat, std::vector<int>& idx) const {
  idx.resize(n_axes());
  for (int i = 0; i < n_axes(); ++i) {
    idx[i] = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
}

GroupPoint GridFunction::point(std::size_t flat) const {
  Vector x;
  double t;
  node_coords(flat, x, t);
  return GroupPoint(std::move(x), t);
}

void GridFunction::node_coords(std::size_t flat, Vector& x, double& t) const {
  const int n = n_axes();
  x.resize(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    const int idx = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
    x(i) = coord(i, idx);
  }
  t = coord(n - 1, static_cast<int>(flat));
}

double GridFunction::min_value() const {
  return *std::min_element(values_.begin(), values_.end());
}

double GridFunction::max_value() const {
  return *std::max_element(values_.begin(), values_.end());
}

bool GridFunction::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool GridFunction::all_positive() const {
  for (double v : values_)
    if (!(v > 0.0)) return false;
  return true;
}

namespace {

void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void GridFunction::write_csv(std::ostream& os) const {
  std::string line = "# box=";
  for (int i = 0; i < n_axes(); ++i) {
    if (i) line += ",";
    append_g17(line, box_.lo[i]);
    line += ":";
    append_g17(line, box_.hi[i]);
  }
  line += " resolution=";
  for (int i = 0; i < n_axes(); ++i) {
    if (i) line += ",";
    line += std::to_string(res_[i]);
  }
  line += "\n";
  os << line;

  std::vector<int> idx;
  std::string row;
  for (std::size_t flat = 0; flat < size(); ++flat) {
    unflatten(flat, idx);
    row.clear();
    for (int i = 0; i < n_axes(); ++i) {
      append_g17(row, coord(i, idx[i]));
      row += ",";
    }
    append_g17(row, values_[flat]);
    row += "\n";
    os << row;
  }
}

GridFunction GridFunction::read_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("# box=", 0) != 0)
    throw std::runtime_error("GridFunction csv: missing '# box=' header");
  const std::size_t res_pos = header.find(" resolution=");
  if (res_pos == std::string::npos)
    throw std::runtime_error("GridFunction csv: missing resolution in header");

  Box box;
  {
    std::stringstream ss(header.substr(6, res_pos - 6));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::size_t colon = item.find(':');
      if (colon == std::string::npos) throw std::runtime_error("GridFunction csv: bad box entry");
      box.lo.push_back(std::strtod(item.c_str(), nullptr));
      box.hi.push_back(std::strtod(item.c_str() + colon + 1, nullptr));
    }
  }
  std::vector<int> res;
  {
    std::stringstream ss(header.substr(res_pos + 12));
    std::string item;
    while (std::getline(ss, item, ',')) res.push_back(std::atoi(item.c_str()));
  }

  GridFunction g(std::move(box), std::move(res));
  std::string line;
  std::size_t flat = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (flat >= g.size()) throw std::runtime_error("GridFunction csv: more rows than nodes");
    const std::size_t last = line.rfind(',');
    if (last == std::string::npos) throw std::runtime_error("GridFunction csv: bad row");
    g[flat++] = std::strtod(line.c_str() + last + 1, nullptr);
  }
  if (flat != g.size()) throw std::runtime_error("GridFunction csv: row count does not match grid");
  return g;
}

void GridFunction::save_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(os);
}

GridFunction GridFunction::load_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_csv(is);
}

}  // namespace kolmo
