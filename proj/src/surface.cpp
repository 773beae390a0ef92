#include "contsurv/surface.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "contsurv/csv.hpp"
#include "contsurv/error.hpp"

namespace contsurv {

std::size_t Surface::time_index(double t) const {
  auto it = std::upper_bound(t_grid.begin(), t_grid.end(), t);
  if (it == t_grid.begin()) throw Error(ErrorKind::InvalidArgument, "time precedes the surface grid");
  return static_cast<std::size_t>(it - t_grid.begin()) - 1;
}

double Surface::value_at(std::size_t zi, double t) const {
  return values(static_cast<Eigen::Index>(zi), static_cast<Eigen::Index>(time_index(t)));
}

bool Surface::defined_at(std::size_t zi, double t) const {
  return defined(static_cast<Eigen::Index>(zi), static_cast<Eigen::Index>(time_index(t)));
}

void Surface::check() const {
  if (z_grid.empty() || t_grid.empty()) throw Error(ErrorKind::InconsistentGrid, "empty grid");
  if (values.rows() != static_cast<Eigen::Index>(nz()) || values.cols() != static_cast<Eigen::Index>(nt())) {
    throw Error(ErrorKind::InconsistentGrid, "value matrix does not match the grids");
  }
  if (defined.rows() != values.rows() || defined.cols() != values.cols()) {
    throw Error(ErrorKind::InconsistentGrid, "definedness mask does not match the grids");
  }
  if (extrapolated.size() != nz()) throw Error(ErrorKind::InconsistentGrid, "extrapolation flags do not match z grid");
  for (std::size_t i = 1; i < nz(); ++i) {
    if (!(z_grid[i] > z_grid[i - 1])) throw Error(ErrorKind::InconsistentGrid, "z grid not strictly ascending");
  }
  for (std::size_t j = 1; j < nt(); ++j) {
    if (!(t_grid[j] > t_grid[j - 1])) throw Error(ErrorKind::InconsistentGrid, "t grid not strictly ascending");
  }
}

void write_surface_csv(const Surface& s, std::ostream& out) {
  s.check();
  const bool survival = s.is_survival();
  out << (survival ? "z,t,survival,extrapolated\n" : "z,t,value,extrapolated,estimand\n");
  for (std::size_t i = 0; i < s.nz(); ++i) {
    const auto zs = csv::format_double(s.z_grid[i]);
    const char* flag = s.extrapolated[i] ? "1" : "0";
    for (std::size_t j = 0; j < s.nt(); ++j) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(j);
      const std::string v = s.defined(r, c) ? csv::format_double(s.values(r, c)) : "NA";
      out << zs << ',' << csv::format_double(s.t_grid[j]) << ',' << v << ',' << flag;
      if (!survival) out << ',' << s.estimand;
      out << '\n';
    }
  }
}

void save_surface_csv(const Surface& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  write_surface_csv(s, out);
}

Surface read_surface_csv(std::istream& in) {
  const auto table = csv::read(in);
  const auto zc = table.require_column("z");
  const auto tc = table.require_column("t");
  auto vc = table.column("survival");
  const bool survival = vc.has_value();
  if (!vc) vc = table.require_column("value");
  const auto ec = table.column("extrapolated");
  const auto kc = table.column("estimand");

  std::map<double, std::size_t> z_index, t_index;
  struct Cell {
    double z, t, v;
    bool defined, extrapolated;
  };
  std::vector<Cell> cells;
  std::string estimand = "survival";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto num = [&](std::size_t c, const char* name) {
      if (c >= row.size()) throw Error(ErrorKind::ParseError, fmt::format("row {} column {}: missing", r, name));
      auto v = csv::parse_double(row[c]);
      if (!v) throw Error(ErrorKind::ParseError, fmt::format("row {} column {}: cannot parse '{}'", r, name, row[c]));
      return *v;
    };
    Cell cell{num(zc, "z"), num(tc, "t"), 0.0, true, false};
    if (*vc < row.size() && row[*vc] == "NA") {
      cell.defined = false;
      cell.v = std::nan("");
    } else {
      cell.v = num(*vc, "value");
    }
    if (ec && *ec < row.size()) cell.extrapolated = row[*ec] == "1";
    if (kc && *kc < row.size() && !survival) estimand = row[*kc];
    z_index[cell.z] = 0;
    t_index[cell.t] = 0;
    cells.push_back(cell);
  }
  if (cells.empty()) throw Error(ErrorKind::GridEmpty, "surface file has no rows");

  Surface s;
  s.estimand = survival ? "survival" : estimand;
  for (auto& [z, idx] : z_index) {
    idx = s.z_grid.size();
    s.z_grid.push_back(z);
  }
  for (auto& [t, idx] : t_index) {
    idx = s.t_grid.size();
    s.t_grid.push_back(t);
  }
  if (cells.size() != s.nz() * s.nt()) {
    throw Error(ErrorKind::InconsistentGrid, "surface file is not a complete z x t lattice");
  }
  s.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(s.nz()), static_cast<Eigen::Index>(s.nt()), std::nan(""));
  s.defined.setConstant(s.values.rows(), s.values.cols(), false);
  s.extrapolated.assign(s.nz(), false);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> seen;
  seen.setConstant(s.values.rows(), s.values.cols(), false);
  for (const auto& cell : cells) {
    const auto i = static_cast<Eigen::Index>(z_index[cell.z]);
    const auto j = static_cast<Eigen::Index>(t_index[cell.t]);
    if (seen(i, j)) throw Error(ErrorKind::InconsistentGrid, "duplicate (z,t) cell in surface file");
    seen(i, j) = true;
    s.values(i, j) = cell.v;
    s.defined(i, j) = cell.defined;
    if (cell.extrapolated) s.extrapolated[static_cast<std::size_t>(i)] = true;
  }
  return s;
}

Surface load_surface_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  return read_surface_csv(in);
}

}  // namespace contsurv
