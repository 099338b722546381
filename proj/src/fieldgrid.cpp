#include "scpinn/fieldgrid.hpp"

#include <bit>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "scpinn/errors.hpp"

namespace scpinn {

static_assert(std::endian::native == std::endian::little,
              "grid files are little-endian; byte swapping is not implemented");

long long FieldGrid::n_points() const {
  long long n = 1;
  for (const GridAxis& a : axes) {
    if (a.n <= 0) return 0;
    if (n > std::numeric_limits<long long>::max() / a.n) return 0;
    n *= a.n;
  }
  return axes.empty() ? 0 : n;
}

Eigen::VectorXd FieldGrid::axis_coords(int axis) const {
  const GridAxis& a = axes.at(static_cast<std::size_t>(axis));
  if (a.n == 1) return Eigen::VectorXd::Constant(1, a.lo);
  return Eigen::VectorXd::LinSpaced(a.n, a.lo, a.hi);
}

Eigen::MatrixXd grid_points(const FieldGrid& g) {
  const long long n = g.n_points();
  const int d = static_cast<int>(g.axes.size());
  Eigen::MatrixXd pts(n, d);
  // Last axis fastest: stride of axis a is the product of the sizes after it.
  long long stride = 1;
  std::vector<long long> strides(static_cast<std::size_t>(d));
  for (int a = d - 1; a >= 0; --a) {
    strides[static_cast<std::size_t>(a)] = stride;
    stride *= g.axes[static_cast<std::size_t>(a)].n;
  }
  for (int a = 0; a < d; ++a) {
    const Eigen::VectorXd c = g.axis_coords(a);
    const long long na = g.axes[static_cast<std::size_t>(a)].n;
    const long long st = strides[static_cast<std::size_t>(a)];
    for (long long i = 0; i < n; ++i) pts(i, a) = c[(i / st) % na];
  }
  return pts;
}

Eigen::MatrixXd grid_values(const FieldGrid& g) {
  const long long n = g.n_points();
  Eigen::MatrixXd vals(n, static_cast<Eigen::Index>(g.fields.size()));
  for (std::size_t f = 0; f < g.fields.size(); ++f) {
    if (g.fields[f].size() != n)
      throw IntegrityError("grid field " + std::to_string(f) + " has " +
                           std::to_string(g.fields[f].size()) + " values, expected " +
                           std::to_string(n));
    vals.col(static_cast<Eigen::Index>(f)) = g.fields[f];
  }
  return vals;
}

namespace {

constexpr const char* kMagic = "#SCALEGRID v1";

bool plain_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

std::string fmt_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void save_field(const std::string& path, const FieldGrid& g) {
  if (g.axes.empty()) throw ConfigError("grid has no axes");
  if (g.fields.empty()) throw ConfigError("grid has no fields");
  if (!plain_token(g.problem)) throw ConfigError("grid problem tag must be a single token");
  const long long n = g.n_points();
  if (n <= 0) throw ConfigError("grid axis sizes must be positive");
  for (const GridAxis& a : g.axes) {
    if (!plain_token(a.name)) throw ConfigError("grid axis name must be a single token");
    if (a.n >= 2 && !(a.hi > a.lo))
      throw ConfigError("grid axis " + a.name + " needs hi > lo");
  }
  for (std::size_t f = 0; f < g.fields.size(); ++f)
    if (g.fields[f].size() != n)
      throw ConfigError("grid field " + std::to_string(f) + " length mismatch");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("cannot open grid file for writing: " + path);
  out << kMagic << ' ' << g.problem << ' ' << g.fields.size() << ' ' << g.axes.size() << '\n';
  for (const GridAxis& a : g.axes)
    out << a.name << ' ' << a.n << ' ' << fmt_g17(a.lo) << ' ' << fmt_g17(a.hi) << '\n';
  for (const Eigen::VectorXd& f : g.fields)
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(sizeof(double)) * f.size());
  if (!out) throw IntegrityError("failed while writing grid file: " + path);
}

FieldGrid load_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open grid file: " + path);

  std::string header;
  if (!std::getline(in, header))
    throw IntegrityError(path + ": missing header line");
  std::istringstream hs(header);
  std::string m1, m2, problem;
  long long nvars = 0, ndims = 0;
  hs >> m1 >> m2 >> problem >> nvars >> ndims;
  if (m1 + " " + m2 != kMagic)
    throw IntegrityError(path + ": not a grid file (bad magic '" + m1 + " " + m2 + "')");
  if (!hs || nvars <= 0 || ndims <= 0)
    throw IntegrityError(path + ": malformed header line '" + header + "'");

  FieldGrid g;
  g.problem = problem;
  for (long long a = 0; a < ndims; ++a) {
    std::string line;
    if (!std::getline(in, line))
      throw IntegrityError(path + ": missing axis line " + std::to_string(a + 1));
    std::istringstream as(line);
    GridAxis ax;
    as >> ax.name >> ax.n >> ax.lo >> ax.hi;
    if (!as || ax.n <= 0)
      throw IntegrityError(path + ": malformed axis line '" + line + "'");
    if (ax.n >= 2 && !(ax.hi > ax.lo))
      throw IntegrityError(path + ": axis " + ax.name + " has hi <= lo");
    g.axes.push_back(std::move(ax));
  }

  const long long n = g.n_points();
  if (n <= 0) throw IntegrityError(path + ": axis sizes overflow");
  const std::streamoff data_start = in.tellg();
  for (long long f = 0; f < nvars; ++f) {
    Eigen::VectorXd block(n);
    in.read(reinterpret_cast<char*>(block.data()),
            static_cast<std::streamsize>(sizeof(double)) * n);
    if (in.gcount() != static_cast<std::streamsize>(sizeof(double)) * n)
      throw IntegrityError(path + ": field block " + std::to_string(f) + " truncated at byte " +
                           std::to_string(data_start + f * n * 8 + in.gcount()) + ", expected " +
                           std::to_string(n * 8) + " bytes");
    g.fields.push_back(std::move(block));
  }
  char extra;
  if (in.read(&extra, 1); in.gcount() != 0)
    throw IntegrityError(path + ": trailing bytes after " + std::to_string(nvars) +
                         " field blocks");
  return g;
}

}  // namespace scpinn
