#include "aniso/operators.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "aniso/resolvents.hpp"
#include "aniso/spec_string.hpp"

namespace aniso {

struct OperatorSpec::Node {
  OperatorKind kind = OperatorKind::Affine;
  long dim = 0;
  std::string name;
  std::optional<Vec> known_zero;

  Mat m;
  Vec b;

  SmoothOracle f;
  SmoothOracle g_star;
  Mat a;
  Constraint constraint = Unconstrained{};

  std::vector<ScalarMap> maps;

  std::optional<OperatorSpec> inner;
  double rho = 0.0;
  std::optional<ProxKernel> kernel;
};

namespace {

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

std::string fmt_number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

bool strictly_inside(const Constraint& c, const Vec& x) {
  if (std::holds_alternative<Unconstrained>(c)) return true;
  if (const auto* box = std::get_if<BoxConstraint>(&c)) {
    return ((x - box->lo).array() > 0.0).all() && ((box->hi - x).array() > 0.0).all();
  }
  return false;  // the simplex has empty interior
}

}  // namespace

OperatorSpec OperatorSpec::affine(Mat m, Vec b) {
  if (m.rows() != m.cols()) throw InvalidArgument("affine operator needs a square matrix");
  require_dim(b, m.rows());
  if (!m.allFinite() || !b.allFinite()) throw NonFiniteInput("affine operator");
  const Mat sym = 0.5 * (m + m.transpose());
  const double min_eig = Eigen::SelfAdjointEigenSolver<Mat>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (min_eig < -1e-12) {
    throw InvalidArgument("affine operator is not monotone: min eigenvalue of symmetric part " +
                          fmt_number(min_eig));
  }
  auto node = std::make_shared<Node>();
  node->kind = OperatorKind::Affine;
  node->dim = m.rows();
  node->name = "affine";
  node->m = std::move(m);
  node->b = std::move(b);
  return OperatorSpec(std::move(node));
}

OperatorSpec OperatorSpec::zero(long n) {
  if (n <= 0) throw InvalidArgument("dimension must be positive");
  return affine(Mat::Zero(n, n), Vec::Zero(n)).with_name("zero").with_known_zero(Vec::Zero(n));
}

OperatorSpec OperatorSpec::identity(long n) {
  if (n <= 0) throw InvalidArgument("dimension must be positive");
  return affine(Mat::Identity(n, n), Vec::Zero(n)).with_name("identity").with_known_zero(Vec::Zero(n));
}

OperatorSpec OperatorSpec::skew2() {
  Mat m(2, 2);
  m << 0.0, 1.0, -1.0, 0.0;
  return affine(m, Vec::Zero(2)).with_name("skew2").with_known_zero(Vec::Zero(2));
}

OperatorSpec OperatorSpec::subdifferential(SmoothOracle f, long n, Constraint constraint) {
  if (n <= 0) throw InvalidArgument("dimension must be positive");
  if (!f.value || !f.gradient) throw InvalidArgument("subdifferential operator needs value and gradient");
  auto node = std::make_shared<Node>();
  node->kind = OperatorKind::Subdifferential;
  node->dim = n;
  node->name = "subdifferential";
  node->f = std::move(f);
  node->constraint = std::move(constraint);
  return OperatorSpec(std::move(node));
}

OperatorSpec OperatorSpec::saddle(SmoothOracle f, SmoothOracle g_star, Mat a) {
  if (!f.gradient || !g_star.gradient) throw InvalidArgument("saddle operator needs gradients");
  auto node = std::make_shared<Node>();
  node->kind = OperatorKind::Saddle;
  node->dim = a.rows() + a.cols();
  node->name = "saddle";
  node->f = std::move(f);
  node->g_star = std::move(g_star);
  node->a = std::move(a);
  return OperatorSpec(std::move(node));
}

OperatorSpec OperatorSpec::diagonal(std::vector<ScalarMap> maps) {
  if (maps.empty()) throw InvalidArgument("diagonal operator needs at least one map");
  for (const auto& m : maps) {
    if (!m.value) throw InvalidArgument("diagonal operator map without value");
  }
  auto node = std::make_shared<Node>();
  node->kind = OperatorKind::Diagonal;
  node->dim = static_cast<long>(maps.size());
  node->name = "diagonal";
  node->maps = std::move(maps);
  return OperatorSpec(std::move(node));
}

OperatorSpec OperatorSpec::inverse(OperatorSpec inner) {
  auto node = std::make_shared<Node>();
  node->kind = OperatorKind::Inverse;
  node->dim = inner.dimension();
  node->name = "inverse(" + inner.name() + ")";
  node->inner = std::move(inner);
  return OperatorSpec(std::move(node));
}

OperatorSpec OperatorSpec::yosida(OperatorSpec inner, double rho, ProxKernel kernel) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidArgument("Yosida parameter must be nonnegative");
  if (kernel.dimension() != inner.dimension()) throw DimensionMismatch(inner.dimension(), kernel.dimension());
  auto node = std::make_shared<Node>();
  node->kind = OperatorKind::Yosida;
  node->dim = inner.dimension();
  node->name = "yosida(" + inner.name() + ";rho=" + fmt_number(rho) + ";kernel=" + kernel.describe() + ")";
  // Zeros are preserved by the regularization.
  node->known_zero = inner.known_zero();
  node->inner = std::move(inner);
  node->rho = rho;
  node->kernel = std::move(kernel);
  return OperatorSpec(std::move(node));
}

OperatorKind OperatorSpec::kind() const { return node_->kind; }
long OperatorSpec::dimension() const { return node_->dim; }
const std::string& OperatorSpec::name() const { return node_->name; }

OperatorSpec OperatorSpec::with_name(std::string name) const {
  auto node = std::make_shared<Node>(*node_);
  node->name = std::move(name);
  return OperatorSpec(std::move(node));
}

const std::optional<Vec>& OperatorSpec::known_zero() const { return node_->known_zero; }

OperatorSpec OperatorSpec::with_known_zero(Vec x_star) const {
  require_dim(x_star, dimension());
  auto node = std::make_shared<Node>(*node_);
  node->known_zero = std::move(x_star);
  return OperatorSpec(std::move(node));
}

const Mat& OperatorSpec::matrix() const {
  if (!is_affine()) throw NotAffine();
  return node_->m;
}

const Vec& OperatorSpec::offset() const {
  if (!is_affine()) throw NotAffine();
  return node_->b;
}

const OperatorSpec& OperatorSpec::inner() const {
  if (!node_->inner) throw InvalidArgument("operator has no inner operator");
  return *node_->inner;
}

double OperatorSpec::yosida_rho() const {
  if (kind() != OperatorKind::Yosida) throw InvalidArgument("not a Yosida operator");
  return node_->rho;
}

const ProxKernel& OperatorSpec::yosida_kernel() const {
  if (kind() != OperatorKind::Yosida) throw InvalidArgument("not a Yosida operator");
  return *node_->kernel;
}

const std::vector<ScalarMap>& OperatorSpec::scalar_maps() const {
  if (kind() != OperatorKind::Diagonal) throw InvalidArgument("not a diagonal operator");
  return node_->maps;
}

const SmoothOracle& OperatorSpec::smooth_function() const {
  if (kind() != OperatorKind::Subdifferential && kind() != OperatorKind::Saddle) {
    throw InvalidArgument("operator carries no smooth function");
  }
  return node_->f;
}

const Constraint& OperatorSpec::constraint() const { return node_->constraint; }

namespace {

Vec eval_inverse(const OperatorSpec& inner, const Vec& x) {
  switch (inner.kind()) {
    case OperatorKind::Affine: {
      Eigen::FullPivLU<Mat> lu(inner.matrix());
      if (!lu.isInvertible()) throw SetValuedAt("inverse of a singular affine operator");
      return lu.solve(x + inner.offset());
    }
    case OperatorKind::Diagonal: {
      const auto& maps = inner.scalar_maps();
      Vec a(x.size());
      for (long i = 0; i < x.size(); ++i) {
        a[i] = solve_increasing(maps[i].value, maps[i].derivative, x[i], 0.0).t;
      }
      return a;
    }
    case OperatorKind::Inverse:
      return inner.inner().eval(x);
    case OperatorKind::Yosida: {
      // (rho grad phi^* + T^{-1})
      Vec out = inner.yosida_rho() * inner.yosida_kernel().grad_phi_star(x);
      return out + eval_inverse(inner.inner(), x);
    }
    default:
      throw SetValuedAt("inverse of " + inner.name() + " is not available pointwise");
  }
}

std::optional<Mat> jacobian_inverse(const OperatorSpec& inner, const Vec& x) {
  switch (inner.kind()) {
    case OperatorKind::Affine: {
      Eigen::FullPivLU<Mat> lu(inner.matrix());
      if (!lu.isInvertible()) return std::nullopt;
      return lu.inverse();
    }
    case OperatorKind::Diagonal: {
      const auto& maps = inner.scalar_maps();
      const Vec a = eval_inverse(inner, x);
      Mat j = Mat::Zero(x.size(), x.size());
      for (long i = 0; i < x.size(); ++i) {
        if (!maps[i].derivative) return std::nullopt;
        const double d = maps[i].derivative(a[i]);
        if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
        j(i, i) = 1.0 / d;
      }
      return j;
    }
    case OperatorKind::Inverse:
      return inner.inner().jacobian(x);
    case OperatorKind::Yosida: {
      const auto h = inner.yosida_kernel().hess_phi_star(x);
      const auto j = jacobian_inverse(inner.inner(), x);
      if (!h || !j) return std::nullopt;
      return Mat(inner.yosida_rho() * *h + *j);
    }
    default:
      return std::nullopt;
  }
}

}  // namespace

Vec OperatorSpec::eval(const Vec& x) const {
  require_dim(x, dimension());
  require_finite(x, "operator eval");
  const Node& n = *node_;
  switch (n.kind) {
    case OperatorKind::Affine:
      return n.m * x - n.b;
    case OperatorKind::Subdifferential:
      if (!strictly_inside(n.constraint, x)) {
        throw SetValuedAt("subdifferential evaluated on the boundary of its constraint");
      }
      return n.f.gradient(x);
    case OperatorKind::Saddle: {
      const long nx = n.a.cols();
      const long ny = n.a.rows();
      const Vec xs = x.head(nx);
      const Vec ys = x.tail(ny);
      Vec out(n.dim);
      out.head(nx) = n.f.gradient(xs) + n.a.transpose() * ys;
      out.tail(ny) = n.g_star.gradient(ys) - n.a * xs;
      return out;
    }
    case OperatorKind::Diagonal: {
      Vec out(n.dim);
      for (long i = 0; i < n.dim; ++i) out[i] = n.maps[i].value(x[i]);
      return out;
    }
    case OperatorKind::Inverse:
      return eval_inverse(*n.inner, x);
    case OperatorKind::Yosida: {
      if (n.rho == 0.0) return n.inner->eval(x);
      return anisotropic_resolvent(*n.inner, n.kernel->epi_scaled(n.rho), x).v;
    }
  }
  throw InvalidArgument("unknown operator kind");
}

std::optional<Mat> OperatorSpec::jacobian(const Vec& x) const {
  require_dim(x, dimension());
  const Node& n = *node_;
  switch (n.kind) {
    case OperatorKind::Affine:
      return n.m;
    case OperatorKind::Subdifferential:
      if (!n.f.hessian || !strictly_inside(n.constraint, x)) return std::nullopt;
      return n.f.hessian(x);
    case OperatorKind::Saddle: {
      if (!n.f.hessian || !n.g_star.hessian) return std::nullopt;
      const long nx = n.a.cols();
      const long ny = n.a.rows();
      Mat j(n.dim, n.dim);
      j.topLeftCorner(nx, nx) = n.f.hessian(x.head(nx));
      j.topRightCorner(nx, ny) = n.a.transpose();
      j.bottomLeftCorner(ny, nx) = -n.a;
      j.bottomRightCorner(ny, ny) = n.g_star.hessian(x.tail(ny));
      return j;
    }
    case OperatorKind::Diagonal: {
      Mat j = Mat::Zero(n.dim, n.dim);
      for (long i = 0; i < n.dim; ++i) {
        if (!n.maps[i].derivative) return std::nullopt;
        j(i, i) = n.maps[i].derivative(x[i]);
        if (!std::isfinite(j(i, i))) return std::nullopt;
      }
      return j;
    }
    case OperatorKind::Inverse:
      return jacobian_inverse(*n.inner, x);
    case OperatorKind::Yosida: {
      if (n.rho == 0.0) return n.inner->jacobian(x);
      const ProxKernel k = n.kernel->epi_scaled(n.rho);
      const ResolventResult r = anisotropic_resolvent(*n.inner, k, x);
      const auto jt = n.inner->jacobian(r.z);
      if (!jt) return std::nullopt;
      const Mat id = Mat::Identity(n.dim, n.dim);
      if (k.prefers_primal_hessian()) {
        const auto h = k.hess_phi(x - r.z);
        if (!h) return std::nullopt;
        const Mat lhs = *h + *jt;
        Eigen::FullPivLU<Mat> lu(lhs);
        if (!lu.isInvertible()) return std::nullopt;
        return Mat(*h * lu.solve(*jt));
      }
      const auto hs = k.hess_phi_star(r.v);
      if (!hs) return std::nullopt;
      return Mat((id + *jt * *hs).fullPivLu().solve(*jt));
    }
  }
  return std::nullopt;
}

OperatorSpec growth_instance_linear() {
  Mat m(2, 2);
  m << 0.0, -0.5, 0.5, 0.0;
  Vec b(2);
  b << 1.0, 1.0;
  Vec x_star(2);
  x_star << 2.0, -2.0;
  return OperatorSpec::affine(m, b).with_name("growth_linear").with_known_zero(x_star);
}

namespace {

std::vector<std::vector<double>> read_csv_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(t);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(trim(cell), path));
    if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data in " + path);
  return rows;
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
  std::filesystem::path p(path);
  if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
  return p.string();
}

// Splits on `sep` outside parentheses.
std::vector<std::string> split_top_level(const std::string& text, char sep) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

OperatorSpec parse_affine_files(const std::string& rest, const std::string& base_dir) {
  std::string files = trim(rest);
  if (files.rfind("file=", 0) != 0) throw ParseError("affine operator expects file=M.csv,b.csv");
  files = files.substr(5);
  const auto comma = files.find(',');
  if (comma == std::string::npos) throw ParseError("affine operator expects two files");
  const auto m_rows = read_csv_numbers(resolve_path(trim(files.substr(0, comma)), base_dir));
  const auto b_rows = read_csv_numbers(resolve_path(trim(files.substr(comma + 1)), base_dir));
  const long n = static_cast<long>(m_rows.size());
  if (static_cast<long>(m_rows.front().size()) != n) throw ParseError("matrix file is not square");
  Mat m(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) m(i, j) = m_rows[i][j];
  std::vector<double> bv;
  for (const auto& row : b_rows) bv.insert(bv.end(), row.begin(), row.end());
  if (static_cast<long>(bv.size()) != n) throw ParseError("offset file length does not match matrix");
  return OperatorSpec::affine(m, Eigen::Map<Vec>(bv.data(), n));
}

}  // namespace

OperatorSpec parse_operator(const std::string& spec, const std::string& base_dir) {
  const std::string text = trim(spec);
  if (text.rfind("yosida(", 0) == 0) {
    if (text.back() != ')') throw ParseError("unbalanced yosida(...) in '" + text + "'");
    const auto parts = split_top_level(text.substr(7, text.size() - 8), ';');
    const OperatorSpec inner = parse_operator(parts.front(), base_dir);
    double rho = -1.0;
    std::optional<ProxKernel> kernel;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const auto eq = parts[i].find('=');
      if (eq == std::string::npos) throw ParseError("expected key=value in '" + parts[i] + "'");
      const std::string key = trim(parts[i].substr(0, eq));
      const std::string value = trim(parts[i].substr(eq + 1));
      if (key == "rho") {
        rho = parse_double(value, "rho");
      } else if (key == "kernel") {
        kernel = parse_kernel(value, inner.dimension());
      } else {
        throw ParseError("unknown yosida parameter '" + key + "'");
      }
    }
    if (rho < 0.0) throw ParseError("yosida(...) needs rho >= 0");
    if (!kernel) throw ParseError("yosida(...) needs a kernel");
    return OperatorSpec::yosida(inner, rho, *kernel);
  }
  if (text.rfind("affine:", 0) == 0) return parse_affine_files(text.substr(7), base_dir);

  const SpecString s = parse_spec_string(text);
  if (s.name == "skew2") {
    s.only("");
    return OperatorSpec::skew2();
  }
  if (s.name == "growth_linear") {
    s.only("");
    return growth_instance_linear();
  }
  if (s.name == "zero" || s.name == "identity") {
    s.only("n");
    const long n = s.integer_or("n", 2);
    return s.name == "zero" ? OperatorSpec::zero(n) : OperatorSpec::identity(n);
  }
  throw ParseError("unknown operator '" + s.name + "'");
}

EnlargementResult check_enlargement_member(const OperatorSpec& op, const EnlargementQuery& query) {
  if (!op.is_affine()) throw NotAffine();
  if (!(query.epsilon >= 0.0)) throw InvalidArgument("enlargement epsilon must be nonnegative");
  require_dim(query.x, op.dimension());
  require_dim(query.u, op.dimension());
  const Mat& m = op.matrix();
  // <y - x, M y - b - u> = d^T S d + r^T d with d = y - x, r = T(x) - u.
  const Vec r = m * query.x - op.offset() - query.u;
  const Mat s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(s);
  const Vec& lam = eig.eigenvalues();
  const Vec c = eig.eigenvectors().transpose() * r;
  const double lam_floor = 1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  const double scale = 1.0 + inf_norm(m * query.x) + inf_norm(op.offset()) + inf_norm(query.u);
  EnlargementResult out;
  double gamma = 0.0;
  for (long i = 0; i < lam.size(); ++i) {
    if (lam[i] <= lam_floor) {
      if (std::abs(c[i]) > 1e-12 * scale) {
        out.member = false;
        out.certificate = -std::numeric_limits<double>::infinity();
        return out;
      }
      continue;
    }
    gamma -= 0.25 * c[i] * c[i] / lam[i];
  }
  out.certificate = gamma;
  out.member = gamma >= -query.epsilon;
  return out;
}

double probe_nonmonotonicity(const OperatorSpec& op, const ProxKernel& kernel,
                             const std::vector<std::pair<Vec, Vec>>& pairs) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : pairs) {
    const Vec gx = kernel.grad_phi_star(op.eval(x));
    const Vec gy = kernel.grad_phi_star(op.eval(y));
    worst = std::min(worst, (gx - gy).dot(x - y));
  }
  return worst;
}

double probe_monotonicity(const OperatorSpec& op, const std::vector<std::pair<Vec, Vec>>& pairs) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : pairs) worst = std::min(worst, (op.eval(x) - op.eval(y)).dot(x - y));
  return worst;
}

std::vector<double> coercivity_profile(const OperatorSpec& op, const std::vector<double>& radii,
                                       const std::vector<Vec>& directions) {
  if (directions.empty()) throw InvalidArgument("coercivity profile needs directions");
  std::vector<double> out;
  out.reserve(radii.size());
  for (double r : radii) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& d : directions) {
      require_dim(d, op.dimension());
      const double norm = d.norm();
      if (norm == 0.0) throw InvalidArgument("zero direction in coercivity profile");
      best = std::min(best, op.eval((r / norm) * d).norm());
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace aniso
