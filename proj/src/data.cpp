#include "ddlpv/data.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

namespace ddlpv {

void DataDictionary::validate() const {
  if (x.cols() < 2) throw DimMismatch("dictionary needs at least two samples");
  if (u.cols() != x.cols() || p.cols() != x.cols()) {
    throw DimMismatch("u, p and x sequences differ in length");
  }
}

void NoisyDictionary::validate() const {
  if (z.cols() < 2) throw DimMismatch("dictionary needs at least two samples");
  if (u.cols() != z.cols() || p.cols() != z.cols()) {
    throw DimMismatch("u, p and z sequences differ in length");
  }
  if (eps && (eps->rows() != z.rows() || eps->cols() != z.cols())) {
    throw DimMismatch("noise samples have the wrong shape");
  }
  if (true_x && (true_x->rows() != z.rows() || true_x->cols() != z.cols())) {
    throw DimMismatch("clean states have the wrong shape");
  }
}

namespace {

DataMatrices assemble(const Mat& u, const Mat& p, const Mat& x) {
  const Eigen::Index n = x.cols() - 1;
  const Eigen::Index nx = x.rows(), nu = u.rows(), np = p.rows();
  DataMatrices dm;
  dm.x_mat = x.leftCols(n);
  dm.u_mat = u.leftCols(n);
  dm.xplus = x.rightCols(n);
  dm.xp_mat.resize(np * nx, n);
  dm.up_mat.resize(np * nu, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    dm.xp_mat.col(k) = kron(p.col(k), x.col(k));
    dm.up_mat.col(k) = kron(p.col(k), u.col(k));
  }
  dm.dp.resize((1 + np) * (nx + nu), n);
  dm.dp << dm.x_mat, dm.xp_mat, dm.u_mat, dm.up_mat;
  return dm;
}

}  // namespace

DataMatrices build_matrices(const DataDictionary& d) {
  d.validate();
  return assemble(d.u, d.p, d.x);
}

PeReport check_pe(const DataMatrices& dm, double tol) {
  PeReport r;
  r.required = static_cast<int>(dm.dp.rows());
  r.rank = numerical_rank(dm.dp, tol);
  r.is_pe = r.rank == r.required;
  return r;
}

DataDictionary excite(const LpvSs& sys, int n_cols, unsigned long long seed,
                      Interval u_range, Interval p_range,
                      const std::optional<Vec>& x0) {
  sys.validate();
  if (n_cols < 1) throw DimMismatch("excite needs at least one column");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> du(u_range.lo, u_range.hi);
  std::uniform_real_distribution<double> dp(p_range.lo, p_range.hi);
  std::uniform_real_distribution<double> dx(-1.0, 1.0);
  const int N = n_cols + 1;
  DataDictionary d;
  d.seed = seed;
  d.u.resize(sys.nu(), N);
  d.p.resize(sys.np(), N);
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < sys.nu(); ++i) d.u(i, k) = du(rng);
    for (int i = 0; i < sys.np(); ++i) d.p(i, k) = dp(rng);
  }
  Vec x_init(sys.nx());
  if (x0) {
    x_init = *x0;
  } else {
    for (int i = 0; i < sys.nx(); ++i) x_init(i) = dx(rng);
  }
  d.x = simulate(sys, x_init, d.u.leftCols(N - 1), d.p.leftCols(N - 1));
  return d;
}

NoisyDictionary add_noise(const DataDictionary& d, double stddev,
                          unsigned long long seed) {
  d.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dn(0.0, stddev);
  NoisyDictionary nd;
  nd.u = d.u;
  nd.p = d.p;
  nd.true_x = d.x;
  Mat e(d.x.rows(), d.x.cols());
  for (Eigen::Index k = 0; k < e.cols(); ++k) {
    for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, k) = dn(rng);
  }
  nd.eps = e;
  nd.z = d.x + e;
  nd.seed = seed;
  return nd;
}

NoisyMatrices build_noisy_matrices(const NoisyDictionary& nd) {
  nd.validate();
  NoisyMatrices out;
  out.data = assemble(nd.u, nd.p, nd.z);
  if (nd.eps) {
    const Eigen::Index n = nd.z.cols() - 1;
    NoiseMatrices nm;
    nm.e = nd.eps->leftCols(n);
    nm.eplus = nd.eps->rightCols(n);
    nm.ep.resize(nd.p.rows() * nd.z.rows(), n);
    for (Eigen::Index k = 0; k < n; ++k) {
      nm.ep.col(k) = kron(nd.p.col(k), nd.eps->col(k));
    }
    out.noise = nm;
  }
  return out;
}

double epsilon_bound(const LpvSs& sys, const NoisyDictionary& nd) {
  if (!nd.eps) throw Error("epsilon_bound needs the true noise samples");
  NoisyMatrices nm = build_noisy_matrices(nd);
  const int nx = sys.nx(), np = sys.np();
  Mat acal(nx, nx * (1 + np));
  for (int i = 0; i <= np; ++i) acal.block(0, i * nx, nx, nx) = sys.a[i];
  Mat stack(nm.noise->e.rows() + nm.noise->ep.rows(), nm.noise->e.cols());
  stack << nm.noise->e, nm.noise->ep;
  Mat r = acal * stack - nm.noise->eplus;
  if (r.isZero(0.0)) return 0.0;
  Mat gram = nm.data.xplus * nm.data.xplus.transpose();
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() != Eigen::Success || numerical_rank(nm.data.xplus) < nx) {
    throw SingularGram("Z+ Z+^T is rank deficient");
  }
  Mat li_r = llt.matrixL().solve(r);
  Eigen::SelfAdjointEigenSolver<Mat> es(li_r * li_r.transpose(),
                                        Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

namespace {

std::string header_for(int nu, int np, int nx, const char* state) {
  std::ostringstream h;
  h << "k";
  for (int i = 1; i <= nu; ++i) h << ",u_" << i;
  for (int i = 1; i <= np; ++i) h << ",p_" << i;
  for (int i = 1; i <= nx; ++i) h << "," << state << "_" << i;
  return h.str();
}

std::string write_rows(const Mat& u, const Mat& p, const Mat& x,
                       const char* state) {
  std::ostringstream out;
  out << header_for(static_cast<int>(u.rows()), static_cast<int>(p.rows()),
                    static_cast<int>(x.rows()), state)
      << "\n";
  out.precision(17);
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < u.rows(); ++i) out << "," << u(i, k);
    for (Eigen::Index i = 0; i < p.rows(); ++i) out << "," << p(i, k);
    for (Eigen::Index i = 0; i < x.rows(); ++i) out << "," << x(i, k);
    out << "\n";
  }
  return out.str();
}

struct ParsedCsv {
  Mat u, p, x;
  bool noisy = false;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

ParsedCsv parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("empty dictionary file", line_no, 1);
  for (auto& h : header) h = trim(h);
  if (header[0] != "k") throw ParseError("first header column must be k", line_no, 1);
  int nu = 0, np = 0, nx = 0;
  bool noisy = false, clean = false;
  int stage = 0;
  for (size_t c = 1; c < header.size(); ++c) {
    const std::string& h = header[c];
    int col = static_cast<int>(c) + 1;
    auto expect = [&](const std::string& prefix, int idx) {
      if (h != prefix + std::to_string(idx)) {
        throw ParseError("unexpected header column '" + h + "'", line_no, col);
      }
    };
    if (h.rfind("u_", 0) == 0 && stage == 0) {
      expect("u_", ++nu);
    } else if (h.rfind("p_", 0) == 0 && stage <= 1) {
      stage = 1;
      expect("p_", ++np);
    } else if ((h.rfind("x_", 0) == 0 || h.rfind("z_", 0) == 0) && stage <= 2) {
      stage = 2;
      if (h[0] == 'z') noisy = true; else clean = true;
      expect(std::string(1, h[0]) + "_", ++nx);
    } else {
      throw ParseError("unexpected header column '" + h + "'", line_no, col);
    }
  }
  if (noisy && clean) throw ParseError("header mixes x_ and z_ columns", line_no, 1);
  if (nx == 0 || nu == 0) throw ParseError("header needs u_ and state columns", line_no, 1);
  const size_t width = header.size();
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (cells.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(cells.size()),
                       line_no, static_cast<int>(std::min(cells.size(), width)) + 1);
    }
    std::vector<double> vals(width);
    for (size_t c = 0; c < width; ++c) {
      std::string cell = trim(cells[c]);
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() ||
          res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError("malformed number '" + cell + "'", line_no,
                         static_cast<int>(c) + 1);
      }
      vals[c] = v;
    }
    rows.push_back(std::move(vals));
  }
  ParsedCsv out;
  out.noisy = noisy;
  const Eigen::Index N = static_cast<Eigen::Index>(rows.size());
  out.u.resize(nu, N);
  out.p.resize(np, N);
  out.x.resize(nx, N);
  for (Eigen::Index k = 0; k < N; ++k) {
    const auto& r = rows[k];
    for (int i = 0; i < nu; ++i) out.u(i, k) = r[1 + i];
    for (int i = 0; i < np; ++i) out.p(i, k) = r[1 + nu + i];
    for (int i = 0; i < nx; ++i) out.x(i, k) = r[1 + nu + np + i];
  }
  return out;
}

Mat samples_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error("sample sequence must be an array");
  if (j.empty()) return Mat(0, 0);
  Mat m = mat_from_json(j);
  return m.transpose();
}

nlohmann::json samples_to_json(const Mat& m) { return mat_to_json(m.transpose()); }

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool is_json_path(const std::string& path) {
  return path.size() >= 5 && path.substr(path.size() - 5) == ".json";
}

}  // namespace

std::string to_csv(const DataDictionary& d) { return write_rows(d.u, d.p, d.x, "x"); }

std::string to_csv(const NoisyDictionary& d) { return write_rows(d.u, d.p, d.z, "z"); }

DataDictionary dictionary_from_csv(const std::string& text) {
  ParsedCsv p = parse_csv(text);
  DataDictionary d;
  d.u = p.u;
  d.p = p.p;
  d.x = p.x;
  d.validate();
  return d;
}

NoisyDictionary noisy_dictionary_from_csv(const std::string& text) {
  ParsedCsv p = parse_csv(text);
  NoisyDictionary d;
  d.u = p.u;
  d.p = p.p;
  d.z = p.x;
  d.validate();
  return d;
}

nlohmann::json to_json(const DataDictionary& d) {
  nlohmann::json j;
  j["u"] = samples_to_json(d.u);
  j["p"] = samples_to_json(d.p);
  j["x"] = samples_to_json(d.x);
  if (d.seed) j["seed"] = *d.seed;
  return j;
}

DataDictionary dictionary_from_json(const nlohmann::json& j) {
  DataDictionary d;
  d.u = samples_from_json(j.at("u"));
  d.p = samples_from_json(j.at("p"));
  d.x = samples_from_json(j.at("x"));
  if (d.p.size() == 0) d.p.resize(0, d.x.cols());
  if (j.contains("seed")) d.seed = j["seed"].get<unsigned long long>();
  d.validate();
  return d;
}

DataDictionary load_dictionary(const std::string& path) {
  std::string text = read_file(path);
  if (is_json_path(path)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), 1, static_cast<int>(e.byte));
    }
    return dictionary_from_json(j);
  }
  return dictionary_from_csv(text);
}

NoisyDictionary load_noisy_dictionary(const std::string& path) {
  std::string text = read_file(path);
  if (is_json_path(path)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), 1, static_cast<int>(e.byte));
    }
    NoisyDictionary d;
    d.u = samples_from_json(j.at("u"));
    d.p = samples_from_json(j.at("p"));
    d.z = samples_from_json(j.contains("z") ? j.at("z") : j.at("x"));
    if (j.contains("seed")) d.seed = j["seed"].get<unsigned long long>();
    d.validate();
    return d;
  }
  return noisy_dictionary_from_csv(text);
}

bool file_is_noisy(const std::string& path) {
  std::string text = read_file(path);
  if (is_json_path(path)) {
    try {
      return nlohmann::json::parse(text).contains("z");
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), 1, static_cast<int>(e.byte));
    }
  }
  return parse_csv(text).noisy;
}

}  // namespace ddlpv
