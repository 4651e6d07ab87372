#include "nbspectra/sparse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nbspectra {

SparseMatrix SparseMatrix::from_triplets(int n, std::vector<Triplet> entries,
                                         bool hermitian) {
  if (n < 0) throw std::invalid_argument("SparseMatrix: negative dimension");
  for (const auto& t : entries) {
    if (t.i < 0 || t.i >= n || t.j < 0 || t.j >= n)
      throw std::invalid_argument("SparseMatrix: index out of range at (" +
                                  std::to_string(t.i) + "," +
                                  std::to_string(t.j) + ")");
    if (t.i == t.j && t.v != cplx(0.0))
      throw std::invalid_argument("SparseMatrix: diagonal must be zero (entry " +
                                  std::to_string(t.i) + ")");
  }
  // Exact zeros are dropped so support equals the set of stored values.
  std::erase_if(entries, [](const Triplet& t) { return t.v == cplx(0.0); });
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].i == entries[k - 1].i && entries[k].j == entries[k - 1].j)
      throw std::invalid_argument("SparseMatrix: duplicate entry at (" +
                                  std::to_string(entries[k].i) + "," +
                                  std::to_string(entries[k].j) + ")");
  }

  SparseMatrix m;
  m.n_ = n;
  m.hermitian_ = hermitian;
  m.ptr_.assign(n + 1, 0);
  m.col_.reserve(entries.size());
  m.val_.reserve(entries.size());
  for (const auto& t : entries) ++m.ptr_[t.i + 1];
  for (int i = 0; i < n; ++i) m.ptr_[i + 1] += m.ptr_[i];
  for (const auto& t : entries) {
    m.col_.push_back(t.j);
    m.val_.push_back(t.v);
  }

  if (hermitian) {
    for (const auto& t : entries) {
      cplx other = m.at(t.j, t.i);
      if (other != std::conj(t.v))
        throw std::invalid_argument(
            "SparseMatrix: hermitian flag set but entry (" +
            std::to_string(t.i) + "," + std::to_string(t.j) +
            ") has no conjugate partner");
    }
  }
  return m;
}

SparseMatrix SparseMatrix::zero(int n, bool hermitian) {
  return from_triplets(n, {}, hermitian);
}

bool SparseMatrix::is_real() const {
  return std::all_of(val_.begin(), val_.end(),
                     [](cplx v) { return v.imag() == 0.0; });
}

int SparseMatrix::find(int i, int j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_) return -1;
  auto first = col_.begin() + ptr_[i];
  auto last = col_.begin() + ptr_[i + 1];
  auto it = std::lower_bound(first, last, j);
  if (it != last && *it == j) return static_cast<int>(it - col_.begin());
  return -1;
}

cplx SparseMatrix::at(int i, int j) const {
  int k = find(i, j);
  return k < 0 ? cplx(0.0) : val_[k];
}

std::span<const int> SparseMatrix::row_cols(int i) const {
  return {col_.data() + ptr_[i], static_cast<std::size_t>(row_nnz(i))};
}

std::span<const cplx> SparseMatrix::row_vals(int i) const {
  return {val_.data() + ptr_[i], static_cast<std::size_t>(row_nnz(i))};
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (int i = 0; i < n_; ++i)
    for (int k = ptr_[i]; k < ptr_[i + 1]; ++k)
      out.push_back({i, col_[k], val_[k]});
  return out;
}

double SparseMatrix::row_sum_sq(int i) const {
  double s = 0.0;
  for (int k = ptr_[i]; k < ptr_[i + 1]; ++k) s += std::norm(val_[k]);
  return s;
}

void SparseMatrix::apply(std::span<const cplx> x, std::span<cplx> y) const {
  if (static_cast<int>(x.size()) != n_ || static_cast<int>(y.size()) != n_)
    throw std::invalid_argument("SparseMatrix::apply: dimension mismatch");
  for (int i = 0; i < n_; ++i) {
    cplx acc(0.0);
    for (int k = ptr_[i]; k < ptr_[i + 1]; ++k) acc += val_[k] * x[col_[k]];
    y[i] = acc;
  }
}

Eigen::MatrixXcd SparseMatrix::dense() const {
  if (n_ > 4096)
    throw std::invalid_argument("SparseMatrix::dense: n > 4096");
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int k = ptr_[i]; k < ptr_[i + 1]; ++k) d(i, col_[k]) = val_[k];
  return d;
}

SparseMatrix SparseMatrix::permuted(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != n_)
    throw std::invalid_argument("SparseMatrix::permuted: bad permutation size");
  std::vector<bool> seen(n_, false);
  for (int p : perm) {
    if (p < 0 || p >= n_ || seen[p])
      throw std::invalid_argument("SparseMatrix::permuted: not a permutation");
    seen[p] = true;
  }
  std::vector<Triplet> t = triplets();
  for (auto& e : t) {
    e.i = perm[e.i];
    e.j = perm[e.j];
  }
  return from_triplets(n_, std::move(t), hermitian_);
}

NormReport compute_norms(const SparseMatrix& h) {
  NormReport r;
  for (int i = 0; i < h.n(); ++i) {
    r.norm_2inf = std::max(r.norm_2inf, h.row_sum_sq(i));
    for (cplx v : h.row_vals(i)) r.norm_1inf = std::max(r.norm_1inf, std::abs(v));
  }
  r.norm_2inf = std::sqrt(r.norm_2inf);
  return r;
}

namespace {

// Shortest decimal that reads back to the same double.
std::string round_trip(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_matrix_market(std::ostream& os, const SparseMatrix& h) {
  os << "%%MatrixMarket matrix coordinate complex general\n";
  os << "% hermitian=" << (h.is_hermitian() ? 1 : 0) << "\n";
  os << h.n() << " " << h.n() << " " << h.nnz() << "\n";
  for (const auto& t : h.triplets())
    os << (t.i + 1) << " " << (t.j + 1) << " " << round_trip(t.v.real()) << " "
       << round_trip(t.v.imag()) << "\n";
}

SparseMatrix read_matrix_market(std::istream& is) {
  std::string line;
  bool hermitian = false;
  bool header_done = false;
  int n = 0;
  long long nnz = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '%') {
      auto pos = line.find("hermitian=");
      if (pos != std::string::npos) hermitian = line[pos + 10] == '1';
      continue;
    }
    std::istringstream ls(line);
    int rows, cols;
    if (!(ls >> rows >> cols >> nnz) || rows != cols)
      throw std::runtime_error("matrix file: bad size line");
    n = rows;
    header_done = true;
    break;
  }
  if (!header_done) throw std::runtime_error("matrix file: missing size line");
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(nnz));
  for (long long k = 0; k < nnz; ++k) {
    int i, j;
    double re, im = 0.0;
    if (!(is >> i >> j >> re >> im))
      throw std::runtime_error("matrix file: truncated entry list");
    t.push_back({i - 1, j - 1, cplx(re, im)});
  }
  return SparseMatrix::from_triplets(n, std::move(t), hermitian);
}

void write_matrix_market_file(const std::string& path, const SparseMatrix& h) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_matrix_market(os, h);
}

SparseMatrix read_matrix_market_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_matrix_market(is);
}

}  // namespace nbspectra
