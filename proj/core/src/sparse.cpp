#include "nnd/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nnd/error.hpp"

namespace nnd {

void OpLedger::record(const std::string& kernel, std::uint64_t flops, std::uint64_t bytes) {
    auto& k = kernels_[kernel];
    ++k.calls;
    k.flops += flops;
    k.bytes += bytes;
    flops_ += flops;
    bytes_ += bytes;
}

void OpLedger::record(const std::string& kernel, const KernelStats& totals) {
    auto& k = kernels_[kernel];
    k.calls += totals.calls;
    k.flops += totals.flops;
    k.bytes += totals.bytes;
    flops_ += totals.flops;
    bytes_ += totals.bytes;
}

void OpLedger::merge(const OpLedger& other) {
    for (const auto& [name, s] : other.kernels_) {
        auto& k = kernels_[name];
        k.calls += s.calls;
        k.flops += s.flops;
        k.bytes += s.bytes;
    }
    flops_ += other.flops_;
    bytes_ += other.bytes_;
}

OpLedger OpLedger::since(const OpLedger& earlier) const {
    OpLedger delta;
    for (const auto& [name, s] : kernels_) {
        KernelStats d = s;
        if (auto it = earlier.kernels_.find(name); it != earlier.kernels_.end()) {
            d.calls -= it->second.calls;
            d.flops -= it->second.flops;
            d.bytes -= it->second.bytes;
        }
        if (d.calls == 0) continue;
        delta.kernels_[name] = d;
    }
    delta.flops_ = flops_ - earlier.flops_;
    delta.bytes_ = bytes_ - earlier.bytes_;
    return delta;
}

void OpLedger::clear() {
    flops_ = bytes_ = 0;
    kernels_.clear();
}

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<Index> row_offsets,
                     std::vector<Index> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
    validate();
}

void CsrMatrix::validate() const {
    if (row_offsets_.size() != rows_ + 1) throw InvalidArgument("CSR: row_offsets must have rows+1 entries");
    if (row_offsets_.front() != 0) throw InvalidArgument("CSR: row_offsets[0] must be 0");
    if (static_cast<std::size_t>(row_offsets_.back()) != col_indices_.size() ||
        col_indices_.size() != values_.size())
        throw InvalidArgument("CSR: row_offsets[N] must equal nz");
    for (std::size_t i = 0; i < rows_; ++i) {
        if (row_offsets_[i + 1] < row_offsets_[i]) throw InvalidArgument("CSR: row_offsets must be nondecreasing");
        for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            if (col_indices_[k] < 0 || static_cast<std::size_t>(col_indices_[k]) >= cols_)
                throw InvalidArgument("CSR: column index out of range in row " + std::to_string(i));
            if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
                throw InvalidArgument("CSR: columns not sorted/unique in row " + std::to_string(i));
        }
    }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
    for (const auto& t : triplets)
        if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= rows ||
            static_cast<std::size_t>(t.col) >= cols)
            throw InvalidArgument("triplet index out of range");
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<Index> offsets(rows + 1, 0);
    std::vector<Index> cols_out;
    std::vector<double> vals;
    cols_out.reserve(triplets.size());
    vals.reserve(triplets.size());
    for (std::size_t k = 0; k < triplets.size(); ++k) {
        const auto& t = triplets[k];
        if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
            vals.back() += t.value;
            continue;
        }
        cols_out.push_back(t.col);
        vals.push_back(t.value);
        ++offsets[t.row + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return CsrMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals));
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
    std::vector<double> ones(n, 1.0);
    return diagonal(ones);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> d) {
    const std::size_t n = d.size();
    std::vector<Index> offsets(n + 1), cols(n);
    std::iota(offsets.begin(), offsets.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    return CsrMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(d.begin(), d.end()));
}

CsrMatrix CsrMatrix::from_dense(std::size_t rows, std::size_t cols, std::span<const double> a, double drop_below) {
    if (a.size() != rows * cols) throw DimensionError("from_dense: size mismatch");
    std::vector<Index> offsets{0};
    std::vector<Index> ci;
    std::vector<double> v;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double x = a[i * cols + j];
            if (std::abs(x) > drop_below || (drop_below == 0.0 && x != 0.0)) {
                ci.push_back(static_cast<Index>(j));
                v.push_back(x);
            }
        }
        offsets.push_back(static_cast<Index>(ci.size()));
    }
    return CsrMatrix(rows, cols, std::move(offsets), std::move(ci), std::move(v));
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
    auto first = col_indices_.begin() + row_offsets_[i];
    auto last = col_indices_.begin() + row_offsets_[i + 1];
    auto it = std::lower_bound(first, last, static_cast<Index>(j));
    if (it == last || *it != static_cast<Index>(j)) return 0.0;
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

std::vector<double> CsrMatrix::diagonal_values() const {
    std::vector<double> d(std::min(rows_, cols_));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
}

std::vector<double> CsrMatrix::to_dense() const {
    std::vector<double> out(rows_ * cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
        for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) out[i * cols_ + col_indices_[k]] = values_[k];
    return out;
}

CsrMatrix CsrMatrix::transpose() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t i = 0; i < rows_; ++i)
        for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
            t.push_back({col_indices_[k], static_cast<Index>(i), values_[k]});
    return from_triplets(cols_, rows_, std::move(t));
}

double CsrMatrix::symmetry_defect() const {
    if (rows_ != cols_) throw DimensionError("symmetry_defect: matrix is not square");
    double worst = 0;
    for (std::size_t i = 0; i < rows_; ++i)
        for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
            worst = std::max(worst, std::abs(values_[k] - at(static_cast<std::size_t>(col_indices_[k]), i)));
    return worst;
}

double CsrMatrix::max_abs() const {
    double m = 0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

CsrMatrix CsrMatrix::submatrix(std::span<const Index> rows_keep, std::span<const Index> cols_keep) const {
    std::vector<Index> col_map(cols_, -1);
    for (std::size_t j = 0; j < cols_keep.size(); ++j) col_map[cols_keep[j]] = static_cast<Index>(j);
    std::vector<Index> offsets{0};
    std::vector<Index> ci;
    std::vector<double> v;
    for (Index r : rows_keep) {
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            const Index c = col_map[col_indices_[k]];
            if (c < 0) continue;
            ci.push_back(c);
            v.push_back(values_[k]);
        }
        offsets.push_back(static_cast<Index>(ci.size()));
    }
    // cols_keep is sorted, so mapped columns stay sorted.
    return CsrMatrix(rows_keep.size(), cols_keep.size(), std::move(offsets), std::move(ci), std::move(v));
}

CsrMatrix add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("add: shape mismatch");
    std::vector<Index> offsets{0};
    std::vector<Index> ci;
    std::vector<double> v;
    ci.reserve(a.nnz() + b.nnz());
    v.reserve(a.nnz() + b.nnz());
    const auto &ao = a.row_offsets(), &bo = b.row_offsets();
    const auto &ac = a.col_indices(), &bc = b.col_indices();
    const auto &av = a.values(), &bv = b.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        Index p = ao[i], q = bo[i];
        while (p < ao[i + 1] || q < bo[i + 1]) {
            if (q >= bo[i + 1] || (p < ao[i + 1] && ac[p] < bc[q])) {
                ci.push_back(ac[p]);
                v.push_back(alpha * av[p++]);
            } else if (p >= ao[i + 1] || bc[q] < ac[p]) {
                ci.push_back(bc[q]);
                v.push_back(beta * bv[q++]);
            } else {
                ci.push_back(ac[p]);
                v.push_back(alpha * av[p++] + beta * bv[q++]);
            }
        }
        offsets.push_back(static_cast<Index>(ci.size()));
    }
    return CsrMatrix(a.rows(), a.cols(), std::move(offsets), std::move(ci), std::move(v));
}

void multiply(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    if (x.size() != a.cols() || y.size() != a.rows()) throw DimensionError("multiply: dimension mismatch");
    const auto& off = a.row_offsets();
    const auto& ci = a.col_indices();
    const auto& v = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0;
        for (Index k = off[i]; k < off[i + 1]; ++k) s += v[k] * x[ci[k]];
        y[i] = s;
    }
}

namespace vec {

namespace {
void require_same(std::size_t a, std::size_t b, const char* kernel) {
    if (a != b) throw DimensionError(std::string(kernel) + ": length mismatch");
}
}  // namespace

double norm2(std::span<const double> x, OpLedger& ledger) {
    double s = 0;
    for (double v : x) s += v * v;
    const std::uint64_t n = x.size();
    ledger.record("VecNorm", 2 * n, 8 * (n + 1));
    return std::sqrt(s);
}

double dot(std::span<const double> x, std::span<const double> y, OpLedger& ledger) {
    require_same(x.size(), y.size(), "VecDot");
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    const std::uint64_t n = x.size();
    ledger.record("VecDot", 2 * n, 8 * (2 * n + 1));
    return s;
}

void copy(std::span<const double> x, std::span<double> y, OpLedger& ledger) {
    require_same(x.size(), y.size(), "VecCopy");
    std::copy(x.begin(), x.end(), y.begin());
    ledger.record("VecCopy", 0, 8 * (2 * static_cast<std::uint64_t>(x.size())));
}

void set(std::span<double> y, double a, OpLedger& ledger) {
    std::fill(y.begin(), y.end(), a);
    ledger.record("VecSet", 0, 8 * (2 * static_cast<std::uint64_t>(y.size())));
}

void scale(std::span<double> y, double a, OpLedger& ledger) {
    for (double& v : y) v *= a;
    const std::uint64_t n = y.size();
    ledger.record("VecScale", n, 8 * (2 * n));
}

void axpy(std::span<double> y, double a, std::span<const double> x, OpLedger& ledger) {
    require_same(x.size(), y.size(), "VecAXPY");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
    const std::uint64_t n = y.size();
    ledger.record("VecAXPY", 2 * n, 8 * (3 * n));
}

void aypx(std::span<double> y, double a, std::span<const double> x, OpLedger& ledger) {
    require_same(x.size(), y.size(), "VecAYPX");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + a * y[i];
    const std::uint64_t n = y.size();
    ledger.record("VecAYPX", 2 * n, 8 * (3 * n));
}

void pointwise_mult(std::span<double> z, std::span<const double> x, std::span<const double> y, OpLedger& ledger) {
    require_same(x.size(), y.size(), "VecPointwiseMult");
    require_same(x.size(), z.size(), "VecPointwiseMult");
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
    const std::uint64_t n = z.size();
    ledger.record("VecPointwiseMult", n, 8 * (3 * n));
}

void waxpy(std::span<double> w, double a, std::span<const double> x, std::span<const double> y, OpLedger& ledger) {
    require_same(x.size(), y.size(), "VecWAXPY");
    require_same(x.size(), w.size(), "VecWAXPY");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = a * x[i] + y[i];
    const std::uint64_t n = w.size();
    ledger.record("VecWAXPY", 2 * n, 8 * (3 * n));
}

void clamp(std::span<double> x, std::span<const double> lower, std::span<const double> upper, OpLedger& ledger) {
    require_same(x.size(), lower.size(), "VecMedian");
    require_same(x.size(), upper.size(), "VecMedian");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::min(std::max(x[i], lower[i]), upper[i]);
    // Comparisons are not floating-point arithmetic; traffic is 3 reads + 1 write.
    ledger.record("VecMedian", 0, 8 * (4 * static_cast<std::uint64_t>(x.size())));
}

}  // namespace vec

std::uint64_t spmv_bytes(std::size_t n, std::size_t nnz) {
    const std::uint64_t N = n, nz = nnz;
    return 4 * (N + nz) + 8 * (2 * N + nz);
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y, OpLedger& ledger) {
    multiply(a, x, y);
    ledger.record("MatMult", 2 * static_cast<std::uint64_t>(a.nnz()), spmv_bytes(a.rows(), a.nnz()));
}

}  // namespace nnd
