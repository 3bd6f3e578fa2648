#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nnd/mesh.hpp"

namespace nnd {

/// Per-kernel FLOP and modeled byte counts.
///
/// Byte counts follow a perfect-cache model: every vector and matrix entry is
/// fetched from main memory once per kernel call, with 4-byte integers and
/// 8-byte doubles.
struct KernelStats {
    std::uint64_t calls = 0;
    std::uint64_t flops = 0;
    std::uint64_t bytes = 0;
};

class OpLedger {
public:
    void record(const std::string& kernel, std::uint64_t flops, std::uint64_t bytes);
    /// Adds pre-aggregated counts for `kernel`.
    void record(const std::string& kernel, const KernelStats& totals);

    std::uint64_t flops() const noexcept { return flops_; }
    std::uint64_t bytes() const noexcept { return bytes_; }
    const std::map<std::string, KernelStats>& kernels() const noexcept { return kernels_; }

    /// Adds every count of `other` into this ledger.
    void merge(const OpLedger& other);

    /// Counts accumulated since `earlier`, which must be a previous snapshot of
    /// this ledger.
    OpLedger since(const OpLedger& earlier) const;

    void clear();

private:
    std::uint64_t flops_ = 0;
    std::uint64_t bytes_ = 0;
    std::map<std::string, KernelStats> kernels_;
};

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Square or rectangular compressed sparse row matrix. Column indices are
/// sorted and unique within every row.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::size_t rows, std::size_t cols, std::vector<Index> row_offsets,
              std::vector<Index> col_indices, std::vector<double> values);

    /// Builds from triplets; duplicates are summed in input order, so the
    /// result is deterministic for a given triplet sequence.
    static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);
    static CsrMatrix identity(std::size_t n);
    static CsrMatrix diagonal(std::span<const double> d);
    static CsrMatrix from_dense(std::size_t rows, std::size_t cols, std::span<const double> row_major,
                                double drop_below = 0.0);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    const std::vector<Index>& row_offsets() const noexcept { return row_offsets_; }
    const std::vector<Index>& col_indices() const noexcept { return col_indices_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }

    /// Entry (i, j), zero when outside the pattern.
    double at(std::size_t i, std::size_t j) const;
    std::vector<double> diagonal_values() const;
    std::vector<double> to_dense() const;
    CsrMatrix transpose() const;

    /// max |A - A^T| over all entries.
    double symmetry_defect() const;
    double max_abs() const;

    /// Principal submatrix on the given sorted index set.
    CsrMatrix submatrix(std::span<const Index> rows_keep, std::span<const Index> cols_keep) const;

    /// Throws InvalidArgument if offsets or column ordering are inconsistent.
    void validate() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Index> row_offsets_{0};
    std::vector<Index> col_indices_;
    std::vector<double> values_;
};

/// alpha*A + beta*B on the union of both patterns.
CsrMatrix add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b);

/// Uninstrumented y = A x, for oracles and setup code.
void multiply(const CsrMatrix& a, std::span<const double> x, std::span<double> y);

/// Instrumented kernels. Each records FLOPs and modeled bytes into the ledger
/// under the PETSc-style kernel name used in reports.
namespace vec {

double norm2(std::span<const double> x, OpLedger& ledger);
double dot(std::span<const double> x, std::span<const double> y, OpLedger& ledger);
void copy(std::span<const double> x, std::span<double> y, OpLedger& ledger);
void set(std::span<double> y, double a, OpLedger& ledger);
void scale(std::span<double> y, double a, OpLedger& ledger);
/// y <- a*x + y
void axpy(std::span<double> y, double a, std::span<const double> x, OpLedger& ledger);
/// y <- x + a*y
void aypx(std::span<double> y, double a, std::span<const double> x, OpLedger& ledger);
/// z <- x .* y
void pointwise_mult(std::span<double> z, std::span<const double> x, std::span<const double> y,
                    OpLedger& ledger);
/// w <- a*x + y
void waxpy(std::span<double> w, double a, std::span<const double> x, std::span<const double> y,
           OpLedger& ledger);
/// x <- clamp(x, lower, upper)
void clamp(std::span<double> x, std::span<const double> lower, std::span<const double> upper,
           OpLedger& ledger);

}  // namespace vec

/// Modeled SpMV traffic: 4(N + nz) + 8(2N + nz) bytes.
std::uint64_t spmv_bytes(std::size_t n, std::size_t nnz);

/// y = A x, logged as MatMult (2 nz FLOPs).
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y, OpLedger& ledger);

}  // namespace nnd
