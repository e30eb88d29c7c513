#pragma once

#include <vector>

#include "fsgcc/fsgcc.hpp"

namespace fsgcc {

// Thin SVD of an L x N complex matrix, r = min(L, N). Columns of U and V are
// orthonormal, singular values sorted descending.
struct SvdFactorization {
    int rows = 0;  // L
    int cols = 0;  // N
    int rank = 0;  // r = min(L, N)
    std::vector<cplx> u;                  // L x r, column-major: u[i + l*rows]... row-major L x r
    std::vector<cplx> v;                  // N x r, row-major
    std::vector<double> singular_values;  // length r, descending

    cplx u_at(int row, int col) const { return u[static_cast<std::size_t>(row) * rank + col]; }
    cplx v_at(int row, int col) const { return v[static_cast<std::size_t>(row) * rank + col]; }
};

// One-sided Jacobi on the conjugate transpose (orthogonalizes the L rows of
// the input); deterministic sweep order, null directions completed from the
// canonical basis so U and V stay orthonormal for rank-deficient inputs.
SvdFactorization svd(const std::vector<cplx>& matrix, int rows, int cols);
SvdFactorization svd(const FsGccMatrix& fs);

// Dominant singular triple (sigma1, u1, v1) via the L x L Gram eigenproblem;
// equivalent to the top component of svd() but much cheaper when L << N.
struct DominantTriple {
    double sigma = 0.0;
    std::vector<cplx> u;  // length L
    std::vector<cplx> v;  // length N
};
DominantTriple dominant_triple(const std::vector<cplx>& matrix, int rows, int cols);

// |sigma1 u1 v1^H|: magnitude of the best rank-one approximation.
MagnitudeMatrix svd_fsgcc_denoise(const FsGccMatrix& fs);

// Rank-one magnitude with per-band weights w_l = |u1[l]| / max_l |u1[l]|
// applied multiplicatively.
MagnitudeMatrix wsvd_fsgcc_denoise(const FsGccMatrix& fs);

// Both denoised magnitudes from a single factorization (evaluation helper).
void svd_and_wsvd_denoise(const FsGccMatrix& fs, MagnitudeMatrix& svd_out,
                          MagnitudeMatrix& wsvd_out);

}  // namespace fsgcc
