#include "fsgcc/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fsgcc {

namespace {

// Unitary 2x2 that diagonalizes the Hermitian Gram block [[a, g], [conj(g), b]]:
// J = [[c, -s], [e^{-i theta} s, e^{-i theta} c]] with g = |g| e^{i theta}.
struct JacobiRotation {
    double c = 1.0;
    double s = 0.0;
    cplx phase{1.0, 0.0};  // e^{-i theta}
};

JacobiRotation make_rotation(double a, double b, const cplx& g) {
    JacobiRotation rot;
    const double gm = std::abs(g);
    if (gm == 0.0) return rot;
    rot.phase = std::conj(g) / gm;
    const double zeta = (b - a) / (2.0 * gm);
    const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
    rot.c = 1.0 / std::sqrt(1.0 + t * t);
    rot.s = t * rot.c;
    return rot;
}

}  // namespace

SvdFactorization svd(const std::vector<cplx>& matrix, int rows, int cols) {
    if (rows < 1 || cols < 1 ||
        matrix.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
        throw std::invalid_argument("svd: matrix size does not match rows*cols");
    }
    for (const cplx& z : matrix) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw std::invalid_argument("svd: non-finite entry");
        }
    }
    if (cols < rows) {
        throw std::invalid_argument("svd: expects rows <= cols (wide matrix)");
    }

    const int l = rows;
    const int n = cols;

    // a = M^H stored as L column vectors of length N; orthogonalizing its
    // columns is equivalent to orthogonalizing the rows of M
    std::vector<std::vector<cplx>> a(static_cast<std::size_t>(l),
                                     std::vector<cplx>(static_cast<std::size_t>(n)));
    for (int i = 0; i < l; ++i) {
        for (int k = 0; k < n; ++k) {
            a[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                std::conj(matrix[static_cast<std::size_t>(i) * n + k]);
        }
    }

    // accumulated rotations; M = Q * W^H at convergence
    std::vector<cplx> q(static_cast<std::size_t>(l) * l, cplx(0.0, 0.0));
    for (int i = 0; i < l; ++i) q[static_cast<std::size_t>(i) * l + i] = cplx(1.0, 0.0);

    const int max_sweeps = 60;
    const double tol = 1e-14;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double worst = 0.0;
        for (int p = 0; p < l - 1; ++p) {
            for (int qq = p + 1; qq < l; ++qq) {
                auto& ap = a[static_cast<std::size_t>(p)];
                auto& aq = a[static_cast<std::size_t>(qq)];
                double alpha = 0.0, beta = 0.0;
                cplx gamma(0.0, 0.0);
                for (int k = 0; k < n; ++k) {
                    alpha += std::norm(ap[static_cast<std::size_t>(k)]);
                    beta += std::norm(aq[static_cast<std::size_t>(k)]);
                    gamma += std::conj(ap[static_cast<std::size_t>(k)]) *
                             aq[static_cast<std::size_t>(k)];
                }
                if (alpha == 0.0 || beta == 0.0) continue;
                const double rel = std::abs(gamma) / std::sqrt(alpha * beta);
                worst = std::max(worst, rel);
                if (rel <= tol) continue;

                const JacobiRotation rot = make_rotation(alpha, beta, gamma);
                for (int k = 0; k < n; ++k) {
                    const cplx xp = ap[static_cast<std::size_t>(k)];
                    const cplx xq = aq[static_cast<std::size_t>(k)] * rot.phase;
                    ap[static_cast<std::size_t>(k)] = rot.c * xp + rot.s * xq;
                    aq[static_cast<std::size_t>(k)] = -rot.s * xp + rot.c * xq;
                }
                for (int i = 0; i < l; ++i) {
                    const cplx xp = q[static_cast<std::size_t>(i) * l + p];
                    const cplx xq = q[static_cast<std::size_t>(i) * l + qq] * rot.phase;
                    q[static_cast<std::size_t>(i) * l + p] = rot.c * xp + rot.s * xq;
                    q[static_cast<std::size_t>(i) * l + qq] = -rot.s * xp + rot.c * xq;
                }
            }
        }
        if (worst <= tol) break;
    }

    // singular values and order
    std::vector<double> sigma(static_cast<std::size_t>(l), 0.0);
    for (int i = 0; i < l; ++i) {
        double s2 = 0.0;
        for (int k = 0; k < n; ++k) s2 += std::norm(a[static_cast<std::size_t>(i)][k]);
        sigma[static_cast<std::size_t>(i)] = std::sqrt(s2);
    }
    std::vector<int> order(static_cast<std::size_t>(l));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return sigma[static_cast<std::size_t>(x)] >
                                                sigma[static_cast<std::size_t>(y)]; });

    SvdFactorization f;
    f.rows = l;
    f.cols = n;
    f.rank = l;
    f.singular_values.resize(static_cast<std::size_t>(l));
    f.u.assign(static_cast<std::size_t>(l) * l, cplx(0.0, 0.0));
    f.v.assign(static_cast<std::size_t>(n) * l, cplx(0.0, 0.0));

    const double sigma_max = sigma[static_cast<std::size_t>(order[0])];
    const double null_tol = sigma_max * 1e-13;

    int filled = 0;
    for (int c = 0; c < l; ++c) {
        const int src = order[static_cast<std::size_t>(c)];
        const double s = sigma[static_cast<std::size_t>(src)];
        f.singular_values[static_cast<std::size_t>(c)] = s;
        for (int i = 0; i < l; ++i) {
            f.u[static_cast<std::size_t>(i) * l + c] = q[static_cast<std::size_t>(i) * l + src];
        }
        if (s > null_tol && s > 0.0) {
            // v_c = conj(a_src) / s  (a holds M^H columns)
            for (int k = 0; k < n; ++k) {
                f.v[static_cast<std::size_t>(k) * l + c] =
                    std::conj(a[static_cast<std::size_t>(src)][static_cast<std::size_t>(k)]) / s;
            }
            filled = c + 1;
        }
    }

    // deterministic completion of near-null right-singular directions
    for (int c = filled; c < l; ++c) {
        if (f.singular_values[static_cast<std::size_t>(c)] > null_tol &&
            f.singular_values[static_cast<std::size_t>(c)] > 0.0) {
            continue;  // already filled above
        }
        for (int cand = 0; cand < n; ++cand) {
            std::vector<cplx> e(static_cast<std::size_t>(n), cplx(0.0, 0.0));
            e[static_cast<std::size_t>(cand)] = cplx(1.0, 0.0);
            for (int j = 0; j < c; ++j) {
                cplx proj(0.0, 0.0);
                for (int k = 0; k < n; ++k) {
                    proj += std::conj(f.v[static_cast<std::size_t>(k) * l + j]) *
                            e[static_cast<std::size_t>(k)];
                }
                for (int k = 0; k < n; ++k) {
                    e[static_cast<std::size_t>(k)] -=
                        proj * f.v[static_cast<std::size_t>(k) * l + j];
                }
            }
            double norm2 = 0.0;
            for (int k = 0; k < n; ++k) norm2 += std::norm(e[static_cast<std::size_t>(k)]);
            if (norm2 > 0.25) {
                const double inv = 1.0 / std::sqrt(norm2);
                for (int k = 0; k < n; ++k) {
                    f.v[static_cast<std::size_t>(k) * l + c] =
                        e[static_cast<std::size_t>(k)] * inv;
                }
                break;
            }
        }
    }
    return f;
}

SvdFactorization svd(const FsGccMatrix& fs) { return svd(fs.entries, fs.rows(), fs.cols()); }

DominantTriple dominant_triple(const std::vector<cplx>& matrix, int rows, int cols) {
    const int l = rows;
    const int n = cols;

    // Hermitian Gram matrix G = M M^H (L x L)
    std::vector<cplx> g(static_cast<std::size_t>(l) * l, cplx(0.0, 0.0));
    for (int i = 0; i < l; ++i) {
        for (int j = i; j < l; ++j) {
            cplx acc(0.0, 0.0);
            const cplx* ri = &matrix[static_cast<std::size_t>(i) * n];
            const cplx* rj = &matrix[static_cast<std::size_t>(j) * n];
            for (int k = 0; k < n; ++k) acc += ri[k] * std::conj(rj[k]);
            g[static_cast<std::size_t>(i) * l + j] = acc;
            g[static_cast<std::size_t>(j) * l + i] = std::conj(acc);
        }
    }

    // cyclic Jacobi eigendecomposition of G
    std::vector<cplx> evec(static_cast<std::size_t>(l) * l, cplx(0.0, 0.0));
    for (int i = 0; i < l; ++i) evec[static_cast<std::size_t>(i) * l + i] = cplx(1.0, 0.0);
    const int max_sweeps = 40;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (int i = 0; i < l; ++i) {
            diag += std::abs(g[static_cast<std::size_t>(i) * l + i]);
            for (int j = i + 1; j < l; ++j) off += std::abs(g[static_cast<std::size_t>(i) * l + j]);
        }
        if (off <= 1e-14 * std::max(diag, 1e-300)) break;
        for (int p = 0; p < l - 1; ++p) {
            for (int qq = p + 1; qq < l; ++qq) {
                const cplx gpq = g[static_cast<std::size_t>(p) * l + qq];
                if (std::abs(gpq) == 0.0) continue;
                const double app = g[static_cast<std::size_t>(p) * l + p].real();
                const double aqq = g[static_cast<std::size_t>(qq) * l + qq].real();
                const JacobiRotation rot = make_rotation(app, aqq, gpq);
                // G <- J^H G J applied to rows/cols p, q
                for (int k = 0; k < l; ++k) {
                    const cplx xp = g[static_cast<std::size_t>(k) * l + p];
                    const cplx xq = g[static_cast<std::size_t>(k) * l + qq] * rot.phase;
                    g[static_cast<std::size_t>(k) * l + p] = rot.c * xp + rot.s * xq;
                    g[static_cast<std::size_t>(k) * l + qq] = -rot.s * xp + rot.c * xq;
                }
                for (int k = 0; k < l; ++k) {
                    const cplx xp = g[static_cast<std::size_t>(p) * l + k];
                    const cplx xq = g[static_cast<std::size_t>(qq) * l + k] * std::conj(rot.phase);
                    g[static_cast<std::size_t>(p) * l + k] = rot.c * xp + rot.s * xq;
                    g[static_cast<std::size_t>(qq) * l + k] = -rot.s * xp + rot.c * xq;
                }
                for (int k = 0; k < l; ++k) {
                    const cplx xp = evec[static_cast<std::size_t>(k) * l + p];
                    const cplx xq = evec[static_cast<std::size_t>(k) * l + qq] * rot.phase;
                    evec[static_cast<std::size_t>(k) * l + p] = rot.c * xp + rot.s * xq;
                    evec[static_cast<std::size_t>(k) * l + qq] = -rot.s * xp + rot.c * xq;
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i < l; ++i) {
        if (g[static_cast<std::size_t>(i) * l + i].real() >
            g[static_cast<std::size_t>(best) * l + best].real()) {
            best = i;
        }
    }
    const double lambda = std::max(0.0, g[static_cast<std::size_t>(best) * l + best].real());

    DominantTriple t;
    t.sigma = std::sqrt(lambda);
    t.u.resize(static_cast<std::size_t>(l));
    for (int i = 0; i < l; ++i) t.u[static_cast<std::size_t>(i)] =
        evec[static_cast<std::size_t>(i) * l + best];
    t.v.assign(static_cast<std::size_t>(n), cplx(0.0, 0.0));
    if (t.sigma > 0.0) {
        // v = M^H u / sigma
        for (int i = 0; i < l; ++i) {
            const cplx ui = std::conj(t.u[static_cast<std::size_t>(i)]);
            const cplx* row = &matrix[static_cast<std::size_t>(i) * n];
            for (int k = 0; k < n; ++k) {
                t.v[static_cast<std::size_t>(k)] += ui * row[k];
            }
        }
        const double inv = 1.0 / t.sigma;
        for (auto& z : t.v) z = std::conj(z) * inv;
    }
    return t;
}

namespace {

MagnitudeMatrix rank_one_magnitude(const DominantTriple& t, int rows, int cols,
                                   const std::vector<double>* row_weights) {
    MagnitudeMatrix out;
    out.band_count = rows;
    out.width = cols;
    out.entries.resize(static_cast<std::size_t>(rows) * cols);
    std::vector<double> vmag(static_cast<std::size_t>(cols));
    for (int k = 0; k < cols; ++k) vmag[static_cast<std::size_t>(k)] =
        std::abs(t.v[static_cast<std::size_t>(k)]);
    for (int i = 0; i < rows; ++i) {
        double scale = t.sigma * std::abs(t.u[static_cast<std::size_t>(i)]);
        if (row_weights) scale *= (*row_weights)[static_cast<std::size_t>(i)];
        double* dst = &out.entries[static_cast<std::size_t>(i) * cols];
        for (int k = 0; k < cols; ++k) dst[k] = scale * vmag[static_cast<std::size_t>(k)];
    }
    return out;
}

std::vector<double> band_weights(const DominantTriple& t) {
    std::vector<double> w(t.u.size(), 1.0);
    double peak = 0.0;
    for (const cplx& z : t.u) peak = std::max(peak, std::abs(z));
    if (peak > 0.0) {
        for (std::size_t i = 0; i < t.u.size(); ++i) w[i] = std::abs(t.u[i]) / peak;
    }
    return w;
}

}  // namespace

MagnitudeMatrix svd_fsgcc_denoise(const FsGccMatrix& fs) {
    const DominantTriple t = dominant_triple(fs.entries, fs.rows(), fs.cols());
    return rank_one_magnitude(t, fs.rows(), fs.cols(), nullptr);
}

MagnitudeMatrix wsvd_fsgcc_denoise(const FsGccMatrix& fs) {
    const DominantTriple t = dominant_triple(fs.entries, fs.rows(), fs.cols());
    const std::vector<double> w = band_weights(t);
    return rank_one_magnitude(t, fs.rows(), fs.cols(), &w);
}

void svd_and_wsvd_denoise(const FsGccMatrix& fs, MagnitudeMatrix& svd_out,
                          MagnitudeMatrix& wsvd_out) {
    const DominantTriple t = dominant_triple(fs.entries, fs.rows(), fs.cols());
    svd_out = rank_one_magnitude(t, fs.rows(), fs.cols(), nullptr);
    const std::vector<double> w = band_weights(t);
    wsvd_out = rank_one_magnitude(t, fs.rows(), fs.cols(), &w);
}

}  // namespace fsgcc
