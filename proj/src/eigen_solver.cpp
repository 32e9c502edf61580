#include "ldl/eigen_solver.hpp"

#include "ldl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ldl::numerics {

namespace {

using Dense = Eigen::MatrixXd;

// Householder similarity reduction to upper Hessenberg form. On exit `h` is
// Hessenberg and `v` holds the accumulated orthogonal transformation.
void reduce_to_hessenberg(Dense& h, Dense& v) {
  const Index n = h.rows();
  const Index low = 0;
  const Index high = n - 1;
  Eigen::VectorXd ort = Eigen::VectorXd::Zero(n);

  for (Index m = low + 1; m <= high - 1; ++m) {
    double scale = 0.0;
    for (Index i = m; i <= high; ++i) scale += std::abs(h(i, m - 1));
    if (scale == 0.0) continue;

    double hh = 0.0;
    for (Index i = high; i >= m; --i) {
      ort(i) = h(i, m - 1) / scale;
      hh += ort(i) * ort(i);
    }
    double g = std::sqrt(hh);
    if (ort(m) > 0) g = -g;
    hh -= ort(m) * g;
    ort(m) -= g;

    for (Index j = m; j < n; ++j) {
      double f = 0.0;
      for (Index i = high; i >= m; --i) f += ort(i) * h(i, j);
      f /= hh;
      for (Index i = m; i <= high; ++i) h(i, j) -= f * ort(i);
    }
    for (Index i = 0; i <= high; ++i) {
      double f = 0.0;
      for (Index j = high; j >= m; --j) f += ort(j) * h(i, j);
      f /= hh;
      for (Index j = m; j <= high; ++j) h(i, j) -= f * ort(j);
    }
    ort(m) *= scale;
    h(m, m - 1) = scale * g;
  }

  v.setIdentity(n, n);
  for (Index m = high - 1; m >= low + 1; --m) {
    if (h(m, m - 1) == 0.0) continue;
    for (Index i = m + 1; i <= high; ++i) ort(i) = h(i, m - 1);
    for (Index j = m; j <= high; ++j) {
      double g = 0.0;
      for (Index i = m; i <= high; ++i) g += ort(i) * v(i, j);
      // Two divisions avoid underflow in the product.
      g = (g / ort(m)) / h(m, m - 1);
      for (Index i = m; i <= high; ++i) v(i, j) += g * ort(i);
    }
  }
}

struct SchurResult {
  Eigen::VectorXd re;
  Eigen::VectorXd im;
};

// Francis double-shift QR on the Hessenberg matrix `h`, accumulating into `v`,
// followed (optionally) by eigenvector back substitution. On exit the columns
// of `v` hold real eigenvectors, or (re, im) column pairs for complex ones.
SchurResult hessenberg_qr(Dense& h, Dense& v, bool vectors, Index max_sweeps) {
  const Index nn = h.rows();
  Index n = nn - 1;
  const Index low = 0;
  const Index high = nn - 1;
  const double eps = std::numeric_limits<double>::epsilon();
  double exshift = 0.0;
  double p = 0, q = 0, r = 0, s = 0, z = 0, t, w, x, y;

  SchurResult out{Eigen::VectorXd::Zero(nn), Eigen::VectorXd::Zero(nn)};
  auto& d = out.re;
  auto& e = out.im;

  double norm = 0.0;
  for (Index i = 0; i < nn; ++i)
    for (Index j = std::max<Index>(i - 1, 0); j < nn; ++j) norm += std::abs(h(i, j));

  Index iter = 0;
  Index total_sweeps = 0;
  while (n >= low) {
    Index l = n;
    while (l > low) {
      s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
      if (s == 0.0) s = norm;
      if (std::abs(h(l, l - 1)) <= eps * s) break;
      --l;
    }

    if (l == n) {
      // One real root.
      h(n, n) += exshift;
      d(n) = h(n, n);
      e(n) = 0.0;
      --n;
      iter = 0;
    } else if (l == n - 1) {
      // A 2x2 block: two real roots or a conjugate pair.
      w = h(n, n - 1) * h(n - 1, n);
      p = (h(n - 1, n - 1) - h(n, n)) / 2.0;
      q = p * p + w;
      z = std::sqrt(std::abs(q));
      h(n, n) += exshift;
      h(n - 1, n - 1) += exshift;
      x = h(n, n);

      if (q >= 0) {
        z = (p >= 0) ? p + z : p - z;
        d(n - 1) = x + z;
        d(n) = d(n - 1);
        if (z != 0.0) d(n) = x - w / z;
        e(n - 1) = 0.0;
        e(n) = 0.0;
        x = h(n, n - 1);
        s = std::abs(x) + std::abs(z);
        p = x / s;
        q = z / s;
        r = std::sqrt(p * p + q * q);
        p /= r;
        q /= r;
        for (Index j = n - 1; j < nn; ++j) {
          z = h(n - 1, j);
          h(n - 1, j) = q * z + p * h(n, j);
          h(n, j) = q * h(n, j) - p * z;
        }
        for (Index i = 0; i <= n; ++i) {
          z = h(i, n - 1);
          h(i, n - 1) = q * z + p * h(i, n);
          h(i, n) = q * h(i, n) - p * z;
        }
        for (Index i = low; i <= high; ++i) {
          z = v(i, n - 1);
          v(i, n - 1) = q * z + p * v(i, n);
          v(i, n) = q * v(i, n) - p * z;
        }
      } else {
        d(n - 1) = x + p;
        d(n) = x + p;
        e(n - 1) = z;
        e(n) = -z;
      }
      n -= 2;
      iter = 0;
    } else {
      if (++total_sweeps > max_sweeps)
        throw NumericalError("eig_dense: QR iteration did not converge within " + std::to_string(max_sweeps) +
                             " sweeps; unreduced block rows [" + std::to_string(l) + ", " + std::to_string(n) +
                             "]");
      x = h(n, n);
      y = 0.0;
      w = 0.0;
      if (l < n) {
        y = h(n - 1, n - 1);
        w = h(n, n - 1) * h(n - 1, n);
      }
      // Exceptional shifts break cycles on pathological inputs.
      if (iter == 10) {
        exshift += x;
        for (Index i = low; i <= n; ++i) h(i, i) -= x;
        s = std::abs(h(n, n - 1)) + std::abs(h(n - 1, n - 2));
        x = y = 0.75 * s;
        w = -0.4375 * s * s;
      }
      if (iter == 30) {
        s = (y - x) / 2.0;
        s = s * s + w;
        if (s > 0) {
          s = std::sqrt(s);
          if (y < x) s = -s;
          s = x - w / ((y - x) / 2.0 + s);
          for (Index i = low; i <= n; ++i) h(i, i) -= s;
          exshift += s;
          x = y = w = 0.964;
        }
      }
      ++iter;

      // Look for two consecutive small sub-diagonal elements.
      Index m = n - 2;
      while (m >= l) {
        z = h(m, m);
        r = x - z;
        s = y - z;
        p = (r * s - w) / h(m + 1, m) + h(m, m + 1);
        q = h(m + 1, m + 1) - z - r - s;
        r = h(m + 2, m + 1);
        s = std::abs(p) + std::abs(q) + std::abs(r);
        p /= s;
        q /= s;
        r /= s;
        if (m == l) break;
        if (std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r)) <
            eps * (std::abs(p) * (std::abs(h(m - 1, m - 1)) + std::abs(z) + std::abs(h(m + 1, m + 1)))))
          break;
        --m;
      }
      for (Index i = m + 2; i <= n; ++i) {
        h(i, i - 2) = 0.0;
        if (i > m + 2) h(i, i - 3) = 0.0;
      }

      // Double QR step on rows l..n, columns m..n.
      for (Index k = m; k <= n - 1; ++k) {
        const bool notlast = (k != n - 1);
        if (k != m) {
          p = h(k, k - 1);
          q = h(k + 1, k - 1);
          r = notlast ? h(k + 2, k - 1) : 0.0;
          x = std::abs(p) + std::abs(q) + std::abs(r);
          if (x == 0.0) continue;
          p /= x;
          q /= x;
          r /= x;
        }
        s = std::sqrt(p * p + q * q + r * r);
        if (p < 0) s = -s;
        if (s == 0.0) continue;
        if (k != m) {
          h(k, k - 1) = -s * x;
        } else if (l != m) {
          h(k, k - 1) = -h(k, k - 1);
        }
        p += s;
        x = p / s;
        y = q / s;
        z = r / s;
        q /= p;
        r /= p;

        for (Index j = k; j < nn; ++j) {
          p = h(k, j) + q * h(k + 1, j);
          if (notlast) {
            p += r * h(k + 2, j);
            h(k + 2, j) -= p * z;
          }
          h(k, j) -= p * x;
          h(k + 1, j) -= p * y;
        }
        for (Index i = 0; i <= std::min(n, k + 3); ++i) {
          p = x * h(i, k) + y * h(i, k + 1);
          if (notlast) {
            p += z * h(i, k + 2);
            h(i, k + 2) -= p * r;
          }
          h(i, k) -= p;
          h(i, k + 1) -= p * q;
        }
        for (Index i = low; i <= high; ++i) {
          p = x * v(i, k) + y * v(i, k + 1);
          if (notlast) {
            p += z * v(i, k + 2);
            v(i, k + 2) -= p * r;
          }
          v(i, k) -= p;
          v(i, k + 1) -= p * q;
        }
      }
    }
  }

  if (!vectors || norm == 0.0) return out;

  // Back substitution on the quasi-triangular Schur form.
  for (n = nn - 1; n >= 0; --n) {
    p = d(n);
    q = e(n);
    if (q == 0.0) {
      Index l = n;
      h(n, n) = 1.0;
      for (Index i = n - 1; i >= 0; --i) {
        w = h(i, i) - p;
        r = 0.0;
        for (Index j = l; j <= n; ++j) r += h(i, j) * h(j, n);
        if (e(i) < 0.0) {
          z = w;
          s = r;
        } else {
          l = i;
          if (e(i) == 0.0) {
            h(i, n) = (w != 0.0) ? -r / w : -r / (eps * norm);
          } else {
            x = h(i, i + 1);
            y = h(i + 1, i);
            q = (d(i) - p) * (d(i) - p) + e(i) * e(i);
            t = (x * s - z * r) / q;
            h(i, n) = t;
            h(i + 1, n) = (std::abs(x) > std::abs(z)) ? (-r - w * t) / x : (-s - y * t) / z;
          }
          t = std::abs(h(i, n));
          if ((eps * t) * t > 1) {
            for (Index j = i; j <= n; ++j) h(j, n) /= t;
          }
        }
      }
    } else if (q < 0) {
      using C = std::complex<double>;
      Index l = n - 1;
      if (std::abs(h(n, n - 1)) > std::abs(h(n - 1, n))) {
        h(n - 1, n - 1) = q / h(n, n - 1);
        h(n - 1, n) = -(h(n, n) - p) / h(n, n - 1);
      } else {
        const C c = C(0.0, -h(n - 1, n)) / C(h(n - 1, n - 1) - p, q);
        h(n - 1, n - 1) = c.real();
        h(n - 1, n) = c.imag();
      }
      h(n, n - 1) = 0.0;
      h(n, n) = 1.0;
      for (Index i = n - 2; i >= 0; --i) {
        double ra = 0.0;
        double sa = 0.0;
        for (Index j = l; j <= n; ++j) {
          ra += h(i, j) * h(j, n - 1);
          sa += h(i, j) * h(j, n);
        }
        w = h(i, i) - p;
        if (e(i) < 0.0) {
          z = w;
          r = ra;
          s = sa;
        } else {
          l = i;
          if (e(i) == 0.0) {
            const C c = C(-ra, -sa) / C(w, q);
            h(i, n - 1) = c.real();
            h(i, n) = c.imag();
          } else {
            x = h(i, i + 1);
            y = h(i + 1, i);
            double vr = (d(i) - p) * (d(i) - p) + e(i) * e(i) - q * q;
            const double vi = (d(i) - p) * 2.0 * q;
            if (vr == 0.0 && vi == 0.0)
              vr = eps * norm * (std::abs(w) + std::abs(q) + std::abs(x) + std::abs(y) + std::abs(z));
            const C c = C(x * r - z * ra + q * sa, x * s - z * sa - q * ra) / C(vr, vi);
            h(i, n - 1) = c.real();
            h(i, n) = c.imag();
            if (std::abs(x) > (std::abs(z) + std::abs(q))) {
              h(i + 1, n - 1) = (-ra - w * h(i, n - 1) + q * h(i, n)) / x;
              h(i + 1, n) = (-sa - w * h(i, n) - q * h(i, n - 1)) / x;
            } else {
              const C c2 = C(-r - y * h(i, n - 1), -s - y * h(i, n)) / C(z, q);
              h(i + 1, n - 1) = c2.real();
              h(i + 1, n) = c2.imag();
            }
          }
          t = std::max(std::abs(h(i, n - 1)), std::abs(h(i, n)));
          if ((eps * t) * t > 1) {
            for (Index j = i; j <= n; ++j) {
              h(j, n - 1) /= t;
              h(j, n) /= t;
            }
          }
        }
      }
    }
  }

  // Back-transform to eigenvectors of the original matrix.
  for (Index j = nn - 1; j >= low; --j) {
    for (Index i = low; i <= high; ++i) {
      z = 0.0;
      for (Index k = low; k <= std::min(j, high); ++k) z += v(i, k) * h(k, j);
      v(i, j) = z;
    }
  }
  return out;
}

}  // namespace

bool ComplexSpectrum::conjugate_pairs_ok(double tol) const {
  std::vector<bool> used(eigenvalues.size(), false);
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    const auto& lam = eigenvalues[i];
    if (std::abs(lam.imag()) <= tol || used[i]) continue;
    bool found = false;
    for (std::size_t j = 0; j < eigenvalues.size() && !found; ++j) {
      if (j == i || used[j]) continue;
      if (std::abs(eigenvalues[j] - std::conj(lam)) <= tol * std::max(1.0, std::abs(lam))) {
        used[i] = used[j] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

ComplexSpectrum eig_dense(const Matrix& a, const EigOptions& options) {
  if (a.rows() != a.cols())
    throw DimensionError("eig_dense: matrix must be square, got " + shape_string(a.rows(), a.cols()));
  if (a.rows() > options.max_dimension)
    throw DimensionError("eig_dense: dimension " + std::to_string(a.rows()) + " exceeds cap " +
                         std::to_string(options.max_dimension));
  if (!a.allFinite()) throw NumericalError("eig_dense: matrix has non-finite entries");

  const Index n = a.rows();
  ComplexSpectrum spectrum;
  if (n == 0) return spectrum;

  Dense h = a;
  Dense v;
  reduce_to_hessenberg(h, v);
  const SchurResult schur = hessenberg_qr(h, v, options.compute_vectors, options.sweeps_per_row * n);

  spectrum.eigenvalues.reserve(n);
  for (Index i = 0; i < n; ++i) spectrum.eigenvalues.emplace_back(schur.re(i), schur.im(i));

  if (options.compute_vectors) {
    ComplexMatrix vecs(n, n);
    for (Index j = 0; j < n; ++j) {
      if (schur.im(j) == 0.0) {
        vecs.col(j) = v.col(j).cast<std::complex<double>>();
      } else if (schur.im(j) > 0.0 && j + 1 < n) {
        // Column pair (j, j+1) stores real and imaginary parts for lambda_j.
        Eigen::VectorXcd u(n);
        for (Index i = 0; i < n; ++i) u(i) = {v(i, j), v(i, j + 1)};
        vecs.col(j) = u;
        vecs.col(j + 1) = u.conjugate();
        ++j;
      }
    }
    for (Index j = 0; j < n; ++j) {
      const double nrm = vecs.col(j).norm();
      if (nrm > 0.0) vecs.col(j) /= nrm;
    }
    spectrum.eigenvectors = std::move(vecs);
  }
  return spectrum;
}

}  // namespace ldl::numerics
