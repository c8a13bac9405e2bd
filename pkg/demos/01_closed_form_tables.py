"""
Closed-form constants of the isotropic hyperplane process
==========================================================

Intensities, variance-stabilising constants and limit variances for the
induced k-flat processes, together with two quick numerical cross-checks.
"""

import math

from scipy import integrate

from hyperflat import closed_forms as cf

# intensity factor lambda_k / lambda^{d-k} and the asymptotic variances
print(f"{'d':>2} {'k':>2} {'a_dk':>10} {'b_(d-k)':>10} {'sigma_chi':>11} {'sigma_nu':>11}")
for d in range(1, 5):
    for k in range(d):
        print(f"{d:>2} {k:>2} {cf.stabilizer_a(d, k):10.6f} {cf.stabilizer_b(d - k):10.6f} "
              f"{cf.sigma_chi(d, k):11.6f} {cf.sigma_nu(d, k):11.6f}")

# sigma_chi is half the integral of the squared count kernel over p in [-1, 1]
val, _ = integrate.quad(lambda p: float(cf.g_chi_kernel(3, 0, p)) ** 2, -1, 1)
print("\nsigma_chi(3, 0) closed form:", cf.sigma_chi(3, 0), " quadrature:", 0.5 * val)

# exact variance of the planar vertex count, two independent routes
for r in (1.0, 5.0, 10.0):
    print(f"r={r:4.1f}  Var Psi_0 exact={cf.exact_var_psi0_2d(1.0, r):12.4f}  "
          f"pair correlation={cf.var_psi0_pair_correlation_2d(1.0, r):12.4f}")

# the chi covariance matrix is positive definite, the nu matrix has rank one
chi = cf.covariance_matrix(3, "chi")
nu = cf.covariance_matrix(3, "nu")
print("\nchi matrix (d=3):\n", chi.round(5))
print("nu matrix (d=3):\n", nu.round(5))

# Poisson-Voronoi: vertices per nucleus
print("\nc_2 =", cf.pvt_vertex_constant(2), " c_3 =", round(cf.pvt_vertex_constant(3), 4),
      " (24 pi^2 / 35 =", round(24 * math.pi ** 2 / 35, 4), ")")
