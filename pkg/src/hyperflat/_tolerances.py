"""Numerical tolerances shared by every module.

=====================  ======  =============================================
name                   value   used for
=====================  ======  =============================================
NORM_TOL               1e-12   unit-length check of orientation vectors
ORTHO_TOL              1e-10   orthogonality of flat frames / foot points
DEGENERACY_TOL         1e-10   Gram determinant cutoff for parallel planes,
                               rank cutoff for discrete orientation laws
RESIDUAL_TOL           1e-9    residual of hyperplane equations at a foot
=====================  ======  =============================================
"""

NORM_TOL = 1e-12
ORTHO_TOL = 1e-10
DEGENERACY_TOL = 1e-10
RESIDUAL_TOL = 1e-9
