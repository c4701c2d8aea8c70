"""Numerical tolerances shared by the library and its test-suite."""

#: Skew-symmetry of generator matrices, max-abs of M + M^T.
SKEW_TOL = 1e-14

#: Commutators with S^2 / S_z, max-abs.
COMMUTATOR_TOL = 1e-12

#: Relative residual of a polynomial relation, scaled by max-abs of the highest power.
RELATION_RTOL = 1e-12

#: Relative residual accepted by the least-squares minimal-polynomial search.
MINPOLY_RTOL = 1e-10

#: Entry-wise agreement of synthesized and tabulated closed-form coefficients.
COEFF_ATOL = 1e-12

#: Imaginary part tolerated on roots of the characteristic polynomial.
ROOT_IMAG_TOL = 1e-10

#: Two roots closer than this are treated as degenerate.
ROOT_SEPARATION_TOL = 1e-8

#: Closed form vs dense exponential, 2-norm per unit vector.
ORACLE_TOL = 1e-12

#: Deviation of exp(tG)^T exp(tG) from identity, max-abs.
UNITARITY_TOL = 1e-12

#: Singlet preservation, ||S^2 psi||.
SPIN_TOL = 1e-10

#: Angles used by the exactness / unitarity sweeps.
THETA_GRID = (0.1, -0.1, 0.37, -0.37, 1.0, -1.0, 3.141592653589793, -3.141592653589793, 10.0, -10.0)
