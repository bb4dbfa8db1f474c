"""Parameter tables for the acceptance suite."""

FS_DIMS = (1, 2, 3)
FS_EPS = (0.01, 0.1, 0.5, 1.0, 2.0)

MT_N = 2
MT_BOUNDED_GAMMA = 3.0
MT_BOUNDED_EPS = (0.1, 0.05, 0.02, 0.01, 0.005)
MT_BOUNDED_SPREAD = 0.05
MT_SUPER_GAMMA = 3.5
MT_SUPER_EPS = (1.0, 0.01, 0.005)
MT_SUPER_GAP = 1.0
MT_SLOPE_TOL = 0.02

BM_N = 2
BM_SLOPES = (1.5, 1.9, 1.99, 1.999)
BM_RATIO_RANGE = (0.2, 5.0)
BM_BLOWUP = 100.0

MFE_CASES = ((1, 1.0), (2, 4.0), (2, 2.25), (3, 10.0))
MFE_DISTANCE = 1e-6
MFE_RESIDUAL = 1e-7

# fractions of the critical mass (n+1)^n
CONCENTRATION_N = 2
CONCENTRATION_FRACTIONS = (4 / 27, 9 / 27, 16 / 27, 25 / 27, 26.5 / 27, 26.9 / 27)
CONCENTRATION_CORE = 0.99
CONCENTRATION_ANNULUS = 0.05

LEGENDRE_DIMS = (1, 2, 3)
LEGENDRE_S_RANGE = (0.1, 10.0)
LEGENDRE_TOL = 1e-6

LAPLACE_T = (0.5, 1.0, 2.0)
LAPLACE_TOL = 1e-6
LAPLACE_GRID = 50
LAPLACE_SLACK = 1e-10

THERMO_GAMMAS = (0.5, 1.0, 2.0)
THERMO_TOL = 1e-8
THERMO_MATCH = 1e-6

CONSTANTS_N_MAX = 20
CONSTANTS_TOL = 1e-12

MOMENT_PS = (1.0, 2.0, 3.5)
MOMENT_TOL = 1e-6


def critical_path(n: int, fractions=CONCENTRATION_FRACTIONS) -> list[float]:
    """Masses at the given fractions of (n+1)^n."""
    return [(n + 1) ** n * f for f in fractions]
