"""Independent reference values frozen into the C++ unit tests.

Every value here is computed by direct evaluation with mpmath at 50 digits,
without touching the C++ implementation. Run: python3 compute_oracles.py
"""
from mpmath import mp, mpf, exp, log, tanh, sqrt, quad, pi, inf, diff

mp.dps = 50


def log_sum_exp_small():
    return log(exp(0) + exp(1) + exp(2))


def mppi_three_point():
    # E(u) = -u^2/2, tau = 1, U = 1, perturbations {-0.5, 0, 0.5}.
    eps = [mpf("-0.5"), mpf(0), mpf("0.5")]
    w = [exp(-(1 + e) ** 2 / 2) for e in eps]
    return 1 + sum(wi * e for wi, e in zip(w, eps)) / sum(w)


def mppi_regularized_two_point():
    # u = 1, nominal 0, Sigma = 1, perturbations {-0.5, 0.5}, E const.
    eps = [mpf("-0.5"), mpf("0.5")]
    w = [exp(-(1 * e) / 1) for e in eps]
    return 1 + sum(wi * e for wi, e in zip(w, eps)) / sum(w), 1 - tanh(mpf("0.5")) / 2


def point_mass_recurrence():
    # p' = p + v dt, v' = v + u dt, dt = 0.1, u = 1, 10 steps.
    p, v, dt = mpf(0), mpf(0), mpf("0.1")
    for _ in range(10):
        p, v = p + v * dt, v + 1 * dt
    return p, v


def two_point_score(x=mpf("0.5"), s=mpf("0.5")):
    # Mixture 0.5 N(-1, s^2) + 0.5 N(1, s^2): score by differentiating log p.
    logp = lambda y: log(exp(-(y - 1) ** 2 / (2 * s * s)) + exp(-(y + 1) ** 2 / (2 * s * s)))
    return diff(logp, x)


def smoothed_gaussian(u, s2):
    # log int exp(-y^2/2) N(u - y; 0, s2) dy by quadrature.
    f = lambda y: exp(-y * y / 2) * exp(-(u - y) ** 2 / (2 * s2)) / sqrt(2 * pi * s2)
    return log(quad(f, [-inf, inf]))


if __name__ == "__main__":
    print("log_sum_exp([0,1,2])        =", mp.nstr(log_sum_exp_small(), 17))
    print("mppi three-point U'          =", mp.nstr(mppi_three_point(), 17))
    a, b = mppi_regularized_two_point()
    print("mppi regularized two-point U'=", mp.nstr(a, 17), mp.nstr(b, 17))
    p, v = point_mass_recurrence()
    print("point mass p_T, v_T          =", mp.nstr(p, 17), mp.nstr(v, 17))
    print("two-point score at 0.5       =", mp.nstr(two_point_score(), 17))
    for u in [0, 1, 2]:
        closed = -mpf(u) ** 2 / (2 * 2) - log(2) / 2
        print(f"smoothed gaussian u={u} s2=1  =", mp.nstr(smoothed_gaussian(mpf(u), mpf(1)), 17),
              "closed", mp.nstr(closed, 17))
