"""Decay diagnostics for the ideal of operators with |S Q_n| -> 0.

Membership is a limit statement and cannot be decided at finite N; the
functions here report the norm sequences together with a verdict drawn
from the tail of the exact part of the sequence.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm as normal_dist
from scipy.stats import qmc

from . import linalg
from .fock import TruncatedFock
from .systems import build_symmetric

TOL_IDEAL = 1e-6
WINDOW = 4
MIN_DECAY_EXPONENT = -0.5
WITNESS_FAMILIES = ("product", "symmetric", "subshift", "quiver")


@dataclass
class DecayReport:
    norms: list
    tail_norms: list
    verdict: str
    rate_estimate: float = None
    op: str = ""

    def to_dict(self):
        return {
            "op": self.op,
            "norms": [[n, v, e] for n, v, e in self.norms],
            "tails": [[n, v, e] for n, v, e in self.tail_norms],
            "verdict": self.verdict,
            "rate": self.rate_estimate,
        }


def fit_rate(points):
    """Least-squares slope of log(value) against log(n) over positive points with n >= 1."""
    pts = [(n, v) for n, v in points if n >= 1 and v > 0]
    if len(pts) < 2:
        return None
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    return float(np.polyfit(x, y, 1)[0])


def decay_verdict(points, tol_ideal=TOL_IDEAL):
    """Classify a sequence of (n, value) pairs taken from exact levels.

    in_ideal: the last value is below tol with a nonincreasing window, or
    the window decreases strictly with a power-law exponent <= -0.5.
    not_in_ideal: the window stays at or above 10 * tol without decaying.
    """
    window = points[-WINDOW:]
    vals = np.array([v for _, v in window])
    rate = fit_rate(window)
    slack = 1e-12 * max(1.0, float(vals.max()))
    nonincreasing = bool(np.all(np.diff(vals) <= slack))
    strictly = len(vals) >= 2 and bool(np.all(np.diff(vals) < -slack))
    if vals[-1] <= tol_ideal and nonincreasing:
        return "in_ideal", rate
    if strictly and rate is not None and rate <= MIN_DECAY_EXPONENT:
        return "in_ideal", rate
    if vals.min() >= 10 * tol_ideal and len(vals) >= 2:
        spread = (vals.max() - vals.min()) / vals.max()
        if spread <= 1e-6 or bool(np.all(np.diff(vals) >= -slack)):
            return "not_in_ideal", rate
    return "inconclusive", rate


def decay_scan(S, n_max=None, tol_ideal=TOL_IDEAL, op=""):
    N = S.N
    n_max = N if n_max is None else min(n_max, N)
    norms = [(n,) + S.norm_Q(n) for n in range(n_max + 1)]
    tails = [(n,) + S.norm_Rp(n) for n in range(n_max + 1)]
    exact = [(n, v) for n, v, e in norms if e]
    if not exact:
        raise ValueError("no exact columns in range; raise the truncation level N")
    verdict, rate = decay_verdict(exact, tol_ideal)
    return DecayReport(norms, tails, verdict, rate, op)


def exact_tail_norm(S, n):
    """|S R'_n| restricted to the exact columns at levels >= n."""
    cols = [S.column(m) for m in range(n, S.N + 1) if S.exact[m]]
    return linalg.op_norm(np.hstack(cols)) if cols else 0.0


@dataclass
class SeminormEstimate:
    estimate: float
    n_star: int
    certificate: list = field(default_factory=list)


def cp_seminorm(S, n_star=None):
    """Upper-bound estimate |S R'_{n*}| of the norm of S modulo the ideal.

    Only exact columns enter.  By default n* is the largest exact level;
    the certificate is the nonincreasing sequence of exact tail norms.
    """
    levels = S.exact_levels()
    if not levels:
        raise ValueError("no exact columns; raise the truncation level N")
    if n_star is None:
        n_star = levels[-1]
    if n_star > levels[-1]:
        raise ValueError(f"n* = {n_star} is beyond the last exact level {levels[-1]}")
    cert = [(n, exact_tail_norm(S, n)) for n in range(n_star + 1)]
    return SeminormEstimate(cert[-1][1], n_star, cert)


def symbol_operator(F, coeffs):
    """sum_i alpha_i S_1(e_i)S_1(e_i)^* + gamma I on a single-vertex Fock module."""
    d = F.dims[1]
    if len(coeffs) != d + 1:
        raise ValueError(f"need {d + 1} coefficients (one per letter and a constant)")
    total = F.identity() * complex(coeffs[-1])
    for i in range(d):
        s = F.basis_shift(1, i)
        total = total + (s @ s.adj()) * complex(coeffs[i])
    return total


def symbol_value(coeffs, z):
    z = np.asarray(z)
    return abs(np.dot(np.asarray(coeffs[:-1], dtype=complex), np.abs(z) ** 2) + coeffs[-1])


def sphere_points(d, samples=1000, seed=0, grid=256):
    """Deterministic sample of the unit sphere of C^d.

    A Halton grid pushed through the normal quantile function, the
    standard basis, and ``samples`` seeded Gaussian directions.
    """
    halton = qmc.Halton(d=2 * d, scramble=False).random(grid + 1)[1:]
    g = normal_dist.ppf(halton)
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((samples, 2 * d))
    real = np.vstack([g, r])
    pts = real[:, :d] + 1j * real[:, d:]
    pts = np.vstack([np.eye(d, dtype=complex), pts])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


@dataclass
class SphereReport:
    coeffs: list
    estimate: float
    sphere_sup: float
    gap: float
    n_star: int
    certificate: list

    def to_dict(self):
        return {"coeffs": [str(c) for c in self.coeffs], "estimate": self.estimate,
                "sphere_sup": self.sphere_sup, "gap": self.gap, "n_star": self.n_star,
                "certificate": [[n, v] for n, v in self.certificate]}


def sphere_compare(d, coeffs, N, samples=1000, seed=0, n_star=None, system=None):
    """Compare the seminorm estimate of the symbol operator with its sphere sup."""
    X = system if system is not None else build_symmetric(d, N)
    F = TruncatedFock(X)
    est = cp_seminorm(symbol_operator(F, coeffs), n_star)
    pts = sphere_points(d, samples, seed)
    sup = float(max(symbol_value(coeffs, z) for z in pts))
    return SphereReport(list(coeffs), est.estimate, sup, abs(est.estimate - sup),
                        est.n_star, est.certificate)


def reconstruct_tail_projection(F, n):
    """R'_n rebuilt as sum over the fiber basis of S_n(x)S_n(x)^*."""
    total = F.zero()
    for i in range(F.dims[n]):
        s = F.basis_shift(n, i)
        total = total + s @ s.adj()
    return total


@dataclass
class GeneratedReport:
    applicable: bool
    witness_residual: float = None
    samples: list = field(default_factory=list)
    passed: bool = False
    reason: str = ""

    def to_dict(self):
        return {"applicable": self.applicable, "witness_residual": self.witness_residual,
                "samples": self.samples, "passed": self.passed, "reason": self.reason}


def generated_by_Qn_check(F, samples, tol=1e-10, tol_ideal=TOL_IDEAL):
    """Check that in-ideal samples are approximated by S R_m, with R'_n rebuilt from shifts.

    ``samples`` is a list of (name, FockOperator).  For each sample judged
    in_ideal, the sequence |S - S R_m| = |S R'_{m+1}| is computed on exact
    columns using the reconstructed R'_{m+1}; it must be nonincreasing and
    itself pass the decay verdict.
    """
    X = F.system
    if X.label not in WITNESS_FAMILIES:
        return GeneratedReport(False, reason="not applicable: no R'_n witness for this family")
    recon = {n: reconstruct_tail_projection(F, n) for n in range(1, F.N + 1)}
    witness = max(linalg.op_norm(recon[n].to_dense() - F.Rp(n).to_dense()) for n in recon)
    rows, ok = [], witness <= tol
    for name, S in samples:
        rep = decay_scan(S, tol_ideal=tol_ideal)
        if rep.verdict != "in_ideal":
            rows.append({"op": name, "verdict": rep.verdict, "checked": False})
            continue
        seq = []
        for m in range(F.N):
            if not np.any(S.exact[m + 1:]):
                break
            seq.append((m, exact_tail_norm(S @ recon[m + 1], 0)))
        vals = np.array([v for _, v in seq])
        mono = bool(np.all(np.diff(vals) <= 1e-12 * max(1.0, vals.max())))
        verdict, _ = decay_verdict(seq, tol_ideal)
        good = mono and verdict == "in_ideal"
        ok = ok and good
        rows.append({"op": name, "verdict": rep.verdict, "checked": True,
                     "sequence": [[m, v] for m, v in seq], "passed": good})
    return GeneratedReport(True, witness, rows, ok)
