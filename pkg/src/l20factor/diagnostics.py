"""Executable optimality and growth-inequality checks.

This module turns the model's structure theory into concrete numbers:
subdifferential distances at a point, moduli for the local growth inequality
dist(0, d objective)^2 >= gamma * (objective gap), Monte Carlo probes of that
inequality near a certified optimum, the penalty threshold above which the
continuous surrogate shares the hard model's global minimizers, and
construction/certification of balanced optimal factor pairs.

All quantities here use the nu-weighted normalization (the unscaled
objective): fidelity weight nu = 1/lam and per-column regularizer weight 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg, penalty
from .linalg import Array
from .objective import FactorPair, ModelSpec, objective_gap
from .penalty import PenaltyParams
from .sampling import FullOperator


@dataclass(frozen=True)
class KLModuli:
    """Growth-inequality moduli and their hypothesis flags.

    gamma applies to the hard model, gamma_prime to the dc surrogate
    (NaN when no dc parameters were supplied). The flags record whether the
    restricted-condition-number and alpha-threshold hypotheses hold; the
    moduli are only meaningful when both are true.
    """

    gamma: float
    gamma_prime: float
    condition_ok: bool
    alpha_ok: bool


@dataclass(frozen=True)
class OptimalSetCertificate:
    """Checks that a pair is a balanced exact factorization of M.

    passed requires: relative product error <= tol_p, balance error <= tol_b,
    and both column counts equal to the numerical rank of the product.
    """

    product_error: float
    balance_error: float
    col_count_u: int
    col_count_v: int
    rank_product: int
    passed: bool


@dataclass(frozen=True)
class ProbeReport:
    """Outcome of a growth-inequality sampling probe.

    slack is the minimum of dist^2 - gamma*gap over kept samples (NaN when
    nothing was kept); kept/drawn expose the rejection rate of the
    gap-window filter.
    """

    slack: float
    kept: int
    drawn: int
    radius: float
    gamma: float
    status: str
    window: tuple[float, float] = (0.0, 0.5)

    def as_dict(self) -> dict:
        return {
            "slack": self.slack, "kept": self.kept, "drawn": self.drawn,
            "radius": self.radius, "gamma": self.gamma, "status": self.status,
            "window": list(self.window),
        }


def build_balanced_factors(X, kappa: int) -> FactorPair:
    """Balanced factor pair with UV^T = X (for kappa >= rank) via the SVD.

    U = P sqrt(S), V = Q sqrt(S) on the leading kappa singular triples;
    singular values at or below 1e-8 * sigma_1 are treated as zero so the
    column counts equal min(rank(X), kappa) exactly.
    """
    X = linalg.as_matrix(X)
    if not 1 <= kappa <= min(X.shape):
        raise ValueError(f"kappa must lie in [1, {min(X.shape)}], got {kappa}")
    dec = linalg.svd(X)
    sigma = dec.sigma[:kappa].copy()
    if sigma.size and sigma[0] > 0:
        sigma[sigma <= 1e-8 * dec.sigma[0]] = 0.0
    root = np.sqrt(sigma)
    return FactorPair(dec.P[:, :kappa] * root, dec.Q[:, :kappa] * root)


def certify_optimal_pair(W: FactorPair, M, tol_p: float = 1e-8,
                         tol_b: float | None = None) -> OptimalSetCertificate:
    """Certificate that W is a balanced exact factorization of M."""
    M = linalg.as_matrix(M, "M")
    nm = linalg.frobenius_norm(M)
    if nm == 0:
        raise ValueError("M must be nonzero to certify against")
    if tol_b is None:
        tol_b = 1e-8 * linalg.spectral_norm(M)
    prod = W.product()
    perr = float(np.linalg.norm(prod - M)) / nm
    berr = float(np.linalg.norm(W.U.T @ W.U - W.V.T @ W.V))
    rank = linalg.numerical_rank(linalg.svd(prod).sigma)
    cu = linalg.l20_norm(W.U)
    cv = linalg.l20_norm(W.V)
    passed = perr <= tol_p and berr <= tol_b and cu == cv == rank
    return OptimalSetCertificate(
        product_error=perr, balance_error=berr,
        col_count_u=cu, col_count_v=cv, rank_product=rank, passed=passed,
    )


def _check_data_consistency(spec: ModelSpec, M) -> Array:
    M = linalg.as_matrix(M, "M")
    if M.shape != (spec.op.m, spec.op.n):
        raise ValueError(f"M has shape {M.shape}, operator expects "
                         f"{(spec.op.m, spec.op.n)}")
    gap = float(np.linalg.norm(spec.op.apply(M) - spec.b))
    if gap > 1e-8 * (1.0 + float(np.linalg.norm(spec.b))):
        raise ValueError("b is not the measurement of M (||A(M) - b|| too large)")
    return M


def _nu_smooth_grads(spec: ModelSpec, W: FactorPair) -> tuple[Array, Array]:
    """nu-normalized gradients of the shared smooth part (fidelity + balance).

    This is the smooth component common to both models; the dc model's
    identity-shift term belongs to its column penalty in this normalization.
    """
    nu = spec.params.nu
    mu = spec.params.mu_tilde * nu
    r = spec.op.apply(W.product()) - spec.b
    R = spec.op.adjoint(r)
    bal = W.U.T @ W.U - W.V.T @ W.V
    G = nu * (R @ W.V) + mu * (W.U @ bal)
    H = nu * (R.T @ W.U) - mu * (W.V @ bal)
    return G, H


def subdiff_distance_psi(spec: ModelSpec, W: FactorPair, M) -> float:
    """Distance from 0 to the hard-model subdifferential at W.

    At a nonzero column the penalty contributes nothing (locally constant),
    so the component is exactly the smooth gradient; at a zero column the
    subdifferential covers all of space and the distance contribution is 0.
    """
    if spec.model != "l20":
        raise ValueError("subdiff_distance_psi requires an l20 spec")
    _check_data_consistency(spec, M)
    spec.check_shapes(W)
    G, H = _nu_smooth_grads(spec, W)
    mask_u = linalg.column_norms(W.U) > linalg.default_zero_tol(W.U)
    mask_v = linalg.column_norms(W.V) > linalg.default_zero_tol(W.V)
    total = float(np.sum(G[:, mask_u] ** 2)) + float(np.sum(H[:, mask_v] ** 2))
    return math.sqrt(total)


def subdiff_distance_theta_upper(spec: ModelSpec, W: FactorPair, M) -> float:
    """Bracket on the distance to the dc-model subdifferential at W.

    Nonzero columns use the exact component: smooth gradient plus the radial
    term (rho/2) theta'(rho s) u/s. Zero columns only admit an inclusion for
    the subdifferential, so they contribute the relaxed lower bound
    max(0, ||G_j|| - rho/2) each; the result is exact whenever every column
    is nonzero and a bracket otherwise (hence "upper" in the name: treat it
    as an upper estimate of stationarity quality).
    """
    if spec.model != "dc":
        raise ValueError("subdiff_distance_theta_upper requires a dc spec")
    _check_data_consistency(spec, M)
    spec.check_shapes(W)
    params = spec.params
    rho = params.rho
    G, H = _nu_smooth_grads(spec, W)
    total = 0.0
    for grad, F in ((G, W.U), (H, W.V)):
        norms = linalg.column_norms(F)
        tol = linalg.default_zero_tol(F)
        for j in range(F.shape[1]):
            if norms[j] > tol:
                radial = 0.5 * rho * penalty.theta_prime_plus(params, rho * norms[j])
                comp = grad[:, j] + radial * F[:, j] / norms[j]
                total += float(comp @ comp)
            else:
                total += max(0.0, float(np.linalg.norm(grad[:, j])) - 0.5 * rho) ** 2
    return math.sqrt(total)


def kl_moduli(sigma1: float, sigma_r: float, r: int, nu: float, mu: float,
              alpha: float, beta: float,
              params: PenaltyParams | None = None) -> KLModuli:
    """Growth moduli from the instance constants.

    gamma = min((nu/beta) C^2, 2 mu sigma_r) with
    C = (beta+alpha) sigma_r^4 / (128 sqrt(sigma1^3) (4 sigma1 + sigma_r)^2)
        - sqrt(sigma1) (beta - alpha);
    gamma_prime additionally caps at 32/rho^2 (penalty curvature constant 1).
    The flags check beta/alpha against the restricted-condition bound and
    alpha > 4/(nu sigma_r^2).
    """
    if not (sigma1 >= sigma_r > 0):
        raise ValueError(f"need sigma1 >= sigma_r > 0, got {sigma1}, {sigma_r}")
    if not (0 < alpha <= beta):
        raise ValueError(f"need 0 < alpha <= beta, got {alpha}, {beta}")
    if r < 1:
        raise ValueError(f"need r >= 1, got {r}")
    if nu <= 0 or mu <= 0:
        raise ValueError(f"need nu > 0 and mu > 0, got {nu}, {mu}")
    denom = 128.0 * math.sqrt(sigma1 ** 3) * (4.0 * sigma1 + sigma_r) ** 2
    C = (beta + alpha) * sigma_r ** 4 / denom - math.sqrt(sigma1) * (beta - alpha)
    arg1 = (nu / beta) * C ** 2
    arg2 = 2.0 * mu * sigma_r
    gamma = min(arg1, arg2)
    base = 128.0 * sigma1 ** 2 * (4.0 * sigma1 + sigma_r) ** 2
    condition_ok = beta / alpha < (base + sigma_r ** 4) / (base - sigma_r ** 4)
    alpha_ok = alpha > 4.0 / (nu * sigma_r ** 2)
    if params is not None and params.rho is not None:
        gamma_prime = min(arg1, arg2, 32.0 / params.rho ** 2)
    else:
        gamma_prime = math.nan
    return KLModuli(gamma=gamma, gamma_prime=gamma_prime,
                    condition_ok=condition_ok, alpha_ok=alpha_ok)


def probe_radius(spec: ModelSpec, M) -> float:
    """Sampling radius of the growth-inequality probe around an optimum of M."""
    M = linalg.as_matrix(M, "M")
    dec = linalg.svd(M)
    r = linalg.numerical_rank(dec.sigma)
    if r == 0:
        raise ValueError("M is numerically zero; no probe radius")
    sigma1 = float(dec.sigma[0])
    sigma_r = float(dec.sigma[r - 1])
    radius = 0.25 * math.sqrt(sigma_r)
    if spec.model == "dc":
        params = spec.params
        nu = params.nu
        mu = params.mu_tilde * nu
        op_norm = spec.op.operator_norm()
        radius = min(
            radius,
            params.breakpoint_low / params.rho,
            params.rho / (4.0 * math.sqrt(nu) * op_norm + 16.0 * mu * sigma1),
        )
    return radius


def kl_inequality_probe(spec: ModelSpec, Wbar: FactorPair, M, moduli: KLModuli,
                        samples: int = 100, seed: int = 0) -> ProbeReport:
    """Sample the growth inequality dist^2 >= gamma * gap near Wbar.

    Draws uniform perturbations of (U, V) in the Frobenius ball of the
    model's radius, keeps those whose nu-weighted objective gap lies in
    (0, 1/2), and reports the minimum slack dist^2 - gamma*gap. Nonnegative
    slack means the inequality held on every kept sample. Raises if a
    hypothesis flag is false; returns status "no-admissible-samples" when
    the window rejects everything within 200x oversampling.
    """
    if samples < 1:
        raise ValueError(f"samples must be positive, got {samples}")
    if not moduli.condition_ok:
        raise ValueError("hypothesis flag condition_ok is false; probe undefined")
    if not moduli.alpha_ok:
        raise ValueError("hypothesis flag alpha_ok is false; probe undefined")
    gamma = moduli.gamma if spec.model == "l20" else moduli.gamma_prime
    if not math.isfinite(gamma):
        raise ValueError(f"gamma is not finite for model {spec.model!r}")
    M = _check_data_consistency(spec, M)
    spec.check_shapes(Wbar)
    radius = probe_radius(spec, M)
    dist_fn = subdiff_distance_psi if spec.model == "l20" \
        else subdiff_distance_theta_upper

    m, n, kap = spec.op.m, spec.op.n, Wbar.kappa
    dim = (m + n) * kap
    rng = np.random.default_rng(seed)
    kept = 0
    drawn = 0
    min_slack = math.inf
    lo, hi = 0.0, 0.5
    while kept < samples and drawn < 200 * samples:
        drawn += 1
        D = rng.standard_normal((m + n, kap))
        scale = radius * rng.random() ** (1.0 / dim) / float(np.linalg.norm(D))
        W = FactorPair(Wbar.U + scale * D[:m], Wbar.V + scale * D[m:])
        gap = objective_gap(spec, W, Wbar)
        if not lo < gap < hi:
            continue
        kept += 1
        dist = dist_fn(spec, W, M)
        min_slack = min(min_slack, dist * dist - gamma * gap)
    if kept == 0:
        return ProbeReport(slack=math.nan, kept=0, drawn=drawn, radius=radius,
                           gamma=gamma, status="no-admissible-samples")
    return ProbeReport(slack=min_slack, kept=kept, drawn=drawn, radius=radius,
                       gamma=gamma, status="ok")


def exact_penalty_threshold(nu: float, mu: float, r: int, kappa: int,
                            sigma_r: float, alpha: float, op_norm: float,
                            params: PenaltyParams) -> float:
    """Penalty scale above which the surrogate shares the hard model's optima.

        rho_bar = max(1, sqrt(nu) ||A|| sqrt(kappa) / (sqrt(nu alpha) sigma_r
                  - sqrt(2)) * sqrt(1 + 2 sqrt(r)/sqrt(mu))) * (2a/(a+1))

    Requires sqrt(nu * alpha) * sigma_r > sqrt(2).
    """
    if nu <= 0 or mu <= 0 or alpha <= 0 or sigma_r <= 0 or op_norm <= 0:
        raise ValueError("nu, mu, alpha, sigma_r, op_norm must all be positive")
    if r < 1 or kappa < 1:
        raise ValueError(f"need r >= 1 and kappa >= 1, got r={r}, kappa={kappa}")
    lhs = math.sqrt(nu * alpha) * sigma_r
    if lhs <= math.sqrt(2.0):
        raise ValueError(
            f"threshold hypothesis fails: sqrt(nu*alpha)*sigma_r = {lhs:.6g} "
            f"<= sqrt(2) = {math.sqrt(2.0):.6g}"
        )
    core = math.sqrt(nu) * op_norm * math.sqrt(kappa) / (lhs - math.sqrt(2.0))
    core *= math.sqrt(1.0 + 2.0 * math.sqrt(r) / math.sqrt(mu))
    return max(1.0, core) * params.phi_prime_left_at_one


def ones_counterexample(nu: float, mu: float = 1.0) -> tuple[ModelSpec, FactorPair, Array]:
    """Hard-model instance with a critical point violating 1/2-exponent growth.

    M = 4E with E the 4x4 all-ones matrix under full sampling; (E, E) is a
    balanced critical point (zero residual, zero balance) that is not a
    local minimizer. Returns (spec, critical pair, M).
    """
    if nu <= 0 or mu <= 0:
        raise ValueError("nu and mu must be positive")
    E = np.ones((4, 4))
    M = 4.0 * E
    op = FullOperator(4, 4)
    b = op.apply(M)
    params = PenaltyParams(lam=1.0 / nu, mu_tilde=mu / nu)
    spec = ModelSpec(model="l20", op=op, b=b, params=params)
    return spec, FactorPair(E.copy(), E.copy()), M


def ones_counterexample_point(t: float) -> FactorPair:
    """Perturbed pair U(t) = V(t) = E + t*D on the counterexample's escape curve.

    D has the 2x2 block 2I - E in its top-left corner and zeros elsewhere;
    along this curve the objective gap grows like t^4 while the
    subdifferential distance decays like t^3, so dist^2/gap -> 0 as t -> 0.
    """
    E = np.ones((4, 4))
    D = np.zeros((4, 4))
    D[:2, :2] = 2.0 * np.eye(2) - np.ones((2, 2))
    U = E + t * D
    return FactorPair(U, U.copy())
