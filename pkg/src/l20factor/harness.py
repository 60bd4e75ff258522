"""Experiment orchestration: instance generation, runs, summaries, files.

Everything the command line does lives here as plain functions so tests can
drive it directly. File formats:

* instance directory: meta.json, M.npy, b.npy, and mask.txt for mask
  operators (the Gaussian operator is regenerated from its seed in meta).
* solution directory: solution.npz (U, V), trace.csv, summary.json.
* trace.csv columns: iter, obj_scaled, obj_paper, resU, resV, nnzU, nnzV,
  distU_final, distV_final, time_s. Floats use %.17g so re-parsing is exact.

All files are written atomically (temp file + rename).
"""

from __future__ import annotations

import ast
import dataclasses
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import linalg
from .diagnostics import (build_balanced_factors, certify_optimal_pair,
                          exact_penalty_threshold, kl_inequality_probe, kl_moduli)
from .objective import FactorPair, ModelSpec
from .penalty import PenaltyParams
from .sampling import (FullOperator, GaussianOperator, SamplingOperator,
                       UniformMaskOperator, estimate_restricted_eigs, load_mask,
                       save_mask)
from .solver import SolveTrace, SolverConfig, TraceRecord, solve

OPERATOR_KINDS = ("full", "mask", "gaussian")
CSV_COLUMNS = ("iter", "obj_scaled", "obj_paper", "resU", "resV", "nnzU",
               "nnzV", "distU_final", "distV_final", "time_s")

DEFAULT_L20_LAMBDA_RULE = "55 * specnorm(X0)"
DEFAULT_DC_LAMBDA_RULE = "((a+1)/2) * (0.03 * specnorm(X0))^2"
DEFAULT_DC_RHO_RULE = "2 / ((a+1) * 0.03 * specnorm(X0))"

# Offset separating the Gaussian operator's entry stream from the stream
# that draws M, so the measurements stay independent of the signal.
_OPERATOR_SEED_OFFSET = 1000003


class ConfigError(ValueError):
    """Invalid configuration or rule expression (CLI exit category: config)."""


@dataclass
class ExperimentConfig:
    """One experiment: shapes, operator, model, parameter rules, solver knobs."""

    m: int = 300
    n: int = 300
    r: int = 5
    kappa: int = 15
    sample_ratio: float = 0.25
    operator_kind: str = "mask"
    model: str = "l20"
    a: float = 3.7
    mu_tilde: float = 1e-3
    lambda_rule: str | None = None
    rho_rule: str | None = None
    epsilon: float = 1e-10
    max_iters: int = 20000
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.r <= self.kappa <= min(self.m, self.n):
            raise ConfigError(
                f"need 1 <= r <= kappa <= min(m, n), got r={self.r}, "
                f"kappa={self.kappa}, m={self.m}, n={self.n}"
            )
        if not 0 < self.sample_ratio <= 1:
            raise ConfigError(f"sample_ratio must lie in (0, 1], got {self.sample_ratio}")
        if round(self.sample_ratio * self.m * self.n) < 1:
            raise ConfigError("sample_ratio gives an empty measurement set")
        if self.operator_kind not in OPERATOR_KINDS:
            raise ConfigError(f"operator_kind must be one of {OPERATOR_KINDS}")
        if self.model not in ("l20", "dc"):
            raise ConfigError(f"model must be 'l20' or 'dc', got {self.model!r}")
        if not self.a > 1:
            raise ConfigError(f"a must exceed 1, got {self.a}")
        if self.mu_tilde < 0:
            raise ConfigError(f"mu_tilde must be nonnegative, got {self.mu_tilde}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")


_CONFIG_FIELDS = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
_INT_FIELDS = {"m", "n", "r", "kappa", "max_iters", "seed"}
_FLOAT_FIELDS = {"sample_ratio", "a", "mu_tilde", "epsilon"}


def parse_config_file(path: str) -> dict:
    """Read a key=value config file; '#' starts a comment; keys match fields."""
    out: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_FIELDS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def build_config(*mappings) -> ExperimentConfig:
    """Merge string/typed mappings left to right into an ExperimentConfig."""
    merged: dict = {}
    for mapping in mappings:
        for key, value in mapping.items():
            if value is None:
                continue
            if key not in _CONFIG_FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(value, str) and key in _INT_FIELDS:
                try:
                    value = int(value)
                except ValueError as err:
                    raise ConfigError(f"{key} must be an integer: {err}") from err
            elif isinstance(value, str) and key in _FLOAT_FIELDS:
                try:
                    value = float(value)
                except ValueError as err:
                    raise ConfigError(f"{key} must be a number: {err}") from err
            merged[key] = value
    try:
        return ExperimentConfig(**merged)
    except TypeError as err:
        raise ConfigError(str(err)) from err


_BIN_OPS = {
    ast.Add: lambda x, y: x + y,
    ast.Sub: lambda x, y: x - y,
    ast.Mult: lambda x, y: x * y,
    ast.Div: lambda x, y: x / y,
    ast.Pow: lambda x, y: x ** y,
}


def eval_rule(rule: str, a: float, specnorm_x0: float) -> float:
    """Evaluate a parameter rule such as "0.15 * specnorm(X0)".

    The grammar is numeric literals, + - * / and ^ (power), parentheses,
    the name ``a``, and the call ``specnorm(X0)``. Anything else is a
    ConfigError. Plain constants ("0.5") are accepted.
    """
    text = rule.replace("^", "**")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as err:
        raise ConfigError(f"cannot parse rule {rule!r}: {err}") from err

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
                return float(node.value)
            raise ConfigError(f"rule {rule!r}: non-numeric literal {node.value!r}")
        if isinstance(node, ast.Name):
            if node.id == "a":
                return float(a)
            raise ConfigError(f"rule {rule!r}: unknown name {node.id!r} "
                              "(only 'a' and 'specnorm(X0)' are available)")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            val = ev(node.operand)
            return val if isinstance(node.op, ast.UAdd) else -val
        if isinstance(node, ast.BinOp) and type(node.op) in _BIN_OPS:
            return _BIN_OPS[type(node.op)](ev(node.left), ev(node.right))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id == "specnorm" and not node.keywords
                and len(node.args) == 1 and isinstance(node.args[0], ast.Name)
                and node.args[0].id == "X0"):
            return float(specnorm_x0)
        raise ConfigError(f"rule {rule!r}: unsupported syntax")

    try:
        value = ev(tree)
    except ZeroDivisionError as err:
        raise ConfigError(f"rule {rule!r}: division by zero") from err
    except OverflowError as err:
        raise ConfigError(f"rule {rule!r} evaluated to a non-finite value") from err
    if not math.isfinite(value):
        raise ConfigError(f"rule {rule!r} evaluated to a non-finite value")
    return value


def gen_instance(cfg: ExperimentConfig):
    """Draw (M, op, b): M = G1 G2^T with Gaussian factors, then measurements.

    The draw order (G1, G2, then the mask) is part of the determinism
    contract; changing it invalidates seeded expectations in tests.
    """
    rng = np.random.default_rng(cfg.seed)
    G1 = rng.standard_normal((cfg.m, cfg.r))
    G2 = rng.standard_normal((cfg.n, cfg.r))
    M = G1 @ G2.T
    if cfg.operator_kind == "full":
        op: SamplingOperator = FullOperator(cfg.m, cfg.n)
    elif cfg.operator_kind == "mask":
        op = UniformMaskOperator.from_ratio(cfg.m, cfg.n, cfg.sample_ratio, rng)
    else:
        p = int(round(cfg.sample_ratio * cfg.m * cfg.n))
        op = GaussianOperator(cfg.m, cfg.n, p, seed=cfg.seed + _OPERATOR_SEED_OFFSET)
    return M, op, op.apply(M)


def build_model_spec(cfg: ExperimentConfig, op: SamplingOperator, b) -> ModelSpec:
    """Resolve the parameter rules against X0 = A*(b) and assemble the spec."""
    x0_norm = linalg.spectral_norm(op.adjoint(b))
    lam_rule = cfg.lambda_rule
    if lam_rule is None:
        lam_rule = DEFAULT_L20_LAMBDA_RULE if cfg.model == "l20" \
            else DEFAULT_DC_LAMBDA_RULE
    lam = eval_rule(lam_rule, cfg.a, x0_norm)
    if lam < 0:
        raise ConfigError(f"lambda rule {lam_rule!r} evaluated to {lam} < 0")
    rho = None
    if cfg.model == "dc":
        rho_rule = cfg.rho_rule if cfg.rho_rule is not None else DEFAULT_DC_RHO_RULE
        rho = eval_rule(rho_rule, cfg.a, x0_norm)
        if rho <= 0:
            raise ConfigError(f"rho rule {rho_rule!r} evaluated to {rho} <= 0")
    params = PenaltyParams(lam=lam, mu_tilde=cfg.mu_tilde, a=cfg.a, rho=rho)
    return ModelSpec(model=cfg.model, op=op, b=b, params=params)


def relative_error(W: FactorPair, M) -> float:
    M = linalg.as_matrix(M, "M")
    return float(np.linalg.norm(W.product() - M) / np.linalg.norm(M))


def fit_loglinear(xs, ys) -> tuple[float, float]:
    """Least-squares fit of log(y) vs x; returns (slope, r_squared).

    Points with nonpositive or non-finite y are dropped; fewer than two
    surviving points give (nan, nan); a constant log-series gives R^2 = 1.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = np.isfinite(ys) & (ys > 0) & np.isfinite(xs)
    xs, ys = xs[keep], ys[keep]
    if xs.size < 2:
        return math.nan, math.nan
    logs = np.log(ys)
    slope, intercept = np.polyfit(xs, logs, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((logs - pred) ** 2))
    ss_tot = float(np.sum((logs - np.mean(logs)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(r2)


def convergence_fit(trace: SolveTrace) -> tuple[float, float]:
    """Slope/R^2 of log ||U^k - U^f||_F over the last half of iterations."""
    recs = trace.records
    if not recs:
        return math.nan, math.nan
    half = recs[len(recs) // 2:]
    xs = [rec.iteration for rec in half]
    ys = [rec.dist_u_final for rec in half]
    return fit_loglinear(xs, ys)


def _atomic_bytes(path: str, payload: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)) or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_text(path: str, text: str) -> None:
    _atomic_bytes(path, text.encode())


def _atomic_json(path: str, obj) -> None:
    _atomic_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _atomic_array(path: str, save_fn) -> None:
    import io

    buf = io.BytesIO()
    save_fn(buf)
    _atomic_bytes(path, buf.getvalue())


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_trace_csv(trace: SolveTrace, path: str) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for rec in trace.records:
        lines.append(",".join(_fmt(v) for v in (
            rec.iteration, rec.obj_scaled, rec.obj_paper, rec.res_u, rec.res_v,
            rec.nnz_u, rec.nnz_v, rec.dist_u_final, rec.dist_v_final, rec.time_s,
        )))
    _atomic_text(path, "\n".join(lines) + "\n")


def read_trace_csv(path: str) -> list[TraceRecord]:
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError(f"{path}: unexpected header")
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ValueError(f"{path}: malformed row {line!r}")
        records.append(TraceRecord(
            iteration=int(parts[0]),
            obj_scaled=float(parts[1]), obj_paper=float(parts[2]),
            res_u=float(parts[3]), res_v=float(parts[4]),
            nnz_u=int(parts[5]), nnz_v=int(parts[6]),
            dist_u_final=float(parts[7]), dist_v_final=float(parts[8]),
            time_s=float(parts[9]),
        ))
    return records


def save_instance(out_dir: str, cfg: ExperimentConfig, M, op: SamplingOperator,
                  b) -> None:
    os.makedirs(out_dir, exist_ok=True)
    meta = {
        "schema": "l20factor-instance-v1",
        "m": op.m, "n": op.n, "p": op.p,
        "r": cfg.r, "kappa": cfg.kappa,
        "sample_ratio": cfg.sample_ratio,
        "operator_kind": op.kind,
        "seed": cfg.seed,
    }
    if isinstance(op, GaussianOperator):
        meta["operator_seed"] = op.seed
    _atomic_array(os.path.join(out_dir, "M.npy"), lambda f: np.save(f, M))
    _atomic_array(os.path.join(out_dir, "b.npy"), lambda f: np.save(f, b))
    if isinstance(op, UniformMaskOperator):
        save_mask(op, os.path.join(out_dir, "mask.txt"))
    _atomic_json(os.path.join(out_dir, "meta.json"), meta)


def load_instance(in_dir: str):
    """Returns (meta, M, op, b) from a directory written by save_instance."""
    with open(os.path.join(in_dir, "meta.json")) as fh:
        meta = json.load(fh)
    M = np.load(os.path.join(in_dir, "M.npy"))
    b = np.load(os.path.join(in_dir, "b.npy"))
    kind = meta["operator_kind"]
    if kind == "full":
        op: SamplingOperator = FullOperator(meta["m"], meta["n"])
    elif kind == "mask":
        op = load_mask(os.path.join(in_dir, "mask.txt"))
    elif kind == "gaussian":
        op = GaussianOperator(meta["m"], meta["n"], meta["p"],
                              seed=meta["operator_seed"])
    else:
        raise ValueError(f"unknown operator kind {kind!r} in {in_dir}")
    return meta, M, op, b


def save_solution(out_dir: str, W: FactorPair, trace: SolveTrace,
                  summary: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _atomic_array(os.path.join(out_dir, "solution.npz"),
                  lambda f: np.savez(f, U=W.U, V=W.V))
    write_trace_csv(trace, os.path.join(out_dir, "trace.csv"))
    _atomic_json(os.path.join(out_dir, "summary.json"), summary)


def load_solution(in_dir: str):
    """Returns (W, summary) from a directory written by save_solution."""
    with np.load(os.path.join(in_dir, "solution.npz")) as data:
        W = FactorPair(data["U"], data["V"])
    with open(os.path.join(in_dir, "summary.json")) as fh:
        summary = json.load(fh)
    return W, summary


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None,
                   instance=None) -> dict:
    """Generate (or reuse) an instance, solve it, summarize, optionally save.

    Returns a bundle with the summary dict plus in-memory objects (spec, W,
    trace) for callers that keep computing.
    """
    started = time.monotonic()
    if instance is None:
        M, op, b = gen_instance(cfg)
    else:
        M, op, b = instance
    spec = build_model_spec(cfg, op, b)
    solver_cfg = SolverConfig(epsilon=cfg.epsilon, max_iters=cfg.max_iters,
                              seed=cfg.seed)
    W, trace, reason = solve(spec, solver_cfg, "auto", kappa=cfg.kappa)
    slope, r2 = convergence_fit(trace)
    summary = {
        "schema": "l20factor-summary-v1",
        "model": cfg.model,
        "m": cfg.m, "n": cfg.n, "r": cfg.r, "kappa": cfg.kappa,
        "sample_ratio": cfg.sample_ratio,
        "operator_kind": cfg.operator_kind,
        "seed": cfg.seed,
        "a": cfg.a,
        "mu_tilde": cfg.mu_tilde,
        "lambda": spec.params.lam,
        "rho": spec.params.rho,
        "epsilon": cfg.epsilon,
        "max_iters": cfg.max_iters,
        "iterations": len(trace.records),
        "reason": reason,
        "rel_error": relative_error(W, M),
        "nnz_u": linalg.l20_norm(W.U),
        "nnz_v": linalg.l20_norm(W.V),
        "slope": slope,
        "r2": r2,
        "time_s": time.monotonic() - started,
    }
    if out_dir is not None:
        save_solution(out_dir, W, trace, summary)
    return {"summary": summary, "spec": spec, "W": W, "trace": trace, "M": M}


def run_fig1(cfg: ExperimentConfig, out_dir: str | None = None) -> dict:
    """Single hard-model run with convergence-curve summary."""
    if cfg.model != "l20":
        raise ConfigError("fig1 requires model=l20")
    return run_experiment(cfg, out_dir)


def run_fig2(cfg: ExperimentConfig, out_dir: str | None = None) -> dict:
    """Single dc-model run with convergence-curve summary."""
    if cfg.model != "dc":
        raise ConfigError("fig2 requires model=dc")
    return run_experiment(cfg, out_dir)


def run_fig3(cfg: ExperimentConfig, c_values, out_dir: str | None = None) -> dict:
    """Sweep the regularization scale: one run per c, shared instance.

    For the hard model c enters as lambda = c * ||X0||; for the dc model via
    the quadratic lambda rule and matched rho rule. Emits sweep.csv with one
    row per c.
    """
    c_values = [float(c) for c in c_values]
    if len(c_values) < 2:
        raise ConfigError("fig3 needs at least 2 c values")
    instance = gen_instance(cfg)
    runs = []
    for c in c_values:
        if cfg.model == "l20":
            overrides = {"lambda_rule": f"{c!r} * specnorm(X0)"}
        else:
            overrides = {
                "lambda_rule": f"((a+1)/2) * ({c!r} * specnorm(X0))^2",
                "rho_rule": f"2 / ((a+1) * {c!r} * specnorm(X0))",
            }
        sub = dataclasses.replace(cfg, **overrides)
        sub_dir = None if out_dir is None else os.path.join(out_dir, f"c_{c:g}")
        bundle = run_experiment(sub, sub_dir, instance=instance)
        runs.append({"c": c, **bundle["summary"]})
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        cols = ("c", "lambda", "rho", "nnz_u", "nnz_v", "rel_error", "slope",
                "r2", "iterations", "reason", "time_s")
        lines = [",".join(cols)]
        for row in runs:
            lines.append(",".join(
                str(row[c]) if c == "reason" else
                ("" if row[c] is None else _fmt(row[c]))
                for c in cols
            ))
        _atomic_text(os.path.join(out_dir, "sweep.csv"), "\n".join(lines) + "\n")
    return {"runs": runs, "instance": instance}


def diagnose(instance_dir: str, solution_dir: str, out_dir: str | None = None,
             probe_samples: int = 100, eig_samples: int = 6, seed: int = 0) -> dict:
    """Certify a stored solution and evaluate the growth-inequality theory.

    Emits diagnosis.json with: the optimal-pair certificate, restricted
    eigenvalue estimates, growth moduli and hypothesis flags, the exact
    penalty threshold, and a sampling probe of the growth inequality around
    the balanced optimum of M. Monte Carlo eigenvalue brackets are one-sided,
    so the moduli use the optimistic pair (alpha_upper, beta_lower): if even
    those fail the hypotheses, the theory certainly does not apply.
    """
    meta, M, op, b = load_instance(instance_dir)
    W, summary = load_solution(solution_dir)
    params = PenaltyParams(
        lam=summary["lambda"], mu_tilde=summary["mu_tilde"],
        a=summary["a"], rho=summary.get("rho"),
    )
    spec = ModelSpec(model=summary["model"], op=op, b=b, params=params)

    report: dict = {"schema": "l20factor-diagnosis-v1"}
    cert = certify_optimal_pair(W, M)
    report["certificate"] = dataclasses.asdict(cert)
    report["rel_error"] = relative_error(W, M)

    dec = linalg.svd(M)
    rank = linalg.numerical_rank(dec.sigma)
    sigma1 = float(dec.sigma[0])
    sigma_r = float(dec.sigma[rank - 1]) if rank else 0.0
    report["spectrum"] = {"rank": rank, "sigma1": sigma1, "sigma_r": sigma_r}

    k = min(2 * max(rank, 1), min(op.m, op.n))
    eigs = estimate_restricted_eigs(op, k, samples=eig_samples, seed=seed)
    report["restricted_eigs"] = dataclasses.asdict(eigs)
    alpha, beta = eigs.alpha_upper, max(eigs.beta_lower, eigs.alpha_upper)

    lam = params.lam
    nu = 1.0 / lam
    mu = params.mu_tilde * nu
    if rank == 0 or alpha <= 0:
        report["moduli"] = {"status": "skipped",
                            "message": "degenerate spectrum or alpha estimate"}
        report["threshold"] = {"status": "skipped", "message": "no usable alpha"}
        report["probe"] = {"status": "skipped", "message": "no moduli"}
    else:
        moduli = kl_moduli(sigma1, sigma_r, rank, nu, mu, alpha, beta,
                           params if spec.model == "dc" else None)
        report["moduli"] = dataclasses.asdict(moduli)
        try:
            rho_bar = exact_penalty_threshold(
                nu, mu, rank, W.kappa, sigma_r, alpha, op.operator_norm(), params)
            report["threshold"] = {"status": "ok", "rho_bar": rho_bar}
        except ValueError as err:
            report["threshold"] = {"status": "hypothesis-failed", "message": str(err)}
        try:
            Wbar = build_balanced_factors(M, W.kappa)
            probe = kl_inequality_probe(spec, Wbar, M, moduli,
                                        samples=probe_samples, seed=seed)
            report["probe"] = {"status": probe.status, **probe.as_dict()}
        except ValueError as err:
            report["probe"] = {"status": "skipped", "message": str(err)}

    if out_dir is None:
        out_dir = solution_dir
    os.makedirs(out_dir, exist_ok=True)
    _atomic_json(os.path.join(out_dir, "diagnosis.json"), report)
    return report
