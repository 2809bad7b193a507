"""Seeded experiments over (n, gamma) grids with deterministic persistence.

Every run writes a CSV and a JSON mirror atomically (temp file + rename).
Rows carry either an exact rational value or a standard error, never a bare
estimate.  Reruns with the same config and seed are byte-identical, so the
``ms`` column of the pinned CSV schema is left empty; wall-clock timing would
break reproducibility (see the repo docs).
"""

from __future__ import annotations

import csv
import json
import math
import os
import statistics
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .analysis import (
    banded_rows_matrix_tensor,
    brute_force_zero_prob,
    count_factorizations,
    exact_rank_deficiency_prob,
    full_rank_prob_bound,
    prob_zero_tensor,
    UnsupportedModelError,
)
from .codec import length_bound_nats, measure_scheme
from .model import (
    BudgetExceededError,
    CpdzipError,
    DEFAULT_BUDGET,
    ModelSpec,
    load_model,
    theoretical_threshold,
)
from .rational import rational_str, to_fraction
from .rng import sample_tuple, stream_rng
from .tensors import rank_exact, zero_tensor
from .typicality import TypicalityParams, mode_space_size, spectrum_samples

KINDS = ("threshold", "full-rank", "spectrum", "census", "codec-error")

CSV_HEADER = [
    "kind", "n", "gamma", "statistic", "estimate", "exact",
    "bound", "stderr", "trials", "seed", "ms",
]

_WILSON_Z = 1.96


@dataclass(frozen=True)
class ExperimentConfig:
    model_path: str
    kind: str
    n_grid: tuple[int, ...]
    gamma_grid: tuple[Fraction, ...]
    trials: int
    seed: int
    out: str
    budget: int = DEFAULT_BUDGET
    emit_samples: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CpdzipError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if not self.n_grid:
            raise CpdzipError("n_grid must be non-empty")
        if not self.gamma_grid:
            raise CpdzipError("gamma_grid must be non-empty")
        if self.trials < 1:
            raise CpdzipError("trials must be >= 1")


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        return ExperimentConfig(
            model_path=str(data["model"]),
            kind=str(data["kind"]),
            n_grid=tuple(int(n) for n in data["n_grid"]),
            gamma_grid=tuple(to_fraction(g) for g in data.get("gamma_grid", ["1/10"])),
            trials=int(data.get("trials", 1)),
            seed=int(data["seed"]),
            out=str(data["out"]),
            budget=int(data.get("budget", DEFAULT_BUDGET)),
            emit_samples=bool(data.get("emit_samples", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CpdzipError(f"malformed experiment config: {exc}") from exc


@dataclass(frozen=True)
class ResultRow:
    kind: str
    n: int
    gamma: Fraction | None
    statistic: str
    estimate: float | None
    exact: Fraction | None
    bound: Fraction | float | None
    stderr: float | None
    trials: int | None
    seed: int

    def csv_fields(self) -> list[str]:
        def num(v):
            return "" if v is None else repr(float(v))

        return [
            self.kind,
            str(self.n),
            "" if self.gamma is None else rational_str(self.gamma),
            self.statistic,
            num(self.estimate),
            "" if self.exact is None else rational_str(self.exact),
            ""
            if self.bound is None
            else (rational_str(self.bound) if isinstance(self.bound, Fraction) else repr(float(self.bound))),
            num(self.stderr),
            "" if self.trials is None else str(self.trials),
            str(self.seed),
            "",  # ms: reserved; left empty for byte-reproducible reruns
        ]

    def json_obj(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "gamma": None if self.gamma is None else rational_str(self.gamma),
            "statistic": self.statistic,
            "estimate": self.estimate,
            "exact": None if self.exact is None else rational_str(self.exact),
            "bound": None
            if self.bound is None
            else (rational_str(self.bound) if isinstance(self.bound, Fraction) else float(self.bound)),
            "stderr": self.stderr,
            "trials": self.trials,
            "seed": self.seed,
            "ms": None,
        }


@dataclass(frozen=True)
class FullRankEstimate:
    mode: int
    successes: int
    trials: int
    estimate: float
    stderr: float
    wilson_low: float
    wilson_high: float
    bound: Fraction  # 1 - zeta_i


def estimate_full_rank_prob(m: ModelSpec, trials: int, seed: int) -> list[FullRankEstimate]:
    """Monte-Carlo estimate of Pr{rank(X_i) = R} per mode with Wilson interval."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    modes = m.independent_matrices
    successes = [0] * modes
    r = m.components
    for t in range(trials):
        ft = sample_tuple(m, stream_rng(seed, t))
        for i in range(modes):
            if rank_exact(ft.matrices[i].rows) == r:
                successes[i] += 1
    bound = full_rank_prob_bound(m)
    out = []
    for i in range(m.order):
        src = 0 if m.supersymmetric else i
        s = successes[src]
        p_hat = s / trials
        se = math.sqrt(p_hat * (1 - p_hat) / trials)
        z2 = _WILSON_Z**2
        center = (p_hat + z2 / (2 * trials)) / (1 + z2 / trials)
        half = (
            _WILSON_Z
            * math.sqrt(p_hat * (1 - p_hat) / trials + z2 / (4 * trials**2))
            / (1 + z2 / trials)
        )
        out.append(
            FullRankEstimate(
                mode=i + 1,
                successes=s,
                trials=trials,
                estimate=p_hat,
                stderr=se,
                wilson_low=max(0.0, center - half),
                wilson_high=min(1.0, center + half),
                bound=1 - bound.zeta_per_mode[i],
            )
        )
    return out


class _GridPoint:
    """Re-raise budget refusals with the offending grid point identified."""

    def __init__(self, kind: str, n: int, gamma: Fraction | None = None):
        self.kind, self.n, self.gamma = kind, n, gamma

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and issubclass(exc_type, BudgetExceededError):
            where = f"n={self.n}" + (
                f", gamma={rational_str(self.gamma)}" if self.gamma is not None else ""
            )
            raise CpdzipError(f"{self.kind} experiment at {where}: {exc}") from exc
        return False


def _rows_threshold(cfg: ExperimentConfig, base: ModelSpec) -> list[ResultRow]:
    from .codec import build_codebook

    rows = []
    for n in cfg.n_grid:
        m = base.with_dim(n)
        for gamma in cfg.gamma_grid:
            p = TypicalityParams(gamma, n)
            with _GridPoint(cfg.kind, n, gamma):
                cb = build_codebook(m, p, cfg.budget)
            rows.append(
                ResultRow(
                    cfg.kind, n, gamma, "log_M_per_n",
                    estimate=cb.log_size_nats / n,
                    exact=Fraction(cb.size),
                    bound=length_bound_nats(m, p) / n,
                    stderr=None, trials=None, seed=cfg.seed,
                )
            )
    return rows


def _rows_codec_error(cfg: ExperimentConfig, base: ModelSpec) -> list[ResultRow]:
    rows = []
    for n in cfg.n_grid:
        m = base.with_dim(n)
        for gamma in cfg.gamma_grid:
            with _GridPoint(cfg.kind, n, gamma):
                report = measure_scheme(m, TypicalityParams(gamma, n), cfg.budget)
            rows.append(
                ResultRow(
                    cfg.kind, n, gamma, "exact_error_prob",
                    estimate=float(report.exact_error_prob),
                    exact=report.exact_error_prob,
                    bound=report.error_prob_bound,
                    stderr=None, trials=None, seed=cfg.seed,
                )
            )
            rows.append(
                ResultRow(
                    cfg.kind, n, gamma, "log_M_per_n",
                    estimate=report.threshold_per_n,
                    exact=Fraction(report.codebook_size),
                    bound=report.length_bound_nats / n,
                    stderr=None, trials=None, seed=cfg.seed,
                )
            )
    return rows


def _rows_spectrum(cfg: ExperimentConfig, base: ModelSpec) -> tuple[list[ResultRow], dict[int, list[float]]]:
    rows = []
    samples_by_n = {}
    for n in cfg.n_grid:
        m = base.with_dim(n)
        samples = spectrum_samples(m, cfg.trials, cfg.seed)
        samples_by_n[n] = samples
        mean = statistics.fmean(samples)
        var = statistics.pvariance(samples, mu=mean)
        se = math.sqrt(var / cfg.trials)
        rows.append(
            ResultRow(
                cfg.kind, n, None, "spectrum_mean",
                estimate=mean, exact=None,
                bound=theoretical_threshold(m),
                stderr=se, trials=cfg.trials, seed=cfg.seed,
            )
        )
        var_se = var * math.sqrt(2 / max(1, cfg.trials - 1))
        rows.append(
            ResultRow(
                cfg.kind, n, None, "spectrum_var",
                estimate=var, exact=None, bound=None,
                stderr=var_se, trials=cfg.trials, seed=cfg.seed,
            )
        )
    return rows, samples_by_n


def _rows_full_rank(cfg: ExperimentConfig, base: ModelSpec) -> list[ResultRow]:
    rows = []
    for n in cfg.n_grid:
        m = base.with_dim(n)
        estimates = estimate_full_rank_prob(m, cfg.trials, cfg.seed)
        for est in estimates:
            exact = None
            if mode_space_size(m, est.mode) <= min(cfg.budget, 1 << 16):
                exact = 1 - exact_rank_deficiency_prob(m, est.mode, cfg.budget)
            rows.append(
                ResultRow(
                    cfg.kind, n, None, f"full_rank_prob_mode_{est.mode}",
                    estimate=est.estimate, exact=exact, bound=est.bound,
                    stderr=est.stderr, trials=est.trials, seed=cfg.seed,
                )
            )
    return rows


def _rows_census(cfg: ExperimentConfig, base: ModelSpec) -> list[ResultRow]:
    sign = all(a.symbols == (-1, 1) for a in base.alphabets)
    is_cubic = base.supersymmetric and base.order == 3 and base.components == 2 and sign
    is_bilinear = not base.supersymmetric and base.order == 2 and base.components == 2 and sign
    if not (is_cubic or is_bilinear):
        raise UnsupportedModelError(
            "census experiments support only the two documented example shapes"
        )
    rows = []
    for n in cfg.n_grid:
        m = base.with_dim(n)
        with _GridPoint(cfg.kind, n):
            census = count_factorizations(zero_tensor(m.order, n), m, budget=cfg.budget)
        expected = 2**n if is_cubic else 2 ** (2 * n + 1)
        rows.append(
            ResultRow(
                cfg.kind, n, None, "zero_tensor_count",
                estimate=float(census.total_count),
                exact=Fraction(expected), bound=None,
                stderr=None, trials=None, seed=cfg.seed,
            )
        )
        rows.append(
            ResultRow(
                cfg.kind, n, None, "zero_tensor_prob_closed_minus_brute",
                estimate=0.0,
                exact=prob_zero_tensor(m) - brute_force_zero_prob(m, cfg.budget),
                bound=None, stderr=None, trials=None, seed=cfg.seed,
            )
        )
        if is_bilinear and n >= 2:
            for m_rows in range(1, n):
                t = banded_rows_matrix_tensor(n, m_rows)
                c = count_factorizations(t, m, budget=cfg.budget)
                rows.append(
                    ResultRow(
                        cfg.kind, n, None, f"banded_count_m_{m_rows}",
                        estimate=float(c.total_count),
                        exact=Fraction(2 ** (n - m_rows + 2)), bound=None,
                        stderr=None, trials=None, seed=cfg.seed,
                    )
                )
    return rows


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_results(rows: list[ResultRow], out_base: str | Path) -> tuple[Path, Path]:
    base = Path(out_base)
    csv_path = base.with_suffix(".csv")
    json_path = base.with_suffix(".json")
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields())
    _atomic_write_text(csv_path, buf.getvalue())
    payload = json.dumps([r.json_obj() for r in rows], indent=2, sort_keys=True) + "\n"
    _atomic_write_text(json_path, payload)
    return csv_path, json_path


def write_samples_csv(samples_by_n: dict[int, list[float]], out_base: str | Path) -> Path:
    base = Path(out_base)
    path = base.with_name(base.name + ".samples.csv")
    lines = ["n,trial,value"]
    for n in sorted(samples_by_n):
        for t, v in enumerate(samples_by_n[n]):
            lines.append(f"{n},{t},{v!r}")
    _atomic_write_text(path, "\n".join(lines) + "\n")
    return path


def run_experiment(cfg: ExperimentConfig) -> tuple[Path, Path]:
    """Run one experiment; writes <out>.csv and <out>.json atomically."""
    base = load_model(cfg.model_path)
    samples_by_n: dict[int, list[float]] = {}
    if cfg.kind == "threshold":
        rows = _rows_threshold(cfg, base)
    elif cfg.kind == "codec-error":
        rows = _rows_codec_error(cfg, base)
    elif cfg.kind == "spectrum":
        rows, samples_by_n = _rows_spectrum(cfg, base)
    elif cfg.kind == "full-rank":
        rows = _rows_full_rank(cfg, base)
    else:
        rows = _rows_census(cfg, base)
    paths = write_results(rows, cfg.out)
    if cfg.kind == "spectrum" and cfg.emit_samples:
        write_samples_csv(samples_by_n, cfg.out)
    return paths
