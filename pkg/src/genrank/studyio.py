"""Reading long-format study tables, grouping them into configurations, and
writing generalizability reports.

One input row is one ``(alternative, condition, score)`` observation. Columns
other than the alternative and score columns play one of four roles: design
factors split the study into configurations, generalizability factors index
the conditions whose results form the sample, stochasticity factors are
averaged out, and held-constant factors must take a single value.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import GenrankError, InputError
from .kernels import KernelSpec, median_gamma, recommended_param
from .mmd import EmpiricalSample, mmd_curve_samples, n_grid
from .powerlaw import FREE
from .ranking import AlternativeSet, ranking_from_scores
from .utils.validation import check_level
from .workflow import MIN_N0, GenRequirement, assess_from_draws

ROLES = ("design", "generalizability", "stochasticity", "held-constant")
IMPUTE_WORST = "impute-worst-rank"
DROP_CONDITION = "drop-condition"
MISSING_POLICIES = (IMPUTE_WORST, DROP_CONDITION)
AGGREGATES = ("mean", "median")

# row fates used in the accounting
USED = "used"
FILTERED_CONDITION = "filtered: condition coverage"
FILTERED_ALTERNATIVE = "filtered: alternative coverage"
FILTERED_MISSING = "filtered: incomplete condition dropped"
FILTERED_CONFIG = "filtered: configuration excluded"

_ROW = "_row"


@dataclass(frozen=True)
class StudySchema:
    alternative_column: str
    score_column: str
    factor_roles: dict
    higher_is_better: bool = True
    tie_tol: float = 0.0
    missing_policy: str = IMPUTE_WORST
    coverage_row: float = 0.8
    coverage_col: float = 0.8
    aggregate: str = "mean"

    def __post_init__(self):
        roles = dict(self.factor_roles)
        bad = {c: r for c, r in roles.items() if r not in ROLES}
        if bad:
            raise InputError(f"unknown factor roles {bad}; choose from {ROLES}")
        for col in (self.alternative_column, self.score_column):
            if col in roles:
                raise InputError(f"column {col!r} cannot also be a factor")
        if self.alternative_column == self.score_column:
            raise InputError("alternative and score columns must differ")
        if not self.factors("generalizability"):
            raise InputError("the schema needs at least one generalizability factor")
        if self.missing_policy not in MISSING_POLICIES:
            raise InputError(f"missing_policy must be one of {MISSING_POLICIES}")
        if self.aggregate not in AGGREGATES:
            raise InputError(f"aggregate must be one of {AGGREGATES}")
        if not (self.tie_tol >= 0 and math.isfinite(self.tie_tol)):
            raise InputError(f"tie_tol must be a non-negative real, got {self.tie_tol}")
        check_level(self.coverage_row, name="coverage_row", closed=(True, True))
        check_level(self.coverage_col, name="coverage_col", closed=(True, True))
        object.__setattr__(self, "factor_roles", roles)

    def factors(self, role: str) -> list[str]:
        return [c for c, r in self.factor_roles.items() if r == role]

    @classmethod
    def from_dict(cls, d: dict) -> "StudySchema":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown schema fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "StudySchema":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise InputError(f"cannot read schema {path}: {exc.strerror}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"schema {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class StudyTable:
    """Parsed rows; ``_row`` holds the 1-based data row number of each row."""

    frame: pd.DataFrame
    held_constant: dict
    source: str | None = None

    def __len__(self):
        return len(self.frame)


def _rows(index_like) -> str:
    rows = [int(r) for r in index_like]
    shown = ", ".join(map(str, rows[:10]))
    return shown + (f" (+{len(rows) - 10} more)" if len(rows) > 10 else "")


def load_long_table(path, schema: StudySchema) -> StudyTable:
    """Read a long-format CSV; row numbers in errors count data rows from 1."""
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise InputError(f"input file not found: {path}") from None
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc
    needed = [schema.alternative_column, schema.score_column, *schema.factor_roles]
    missing = [c for c in needed if c not in df.columns]
    if missing:
        raise InputError(f"{path}: missing columns {missing}")
    df = df[needed].copy()
    df[_ROW] = np.arange(1, len(df) + 1)

    raw = df[schema.score_column].str.strip()
    scores = pd.to_numeric(raw.where(raw != ""), errors="coerce")
    bad = df.loc[scores.isna() & (raw != ""), _ROW]
    if len(bad):
        raise InputError(f"{path}: unparseable {schema.score_column!r} values at rows {_rows(bad)}")
    inf = df.loc[np.isinf(scores.fillna(0.0)), _ROW]
    if len(inf):
        raise InputError(f"{path}: non-finite scores at rows {_rows(inf)}")
    df[schema.score_column] = scores.astype(float)

    blank_alt = df.loc[df[schema.alternative_column].str.strip() == "", _ROW]
    if len(blank_alt):
        raise InputError(f"{path}: empty {schema.alternative_column!r} at rows {_rows(blank_alt)}")

    held = {}
    for col in schema.factors("held-constant"):
        levels = df[col].unique()
        if len(levels) > 1:
            first = df[col].iloc[0]
            rows = df.loc[df[col] != first, _ROW]
            raise InputError(
                f"{path}: held-constant column {col!r} takes {len(levels)} values; "
                f"differs from {first!r} at rows {_rows(rows)}"
            )
        held[col] = levels[0] if len(levels) else None
        df = df.drop(columns=col)
    return StudyTable(df, held, str(path))


@dataclass(frozen=True, eq=False)
class ConfigurationResults:
    """One configuration: a ranking per generalizability condition.

    ``scores`` keeps the aggregated, coverage-filtered score matrix
    (conditions x alternatives, NaN where missing) for score-vector kernels.
    """

    key: dict
    sample: EmpiricalSample
    scores: np.ndarray
    conditions: tuple
    n_imputed: int = 0

    @property
    def alternatives(self) -> AlternativeSet:
        return self.sample.alternatives

    @property
    def N(self) -> int:
        return self.sample.N

    def label(self) -> str:
        return ",".join(f"{k}={v}" for k, v in self.key.items()) or "all"

    def score_vectors(self, higher_is_better: bool = True) -> np.ndarray:
        """Scores with each missing entry set to the worst observed score of its condition."""
        S = self.scores.copy()
        for i, row in enumerate(S):
            miss = np.isnan(row)
            if miss.any():
                row[miss] = np.nanmin(row) if higher_is_better else np.nanmax(row)
        return S


@dataclass(frozen=True)
class ExcludedConfiguration:
    key: dict
    reason: str


@dataclass(eq=False)
class StudyConfigurations:
    """Usable configurations plus a record of what was dropped and why."""

    configs: list
    excluded: list
    row_status: pd.Series
    higher_is_better: bool = True

    def __iter__(self):
        return iter(self.configs)

    def __len__(self):
        return len(self.configs)

    def __getitem__(self, i):
        return self.configs[i]

    def accounting(self) -> dict[str, int]:
        return {str(k): int(v) for k, v in self.row_status.value_counts().sort_index().items()}


def build_configurations(table: StudyTable, schema: StudySchema) -> StudyConfigurations:
    """Group rows into configurations and turn each condition into a ranking.

    Steps per configuration: aggregate over stochasticity factors, drop
    conditions and then alternatives below the coverage thresholds, rank
    by score, and either place missing alternatives in one shared worst tier
    or drop incomplete conditions.
    """
    df = table.frame
    alt, score = schema.alternative_column, schema.score_column
    design = schema.factors("design")
    gen = schema.factors("generalizability")
    sort_cols = design + gen + [alt] + schema.factors("stochasticity")
    df = df.sort_values(sort_cols + [_ROW], kind="stable")
    status = pd.Series(USED, index=df[_ROW].to_numpy(), dtype=object).sort_index()

    configs, excluded = [], []
    groups = df.groupby(design, sort=True) if design else [((), df)]
    for levels, part in groups:
        levels = levels if isinstance(levels, tuple) else (levels,)
        key = dict(zip(design, (str(v) for v in levels)))
        agg = part.groupby(gen + [alt], sort=True)[score].agg(schema.aggregate)
        M = agg.unstack(alt)
        cond_index = list(M.index)
        observed = M.notna().to_numpy()
        # (condition, alternative) -> input rows aggregated into that cell
        cell_rows = {}
        for k, rows in part.groupby(gen + [alt], sort=True)[_ROW]:
            k = k if isinstance(k, tuple) else (k,)
            cond = k[:-1] if len(gen) > 1 else k[0]
            cell_rows[(cond, k[-1])] = list(rows)

        def mark(conds, alts, reason):
            conds, alts = set(conds), set(alts)
            for (c, a), rows in cell_rows.items():
                if c in conds or a in alts:
                    for r in rows:
                        if status[r] == USED:
                            status[r] = reason

        row_cov = observed.mean(axis=1) if observed.size else np.zeros(len(M))
        keep_c = row_cov >= schema.coverage_row - 1e-12
        mark([c for c, k in zip(cond_index, keep_c) if not k], [], FILTERED_CONDITION)
        M = M.loc[keep_c]
        observed = observed[keep_c]
        if len(M):
            col_cov = observed.mean(axis=0)
            keep_a = col_cov >= schema.coverage_col - 1e-12
        else:
            keep_a = np.zeros(M.shape[1], dtype=bool)
        mark([], [a for a, k in zip(M.columns, keep_a) if not k], FILTERED_ALTERNATIVE)
        M = M.loc[:, keep_a]
        if schema.missing_policy == DROP_CONDITION and len(M):
            complete = M.notna().all(axis=1).to_numpy()
            mark([c for c, k in zip(M.index, complete) if not k], [], FILTERED_MISSING)
            M = M.loc[complete]
        # a condition with every remaining alternative missing cannot be ranked
        any_obs = M.notna().any(axis=1).to_numpy() if M.shape[1] else np.zeros(len(M), bool)
        mark([c for c, k in zip(M.index, any_obs) if not k], [], FILTERED_CONDITION)
        M = M.loc[any_obs]

        if len(M) < 2 or M.shape[1] < 1:
            reason = f"{len(M)} usable condition(s), {M.shape[1]} alternative(s) after filtering"
            warnings.warn(f"configuration {key or 'all'} excluded: {reason}", RuntimeWarning, stacklevel=2)
            excluded.append(ExcludedConfiguration(key, reason))
            mark(cond_index, [], FILTERED_CONFIG)
            continue

        S = M.to_numpy(dtype=float)
        rankings, n_imp = [], 0
        for row in S:
            miss = np.isnan(row)
            r = np.empty(len(row), dtype=np.int64)
            obs = ranking_from_scores(row[~miss], schema.higher_is_better, schema.tie_tol)
            r[~miss] = obs.ranks
            r[miss] = obs.n_tiers
            n_imp += int(miss.sum())
            rankings.append(r)
        alts = AlternativeSet(tuple(str(a) for a in M.columns))
        sample = EmpiricalSample(np.array(rankings), "ranking", alts, label=",".join(map(str, key.values())))
        conds = tuple(c if isinstance(c, tuple) else (c,) for c in M.index)
        configs.append(ConfigurationResults(key, sample, S, conds, n_imp))
    return StudyConfigurations(configs, excluded, status, schema.higher_is_better)


@dataclass(frozen=True)
class KernelConfig:
    """Kernel choice independent of the number of alternatives.

    ``target`` may be an alternative name or index. Missing ``nu`` takes the
    recommended value; missing ``gamma`` uses the median heuristic.
    """

    family: str
    nu: float | None = None
    gamma: float | None = None
    topk: int | None = None
    target: str | int | None = None

    def __post_init__(self):
        if self.target is not None and self.family != "borda":
            raise InputError("a target alternative only applies to the borda kernel")
        if self.topk is not None and self.family != "jaccard":
            raise InputError("top-k only applies to the jaccard kernel")
        if self.nu is not None and self.family not in ("borda", "mallows"):
            raise InputError(f"nu does not apply to the {self.family} kernel")
        if self.gamma is not None and self.family != "rbf":
            raise InputError("gamma only applies to the rbf kernel")

    def resolve(self, config: ConfigurationResults, higher_is_better: bool = True) -> KernelSpec:
        n_a = config.sample.n_a
        if self.family == "borda":
            target = self.target if self.target is not None else 0
            if isinstance(target, str) and not target.lstrip("-").isdigit():
                target = config.alternatives.index(target)
            return KernelSpec.borda(n_a, int(target), self.nu)
        if self.family == "jaccard":
            return KernelSpec.jaccard(n_a, self.topk if self.topk is not None else 1)
        if self.family == "mallows":
            return KernelSpec.mallows(n_a, self.nu)
        if self.family == "rbf":
            gamma = self.gamma
            if gamma is None:
                gamma = median_gamma(config.score_vectors(higher_is_better))
            return KernelSpec.rbf(n_a, gamma)
        recommended_param(self.family, n_a)  # raises for unknown families
        raise InputError(f"unknown kernel family {self.family!r}")

    def sample_for(self, config: ConfigurationResults, higher_is_better: bool = True) -> EmpiricalSample:
        if self.family == "rbf":
            return EmpiricalSample(config.score_vectors(higher_is_better), "vector", config.alternatives)
        return config.sample


REPORT_FIELDS = (
    "config_key",
    "N",
    "n_hat",
    "alpha_star",
    "delta_star",
    "eps_star",
    "kernel",
    "generalizable",
    "curve",
    "fit",
    "seed",
    "error",
)


@dataclass(frozen=True)
class GeneralizabilityReport:
    config_key: dict
    N: int
    n_hat: int | None
    alpha_star: float
    delta_star: float
    eps_star: float | None
    kernel: str
    generalizable: bool | None
    curve: list = field(default_factory=list)
    fit: dict | None = None
    seed: int | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in REPORT_FIELDS}


def analyze_study(
    configs,
    kernel: KernelConfig | KernelSpec,
    alpha_star: float = 0.95,
    delta_star: float = 0.05,
    n_rep: int = 100,
    seed: int | None = 0,
    mode: str = "subsample",
    fit_mode: str = FREE,
    threads: int = 1,
    alpha_grid=None,
    delta_grid=None,
    higher_is_better: bool | None = None,
) -> list[GeneralizabilityReport]:
    """Assess every configuration; one report per configuration and (alpha, delta).

    MMD draws are computed once per configuration and shared by every grid
    point. A configuration that fails yields reports carrying ``error``
    instead of stopping the run.
    """
    if higher_is_better is None:
        higher_is_better = getattr(configs, "higher_is_better", True)
    alphas = [float(a) for a in (alpha_grid if alpha_grid is not None else [alpha_star])]
    deltas = [float(d) for d in (delta_grid if delta_grid is not None else [delta_star])]
    reports = []
    for config in configs:
        key = dict(config.key)
        try:
            if isinstance(kernel, KernelSpec):
                spec = kernel
                sample = config.sample if spec.on_rankings else EmpiricalSample(
                    config.score_vectors(higher_is_better), "vector", config.alternatives
                )
            else:
                spec = kernel.resolve(config, higher_is_better)
                sample = kernel.sample_for(config, higher_is_better)
            if sample.N < MIN_N0:
                raise InputError(f"need at least {MIN_N0} conditions, got {sample.N}")
            draws = mmd_curve_samples(sample, spec, n_grid(sample.N), n_rep, mode, seed, threads)
        except GenrankError as exc:
            for a in alphas:
                for d in deltas:
                    reports.append(
                        GeneralizabilityReport(key, config.N, None, a, d, None, kernel_label(kernel), None,
                                               seed=seed, error=str(exc))
                    )
            continue
        for a in alphas:
            for d in deltas:
                try:
                    req = GenRequirement.for_kernel(spec, a, d)
                    res = assess_from_draws(draws, sample.N, req, fit_mode)
                except GenrankError as exc:
                    reports.append(
                        GeneralizabilityReport(key, sample.N, None, a, d, None, spec.describe(), None,
                                               seed=seed, error=str(exc))
                    )
                    continue
                fit = None
                if res.fit is not None:
                    fit = {"beta0": res.fit.beta0, "beta1": res.fit.beta1, "residual": res.fit.residual}
                reports.append(
                    GeneralizabilityReport(
                        key, sample.N, int(res.n_hat), a, d, req.eps_star, spec.describe(),
                        bool(res.generalizable), [[int(n), float(q)] for n, q in res.curve.points], fit, seed,
                    )
                )
    return reports


def kernel_label(kernel) -> str:
    if isinstance(kernel, KernelSpec):
        return kernel.describe()
    return kernel.family


def summarize_reports(reports) -> list[dict]:
    """Distribution of n_hat across configurations for each (alpha, delta)."""
    out = []
    keys = sorted({(r.alpha_star, r.delta_star) for r in reports})
    for a, d in keys:
        vals = np.array([r.n_hat for r in reports if (r.alpha_star, r.delta_star) == (a, d) and r.n_hat is not None])
        failed = sum(1 for r in reports if (r.alpha_star, r.delta_star) == (a, d) and r.n_hat is None)
        row = {"alpha_star": a, "delta_star": d, "configs": len(vals), "failed": failed}
        if len(vals):
            q = np.percentile(vals, [0, 25, 50, 75, 100])
            row.update(zip(("min", "q1", "median", "q3", "max"), (float(x) for x in q)))
            gen = [r.generalizable for r in reports if (r.alpha_star, r.delta_star) == (a, d) and r.n_hat is not None]
            row["generalizable"] = int(sum(gen))
        out.append(row)
    return out


def _config_columns(reports) -> list[str]:
    cols = []
    for r in reports:
        for k in r.config_key:
            if k not in cols:
                cols.append(k)
    return cols


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(reports, fmt: str = "json", path=None) -> str:
    """Serialize reports as JSON or CSV; write to ``path`` when given.

    CSV flattens ``config_key`` into ``config.<factor>`` columns and stores
    ``curve`` and ``fit`` as JSON strings. Floats use their shortest exact
    representation, so both formats round-trip bit for bit.
    """
    reports = list(reports)
    if fmt == "json":
        text = json.dumps([r.to_dict() for r in reports], indent=2) + "\n"
    elif fmt == "csv":
        cfg_cols = _config_columns(reports)
        header = [f"config.{c}" for c in cfg_cols] + [f for f in REPORT_FIELDS if f != "config_key"]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for r in reports:
            d = r.to_dict()
            row = [r.config_key.get(c, "") for c in cfg_cols]
            for f in REPORT_FIELDS[1:]:
                v = d[f]
                if f in ("curve", "fit"):
                    row.append(json.dumps(v))
                else:
                    row.append(_fmt(v))
            writer.writerow(row)
        text = buf.getvalue()
    else:
        raise InputError(f"format must be 'json' or 'csv', got {fmt!r}")
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write report to {path}: {exc.strerror}") from exc
    return text


def _parse_csv_value(f, s):
    if f in ("curve", "fit"):
        return json.loads(s)
    if s == "":
        return None
    if f in ("N", "n_hat", "seed"):
        return int(s)
    if f in ("alpha_star", "delta_star", "eps_star"):
        return float(s)
    if f == "generalizable":
        return s == "true"
    return s


def load_report(path, fmt: str | None = None) -> list[GeneralizabilityReport]:
    """Read reports written by :func:`emit_report`."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "json"
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read report {path}: {exc.strerror}") from exc
    if fmt == "json":
        return [GeneralizabilityReport(**d) for d in json.loads(text)]
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        return []
    header, out = rows[0], []
    for row in rows[1:]:
        d = dict(zip(header, row))
        key = {h[len("config."):]: d[h] for h in header if h.startswith("config.") and d[h] != ""}
        fields = {f: _parse_csv_value(f, d[f]) for f in REPORT_FIELDS[1:]}
        out.append(GeneralizabilityReport(key, **fields))
    return out
