"""Scenario orchestration: sweep configs, work pools, and result tables.

A sweep config is a single TOML file describing the network, the
transformation, the base scenario, and optional parameter grids. Runs
are deterministic given the explicit seed list: every (grid point,
seed) task derives its randomness from its own seed, so worker count
and completion order never affect the output.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import IO

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .dynamics import (
    ScenarioConfig,
    Trajectory,
    long_run_average,
    run,
    sample_population,
)
from .equilibrium import RATIO_BIAS_FLOOR
from .errors import ConfigError, ValidityError
from .graph import (
    EdgeDirection,
    InfluenceMatrix,
    build_influence_matrix,
    generate_regular,
    parse_edge_list,
)
from .transform import (
    IdentityTransform,
    Transformation,
    load_transform,
    make_linear,
    one_off_bias,
)

RESULT_HEADER = [
    "phi", "lambda_mean", "kappa", "seed",
    "long_run_avg", "one_off_bias", "shift", "amp_ratio", "converged",
]

TRAJECTORIES_HEADER = ["phi", "seed", "t", "avg_opinion", "max_step_change"]


@dataclass(frozen=True)
class NetworkSpec:
    """Where the influence matrix comes from: a generator or an edge file."""

    kind: str
    n: int = 0
    k: int = 0
    path: Path | None = None
    direction: EdgeDirection = EdgeDirection.SOURCE_INFLUENCED_BY_TARGET
    undirected: bool = False


@dataclass(frozen=True)
class SweepSpec:
    """Everything one sweep needs, resolved and validated at load time."""

    network: NetworkSpec
    transform: Transformation
    base: ScenarioConfig
    phi_grid: tuple[float, ...]
    lambda_grid: tuple[float, ...]
    kappa_grid: tuple[float, ...]
    output_dir: Path


@dataclass(frozen=True)
class SweepRow:
    phi: float
    lambda_mean: float
    kappa: float
    seed: int
    long_run_avg: float
    one_off_bias: float
    shift: float
    amp_ratio: float
    converged: bool


@dataclass(frozen=True)
class SweepResult:
    """One row per (grid point, seed), sorted by (phi, lambda, kappa, seed).

    Shift columns compare each run against the phi = 0 run with the same
    (lambda_mean, kappa, seed); they are NaN when the sweep has no
    phi = 0 baseline.
    """

    rows: tuple[SweepRow, ...]
    has_baseline: bool


@dataclass(frozen=True)
class AmpCell:
    lambda_mean: float
    kappa: float
    mean_shift: float
    mean_one_off_bias: float
    amp_ratio: float


@dataclass(frozen=True)
class AmplificationTable:
    target_phi: float
    cells: tuple[AmpCell, ...]


# ---------------------------------------------------------------------------
# Config loading

_REQUIRED = object()


def _section(data: dict, name: str, required: bool = True) -> dict:
    if name not in data:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return {}
    value = data[name]
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table")
    return value


def _value(table: dict, section: str, key: str, kind, default=_REQUIRED):
    if key not in table:
        if default is _REQUIRED:
            raise ConfigError(f"[{section}].{key}: missing required key")
        return default
    v = table[key]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"[{section}].{key}: expected a number, got {v!r}")
        return float(v)
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"[{section}].{key}: expected an integer, got {v!r}")
        return v
    if kind is bool:
        if not isinstance(v, bool):
            raise ConfigError(f"[{section}].{key}: expected a boolean, got {v!r}")
        return v
    if kind is str:
        if not isinstance(v, str):
            raise ConfigError(f"[{section}].{key}: expected a string, got {v!r}")
        return v
    raise AssertionError(f"unhandled kind {kind}")


def _float_list(table: dict, section: str, key: str, default=_REQUIRED) -> tuple[float, ...]:
    if key not in table:
        if default is _REQUIRED:
            raise ConfigError(f"[{section}].{key}: missing required key")
        return default
    v = table[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"[{section}].{key}: expected a nonempty list of numbers")
    out = []
    for item in v:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"[{section}].{key}: expected numbers, got {item!r}")
        out.append(float(item))
    return tuple(out)


def _int_list(table: dict, section: str, key: str, default=_REQUIRED) -> tuple[int, ...]:
    if key not in table:
        if default is _REQUIRED:
            raise ConfigError(f"[{section}].{key}: missing required key")
        return default
    v = table[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"[{section}].{key}: expected a nonempty list of integers")
    for item in v:
        if isinstance(item, bool) or not isinstance(item, int):
            raise ConfigError(f"[{section}].{key}: expected integers, got {item!r}")
    return tuple(v)


def _load_network(table: dict, base_dir: Path) -> NetworkSpec:
    kind = _value(table, "network", "kind", str)
    if kind == "regular":
        n = _value(table, "network", "n", int)
        k = _value(table, "network", "k", int)
        return NetworkSpec(kind="regular", n=n, k=k)
    if kind == "file":
        raw = _value(table, "network", "path", str)
        path = (base_dir / raw).resolve() if not Path(raw).is_absolute() else Path(raw)
        if not path.is_file():
            raise ConfigError(f"[network].path: file not found: {path}")
        dir_raw = _value(
            table, "network", "direction", str,
            default=EdgeDirection.SOURCE_INFLUENCED_BY_TARGET.value,
        )
        try:
            direction = EdgeDirection(dir_raw)
        except ValueError:
            choices = ", ".join(d.value for d in EdgeDirection)
            raise ConfigError(
                f"[network].direction: must be one of {choices}, got {dir_raw!r}"
            ) from None
        undirected = _value(table, "network", "undirected", bool, default=False)
        return NetworkSpec(kind="file", path=path, direction=direction, undirected=undirected)
    raise ConfigError(f"[network].kind: must be 'regular' or 'file', got {kind!r}")


def _load_transform(table: dict, base_dir: Path) -> Transformation:
    kind = _value(table, "transform", "kind", str, default="identity")
    if kind == "identity":
        return IdentityTransform()
    if kind == "linear":
        m = _value(table, "transform", "m", float)
        b = _value(table, "transform", "b", float)
        try:
            return make_linear(m, b)
        except ValueError as exc:
            raise ConfigError(f"[transform]: {exc}") from None
    if kind == "file":
        raw = _value(table, "transform", "path", str)
        path = (base_dir / raw).resolve() if not Path(raw).is_absolute() else Path(raw)
        if not path.is_file():
            raise ConfigError(f"[transform].path: file not found: {path}")
        return load_transform(path)
    raise ConfigError(
        f"[transform].kind: must be 'identity', 'linear', or 'file', got {kind!r}"
    )


def load_sweep_spec(path) -> SweepSpec:
    """Parse and validate a sweep config file.

    Relative paths inside the config resolve against the config file's
    directory. Missing [sweep] lists default to singletons of the base
    scenario values, so the same file drives single runs and sweeps.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    base_dir = path.parent

    network = _load_network(_section(data, "network"), base_dir)
    transform = _load_transform(_section(data, "transform", required=False), base_dir)

    sc = _section(data, "scenario")
    group_means = _float_list(sc, "scenario", "group_means", default=(0.75, 0.25))
    if len(group_means) != 2:
        raise ConfigError(
            f"[scenario].group_means: expected two values, got {len(group_means)}"
        )
    try:
        base = ScenarioConfig(
            lambda_mean=_value(sc, "scenario", "lambda_mean", float),
            kappa=_value(sc, "scenario", "kappa", float),
            phi=_value(sc, "scenario", "phi", float, default=0.0),
            lambda_sd=_value(sc, "scenario", "lambda_sd", float, default=0.05),
            steps=_value(sc, "scenario", "steps", int, default=100),
            seeds=_int_list(sc, "scenario", "seeds", default=tuple(range(20))),
            group_means=(group_means[0], group_means[1]),
            group_sd=_value(sc, "scenario", "group_sd", float, default=0.1),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[scenario]: {exc}") from None

    sw = _section(data, "sweep", required=False)
    phi_grid = _float_list(sw, "sweep", "phi", default=(base.phi,))
    lambda_grid = _float_list(sw, "sweep", "lambda_mean", default=(base.lambda_mean,))
    kappa_grid = _float_list(sw, "sweep", "kappa", default=(base.kappa,))
    for phi in phi_grid:
        if not 0.0 <= phi <= 1.0:
            raise ConfigError(f"[sweep].phi: values must lie in [0, 1], got {phi!r}")
    for lam in lambda_grid:
        if not 0.0 < lam < 1.0:
            raise ConfigError(f"[sweep].lambda_mean: values must lie in (0, 1), got {lam!r}")
    for kap in kappa_grid:
        if not 0.0 <= kap <= 1.0:
            raise ConfigError(f"[sweep].kappa: values must lie in [0, 1], got {kap!r}")

    out = _section(data, "output", required=False)
    dir_raw = _value(out, "output", "dir", str, default="out")
    output_dir = (base_dir / dir_raw) if not Path(dir_raw).is_absolute() else Path(dir_raw)

    return SweepSpec(
        network=network,
        transform=transform,
        base=base,
        phi_grid=phi_grid,
        lambda_grid=lambda_grid,
        kappa_grid=kappa_grid,
        output_dir=output_dir,
    )


def build_network(spec: NetworkSpec) -> InfluenceMatrix:
    if spec.kind == "regular":
        return generate_regular(spec.n, spec.k)
    with open(spec.path, "r", encoding="utf-8") as fh:
        edges = parse_edge_list(fh, undirected=spec.undirected)
    return build_influence_matrix(edges, spec.direction)


# ---------------------------------------------------------------------------
# Execution

def _run_point(W: InfluenceMatrix, f: Transformation, base: ScenarioConfig, task):
    phi, lam_mean, kap, seed = task
    cfg = replace(base, phi=phi, lambda_mean=lam_mean, kappa=kap)
    pop = sample_population(cfg, W.n, seed)
    traj = run(pop, W, f, cfg.steps)
    return (
        phi, lam_mean, kap, seed,
        long_run_average(traj),
        one_off_bias(f, pop.innate),
        traj.stabilized(),
    )


_WORKER_STATE: dict = {}


def _worker_init(W, f, base):
    _WORKER_STATE["args"] = (W, f, base)


def _worker_run(task):
    W, f, base = _WORKER_STATE["args"]
    return _run_point(W, f, base, task)


def run_scenario(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Execute every (grid point, seed) run of the sweep.

    Shifts are paired per seed against the phi = 0 run at the same
    (lambda_mean, kappa); without a phi = 0 grid entry the shift and
    ratio columns are NaN. Output is independent of the worker count.
    """
    W = build_network(spec.network)
    f = spec.transform
    tasks = [
        (phi, lam, kap, seed)
        for phi in spec.phi_grid
        for lam in spec.lambda_grid
        for kap in spec.kappa_grid
        for seed in spec.base.seeds
    ]
    if workers <= 1:
        raws = [_run_point(W, f, spec.base, t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_worker_init, initargs=(W, f, spec.base)
        ) as pool:
            raws = list(pool.map(_worker_run, tasks, chunksize=chunk))

    has_baseline = any(phi == 0.0 for phi in spec.phi_grid)
    baseline = {
        (lam, kap, seed): lra
        for phi, lam, kap, seed, lra, _bias, _conv in raws
        if phi == 0.0
    }
    rows = []
    for phi, lam, kap, seed, lra, bias, conv in raws:
        if has_baseline:
            shift = lra - baseline[(lam, kap, seed)]
            ratio = shift / bias if abs(bias) >= RATIO_BIAS_FLOOR else float("nan")
        else:
            shift = float("nan")
            ratio = float("nan")
        rows.append(SweepRow(
            phi=phi, lambda_mean=lam, kappa=kap, seed=seed,
            long_run_avg=lra, one_off_bias=bias, shift=shift,
            amp_ratio=ratio, converged=conv,
        ))
    rows.sort(key=lambda r: (r.phi, r.lambda_mean, r.kappa, r.seed))
    return SweepResult(rows=tuple(rows), has_baseline=has_baseline)


def run_trajectories(spec: SweepSpec) -> list[tuple[float, int, Trajectory]]:
    """Full trajectories over the phi grid at the base (lambda, kappa)."""
    W = build_network(spec.network)
    out = []
    for phi in spec.phi_grid:
        cfg = replace(spec.base, phi=phi)
        for seed in spec.base.seeds:
            pop = sample_population(cfg, W.n, seed)
            out.append((phi, seed, run(pop, W, spec.transform, cfg.steps)))
    return out


def amplification_table(result: SweepResult, target_phi: float | None = None) -> AmplificationTable:
    """Per-(lambda, kappa) mean shift at the target phi and its ratio to
    the mean one-off bias over innate opinions.

    The target defaults to the largest phi present. Requires phi = 0
    baseline rows.
    """
    if not result.rows:
        raise ValidityError("empty sweep result")
    if not result.has_baseline or not any(r.phi == 0.0 for r in result.rows):
        raise ValidityError("missing baseline: sweep has no phi = 0 rows")
    nonzero = sorted({r.phi for r in result.rows if r.phi != 0.0})
    if target_phi is None:
        if not nonzero:
            raise ValidityError("no nonzero phi rows to compare against the baseline")
        target_phi = nonzero[-1]
    treat = [r for r in result.rows if r.phi == target_phi]
    if not treat:
        raise ValidityError(f"no rows at target phi {target_phi!r}")

    cells = []
    keys = sorted({(r.lambda_mean, r.kappa) for r in treat})
    for lam, kap in keys:
        sub = [r for r in treat if r.lambda_mean == lam and r.kappa == kap]
        mean_shift = float(np.mean([r.shift for r in sub]))
        mean_bias = float(np.mean([r.one_off_bias for r in sub]))
        if abs(mean_bias) >= RATIO_BIAS_FLOOR:
            ratio = mean_shift / mean_bias
        else:
            ratio = float("nan")
        cells.append(AmpCell(
            lambda_mean=lam, kappa=kap, mean_shift=mean_shift,
            mean_one_off_bias=mean_bias, amp_ratio=ratio,
        ))
    return AmplificationTable(target_phi=target_phi, cells=tuple(cells))


# ---------------------------------------------------------------------------
# Persistence

def _fmt(v: float) -> str:
    return repr(float(v))


def write_result_csv(result: SweepResult, stream: IO[str]) -> None:
    """Exact, reproducible text form: shortest round-trip floats, one
    row per (grid point, seed), rows pre-sorted by run_scenario."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RESULT_HEADER)
    for r in result.rows:
        writer.writerow([
            _fmt(r.phi), _fmt(r.lambda_mean), _fmt(r.kappa), str(r.seed),
            _fmt(r.long_run_avg), _fmt(r.one_off_bias), _fmt(r.shift),
            _fmt(r.amp_ratio), "true" if r.converged else "false",
        ])


def write_trajectories_csv(items: list[tuple[float, int, Trajectory]], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRAJECTORIES_HEADER)
    for phi, seed, traj in items:
        for t, a in enumerate(traj.avg_opinion):
            c = "nan" if t == 0 else _fmt(traj.max_step_change[t - 1])
            writer.writerow([_fmt(phi), str(seed), str(t), _fmt(a), c])


def write_amplification_csv(table: AmplificationTable, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["lambda_mean", "kappa", "mean_shift", "mean_one_off_bias", "amp_ratio"])
    for c in table.cells:
        writer.writerow([
            _fmt(c.lambda_mean), _fmt(c.kappa), _fmt(c.mean_shift),
            _fmt(c.mean_one_off_bias), _fmt(c.amp_ratio),
        ])
