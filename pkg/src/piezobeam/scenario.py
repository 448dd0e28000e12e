"""Scenario driver: YAML configuration, runs, outputs, refinement studies and gain sweeps.

An empty configuration reproduces the sample-beam scenario (EB_NL, N = 60,
T = 300, full control). Output of one run:

    config.yaml       resolved configuration (re-running it reproduces the run)
    timeseries.csv    one row per output step; floats written with repr
    snapshot_*.csv    nodal fields and velocities, ghost nodes included
    summary.json      energy ratios, decay fits, control effort
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml
from scipy.integrate import trapezoid

from .controllers import ControllerGains, ControlMode
from .core import BeamState, Coefficients, GridSpec, InitialCondition, MaterialParams, ModelTag, make_initial_state
from .energy import boundary_power, compute_energy, viscous_power
from .integrator import IntegratorConfig, IntegratorError, Stepper
from .models import ModelOptions, assemble
from .oracles import ManufacturedCase, RichardsonResult, mms_forcing, richardson_order

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "RunRecord",
    "DecayFit",
    "OrderReport",
    "load_config",
    "apply_overrides",
    "run_scenario",
    "decay_fit",
    "convergence_study",
    "sweep",
    "read_snapshot",
]

# Gains selected by the coarse grid search over {0.1, 1, 10}^3 (see docs/gains.md).
DEFAULT_GAINS = dict(c1=10.0, c2=0.1, c3=0.1, c4=0.1, c5=0.1, c6=0.1)


class ConfigError(ValueError):
    pass


def _build(cls, data: Mapping[str, Any] | None, section: str, **fixed):
    data = dict(data or {})
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {sorted(unknown)}")
    data.update(fixed)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{section}' section: {exc}") from exc


@dataclass(frozen=True)
class ScenarioConfig:
    model: ModelTag = ModelTag.EB_NL
    material: MaterialParams = field(default_factory=MaterialParams.sample)
    N: int = 60
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    controller: ControllerGains = field(default_factory=lambda: ControllerGains(**DEFAULT_GAINS))
    initial: InitialCondition = field(default_factory=InitialCondition)
    options: ModelOptions | None = None  # None: model default (FD model runs unfiltered)
    T_final: float = 300.0
    output_every: int = 100
    snapshot_times: tuple[float, ...] = (0.0, 300.0)
    output_dir: str | None = None

    def __post_init__(self):
        if not self.T_final > 0:
            raise ConfigError("T_final must be positive")
        if self.output_every < 1:
            raise ConfigError("output_every must be a positive step count")
        try:
            GridSpec(self.N)
            self.material.validate_for(self.model)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.N)

    @property
    def model_options(self) -> ModelOptions:
        if self.options is not None:
            return self.options
        if self.model is ModelTag.EB_FD_LIN:
            return ModelOptions(viscosity=False)
        return ModelOptions()

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None) -> "ScenarioConfig":
        data = dict(data or {})
        allowed = {
            "model", "material", "grid", "integrator", "controller",
            "initial_condition", "options", "T_final", "output",
        }  # fmt: skip
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
        try:
            model = ModelTag(data.get("model", "EB_NL"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        material_overrides = dict(data.get("material") or {})
        bad = set(material_overrides) - {f.name for f in dataclasses.fields(MaterialParams)}
        if bad:
            raise ConfigError(f"unknown key(s) in 'material': {sorted(bad)}")
        try:
            material = MaterialParams.sample(**material_overrides)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid 'material' section: {exc}") from exc
        grid = dict(data.get("grid") or {})
        if set(grid) - {"N"}:
            raise ConfigError("'grid' accepts only N")
        gains = dict(DEFAULT_GAINS)
        gains.update(data.get("controller") or {})
        ic = dict(data.get("initial_condition") or {})
        if "fields" in ic:
            ic["fields"] = tuple(ic["fields"])
        out = dict(data.get("output") or {})
        if set(out) - {"every", "snapshot_times", "dir"}:
            raise ConfigError("'output' accepts every, snapshot_times and dir")
        T_final = float(data.get("T_final", 300.0))
        snaps = tuple(float(s) for s in out.get("snapshot_times", (0.0, T_final)))
        opts = data.get("options")
        try:
            N = int(grid.get("N", 60))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid N must be an integer: {exc}") from exc
        return cls(
            model=model,
            material=material,
            N=N,
            integrator=_build(IntegratorConfig, data.get("integrator"), "integrator"),
            controller=_build(ControllerGains, gains, "controller"),
            initial=_build(InitialCondition, ic, "initial_condition"),
            options=None if opts is None else _build(ModelOptions, opts, "options"),
            T_final=T_final,
            output_every=int(out.get("every", 100)),
            snapshot_times=snaps,
            output_dir=out.get("dir"),
        )

    def to_dict(self) -> dict[str, Any]:
        """Fully resolved, YAML-safe echo; ``from_dict`` of it rebuilds this config."""
        material = {f.name: getattr(self.material, f.name) for f in dataclasses.fields(MaterialParams)}
        gains = dataclasses.asdict(self.controller)
        gains["mode"] = self.controller.mode.value
        ic = dataclasses.asdict(self.initial)
        ic["fields"] = list(self.initial.fields)
        out = {
            "model": self.model.value,
            "material": material,
            "grid": {"N": self.N},
            "integrator": dataclasses.asdict(self.integrator),
            "controller": gains,
            "initial_condition": ic,
            "T_final": self.T_final,
            "output": {"every": self.output_every, "snapshot_times": list(self.snapshot_times), "dir": self.output_dir},
        }
        if self.options is not None:
            out["options"] = dataclasses.asdict(self.options)
        return out

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def _numbers(node):
    """YAML 1.1 reads ``1e7`` (no dot) as a string; turn such scalars into floats."""
    if isinstance(node, dict):
        return {k: _numbers(v) for k, v in node.items()}
    if isinstance(node, list):
        return [_numbers(v) for v in node]
    if isinstance(node, str) and _NUMBER.match(node.strip()):
        return float(node)
    return node


def _parse_value(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def apply_overrides(data: Mapping[str, Any] | None, overrides) -> dict[str, Any]:
    """Apply ``section.key=value`` strings (values parsed as YAML scalars/lists)."""
    out = json.loads(json.dumps(data or {}))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} descends into a scalar")
        node[parts[-1]] = _parse_value(value)
    return out


def load_config(path: str | Path | None = None, overrides=()) -> ScenarioConfig:
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
    return ScenarioConfig.from_dict(_numbers(apply_overrides(data, overrides)))


# -- fits --------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    rate: float  # E ~ exp(-rate * t)
    exponent: float  # E ~ t**(-exponent)
    r2_exponential: float
    r2_polynomial: float

    @property
    def prefers_exponential(self) -> bool:
        return self.r2_exponential > self.r2_polynomial


def _linfit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def decay_fit(t, energy, window: tuple[float, float] | None = None) -> DecayFit:
    """Least-squares fits of log E against t and against log t over ``window``."""
    t = np.asarray(t, dtype=float)
    e = np.asarray(energy, dtype=float)
    lo, hi = window if window is not None else (t[t > 0].min() if np.any(t > 0) else 0.0, t.max())
    sel = (t >= lo) & (t <= hi) & (t > 0)
    if sel.sum() < 3:
        raise ValueError("decay window holds fewer than three positive-time samples")
    if np.any(e[sel] <= 0):
        raise ValueError("energy samples in the window must be positive")
    le = np.log(e[sel])
    s_exp, r2_exp = _linfit(t[sel], le)
    s_pol, r2_pol = _linfit(np.log(t[sel]), le)
    return DecayFit(rate=-s_exp, exponent=-s_pol, r2_exponential=r2_exp, r2_polynomial=r2_pol)


# -- runs ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    config: ScenarioConfig
    columns: list[str]
    rows: list[list[float]]
    snapshots: dict[float, BeamState]
    summary: dict[str, Any]
    complete: bool = True
    error: str | None = None

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows])


def _columns(tag: ModelTag) -> list[str]:
    cols = ["t", "E_total", "E_kinetic", "E_stretch", "E_bend"]
    if tag.family == "MT":
        cols.append("E_shear")
    if tag is ModelTag.EB_FD_LIN:
        cols += ["E_magnetic", "E_electric"]
    cols += ["E_axial", "E_visc_dissip", "W_boundary", "V", "m", "g"]
    if tag is ModelTag.EB_FD_LIN:
        cols.append("g1")
    cols += ["vdot_tip", "wdot_tip"]
    if tag.family == "MT":
        cols.append("psidot_tip")
    if tag is ModelTag.EB_FD_LIN:
        cols.append("pdot_tip")
    return cols


def _row(tag, t, e, dissip, work, ctrl, state, N) -> list[float]:
    row = [t, e.total, e.kinetic, e.stretching, e.bending]
    if tag.family == "MT":
        row.append(e.shear)
    if tag is ModelTag.EB_FD_LIN:
        row += [e.magnetic, e.electric]
    row += [e.axial, dissip, work, ctrl.V, ctrl.m, ctrl.g]
    if tag is ModelTag.EB_FD_LIN:
        row.append(ctrl.g1)
    row += [state.rates["v"][N + 1], state.rates["w"][N + 1]]
    if tag.family == "MT":
        row.append(state.rates["psi"][N + 1])
    if tag is ModelTag.EB_FD_LIN:
        row.append(state.rates["p"][N + 1])
    return [float(v) for v in row]


def _fit_or_none(t, e):
    try:
        f = decay_fit(t, e)
    except (ValueError, np.linalg.LinAlgError):
        return None
    return dataclasses.asdict(f)


def _summarize(record: RunRecord) -> dict[str, Any]:
    t = record.column("t")
    summary: dict[str, Any] = {"complete": record.complete, "t_end": float(t[-1]), "rows": len(t)}
    if record.error:
        summary["error"] = record.error
    for name in ("E_total", "E_axial", "E_stretch", "E_bend", "E_shear"):
        if name not in record.columns:
            continue
        e = record.column(name)
        key = name[2:].lower()
        summary[f"initial_{key}"] = float(e[0])
        summary[f"final_{key}"] = float(e[-1])
        summary[f"ratio_{key}"] = float(e[-1] / e[0]) if e[0] else None
        summary[f"fit_{key}"] = _fit_or_none(t, e)
    summary["visc_dissipated"] = float(record.column("E_visc_dissip")[-1])
    summary["boundary_work"] = float(record.column("W_boundary")[-1])
    for ch in ("V", "m", "g"):
        u = record.column(ch)
        summary[f"effort_{ch}"] = float(trapezoid(u**2, t)) if len(t) > 1 else 0.0
    return summary


def _snapshot_steps(cfg: ScenarioConfig, nsteps: int) -> dict[int, float]:
    steps = {}
    for s in cfg.snapshot_times:
        k = int(round(s / cfg.integrator.dt))
        if 0 <= k <= nsteps:
            steps[k] = k * cfg.integrator.dt
    return steps


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None, forcing=None) -> RunRecord:
    """Integrate one scenario; write the output files when ``out_dir`` is given.

    Solver failures do not raise: the record is marked incomplete, partial
    outputs are written, and ``record.error`` carries the diagnostics.
    """
    tag, grid, dt = cfg.model, cfg.grid, cfg.integrator.dt
    coeffs = Coefficients.from_params(cfg.material)
    options = cfg.model_options
    system = assemble(tag, coeffs, grid, options=options, gains=cfg.controller, forcing=forcing)
    state = system.close_state(make_initial_state(grid, cfg.initial, tag))
    nsteps = int(round(cfg.T_final / dt))
    snap_steps = _snapshot_steps(cfg, nsteps)
    N = grid.N

    def powers(st, ctrl):
        return viscous_power(st, coeffs, grid, options), boundary_power(st, ctrl, grid, cfg.controller)

    y = system.pack(state)
    ev = system.evaluate(0.0, y)
    pv, pb = powers(ev.state, ev.controls)
    dissip = work = 0.0
    rows = [_row(tag, 0.0, compute_energy(ev.state, coeffs, grid), dissip, work, ev.controls, ev.state, N)]
    snaps = {0.0: ev.state} if 0 in snap_steps else {}
    stepper = Stepper(system, cfg.integrator)
    fy = None
    complete, error = True, None
    for k in range(1, nsteps + 1):
        try:
            y, fy = stepper.step((k - 1) * dt, y, fy)
            if not np.all(np.isfinite(y)):
                raise IntegratorError("state became non-finite", k * dt, [])
        except (IntegratorError, np.linalg.LinAlgError) as exc:
            complete, error = False, str(exc)
            break
        t = k * dt
        ev = system.evaluate(t, y)
        pv1, pb1 = powers(ev.state, ev.controls)
        dissip -= 0.5 * dt * (pv + pv1)
        work += 0.5 * dt * (pb + pb1)
        pv, pb = pv1, pb1
        if k % cfg.output_every == 0 or k in snap_steps or k == nsteps:
            rows.append(_row(tag, t, compute_energy(ev.state, coeffs, grid), dissip, work, ev.controls, ev.state, N))
        if k in snap_steps:
            snaps[snap_steps[k]] = ev.state
    record = RunRecord(cfg, _columns(tag), rows, snaps, {}, complete, error)
    record.summary = _summarize(record)
    record.summary["newton_iterations"] = stepper.newton_iterations
    record.summary["jacobian_updates"] = stepper.jacobian_updates
    out_dir = out_dir if out_dir is not None else cfg.output_dir
    if out_dir is not None:
        write_outputs(record, out_dir)
    return record


def _fmt(v: float) -> str:
    return repr(float(v))


def write_outputs(record: RunRecord, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.yaml", "w") as fh:
        yaml.safe_dump(record.config.to_dict(), fh, sort_keys=False)
    with open(out / "timeseries.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(record.columns)
        for r in record.rows:
            w.writerow([_fmt(v) for v in r])
    grid = record.config.grid
    for t, st in sorted(record.snapshots.items()):
        names = list(st.tag.fields)
        with open(out / f"snapshot_t{t:.6g}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"] + names + [n + "dot" for n in names])
            for i in range(grid.size):
                vals = [grid.x[i]] + [st.fields[n][i] for n in names] + [st.rates[n][i] for n in names]
                w.writerow([_fmt(v) for v in vals])
    with open(out / "summary.json", "w") as fh:
        json.dump(record.summary, fh, indent=2, sort_keys=True)


def read_snapshot(path: str | Path, tag: ModelTag | str, t: float = 0.0) -> BeamState:
    tag = ModelTag(tag)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
    col = {name: data[:, k] for k, name in enumerate(header)}
    return BeamState(
        tag=tag,
        t=t,
        fields={n: col[n] for n in tag.fields},
        rates={n: col[n + "dot"] for n in tag.fields},
    )


# -- refinement studies ---------------------------------------------------------------


@dataclass(frozen=True)
class OrderReport:
    kind: str
    levels: tuple[float, ...]
    errors: tuple[float, ...]
    result: RichardsonResult

    def as_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "levels": list(self.levels),
            "errors": list(self.errors),
            "orders": list(self.result.orders),
            "spread": self.result.spread,
            "conclusive": self.result.conclusive,
        }


def _default_case(tag: ModelTag) -> ManufacturedCase:
    return ManufacturedCase.mt() if tag.family == "MT" else ManufacturedCase.eb()


def _mms_run(cfg: ScenarioConfig, case: ManufacturedCase, N: int, dt: float, t_final: float) -> BeamState:
    from .integrator import integrate

    grid = GridSpec(N)
    coeffs = Coefficients.from_params(cfg.material)
    forcing = mms_forcing(case, cfg.model, coeffs, grid, verify=False)
    system = assemble(
        cfg.model, coeffs, grid, options=ModelOptions(viscosity=False),
        gains=ControllerGains.uncontrolled(), forcing=forcing,
    )  # fmt: skip
    start = system.close_state(case.state(grid, 0.0, cfg.model))
    return integrate(system, start, dataclasses.replace(cfg.integrator, dt=dt), t_final)


def convergence_study(
    cfg: ScenarioConfig,
    levels,
    kind: str = "space",
    t_final: float = 1.0,
    dt: float = 5e-4,
    N: int = 32,
    case: ManufacturedCase | None = None,
) -> OrderReport:
    """Manufactured-solution refinement study (uncontrolled, filters off).

    kind "space": ``levels`` are grid sizes, error against the exact fields.
    kind "time": ``levels`` are step sizes followed by a reference step size; the
    error is measured against the reference run on the same grid.
    """
    levels = tuple(levels)
    if len(levels) < 3 or (kind == "time" and len(levels) < 4):
        raise ValueError("insufficient levels for a refinement study")
    if cfg.model is ModelTag.EB_FD_LIN:
        raise ValueError("refinement studies use the electrostatic models")
    case = case if case is not None else _default_case(cfg.model)
    mms_forcing(case, cfg.model, Coefficients.from_params(cfg.material), GridSpec(levels[0] if kind == "space" else N))
    fields = cfg.model.fields
    errors = []
    if kind == "space":
        for n in levels:
            out = _mms_run(cfg, case, int(n), dt, t_final)
            exact = case.state(GridSpec(int(n)), out.t, cfg.model)
            errors.append(max(float(np.max(np.abs(out.fields[f][1 : n + 2] - exact.fields[f][1 : n + 2]))) for f in fields))
        ratio = levels[0] / levels[1]
        result = richardson_order(errors, ratio=1.0 / ratio)
    elif kind == "time":
        runs = [_mms_run(cfg, case, N, float(h), t_final) for h in levels]
        ref = runs[-1]
        for out in runs[:-1]:
            errors.append(max(float(np.max(np.abs(out.fields[f] - ref.fields[f]))) for f in fields))
        levels = levels[:-1]
        result = richardson_order(errors, ratio=levels[0] / levels[1])
    else:
        raise ValueError("kind must be 'space' or 'time'")
    return OrderReport(kind, tuple(float(v) for v in levels), tuple(errors), result)


# -- gain sweep -------------------------------------------------------------------------


def sweep(cfg: ScenarioConfig, values=(0.1, 1.0, 10.0), t_final: float | None = None) -> list[dict[str, Any]]:
    """Grid search over the three gains of the model family (Full mode).

    Each entry reports the fitted exponential decay rate of the total energy;
    the list is sorted best first.
    """
    names = ("c4", "c5", "c6") if cfg.model.family == "MT" else ("c1", "c2", "c3")
    base = cfg.replace(
        T_final=t_final if t_final is not None else cfg.T_final,
        snapshot_times=(),
        controller=dataclasses.replace(cfg.controller, mode=ControlMode.FULL),
    )
    results = []
    for combo in itertools.product(values, repeat=3):
        gains = dataclasses.replace(base.controller, **dict(zip(names, combo)))
        rec = run_scenario(base.replace(controller=gains))
        fit = decay_fit(rec.column("t"), rec.column("E_total")) if rec.complete else None
        results.append(
            {
                **dict(zip(names, combo)),
                "complete": rec.complete,
                "ratio_total": rec.summary.get("ratio_total"),
                "rate": fit.rate if fit else -math.inf,
            }
        )
    results.sort(key=lambda r: (-r["rate"], r["ratio_total"] if r["ratio_total"] is not None else math.inf))
    return results
