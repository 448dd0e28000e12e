"""Fixed-step time integration of the reduced first-order systems.

TrapezoidalNewton and ImplicitMidpoint solve their stage equations with a
simplified Newton iteration on a frozen finite-difference Jacobian (refreshed
when convergence stalls). Iteration stops once the increment, or the remaining
error estimated from the observed contraction rate, is below
newton_tol * max|y|. Feedback is part of the right-hand side, so it is
evaluated at the stage values and the coupling is exact at convergence.
RK4MassSolve is the classical explicit scheme, meant for filter-off checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .core import BeamState
from .linalg import SingularMatrixError, solve_banded
from .models.base import SemiDiscreteSystem

__all__ = [
    "SCHEMES",
    "IntegratorConfig",
    "IntegratorError",
    "SingularMatrixError",
    "Stepper",
    "step",
    "integrate",
    "solve_banded",
]

SCHEMES = ("TrapezoidalNewton", "ImplicitMidpoint", "RK4MassSolve")


class IntegratorError(RuntimeError):
    """Stage solve failure; carries the Newton residual history and the worst unknown."""

    def __init__(self, message: str, t: float, residuals: list[float], worst: str | None = None):
        super().__init__(f"{message} at t={t:.6g} (residuals {[f'{r:.2e}' for r in residuals]}, worst {worst})")
        self.t = t
        self.residuals = residuals
        self.worst = worst


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "TrapezoidalNewton"
    dt: float = 1e-3
    newton_tol: float = 1e-11
    newton_max_iter: int = 30
    bandwidth: int | None = None  # informational; the stage solves use dense LU

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.newton_tol > 0 and self.newton_max_iter > 0):
            raise ValueError("Newton tolerances must be positive")


def _label(system: SemiDiscreteSystem, k: int) -> str:
    if k >= 2 * system.n2:
        name, node = system.first_order[k - 2 * system.n2]
        return f"{name}[{node}]"
    kind = "" if k < system.n2 else "dot"
    k %= system.n2
    for name, s in system._slices.items():
        if s.start <= k < s.stop:
            return f"{name}{kind}[{system.second_order[name][0] + k - s.start}]"
    return str(k)


class Stepper:
    """Advances a reduced state vector; keeps the factored iteration matrix."""

    def __init__(self, system: SemiDiscreteSystem, config: IntegratorConfig):
        self.system = system
        self.config = config
        self._lu = None
        self.jacobian_updates = 0
        self.newton_iterations = 0

    def jacobian(self, t: float, y: np.ndarray, f0: np.ndarray | None = None) -> np.ndarray:
        f = self.system.rhs
        n = len(y)
        jac = np.empty((n, n))
        if getattr(self.system, "linear", False):
            # affine right-hand side: unit probes about zero give exact columns
            base = f(t, np.zeros(n))
            for j in range(n):
                e = np.zeros(n)
                e[j] = 1.0
                jac[:, j] = f(t, e) - base
            return jac
        f0 = f(t, y) if f0 is None else f0
        scale = max(float(np.max(np.abs(y))), 1e-8)
        h = np.sqrt(np.finfo(float).eps) * scale
        for j in range(n):
            yp = y.copy()
            yp[j] += h
            jac[:, j] = (f(t, yp) - f0) / h
        return jac

    def _factor(self, t, y, f0=None):
        dt = self.config.dt
        jac = self.jacobian(t, y, f0)
        self._lu = lu_factor(np.eye(len(y)) - 0.5 * dt * jac, check_finite=False)
        self.jacobian_updates += 1

    def step(self, t: float, y: np.ndarray, f_n: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Return (y_{n+1}, f(t_{n+1}, y_{n+1})); ``f_n`` may be passed in to save work."""
        scheme = self.config.scheme
        f = self.system.rhs
        dt = self.config.dt
        if scheme == "RK4MassSolve":
            k1 = f(t, y) if f_n is None else f_n
            k2 = f(t + dt / 2, y + dt / 2 * k1)
            k3 = f(t + dt / 2, y + dt / 2 * k2)
            k4 = f(t + dt, y + dt * k3)
            y1 = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            return y1, f(t + dt, y1)
        if f_n is None:
            f_n = f(t, y)
        if self._lu is None:
            self._factor(t, y, f_n)
        for attempt in range(2):
            y1, hist = self._newton(t, y, f_n)
            if y1 is not None:
                return y1, f(t + dt, y1)
            self._factor(t, y, f_n)
        raise IntegratorError("Newton iteration did not converge", t, hist[0], hist[1])

    def _newton(self, t, y, f_n):
        cfg = self.config
        dt, f = cfg.dt, self.system.rhs
        if cfg.scheme == "TrapezoidalNewton":
            y1 = y + dt * f_n
            t1 = t + dt

            def residual(u):
                return u - y - 0.5 * dt * (f_n + f(t1, u))

        else:  # implicit midpoint, iterating on the end value
            y1 = y + dt * f_n
            tm = t + 0.5 * dt

            def residual(u):
                return u - y - dt * f(tm, 0.5 * (y + u))

        history = []
        for _ in range(cfg.newton_max_iter):
            res = residual(y1)
            delta = lu_solve(self._lu, res, check_finite=False)
            y1 = y1 - delta
            self.newton_iterations += 1
            size = float(np.max(np.abs(delta)))
            history.append(size)
            if not np.isfinite(size):
                break
            tol = cfg.newton_tol * float(np.max(np.abs(y1)))
            if size <= tol:
                return y1, None
            if len(history) > 1:
                theta = size / history[-2]
                if theta >= 0.5:
                    break  # contraction too slow: refresh the Jacobian
                # remaining error of a linearly convergent iteration
                if theta / (1.0 - theta) * size <= tol:
                    return y1, None
        worst = _label(self.system, int(np.argmax(np.abs(delta)))) if len(history) else None
        return None, (history, worst)


def step(system: SemiDiscreteSystem, state: BeamState, config: IntegratorConfig) -> BeamState:
    """Advance a state by one step (controls are evaluated inside the system)."""
    stepper = Stepper(system, config)
    y1, _ = stepper.step(state.t, system.pack(state))
    return system.state_from(state.t + config.dt, y1)


def integrate(
    system: SemiDiscreteSystem,
    state: BeamState,
    config: IntegratorConfig,
    t_final: float,
    callback: Callable[[int, float, np.ndarray], None] | None = None,
) -> BeamState:
    """Integrate to ``t_final`` (rounded to a whole number of steps).

    ``callback(k, t, y)`` is called after every step with the reduced state.
    Time is advanced as k * dt to avoid accumulating roundoff.
    """
    nsteps = int(round((t_final - state.t) / config.dt))
    stepper = Stepper(system, config)
    y = system.pack(state)
    fy = None
    t0 = state.t
    for k in range(1, nsteps + 1):
        t = t0 + (k - 1) * config.dt
        y, fy = stepper.step(t, y, fy)
        if not np.all(np.isfinite(y)):
            raise IntegratorError("state became non-finite", t + config.dt, [])
        if callback is not None:
            callback(k, t0 + k * config.dt, y)
    return system.state_from(t0 + nsteps * config.dt, y)

