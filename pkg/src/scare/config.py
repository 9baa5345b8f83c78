"""Tolerances and iteration caps shared by all solvers."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Literal, Union

Shift = Union[float, Literal["auto"]]


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs.

    ``outer_tol`` is the NRes stopping tolerance of every SCARE solver and
    ``inner_tol`` the relative tolerance of the CARE and Lyapunov doubling
    loops.  ``newton_inner_tol`` is the tolerance of the fixed-point sweep
    inside a Newton step; ``None`` ties it to ``outer_tol``.
    ``warm_threshold`` is the spectral-norm step size that ends the FPC phase
    of the hybrid solvers; with ``warm_relative`` the step is divided by
    ``||X_k||_2`` first.
    """

    outer_tol: float = 1e-12
    inner_tol: float = 1e-14
    newton_inner_tol: float | None = None
    max_outer: int = 500
    max_inner: int = 200
    max_doubling: int = 60
    warm_threshold: float = 0.01
    warm_relative: bool = False
    gamma: Shift = "auto"
    alpha: Shift = "auto"
    x0_policy: Literal["zero", "given", "warm-care"] = "zero"
    psd_tol: float = 1e-10
    stab_tol: float = 1e-12
    hurwitz_check_max: int = 200
    keep_iterates: bool = False

    def __post_init__(self):
        for name in ("outer_tol", "inner_tol", "warm_threshold", "psd_tol", "stab_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.newton_inner_tol is not None and not self.newton_inner_tol > 0:
            raise ValueError("newton_inner_tol must be positive")
        for name in ("max_outer", "max_inner", "max_doubling"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in ("gamma", "alpha"):
            v = getattr(self, name)
            if v != "auto" and not (isinstance(v, (int, float)) and v > 0):
                raise ValueError(f"{name} must be 'auto' or a positive number")
        if self.x0_policy not in ("zero", "given", "warm-care"):
            raise ValueError(f"unknown x0_policy {self.x0_policy!r}")

    @property
    def fp_tol(self) -> float:
        return self.outer_tol if self.newton_inner_tol is None else self.newton_inner_tol

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT = SolverConfig()
