"""
Exact laws of Birkhoff sums: characteristic functions, lattice PMFs and smoothed densities.

Characteristic functions come from products of twisted normalized operators applied to the
initial density. Integer-valued sums get their PMF from an inverse DFT of the characteristic
function on the grid 2 pi k / V; real-valued sums are tested against a Fejer kernel whose
Fourier transform is a tent of half-width T0, which keeps the inversion integral finite.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import integrate

from splurge_gibbs.decomp import DecompositionHelper
from splurge_gibbs.exceptions import (
    SplurgeNotIntegerValuedError,
    SplurgeNumericalWarning,
    SplurgeParameterError,
    SplurgeRangeError,
    SplurgeRangeOverflowError,
)
from splurge_gibbs.funcspace import FiniteDepthFn, FunctionSequence
from splurge_gibbs.spectral import SpectralHelper
from splurge_gibbs.transfer import RpfData, TransferHelper

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FejerKernel:
    """
    g(x) = (T0 / 2 pi) (sin(T0 x / 2) / (T0 x / 2))^2, nonnegative with integral one.

    Its Fourier transform is the tent max(0, 1 - |t| / T0).
    """

    t0: float

    def __post_init__(self) -> None:
        if self.t0 <= 0:
            msg = "T0 must be positive"
            raise SplurgeRangeError(msg, details=f"Got T0={self.t0}")

    def __call__(self, x: np.ndarray | float) -> np.ndarray:
        return self.t0 / (2.0 * math.pi) * np.sinc(self.t0 * np.asarray(x) / (2.0 * math.pi)) ** 2

    def transform(self, t: np.ndarray | float) -> np.ndarray:
        return np.maximum(0.0, 1.0 - np.abs(np.asarray(t)) / self.t0)


@dataclass
class CharFnCurve:
    n: int
    t: np.ndarray
    values: np.ndarray
    density: str = "1"

    def to_rows(self) -> list[dict[str, float]]:
        return [
            {"t": float(t), "re": float(v.real), "im": float(v.imag)} for t, v in zip(self.t, self.values, strict=True)
        ]


@dataclass
class DiscreteLaw:
    """A finitely supported law given by sorted atoms and their masses."""

    atoms: np.ndarray
    masses: np.ndarray

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    @property
    def mean(self) -> float:
        return float((self.atoms * self.masses).sum())

    @property
    def variance(self) -> float:
        return float((((self.atoms - self.mean) ** 2) * self.masses).sum())

    @property
    def third_central(self) -> float:
        return float((((self.atoms - self.mean) ** 3) * self.masses).sum())

    def cdf(
        self,
        x: np.ndarray | float,
        *,
        atol: float = 1e-9,
    ) -> np.ndarray:
        """Right-continuous distribution function; atoms within atol of x count as <= x."""
        cumulative = np.cumsum(self.masses)
        index = np.searchsorted(self.atoms, np.asarray(x, dtype=np.float64) + atol, side="right")
        return np.where(index > 0, cumulative[np.maximum(index - 1, 0)], 0.0)

    def expect(self, func: Callable[[np.ndarray], np.ndarray]) -> float:
        return float((func(self.atoms) * self.masses).sum())

    def to_rows(self) -> list[dict[str, float]]:
        return [{"u": float(a), "mass": float(m)} for a, m in zip(self.atoms, self.masses, strict=True)]


@dataclass
class LatticeLaw(DiscreteLaw):
    """PMF of an integer-valued sum on the contiguous support [support_min, support_max]."""

    @classmethod
    def from_masses(
        cls,
        support_min: int,
        masses: np.ndarray,
    ) -> LatticeLaw:
        atoms = np.arange(support_min, support_min + masses.size, dtype=np.float64)
        return cls(atoms=atoms, masses=masses)

    @property
    def support_min(self) -> int:
        return int(self.atoms[0])

    def mass(self, u: int) -> float:
        k = u - self.support_min
        return float(self.masses[k]) if 0 <= k < self.masses.size else 0.0


class DistributionHelper:
    """
    Exact distributions of S_n f under q0 dmu_0.

    Attributes:
        DEFAULT_T0 (float): half-width of the Fejer kernel's Fourier support
        MAX_RANGE (int): largest lattice range V or atom count handled
        DEFAULT_MAX_STEP (float): largest quadrature step
        NEGATIVE_MASS_TOL (float): negative PMF masses below this are reported
    """

    DEFAULT_T0: float = 8.0
    MAX_RANGE: int = 1 << 20
    DEFAULT_MAX_STEP: float = 0.01
    NEGATIVE_MASS_TOL: float = 1e-10
    INTEGER_TOL: float = 1e-9
    DEFAULT_T_CHUNK: int = 256
    DEFAULT_U_CHUNK: int = 64
    ATOM_DECIMALS: int = 9

    # Characteristic functions

    @classmethod
    def char_fn_values(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        n: int,
        t: np.ndarray | list[float],
        *,
        q0: FiniteDepthFn | None = None,
        t_chunk: int = DEFAULT_T_CHUNK,
    ) -> np.ndarray:
        """Phi_n(t) = mu_n(L_hat_{0,t}^n q0) for every t in the array."""
        if not 0 <= n <= rpf.horizon:
            msg = "n exceeds the solved horizon"
            raise SplurgeParameterError(msg, details=f"n={n}, horizon={rpf.horizon}")
        ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
        density, start_rank = DecompositionHelper.density_values(rpf, q0)
        result = np.empty(ts.size, dtype=np.complex128)

        for start in range(0, ts.size, max(1, t_chunk)):
            chunk = ts[start : start + t_chunk]
            values = np.broadcast_to(density, (chunk.size,) + density.shape).astype(np.complex128)
            rank = start_rank
            for j in range(n):
                values = SpectralHelper.twisted_push(rpf, f, j, chunk, values, table_rank=rank)
                rank = max(rpf.depth, rank - 1)
            result[start : start + chunk.size] = TransferHelper.integrate_values(rpf, n, values, table_rank=rank)
        return result

    @classmethod
    def char_fn(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        n: int,
        t: float,
        *,
        q0: FiniteDepthFn | None = None,
    ) -> complex:
        """
        E[e^{i t S_n}] under q0 dmu_0.

        Example:
            iid fair coin, first-symbol, n=2, t=pi/2 gives 0.5j.
        """
        return complex(cls.char_fn_values(rpf, f, n, [t], q0=q0)[0])

    @classmethod
    def char_fn_curve(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        n: int,
        t: np.ndarray | list[float],
        *,
        q0: FiniteDepthFn | None = None,
    ) -> CharFnCurve:
        ts = np.asarray(t, dtype=np.float64)
        return CharFnCurve(n=n, t=ts, values=cls.char_fn_values(rpf, f, n, ts, q0=q0), density="1" if q0 is None else "q0")

    # Lattice laws

    @classmethod
    def integer_range(
        cls,
        f: FunctionSequence,
        n: int,
    ) -> tuple[int, int]:
        """
        (sum of minima, V) for an integer-valued observable over j < n.

        Raises:
            SplurgeNotIntegerValuedError: If some f_j takes a non-integer value
            SplurgeRangeOverflowError: If V exceeds MAX_RANGE
        """
        if not f.is_integer_valued(range(n), atol=cls.INTEGER_TOL):
            msg = f"Observable '{f.name}' is not integer-valued"
            raise SplurgeNotIntegerValuedError(msg, details=f"checked j < {n} with tolerance {cls.INTEGER_TOL}")
        low = 0
        width = 1
        for j in range(n):
            lo, hi = f.value_range(j)
            low += round(lo)
            width += round(hi) - round(lo)
        if width > cls.MAX_RANGE:
            msg = f"Value range V={width} exceeds {cls.MAX_RANGE}"
            raise SplurgeRangeOverflowError(msg, details=f"n={n}")
        return low, width

    @classmethod
    def lattice_pmf(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        n: int,
        *,
        q0: FiniteDepthFn | None = None,
    ) -> LatticeLaw:
        """
        P(S_n = u) for integer-valued f by inverse DFT of the characteristic function.

        Example:
            iid fair coin, n=4 gives P(S_4 = 2) = 0.375.
        """
        low, width = cls.integer_range(f, n)
        k = np.arange(width)
        frequencies = 2.0 * math.pi * k / width
        phi = cls.char_fn_values(rpf, f, n, frequencies, q0=q0)
        coefficients = phi * np.exp(-1j * frequencies * low)
        masses = np.real(np.fft.fft(coefficients)) / width

        most_negative = float(masses.min())
        if most_negative < -cls.NEGATIVE_MASS_TOL:
            warnings.warn(
                f"Clipped negative PMF mass {most_negative:.3g} for '{f.name}' at n={n}",
                SplurgeNumericalWarning,
                stacklevel=2,
            )
        masses = np.maximum(masses, 0.0)
        logger.debug("Lattice PMF of '%s' at n=%d: support [%d, %d]", f.name, n, low, low + width - 1)
        return LatticeLaw.from_masses(low, masses)

    # Smoothed densities

    @classmethod
    def quadrature_step(
        cls,
        f: FunctionSequence,
        n: int,
        u_grid: np.ndarray,
    ) -> float:
        """min(0.01, pi / (4 R)) with R = max|u| + sum_j sup|f_j|."""
        reach = float(np.abs(u_grid).max()) if u_grid.size else 0.0
        for j in range(n):
            lo, hi = f.value_range(j)
            reach += max(abs(lo), abs(hi))
        return min(cls.DEFAULT_MAX_STEP, math.pi / (4.0 * reach)) if reach > 0 else cls.DEFAULT_MAX_STEP

    @classmethod
    def smoothed_density(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        n: int,
        u_grid: np.ndarray | list[float],
        *,
        t0: float = DEFAULT_T0,
        q0: FiniteDepthFn | None = None,
        u_chunk: int = DEFAULT_U_CHUNK,
    ) -> np.ndarray:
        """
        E[g_{T0}(S_n - u)] = (1/pi) int_0^{T0} (1 - t/T0) Re(Phi_n(t) e^{-i t u}) dt.

        Composite Simpson quadrature on an odd number of equally spaced nodes.

        Example:
            for the zero observable the value at u=0 is T0 / (2 pi).
        """
        kernel = FejerKernel(t0)
        us = np.atleast_1d(np.asarray(u_grid, dtype=np.float64))
        step = cls.quadrature_step(f, n, us)
        intervals = max(2, math.ceil(t0 / step))
        intervals += intervals % 2
        nodes = np.linspace(0.0, t0, intervals + 1)
        weighted = kernel.transform(nodes) * cls.char_fn_values(rpf, f, n, nodes, q0=q0)

        result = np.empty(us.size)
        for start in range(0, us.size, max(1, u_chunk)):
            block = us[start : start + u_chunk]
            integrand = np.real(weighted[None, :] * np.exp(-1j * np.outer(block, nodes)))
            result[start : start + block.size] = integrate.simpson(integrand, x=nodes, axis=1) / math.pi
        return result

    # Atomic laws

    @classmethod
    def atomic_law(
        cls,
        rpf: RpfData,
        f: FunctionSequence,
        n: int,
        *,
        q0: FiniteDepthFn | None = None,
        max_atoms: int = MAX_RANGE,
    ) -> DiscreteLaw:
        """
        Exact finite law of S_n by forward propagation over depth-(D_w - 1) states.

        The Gibbs family is a forward Markov chain of order D_w - 1 with kernels
        mu_j([w s]) / mu_j([w]); atoms with equal values are merged after every step.

        Raises:
            SplurgeRangeOverflowError: If a state carries more than max_atoms atoms
        """
        if not 1 <= n <= rpf.horizon:
            msg = "n must lie in [1, horizon]"
            raise SplurgeParameterError(msg, details=f"n={n}, horizon={rpf.horizon}")
        if f.depth > rpf.depth:
            msg = "Observable is deeper than the working depth"
            raise SplurgeParameterError(msg, details=f"depth {f.depth} > {rpf.depth}")
        if q0 is not None and q0.depth > rpf.depth:
            msg = "Initial density is deeper than the working depth"
            raise SplurgeParameterError(msg, details=f"depth {q0.depth} > {rpf.depth}")

        space = rpf.space
        depth = rpf.depth
        density, _ = DecompositionHelper.density_values(rpf, q0)
        start_mass = density * rpf.measure_weights(0)
        f0 = f.values(0, depth)

        # state key -> (values, masses); a state is the last D_w - 1 symbols
        states: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray]] = {}
        for word in np.argwhere(space.mask(0, depth)):
            key = tuple(int(s) for s in word)
            mass = float(start_mass[key])
            if mass > 0.0:
                cls._merge_into(states, key[1:], np.array([float(f0[key].real)]), np.array([mass]))
        states = {k: cls._merge(*v) for k, v in states.items()}

        for j in range(1, n):
            weights = rpf.measure_weights(j)
            totals = weights.sum(axis=-1)
            f_j = f.values(j, depth)
            updated: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray]] = {}
            for key, (values, masses) in states.items():
                norm = float(totals[key])
                if norm <= 0.0:
                    continue
                row = weights[key] / norm
                for s in np.flatnonzero(row > 0.0):
                    word = key + (int(s),)
                    cls._merge_into(updated, word[1:], values + float(f_j[word].real), masses * float(row[s]))
            states = {}
            for key, (values, masses) in updated.items():
                merged = cls._merge(values, masses)
                if merged[0].size > max_atoms:
                    msg = f"Atomic law exceeds {max_atoms} atoms"
                    raise SplurgeRangeOverflowError(msg, details=f"j={j}, state={key}")
                states[key] = merged

        all_values = np.concatenate([v for v, _ in states.values()])
        all_masses = np.concatenate([m for _, m in states.values()])
        atoms, masses = cls._merge(all_values, all_masses)
        return DiscreteLaw(atoms=atoms, masses=masses)

    @staticmethod
    def _merge_into(
        states: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray]],
        key: tuple[int, ...],
        values: np.ndarray,
        masses: np.ndarray,
    ) -> None:
        current = states.get(key)
        if current is None:
            states[key] = (values, masses)
        else:
            states[key] = (np.concatenate([current[0], values]), np.concatenate([current[1], masses]))

    @classmethod
    def _merge(
        cls,
        values: np.ndarray,
        masses: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray]:
        rounded = np.round(values, cls.ATOM_DECIMALS)
        atoms, inverse = np.unique(rounded, return_inverse=True)
        return atoms, np.bincount(inverse.ravel(), weights=masses, minlength=atoms.size)

    @staticmethod
    def law_summary(law: DiscreteLaw) -> dict[str, Any]:
        return {
            "atoms": int(law.atoms.size),
            "total": law.total,
            "mean": law.mean,
            "variance": law.variance,
            "third_central": law.third_central,
        }
