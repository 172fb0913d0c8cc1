"""Truncated Fock-space states of one and two bosonic modes.

Amplitudes are stored densely. Expectation values are evaluated by index-shifted
sums over the amplitude arrays; no operator matrices are built here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-10


def _as_amplitudes(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d amplitude array, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("amplitude array is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("amplitudes must be finite")
    arr.setflags(write=False)
    return arr


def _check_norm(arr: np.ndarray) -> None:
    norm_sq = float(np.vdot(arr, arr).real)
    if abs(norm_sq - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm^2 = {norm_sq!r})")


@dataclass(frozen=True, eq=False)
class FockState:
    """Pure state of one mode over occupations 0..cutoff."""

    amplitudes: np.ndarray

    def __post_init__(self):
        arr = _as_amplitudes(self.amplitudes, 1)
        _check_norm(arr)
        object.__setattr__(self, "amplitudes", arr)

    @classmethod
    def normalized(cls, values) -> "FockState":
        arr = np.asarray(values, dtype=np.complex128)
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(arr / norm)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.shape[0] - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def padded(self, cutoff: int) -> "FockState":
        if cutoff < self.cutoff:
            raise ValueError(f"cannot shrink cutoff {self.cutoff} to {cutoff}")
        arr = np.zeros(cutoff + 1, dtype=np.complex128)
        arr[: self.cutoff + 1] = self.amplitudes
        return FockState(arr)


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Pure state of two modes; ``amplitudes[n0, n1]`` over 0..cutoff_k."""

    amplitudes: np.ndarray

    def __post_init__(self):
        arr = _as_amplitudes(self.amplitudes, 2)
        _check_norm(arr)
        object.__setattr__(self, "amplitudes", arr)

    @classmethod
    def normalized(cls, values) -> "TwoModeState":
        arr = np.asarray(values, dtype=np.complex128)
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(arr / norm)

    @property
    def cutoffs(self) -> tuple[int, int]:
        return self.amplitudes.shape[0] - 1, self.amplitudes.shape[1] - 1

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def padded(self, cutoffs: tuple[int, int]) -> "TwoModeState":
        c0, c1 = cutoffs
        if c0 < self.cutoffs[0] or c1 < self.cutoffs[1]:
            raise ValueError(f"cannot shrink cutoffs {self.cutoffs} to {cutoffs}")
        arr = np.zeros((c0 + 1, c1 + 1), dtype=np.complex128)
        arr[: self.cutoffs[0] + 1, : self.cutoffs[1] + 1] = self.amplitudes
        return TwoModeState(arr)

    def mode_distribution(self, mode: int) -> np.ndarray:
        """Marginal photon-number distribution of one mode."""
        mode = _check_mode(mode)
        return (np.abs(self.amplitudes) ** 2).sum(axis=1 - mode)

    def total_number_distribution(self) -> np.ndarray:
        """P(n0 + n1 = N) for N = 0..cutoff0 + cutoff1."""
        probs = np.abs(self.amplitudes) ** 2
        c0, c1 = self.cutoffs
        out = np.zeros(c0 + c1 + 1)
        for n0 in range(c0 + 1):
            out[n0 : n0 + c1 + 1] += probs[n0]
        return out


def vacuum(cutoff: int = 0) -> FockState:
    return number_state(0, cutoff)


def number_state(n: int, cutoff: int | None = None) -> FockState:
    cutoff = n if cutoff is None else cutoff
    if not 0 <= n <= cutoff:
        raise ValueError(f"occupation {n} outside 0..{cutoff}")
    arr = np.zeros(cutoff + 1, dtype=np.complex128)
    arr[n] = 1.0
    return FockState(arr)


def tensor(a: FockState, b: FockState) -> TwoModeState:
    return TwoModeState(np.outer(a.amplitudes, b.amplitudes))


def inner(a: TwoModeState, b: TwoModeState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.cutoffs != b.cutoffs:
        raise ValueError(f"cutoff mismatch: {a.cutoffs} vs {b.cutoffs}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def _check_mode(mode) -> int:
    if mode not in (0, 1) or isinstance(mode, bool):
        raise ValueError(f"mode index must be 0 or 1, got {mode!r}")
    return int(mode)


def _mode_first(s: TwoModeState, mode: int) -> np.ndarray:
    # selected mode on axis 0, the other mode's index summed over axis 1
    mode = _check_mode(mode)
    return s.amplitudes if mode == 0 else s.amplitudes.T


def expect_number(s: TwoModeState, mode: int) -> float:
    p = np.abs(_mode_first(s, mode)) ** 2
    n = np.arange(p.shape[0])
    return float(n @ p.sum(axis=1))


def expect_number_sq(s: TwoModeState, mode: int) -> float:
    p = np.abs(_mode_first(s, mode)) ** 2
    n = np.arange(p.shape[0])
    return float((n * n) @ p.sum(axis=1))


def _shifted(s: TwoModeState, mode: int, k: int, weights) -> complex:
    # sum_n weights[n] * conj(c[n]) * c[n+k]
    amp = _mode_first(s, mode)
    if amp.shape[0] <= k:
        return 0j
    lo, hi = amp[:-k], amp[k:]
    w = np.asarray(weights, dtype=float)[: lo.shape[0], None]
    return complex(np.sum(w * lo.conj() * hi))


def expect_lowering(s: TwoModeState, mode: int) -> complex:
    """<b> for the selected mode."""
    c = _mode_first(s, mode).shape[0] - 1
    n = np.arange(c + 1)
    return _shifted(s, mode, 1, np.sqrt(n + 1.0))


def expect_lowering_sq(s: TwoModeState, mode: int) -> complex:
    """<b^2> for the selected mode; 0 when the cutoff is below 2."""
    c = _mode_first(s, mode).shape[0] - 1
    n = np.arange(c + 1)
    return _shifted(s, mode, 2, np.sqrt((n + 1.0) * (n + 2.0)))


def expect_number_lowering(s: TwoModeState, mode: int) -> complex:
    """<n b> for the selected mode."""
    c = _mode_first(s, mode).shape[0] - 1
    n = np.arange(c + 1)
    return _shifted(s, mode, 1, n * np.sqrt(n + 1.0))


@dataclass(frozen=True)
class ModeMoments:
    """Single-mode moments consumed by the closed-form QFI and detection formulas."""

    n: float
    n_sq: float
    b: complex
    b_sq: complex
    n_b: complex

    @property
    def var_n(self) -> float:
        return self.n_sq - self.n**2

    @property
    def var_b(self) -> complex:
        """<b^2> - <b>^2."""
        return self.b_sq - self.b**2

    @classmethod
    def of(cls, s: TwoModeState, mode: int) -> "ModeMoments":
        return cls(
            n=expect_number(s, mode),
            n_sq=expect_number_sq(s, mode),
            b=expect_lowering(s, mode),
            b_sq=expect_lowering_sq(s, mode),
            n_b=expect_number_lowering(s, mode),
        )

    @classmethod
    def vacuum(cls) -> "ModeMoments":
        return cls(0.0, 0.0, 0j, 0j, 0j)


def expect_diagonal(s: TwoModeState, fn) -> float:
    """Sum of fn(n0, n1) |amplitude(n0, n1)|^2 for an observable diagonal in occupation."""
    n0, n1 = np.indices(s.amplitudes.shape)
    return float(np.sum(fn(n0, n1) * np.abs(s.amplitudes) ** 2))
