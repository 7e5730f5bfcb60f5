"""Transmission and reflection from transfer matrices, spectra and resonances."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .errors import OpaqueAtThisK, SingularityError
from .network import NetworkNode, evaluate
from .numerics import DEFAULT_TOL, Tolerances, TransferMatrix2, norm_inf

log = logging.getLogger(__name__)

OK, SINGULAR, OPAQUE = "ok", "singular", "opaque"


@dataclass(frozen=True)
class ScatterAmplitudes:
    t: complex
    r: complex

    @property
    def big_t(self) -> float:
        return abs(self.t) ** 2

    @property
    def big_r(self) -> float:
        return abs(self.r) ** 2


@dataclass(frozen=True)
class SpectrumPoint:
    k: float
    amplitudes: ScatterAmplitudes | None
    status: str = OK
    message: str = ""

    @property
    def regular(self) -> bool:
        return self.amplitudes is not None

    @property
    def flux_error(self) -> float:
        if self.amplitudes is None:
            return math.nan
        return abs(self.amplitudes.big_t + self.amplitudes.big_r - 1)


@dataclass(frozen=True)
class Resonance:
    k_peak: float
    big_t_peak: float
    width_estimate: float | None
    plateau: bool = False


def transmission(m: TransferMatrix2, tol: Tolerances = DEFAULT_TOL) -> ScatterAmplitudes:
    """Left incidence: ``u = 1, v = r, u' = t, v' = 0`` gives ``t = 1/m11``, ``r = m21/m11``."""
    m11 = m[0, 0]
    if abs(m11) <= tol.singular * max(1.0, norm_inf(m)):
        raise OpaqueAtThisK(f"|m11| = {abs(m11):.3e}: no transmission")
    return ScatterAmplitudes(complex(1 / m11), complex(m[1, 0] / m11))


def spectrum_point(node: NetworkNode, k: float, fast_path: bool = True, tol: Tolerances = DEFAULT_TOL) -> SpectrumPoint:
    try:
        amp = transmission(evaluate(node, k, fast_path=fast_path, tol=tol), tol)
    except OpaqueAtThisK as exc:
        return SpectrumPoint(k, None, OPAQUE, str(exc))
    except SingularityError as exc:
        return SpectrumPoint(k, None, SINGULAR, str(exc))
    return SpectrumPoint(k, amp)


def _point_task(args) -> SpectrumPoint:
    return spectrum_point(*args)


def wavenumber_grid(k_min: float, k_max: float, n_points: int) -> np.ndarray:
    if not k_min < k_max:
        raise ValueError(f"need k_min < k_max, got {k_min} >= {k_max}")
    if n_points < 2:
        raise ValueError(f"need at least two points, got {n_points}")
    return np.linspace(k_min, k_max, n_points)


def spectrum(
    node: NetworkNode,
    k_min: float,
    k_max: float,
    n_points: int,
    *,
    jobs: int = 1,
    fast_path: bool = True,
    tol: Tolerances = DEFAULT_TOL,
) -> list[SpectrumPoint]:
    """Uniform sweep including both endpoints; failures become marked points."""
    ks = wavenumber_grid(k_min, k_max, n_points)
    tasks = [(node, float(k), fast_path, tol) for k in ks]
    if jobs <= 1:
        return [_point_task(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_point_task, tasks, chunksize=chunk))


def _reflection_objective(node, tol) -> Callable[[float], float]:
    def f(k: float) -> float:
        try:
            return abs(transmission(evaluate(node, k, tol=tol), tol).r)
        except SingularityError:
            return math.inf

    return f


def _transmission_prob(node, tol) -> Callable[[float], float]:
    def f(k: float) -> float:
        try:
            return transmission(evaluate(node, k, tol=tol), tol).big_t
        except SingularityError:
            return math.nan

    return f


def find_resonances(
    points: Sequence[SpectrumPoint],
    threshold: float,
    node: NetworkNode | None = None,
    *,
    plateau_tol: float = 1e-9,
    tol: Tolerances = DEFAULT_TOL,
) -> list[Resonance]:
    """Local maxima of |t|^2 at or above ``threshold``.

    With ``node`` given, each grid maximum is refined by golden-section
    minimisation of |r| on the network itself (|r| has a sharp minimum where
    |t|^2 has a flat maximum), and half-maximum widths are located by root
    finding. Runs of three or more points with |t|^2 constant to within
    ``plateau_tol`` are reported once as a plateau.
    """
    if not points:
        raise ValueError("empty spectrum")
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    ks = np.array([p.k for p in points])
    big_t = np.array([p.amplitudes.big_t if p.regular else np.nan for p in points])
    step = float(np.min(np.diff(ks))) if len(ks) > 1 else 0.0

    out: list[Resonance] = []
    i = 0
    n = len(points)
    while i < n:
        if not np.isfinite(big_t[i]) or big_t[i] < threshold:
            i += 1
            continue
        j = i
        while j + 1 < n and np.isfinite(big_t[j + 1]) and abs(big_t[j + 1] - big_t[i]) <= plateau_tol:
            j += 1
        if j - i >= 2:
            width = float(ks[j] - ks[i])
            out.append(Resonance(float((ks[i] + ks[j]) / 2), float(np.max(big_t[i : j + 1])), width, True))
            i = j + 1
            continue
        if 0 < i < n - 1 and big_t[i] > big_t[i - 1] and big_t[i] >= big_t[i + 1]:
            out.append(_refine(ks, big_t, i, step, node, tol))
        i += 1
    return out


def _refine(ks, big_t, i, step, node, tol) -> Resonance:
    k0, t0 = float(ks[i]), float(big_t[i])
    if node is None:
        return Resonance(k0, t0, _grid_width(ks, big_t, i, t0))
    f = _reflection_objective(node, tol)
    lo, hi = float(ks[i - 1]), float(ks[i + 1])
    # scipy's golden xtol is relative to the abscissa
    xtol = step * 1e-9 / max(abs(k0), step)
    try:
        res = optimize.minimize_scalar(f, bracket=(lo, k0, hi), method="golden", options={"xtol": xtol})
        k_peak = float(res.x)
    except ValueError:
        res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": step * 1e-9})
        k_peak = float(res.x)
    if not lo <= k_peak <= hi:
        k_peak = k0
    t_fn = _transmission_prob(node, tol)
    t_peak = t_fn(k_peak)
    if not np.isfinite(t_peak) or t_peak < t0 - 1e-12:
        k_peak, t_peak = k0, t0
    return Resonance(k_peak, float(t_peak), _refined_width(ks, big_t, i, k_peak, t_peak, t_fn))


def _crossings(ks, big_t, i, level):
    left = right = None
    for j in range(i, 0, -1):
        if np.isfinite(big_t[j - 1]) and big_t[j - 1] < level <= big_t[j]:
            left = (float(ks[j - 1]), float(ks[j]))
            break
        if not np.isfinite(big_t[j - 1]):
            break
    for j in range(i, len(ks) - 1):
        if np.isfinite(big_t[j + 1]) and big_t[j + 1] < level <= big_t[j]:
            right = (float(ks[j]), float(ks[j + 1]))
            break
        if not np.isfinite(big_t[j + 1]):
            break
    return left, right


def _grid_width(ks, big_t, i, t_peak):
    left, right = _crossings(ks, big_t, i, t_peak / 2)
    if left is None or right is None:
        return None

    def interp(pair):
        a, b = pair
        ta, tb = np.interp([a, b], ks, big_t)
        return a + (t_peak / 2 - ta) * (b - a) / (tb - ta)

    return float(interp(right) - interp(left))


def _refined_width(ks, big_t, i, k_peak, t_peak, t_fn):
    left, right = _crossings(ks, big_t, i, t_peak / 2)
    if left is None or right is None:
        return None
    g = lambda k: t_fn(k) - t_peak / 2
    try:
        kl = optimize.brentq(g, *left, xtol=1e-14)
        kr = optimize.brentq(g, *right, xtol=1e-14)
    except ValueError:
        return _grid_width(ks, big_t, i, t_peak)
    return float(kr - kl)
