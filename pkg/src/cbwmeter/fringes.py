"""Ideal CBW fringes and synthetic Fizeau interferograms.

Noise comes from numpy's Philox4x64 counter-based bit generator, keyed by the
record seed.  Sample ``k`` consumes raw words ``2k`` and ``2k+1`` of the
stream and turns them into one normal deviate by Box-Muller (cosine branch),
so every sample is a fixed function of ``(seed, k)`` alone.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

SEED_MAX = 2**64 - 1


@dataclass(frozen=True)
class FringeCurve:
    phi_values: np.ndarray
    i_a: np.ndarray
    i_b: np.ndarray
    M: int
    i0: float


@dataclass(frozen=True)
class InterferogramParams:
    """Parameters of ``y_k = mu (a + b cos(2 pi M f x_k + phase_offset)) + n_k``.

    ``f`` is the base spatial frequency (cycles per unit length); the record
    oscillates at ``f_M = M f``.  ``L`` is the wedge length.
    """

    mu: float = 100.0
    a: float = 1.0
    b: float = 1.0
    f: float = 7.3
    M: int = 1
    phase_offset: float = 0.0
    sigma: float = 5.0
    m: int = 512
    L: float = 1.0

    def __post_init__(self):
        for name in ("mu", "a", "b", "f", "phase_offset", "sigma", "L"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("visibility b must lie in [0, 1]")
        if self.b > self.a:
            raise ValueError("need b <= a for a nonnegative noiseless intensity")
        if self.f <= 0:
            raise ValueError("f must be positive")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be a positive integer")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be a positive integer")
        if self.L <= 0:
            raise ValueError("L must be positive")

    @property
    def f_M(self) -> float:
        return self.M * self.f

    @property
    def k_m(self) -> float:
        """Fringe count across the wedge, ``M f L``."""
        return self.M * self.f * self.L

    @property
    def L_M(self) -> float:
        """Effective wedge length ``L / M``."""
        return self.L / self.M

    @property
    def snr_amp(self) -> float:
        return self.b * self.mu / self.sigma if self.sigma > 0 else float("inf")

    def replace(self, **changes) -> "InterferogramParams":
        return InterferogramParams(**{**asdict(self), **changes})


@dataclass(frozen=True)
class Interferogram:
    x: np.ndarray
    y: np.ndarray
    params: InterferogramParams
    seed: int = field(default=0)


def ideal_fringes(M: int, i0: float, phi_grid) -> FringeCurve:
    """``I_A = i0 cos^2(M phi / 2)`` and ``I_B = i0 sin^2(M phi / 2)``."""
    if int(M) != M or M < 1:
        raise ValueError("M must be a positive integer")
    if i0 <= 0:
        raise ValueError("i0 must be positive")
    phi = np.asarray(phi_grid, dtype=float)
    if phi.size == 0:
        raise ValueError("phi grid is empty")
    half = M * phi / 2.0
    i_a = i0 * np.cos(half) ** 2
    # i_b from the complement keeps i_a + i_b == i0 to rounding
    i_b = i0 - i_a
    return FringeCurve(phi, i_a, i_b, int(M), float(i0))


def local_extrema(values, kind: str = "min", circular: bool = True) -> np.ndarray:
    """Indices of strict-left / weak-right local minima (or maxima).

    With ``circular=True`` the array is treated as one period of a periodic
    signal, so an extremum sitting on the first sample is found too.
    """
    v = np.asarray(values, dtype=float)
    if kind == "max":
        v = -v
    elif kind != "min":
        raise ValueError("kind must be 'min' or 'max'")
    if circular:
        left, right = np.roll(v, 1), np.roll(v, -1)
        return np.flatnonzero((v < left) & (v <= right))
    inner = np.flatnonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:])) + 1
    return inner


def count_minima(values, circular: bool = True) -> int:
    return int(local_extrema(values, "min", circular).size)


def maxima_spacing(curve: FringeCurve) -> float:
    """Mean phase distance between adjacent ``I_A`` maxima (the fringe period)."""
    idx = local_extrema(curve.i_a, "max", circular=False)
    if idx.size < 2:
        raise ValueError("fewer than two maxima on the grid")
    return float(np.mean(np.diff(curve.phi_values[idx])))


def rayleigh_spacing(curve: FringeCurve) -> float:
    """Mean phase distance from each ``I_A`` maximum to the next minimum."""
    imax = local_extrema(curve.i_a, "max", circular=False)
    imin = local_extrema(curve.i_a, "min", circular=False)
    gaps = []
    for k in imax:
        after = imin[imin > k]
        if after.size:
            gaps.append(curve.phi_values[after[0]] - curve.phi_values[k])
    if not gaps:
        raise ValueError("no maximum followed by a minimum on the grid")
    return float(np.mean(gaps))


def sample_positions(m: int, L: float) -> np.ndarray:
    """Midpoint grid ``(k + 1/2) L / m``."""
    return (np.arange(m) + 0.5) * (L / m)


def gaussian_noise(seed: int, m: int) -> np.ndarray:
    """``m`` standard normal deviates, sample ``k`` keyed by ``(seed, k)``."""
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError("seed must be a 64-bit unsigned integer")
    raw = np.random.Philox(key=seed).random_raw(2 * m)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    u1, u2 = u[0::2], u[1::2]
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def model(params: InterferogramParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return params.mu * (params.a + params.b * np.cos(2 * np.pi * params.f_M * x + params.phase_offset))


def synthesize(params: InterferogramParams, seed: int) -> Interferogram:
    x = sample_positions(params.m, params.L)
    y = model(params, x)
    if params.sigma > 0:
        y = y + params.sigma * gaussian_noise(seed, params.m)
    return Interferogram(x, y, params, int(seed))


def second_moment(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample set")
    return float(np.dot(x, x))


# --------------------------------------------------------------------------
# files

def interferogram_to_csv(record: Interferogram) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y"])
    for xi, yi in zip(record.x, record.y):
        w.writerow([repr(float(xi)), repr(float(yi))])
    return buf.getvalue()


def interferogram_metadata(record: Interferogram) -> dict:
    return {"params": asdict(record.params), "seed": record.seed}


def write_interferogram(record: Interferogram, path) -> Path:
    """Write ``path`` (CSV) and ``path.json`` (params + seed); returns the sidecar path."""
    path = Path(path)
    path.write_text(interferogram_to_csv(record))
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps(interferogram_metadata(record), indent=2, sort_keys=True) + "\n")
    return sidecar


def read_interferogram(path, params: InterferogramParams | None = None) -> Interferogram:
    """Load a CSV record; parameters come from the sidecar unless given."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "y"]:
            raise ValueError(f"{path}: expected header 'x,y', got {header}")
        rows = [(float(a), float(b)) for a, b in reader]
    if not rows:
        raise ValueError(f"{path}: no samples")
    x, y = (np.array(col) for col in zip(*rows))
    seed = 0
    sidecar = path.with_name(path.name + ".json")
    if params is None:
        if not sidecar.exists():
            raise ValueError(f"{path}: no sidecar {sidecar.name}; pass parameters explicitly")
        meta = json.loads(sidecar.read_text())
        params = InterferogramParams(**meta["params"])
        seed = int(meta.get("seed", 0))
    if len(x) != params.m:
        params = params.replace(m=len(x))
    if np.any(np.diff(x) <= 0):
        raise ValueError(f"{path}: x must be strictly increasing")
    return Interferogram(x, y, params, seed)
