"""
Scenario parameters for a pinching-antenna deployment.

One ScenarioConfig describes a full simulation setup: M dielectric waveguides
laid along the x-axis at height a above a D_x by D_y service region, N
pinching elements per waveguide, K single-antenna users on the floor, plus
the powers, weights and algorithm knobs (grid resolution, stopping threshold).

Powers and noise variances are configured in dBm the way link budgets are
written and exposed in Watts through properties. Derived geometry (waveguide
spacing d, waveguide length L_m, minimum element spacing delta_ell) follows
the deployment: d = D_y/(M-1), L_m = D_x, delta_ell = lambda/2, with explicit
overrides for the last two so small hand-checkable cases can be built.

The config is frozen and validated on construction, so an invalid scenario
never reaches an algorithm (fail closed, ConfigError).
"""

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from errors import ConfigError

SPEED_OF_LIGHT = 299792458.0


def dbm_to_watt(dbm):
    """-90 dBm -> 1e-12 W"""
    return 10.0 ** ((float(dbm) - 30.0) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    M: int = 5
    N: int = 6
    K: int = 4
    f: float = 28e9
    i_ref: float = 1.44
    a: float = 5.0
    D_x: float = 50.0
    D_y: float = 6.0
    P_dl_dbm: float = 0.0
    P_ul_dbm: float = 0.0
    sigma2_dl_dbm: float = -90.0
    sigma2_ul_dbm: float = -90.0
    weights_dl: tuple | None = None
    weights_ul: tuple | None = None
    alpha: tuple | None = None
    grid_L: int = 100_000
    epsilon: float = 1e-3
    max_iter: int = 50
    # None -> derived (lambda/2 and D_x)
    delta_ell: float | None = None
    L_m: float | None = None

    def __post_init__(self):
        # tuples keep the dataclass hashable and picklable for worker processes
        for name in ("weights_dl", "weights_ul", "alpha"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(float(v) for v in value))
        self._validate()

    def _validate(self):
        for name in ("M", "N", "K"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("f", "i_ref", "a", "D_x", "D_y", "epsilon"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {value}")
        for name in ("P_dl_dbm", "P_ul_dbm", "sigma2_dl_dbm", "sigma2_ul_dbm"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.grid_L < 2:
            raise ConfigError(f"grid_L must be >= 2, got {self.grid_L}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.delta_ell is not None and not self.delta_ell > 0:
            raise ConfigError(f"delta_ell must be > 0, got {self.delta_ell}")
        if self.L_m is not None and not self.L_m > 0:
            raise ConfigError(f"L_m must be > 0, got {self.L_m}")
        for name in ("weights_dl", "weights_ul"):
            value = getattr(self, name)
            if value is None:
                continue
            if len(value) != self.K:
                raise ConfigError(f"{name} needs {self.K} entries, got {len(value)}")
            if any(w < 0 or not math.isfinite(w) for w in value):
                raise ConfigError(f"{name} must be non-negative")
        if self.alpha is not None:
            if len(self.alpha) != self.K:
                raise ConfigError(f"alpha needs {self.K} entries, got {len(self.alpha)}")
            if any(not (v > 0 and math.isfinite(v)) for v in self.alpha):
                raise ConfigError("alpha entries must be finite and > 0")
        if self.spacing * (self.N - 1) >= self.length:
            raise ConfigError(
                f"no feasible layout: (N-1)*delta_ell = {self.spacing * (self.N - 1):.6g} m "
                f">= L_m = {self.length:.6g} m")

    # --- derived geometry ---
    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.f

    @property
    def kappa(self):
        return 2.0 * math.pi / self.wavelength

    @property
    def xi(self):
        return self.wavelength / (4.0 * math.pi)

    @property
    def d(self):
        """inter-waveguide spacing; a single waveguide sits at y = 0"""
        return self.D_y / (self.M - 1) if self.M > 1 else 0.0

    @property
    def spacing(self):
        return self.delta_ell if self.delta_ell is not None else self.wavelength / 2.0

    @property
    def length(self):
        return self.L_m if self.L_m is not None else self.D_x

    def waveguide_y(self, m):
        """y-coordinate of waveguide m (0-based)"""
        return m * self.d

    # --- powers in Watts ---
    @property
    def P_dl(self):
        return dbm_to_watt(self.P_dl_dbm)

    @property
    def P_ul(self):
        return dbm_to_watt(self.P_ul_dbm)

    @property
    def sigma2_dl(self):
        return dbm_to_watt(self.sigma2_dl_dbm)

    @property
    def sigma2_ul(self):
        return dbm_to_watt(self.sigma2_ul_dbm)

    # --- per-user vectors ---
    @property
    def weights_dl_vec(self):
        if self.weights_dl is None:
            return np.full(self.K, 1.0 / self.K)
        return np.asarray(self.weights_dl, dtype=float)

    @property
    def weights_ul_vec(self):
        if self.weights_ul is None:
            return np.full(self.K, 1.0 / self.K)
        return np.asarray(self.weights_ul, dtype=float)

    @property
    def alpha_vec(self):
        if self.alpha is None:
            return np.ones(self.K)
        return np.asarray(self.alpha, dtype=float)

    def with_changes(self, **changes):
        """dataclasses.replace that re-validates; per-user vectors sized for the
        old K are dropped back to their defaults when K changes"""
        if "K" in changes and int(changes["K"]) != self.K:
            for name in ("weights_dl", "weights_ul", "alpha"):
                changes.setdefault(name, None)
        return replace(self, **changes)


FIELD_NAMES = tuple(f.name for f in fields(ScenarioConfig))

# full-scale deployment: 1e5-point location grid
FULL = ScenarioConfig()
# same geometry on a coarser grid so a 20-seed batch finishes on a laptop
DESK = ScenarioConfig(grid_L=4096)

PRESETS = {"full": FULL, "desk": DESK}
PRESET_SEEDS = {"full": 500, "desk": 20}


_INT_FIELDS = {"M", "N", "K", "grid_L", "max_iter"}
_TUPLE_FIELDS = {"weights_dl", "weights_ul", "alpha"}


def coerce_field(name, raw):
    """Parse one key=value string into the ScenarioConfig field type."""
    text = str(raw).strip()
    try:
        if name in _INT_FIELDS:
            value = float(text)
            if not value.is_integer():
                raise ValueError(text)
            return int(value)
        if name in _TUPLE_FIELDS:
            if text.lower() in ("", "none"):
                return None
            return tuple(float(v) for v in text.split(",") if v.strip())
        if name in ("delta_ell", "L_m") and text.lower() in ("", "none"):
            return None
        return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def scenario_from_mapping(mapping, base=None):
    """Build a ScenarioConfig from string values keyed by field name, on top of
    `base` (default FULL). Unknown keys are rejected."""
    base = base or FULL
    unknown = sorted(set(mapping) - set(FIELD_NAMES))
    if unknown:
        raise ConfigError(f"unknown scenario keys: {', '.join(unknown)}")
    changes = {name: coerce_field(name, raw) for name, raw in mapping.items()}
    return base.with_changes(**changes)
