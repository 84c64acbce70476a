"""
Pinching-antenna geometry and the effective channel matrix G(L).

Waveguide m (0-based here) runs along x at y = m*d, height a. Its N pinching
elements sit at positions l_m = L[:, m] in [0, L_m] along the guide. Element n
radiates an equal 1/N share of the fed power with in-guide phase
kappa*i_ref*ell, so the effective channel from waveguide m to user k is

    G[m, k] = sum_n Pi_k,m(ell_m,n)
    Pi_k,m(ell) = xi*alpha_k * exp(-j*kappa*(D + i_ref*ell)) / (sqrt(N) * D)
    D = |(ell, m*d, a) - (x_k, y_k, 0)|

The radiation vector and per-element channels are never materialized. The
same G serves downlink (G^T acts on fed signals) and uplink (G acts on user
signals).

The element order within a column carries no meaning (the sum is symmetric),
so the feasible set is the symmetric one: all entries in [0, L_m] and every
pairwise gap >= delta_ell. Columns are summed in sorted order so permuted
columns give bitwise-identical G.

PiTable precomputes Pi on the location grid for a fixed (config, users): the
grid searches of every algorithm read candidate channel rows from it.
"""

from dataclasses import dataclass

import numpy as np

from errors import ConfigError, FeasibilityError

# relative slack on the closed gap constraint; positions built as
# u + n*delta_ell round by an ulp or two
GAP_RTOL = 1e-12


@dataclass(frozen=True)
class UserLayout:
    """K user positions [x_k, y_k, 0] on the floor of the service region."""
    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ConfigError(f"user positions must be K x 3, got {pos.shape}")
        if np.any(pos[:, 2] != 0.0):
            raise ConfigError("users must sit at z = 0")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def K(self):
        return self.positions.shape[0]


def distance(config, user, m, ell):
    """Distance from the point ell on waveguide m to `user`; vectorized over ell."""
    x_k, y_k, _ = user
    ell = np.asarray(ell, dtype=float)
    return np.sqrt((ell - x_k) ** 2 + (config.waveguide_y(m) - y_k) ** 2 + config.a ** 2)


def pi_coeff(config, users, k, m, ell):
    """Pi_k,m(ell): contribution of one element at ell on waveguide m to G[m, k]."""
    D = distance(config, users.positions[k], m, ell)
    phase = config.kappa * (D + config.i_ref * np.asarray(ell, dtype=float))
    gain = config.xi * config.alpha_vec[k] / (np.sqrt(config.N) * D)
    return gain * np.exp(-1j * phase)


def _pi_row(config, users, m, ell):
    """Pi for every user at positions ell -> array (K, len(ell))."""
    ell = np.atleast_1d(np.asarray(ell, dtype=float))
    pos = users.positions
    D = np.sqrt((ell[None, :] - pos[:, 0:1]) ** 2
                + (config.waveguide_y(m) - pos[:, 1:2]) ** 2
                + config.a ** 2)
    phase = config.kappa * (D + config.i_ref * ell[None, :])
    gain = (config.xi * config.alpha_vec)[:, None] / (np.sqrt(config.N) * D)
    return gain * np.exp(-1j * phase)


def is_feasible(config, l_m):
    """All entries in [0, L_m] and every pairwise gap >= delta_ell."""
    col = np.asarray(l_m, dtype=float).ravel()
    if col.size == 0 or not np.all(np.isfinite(col)):
        return False
    if np.any(col < 0.0) or np.any(col > config.length):
        return False
    if col.size == 1:
        return True
    gaps = np.diff(np.sort(col))
    return bool(np.all(gaps >= config.spacing * (1.0 - GAP_RTOL)))


def _check_column(config, l_m, m):
    if not is_feasible(config, l_m):
        raise FeasibilityError(f"waveguide {m}: locations {np.asarray(l_m)} outside the feasible set")


def check_users_in_region(config, users):
    """Every user inside the floor rectangle [0, D_x] x [0, D_y]."""
    x, y = users.positions[:, 0], users.positions[:, 1]
    outside = (x < 0.0) | (x > config.D_x) | (y < 0.0) | (y > config.D_y)
    if np.any(outside):
        raise ConfigError(f"users {np.flatnonzero(outside).tolist()} outside the "
                          f"{config.D_x} x {config.D_y} m region")


def channel_row(config, users, m, l_m):
    """Row m of G: the K effective channels of waveguide m."""
    _check_column(config, l_m, m)
    # sorted summation order -> identical bits for any permutation of l_m
    return _pi_row(config, users, m, np.sort(np.asarray(l_m, dtype=float))).sum(axis=1)


def effective_channel(config, users, k, m, l_m):
    return channel_row(config, users, m, l_m)[k]


def channel_matrix(config, users, L):
    """G(L), shape (M, K)."""
    L = np.asarray(L, dtype=float)
    if L.shape != (config.N, config.M):
        raise ConfigError(f"location matrix must be {config.N} x {config.M}, got {L.shape}")
    check_users_in_region(config, users)
    return np.stack([channel_row(config, users, m, L[:, m]) for m in range(config.M)])


def random_feasible_locations(config, m, rng):
    """Uniform sample over the feasible set of waveguide m, returned sorted.

    Draw N sorted uniforms on [0, L_m - (N-1)*delta_ell] and shift the n-th by
    n*delta_ell; the map is a bijection onto the ordered feasible layouts.
    """
    span = config.length - (config.N - 1) * config.spacing
    if not span > 0:
        raise ConfigError(f"waveguide {m}: no feasible layout for N={config.N}")
    u = np.sort(rng.uniform(0.0, span, config.N))
    col = u + np.arange(config.N) * config.spacing
    # keep the top element inside the guide after rounding
    return np.minimum(col, config.length)


def sort_columns(L):
    """Each column ascending: the ordered sliding-track view of a layout."""
    return np.sort(np.asarray(L, dtype=float), axis=0)


def location_grid(config):
    """{0, L_m/(grid_L-1), ..., L_m}"""
    return np.linspace(0.0, config.length, config.grid_L)


class PiTable:
    """Pi_k,m on the location grid for every (m, k), built once per layout.

    values has shape (M, K, grid_L). At grid_L = 1e5 with the default
    geometry that is 32 MB of complex128, shared read-only by every sweep.
    """

    def __init__(self, config, users):
        check_users_in_region(config, users)
        self.config = config
        self.users = users
        self.grid = location_grid(config)
        self.grid.setflags(write=False)
        self.values = np.stack([_pi_row(config, users, m, self.grid) for m in range(config.M)])
        self.values.setflags(write=False)

    def pi(self, m, positions):
        """Pi for every user at `positions` on waveguide m -> (K, len(positions))."""
        if positions is self.grid:
            return self.values[m]
        return _pi_row(self.config, self.users, m, positions)
