"""Seeded channel realizations for the single-RIS downlink geometry.

Direct BS-user and RIS-user links are uncorrelated Rayleigh fading; the
BS-RIS link is a pure line-of-sight rank-one channel ``a b^H`` between two
half-wavelength ULAs.  Every link uses the logarithmic path-loss model
``alpha + beta * 10 log10(d / 1m)``.

Noise normalization: user-side rows (``h_direct`` and ``h_ris_user``) are
divided by the noise standard deviation, so each received signal has unit
noise power and the transmit budget in watts is the only SNR knob.  The
BS-RIS factor ``a`` is not divided again, since it appears only inside the
cascade ``h_r^H diag(theta) a b^H``, which then carries exactly one factor
of ``1/sigma``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "ScenarioConfig",
    "ChannelRealization",
    "path_loss_db",
    "db_to_linear",
    "dbm_to_watts",
    "ula_steering",
    "draw_realization",
    "trial_rng",
]


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry, propagation and power constants of one scenario.

    Defaults reproduce the K = 4 simulation setup with 128 RIS elements.
    """

    n_bs: int = 8
    n_ris: int = 128
    n_users: int = 4
    bs_pos: tuple = (0.0, 0.0, 10.0)
    ris_pos: tuple = (100.0, 0.0, 10.0)
    user_center: tuple = (95.0, 10.0, 1.5)
    user_radius: float = 5.0
    user_height: float = 1.5
    alpha_d: float = 30.0
    alpha_r: float = 30.0
    alpha_s: float = 30.0
    beta_d: float = 3.7
    beta_r: float = 3.2
    beta_s: float = 2.2
    extra_loss_db: float = 20.0
    penalized_fraction: float = 0.5
    noise_dbm: float = -100.0
    ptx_dbm: float = 20.0

    def __post_init__(self):
        for name in ("bs_pos", "ris_pos", "user_center"):
            value = tuple(float(x) for x in getattr(self, name))
            if len(value) != 3:
                raise ConfigError(f"{name} must have 3 coordinates")
            object.__setattr__(self, name, value)
        if self.n_bs < 1 or self.n_users < 1 or self.n_ris < 0:
            raise ConfigError("need n_bs >= 1, n_users >= 1, n_ris >= 0")
        if self.n_ris + 1 < self.n_users:
            raise ConfigError(
                f"n_ris + 1 must be >= n_users (got n_ris={self.n_ris}, n_users={self.n_users})"
            )
        if not self.user_radius > 0:
            raise ConfigError("user_radius must be positive")
        if min(self.beta_d, self.beta_r, self.beta_s) <= 0:
            raise ConfigError("path-loss exponents must be positive")
        if not 0.0 <= self.penalized_fraction <= 1.0:
            raise ConfigError("penalized_fraction must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("bs_pos", "ris_pos", "user_center"):
            d[name] = list(d[name])
        return d

    @property
    def n_penalized(self) -> int:
        return math.ceil(self.penalized_fraction * self.n_users - 1e-12)

    @property
    def noise_std(self) -> float:
        return math.sqrt(dbm_to_watts(self.noise_dbm))

    @property
    def ptx_watts(self) -> float:
        return dbm_to_watts(self.ptx_dbm)


@dataclass(frozen=True)
class ChannelRealization:
    """One noise-normalized channel draw.

    ``h_direct[k]`` is the row ``h_{d,k}^H`` (length ``n_bs``) and
    ``h_ris_user[k]`` the row ``h_{r,k}^H`` (length ``n_ris``).  The BS-RIS
    channel is ``outer(a, b.conj())`` with ``||b|| = 1``.
    """

    h_direct: np.ndarray
    h_ris_user: np.ndarray
    a: np.ndarray
    b: np.ndarray
    user_positions: np.ndarray | None = None

    @property
    def n_users(self) -> int:
        return self.h_direct.shape[0]

    @property
    def n_bs(self) -> int:
        return self.h_direct.shape[1]

    @property
    def n_ris(self) -> int:
        return self.h_ris_user.shape[1]

    def with_dead_ris(self) -> "ChannelRealization":
        """Copy with the BS-RIS gain set to zero."""
        return replace(self, a=np.zeros_like(self.a))


def path_loss_db(d: float, alpha: float, beta: float) -> float:
    """Logarithmic path loss in dB at distance ``d`` meters (1 m reference)."""
    if not d > 0:
        raise DomainError(f"distance must be positive, got {d}")
    return alpha + beta * 10.0 * math.log10(d)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def ula_steering(n: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response, entry m is ``exp(j pi m sin(angle))``."""
    if n < 0:
        raise DomainError("element count must be non-negative")
    return np.exp(1j * np.pi * np.arange(n) * np.sin(angle))


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, trial, stream)``.

    Streams are split through :class:`numpy.random.SeedSequence`, so the
    result does not depend on which other trials have been drawn.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial), int(stream)]))


def _rayleigh(rng: np.random.Generator, shape, var) -> np.ndarray:
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z * np.sqrt(np.asarray(var) / 2.0)


def draw_realization(cfg: ScenarioConfig, seed: int, trial: int) -> ChannelRealization:
    """Draw the channels of Monte-Carlo trial ``trial`` under ``seed``."""
    rng = trial_rng(seed, trial)
    k = cfg.n_users

    radius = cfg.user_radius * np.sqrt(rng.uniform(size=k))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=k)
    cx, cy, _ = cfg.user_center
    users = np.column_stack(
        [cx + radius * np.cos(phi), cy + radius * np.sin(phi), np.full(k, cfg.user_height)]
    )

    bs = np.asarray(cfg.bs_pos)
    ris = np.asarray(cfg.ris_pos)
    d_direct = np.linalg.norm(users - bs, axis=1)
    d_ris = np.linalg.norm(users - ris, axis=1)

    loss_d = np.array([path_loss_db(d, cfg.alpha_d, cfg.beta_d) for d in d_direct])
    loss_d[: cfg.n_penalized] += cfg.extra_loss_db
    loss_r = np.array([path_loss_db(d, cfg.alpha_r, cfg.beta_r) for d in d_ris])

    sigma = cfg.noise_std
    h_direct = _rayleigh(rng, (k, cfg.n_bs), db_to_linear(-loss_d)[:, None]) / sigma
    h_ris_user = _rayleigh(rng, (k, cfg.n_ris), db_to_linear(-loss_r)[:, None]) / sigma

    gain_s = float(db_to_linear(-path_loss_db(np.linalg.norm(ris - bs), cfg.alpha_s, cfg.beta_s)))
    a = math.sqrt(gain_s * cfg.n_bs) * ula_steering(cfg.n_ris, 0.0)
    b = ula_steering(cfg.n_bs, 0.0) / math.sqrt(cfg.n_bs)

    return ChannelRealization(h_direct, h_ris_user, a, b, users)
