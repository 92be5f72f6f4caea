"""
Signal synthesis for IRS-assisted MIMO training.

A training session spans ``K`` blocks of ``T`` slots. The IRS phase pattern is
constant within a block (row ``k`` of ``S``) and the pilot matrix ``X`` is
repeated in every block, so that the noiseless slice received in block ``k``
is ``G @ diag(S[k]) @ H @ X.T`` and the received tensor is
``[[G, X H^T, S]]`` with shape ``(L, T, K)``.
"""

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InfeasibleDesign
from .tensor_core import build_parafac_tensor

__all__ = [
    "PerturbationConfig", "SystemConfig", "ChannelPair", "Scenario",
    "make_dft_matrix", "random_phase_matrix", "crandn", "ula_response",
    "ura_response", "draw_channels", "apply_perturbation", "build_scenario",
    "build_multiuser_scenario", "build_multibs_scenario", "add_noise",
    "save_scenario", "load_scenario",
]


@dataclass(frozen=True)
class PerturbationConfig:
    """Random blockage plus complex multiplicative IRS gain errors."""

    blockage_fraction: float = 0.2
    gamma: float = 0.01

    def __post_init__(self):
        if not 0.0 <= self.blockage_fraction < 1.0:
            raise ValueError("blockage_fraction must lie in [0, 1)")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class SystemConfig:
    """
    Scenario dimensions and protocol switches.

    ``M`` BS antennas, ``L`` UT antennas, ``N`` IRS elements, ``K`` blocks of
    ``T`` slots. ``snr_db = inf`` produces a noiseless scenario. With
    ``random_phase_fallback`` the pilot or IRS matrix is drawn with random
    unit-modulus entries when a truncated DFT cannot exist (``T < M`` or
    ``K < N``).
    """

    M: int = 3
    L: int = 2
    N: int = 4
    K: int = 4
    T: int = 3
    snr_db: float = math.inf
    channel_model: str = "iid_rayleigh"
    R1: int = 1
    R2: int = 1
    perturbation: Optional[PerturbationConfig] = None
    users: int = 1
    bs_count: int = 1
    seed: int = 0
    random_phase_fallback: bool = False

    def __post_init__(self):
        for name in ("M", "L", "N", "K", "T", "users", "bs_count"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.channel_model not in ("iid_rayleigh", "geometric"):
            raise ValueError(f"unknown channel model {self.channel_model!r}")
        if self.channel_model == "geometric":
            if not 1 <= self.R1 <= min(self.M, self.N):
                raise ValueError("geometric model needs 1 <= R1 <= min(M, N)")
            if not 1 <= self.R2 <= min(self.L, self.N):
                raise ValueError("geometric model needs 1 <= R2 <= min(L, N)")

    def replace(self, **changes):
        if isinstance(changes.get("perturbation"), dict):
            changes["perturbation"] = PerturbationConfig(**changes["perturbation"])
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if isinstance(d.get("perturbation"), dict):
            d["perturbation"] = PerturbationConfig(**d["perturbation"])
        return cls(**d)


@dataclass
class ChannelPair:
    """BS-IRS channel ``H`` (N x M) and IRS-UT channel ``G`` (L x N).

    ``geometry`` holds the steering matrices, path gains and angles when the
    pair was drawn from the geometric model.
    """

    H: np.ndarray
    G: np.ndarray
    geometry: Optional[dict] = None

    @property
    def theta(self):
        """Composite channel ``vec(H^T kr G)``."""
        return composite_theta(self.H, self.G)


def composite_theta(H, G):
    """``vec(H^T kr G)`` without materialising the Khatri-Rao product twice."""
    Theta = (H.T[:, None, :] * G[None, :, :]).reshape(-1, G.shape[1])
    return Theta.reshape(-1, order="F")


@dataclass
class Scenario:
    """
    One synthesized training session.

    ``channels`` always holds the pair seen by the estimators, i.e. the tensor
    is ``[[channels.G, X @ channels.H.T, S_actual]]``. For multi-user and
    multi-BS scenarios this is the equivalent pair (``G = Hbar^T`` or
    ``H^T``, ``H = Gbar^T``); the physical per-user and per-BS matrices are
    kept in ``user_channels`` and ``bs_channels``.
    """

    config: SystemConfig
    channels: ChannelPair
    S_ideal: np.ndarray
    S_actual: np.ndarray
    X: np.ndarray
    Y_clean: np.ndarray
    Y: np.ndarray
    noise: np.ndarray
    sigma2: float
    user_channels: Optional[list] = None
    bs_channels: Optional[list] = None

    @property
    def theta(self):
        return self.channels.theta


def crandn(rng, shape, var=1.0):
    """Circularly-symmetric complex Gaussian samples with variance ``var``."""
    scale = math.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def make_dft_matrix(rows, cols):
    """
    First ``cols`` columns of the ``rows``-point DFT matrix.

    Entries are ``exp(-2j*pi*r*c/rows)``, hence ``A^H A = rows * I``.
    """
    if cols > rows:
        raise InfeasibleDesign(f"truncated DFT needs cols <= rows ({cols} > {rows})")
    r = np.arange(rows)[:, None]
    c = np.arange(cols)[None, :]
    return np.exp(-2j * np.pi * ((r * c) % rows) / rows)


def random_phase_matrix(rows, cols, rng):
    """Unit-modulus entries with independent uniform phases."""
    return np.exp(2j * np.pi * rng.random((rows, cols)))


def ula_response(n, psi):
    """Half-wavelength ULA steering vectors ``exp(j*pi*m*psi)``, one column per path."""
    m = np.arange(n)[:, None]
    return np.exp(1j * np.pi * m * np.atleast_1d(psi)[None, :])


def _ura_shape(N):
    n1 = math.ceil(math.sqrt(N))
    return n1, math.ceil(N / n1)


def ura_response(N, azimuth, elevation):
    """
    URA steering matrix for ``N`` elements, one column per path.

    The surface is an ``n1 x n2`` grid with ``n1 = ceil(sqrt(N))`` and
    ``n2 = ceil(N / n1)``; the response is
    ``kron(ula(n1, cos(el) sin(az)), ula(n2, sin(el)))`` truncated to its
    first ``N`` entries.
    """
    az = np.atleast_1d(azimuth)
    el = np.atleast_1d(elevation)
    n1, n2 = _ura_shape(N)
    a1 = ula_response(n1, np.cos(el) * np.sin(az))
    a2 = ula_response(n2, np.sin(el))
    full = (a1[:, None, :] * a2[None, :, :]).reshape(n1 * n2, -1)
    return full[:N]


def _draw_angles(rng, R):
    return {"azimuth": rng.uniform(-np.pi / 2, np.pi / 2, R),
            "elevation": rng.uniform(0.0, np.pi / 2, R)}


def _geometric_link(rng, n_irs, n_ant, R):
    """Low-rank link ``A_irs diag(gain) A_ant^H`` with ``R`` single-ray paths."""
    ant = rng.uniform(-np.pi / 2, np.pi / 2, R)
    irs = _draw_angles(rng, R)
    A_ant = ula_response(n_ant, np.sin(ant))
    A_irs = ura_response(n_irs, irs["azimuth"], irs["elevation"])
    gain = crandn(rng, R)
    return A_irs, gain, A_ant, ant, irs


def draw_channels(config, rng):
    """
    Draw ``H`` (N x M) and ``G`` (L x N) for ``config``.

    ``iid_rayleigh`` draws CN(0, 1) entries. ``geometric`` builds
    ``H = A_IRS diag(alpha) A_BS^H`` and ``G = B_UT diag(beta) B_IRS^H`` with
    ``R1`` and ``R2`` paths, ULA steering at the BS and UT and URA steering at
    the IRS.
    """
    M, L, N = config.M, config.L, config.N
    if config.channel_model == "iid_rayleigh":
        H = crandn(rng, (N, M))
        G = crandn(rng, (L, N))
        return ChannelPair(H, G)
    A_irs, alpha, A_bs, bs_ang, irs_h = _geometric_link(rng, N, M, config.R1)
    B_irs, beta, B_ut, ut_ang, irs_g = _geometric_link(rng, N, L, config.R2)
    H = A_irs @ np.diag(alpha) @ A_bs.conj().T
    G = B_ut @ np.diag(beta) @ B_irs.conj().T
    geometry = {
        "A_BS": A_bs, "A_IRS": A_irs, "alpha": alpha,
        "B_UT": B_ut, "B_IRS": B_irs, "beta": beta,
        "bs_angle": bs_ang, "ut_angle": ut_ang,
        "irs_H_azimuth": irs_h["azimuth"], "irs_H_elevation": irs_h["elevation"],
        "irs_G_azimuth": irs_g["azimuth"], "irs_G_elevation": irs_g["elevation"],
    }
    return ChannelPair(H, G, geometry)


def apply_perturbation(S_ideal, pcfg, rng):
    """
    Perturbed IRS matrix ``s[k, n] = a[k, n] f[k, n] s_ideal[k, n]``.

    ``a`` is 0 with probability ``pcfg.blockage_fraction`` and ``f`` is
    CN(0, ``pcfg.gamma``), all independent.
    """
    shape = S_ideal.shape
    a = (rng.random(shape) >= pcfg.blockage_fraction).astype(float)
    f = crandn(rng, shape, pcfg.gamma)
    return a * f * S_ideal


def _design(rows, cols, rng, allow_random, what):
    if cols <= rows:
        return make_dft_matrix(rows, cols)
    if not allow_random:
        raise InfeasibleDesign(
            f"{what}: truncated DFT design needs {rows} >= {cols}; "
            "set random_phase_fallback to use random phases")
    return random_phase_matrix(rows, cols, rng)


def add_noise(Y_clean, snr_db, rng):
    """
    Return ``(Y, noise, sigma2)`` with the noise rescaled so that
    ``10 log10(||Y_clean||^2 / ||noise||^2) == snr_db`` exactly.
    """
    if math.isinf(snr_db) and snr_db > 0:
        noise = np.zeros_like(Y_clean)
        return Y_clean.copy(), noise, 0.0
    noise = crandn(rng, Y_clean.shape)
    target = np.linalg.norm(Y_clean) ** 2 / 10.0 ** (snr_db / 10.0)
    noise *= math.sqrt(target) / np.linalg.norm(noise)
    sigma2 = float(np.linalg.norm(noise) ** 2 / noise.size)
    return Y_clean + noise, noise, sigma2


def _irs_matrices(config, rng):
    S_ideal = _design(config.K, config.N, rng, config.random_phase_fallback, "IRS matrix")
    if config.perturbation is None:
        return S_ideal, S_ideal
    return S_ideal, apply_perturbation(S_ideal, config.perturbation, rng)


def build_scenario(config, rng):
    """
    Synthesize a single-user scenario.

    Draw order (fixed, for reproducibility): designs, perturbation,
    channels, noise.
    """
    if config.users > 1 or config.bs_count > 1:
        return build_multibs_scenario(config, rng)
    X = _design(config.T, config.M, rng, config.random_phase_fallback, "pilot matrix")
    S_ideal, S_actual = _irs_matrices(config, rng)
    ch = draw_channels(config, rng)
    Z = X @ ch.H.T
    Y_clean = build_parafac_tensor(ch.G, Z, S_actual)
    Y, noise, sigma2 = add_noise(Y_clean, config.snr_db, rng)
    return Scenario(config, ch, S_ideal, S_actual, X, Y_clean, Y, noise, sigma2)


def build_multiuser_scenario(config, rng):
    """
    Uplink scenario with ``config.users`` UTs sharing one BS.

    User ``u`` sends pilots ``X_u`` (columns ``uL:(u+1)L`` of a ``T x UL``
    truncated DFT) through its own ``G_u`` (L x N); ``H`` (N x M) is common.
    The BS tensor (M x T x K) has factors ``(H^T, Xbar Gbar, S)``.
    """
    if config.bs_count != 1:
        raise ValueError("use build_multibs_scenario for bs_count > 1")
    return build_multibs_scenario(config, rng)


def build_multibs_scenario(config, rng):
    """
    Uplink scenario with ``config.users`` UTs and ``config.bs_count``
    cooperating BSs.

    The stacked tensor (PM x T x K) has factors ``(Hbar, Xbar Gbar, S)``
    with ``Hbar = [H_1, ..., H_P]^T``; rows ``pM:(p+1)M`` of every slice are
    the signal seen by BS ``p``.
    """
    U, P, L = config.users, config.bs_count, config.L
    if config.T < U * L:
        raise InfeasibleDesign(f"multi-user pilots need T >= U*L ({config.T} < {U * L})")
    Xbar = make_dft_matrix(config.T, U * L)
    S_ideal, S_actual = _irs_matrices(config, rng)
    G_users = []
    H_bs = []
    for _ in range(P):
        H_bs.append(draw_channels(config.replace(users=1, bs_count=1), rng).H)
    for _ in range(U):
        G_users.append(draw_channels(config.replace(users=1, bs_count=1), rng).G)
    Gbar = np.vstack(G_users)                  # UL x N
    Hbar_T = np.vstack([H.T for H in H_bs])    # PM x N
    equivalent = ChannelPair(H=Gbar.T, G=Hbar_T)
    Y_clean = build_parafac_tensor(Hbar_T, Xbar @ Gbar, S_actual)
    Y, noise, sigma2 = add_noise(Y_clean, config.snr_db, rng)
    return Scenario(config, equivalent, S_ideal, S_actual, Xbar, Y_clean, Y,
                    noise, sigma2, user_channels=G_users, bs_channels=H_bs)


_ARRAY_FIELDS = ("S_ideal", "S_actual", "X", "Y_clean", "Y", "noise")


def save_scenario(path, scenario):
    """
    Write ``scenario`` to an ``.npz`` archive.

    Every array is stored with its shape header as little-endian complex128
    (IEEE-754 real/imaginary pairs, row-major); the configuration and
    ``sigma2`` travel as a JSON string.
    """
    arrays = {name: np.ascontiguousarray(getattr(scenario, name), dtype="<c16")
              for name in _ARRAY_FIELDS}
    arrays["H"] = np.ascontiguousarray(scenario.channels.H, dtype="<c16")
    arrays["G"] = np.ascontiguousarray(scenario.channels.G, dtype="<c16")
    for key, group in (("user", scenario.user_channels), ("bs", scenario.bs_channels)):
        for i, mat in enumerate(group or []):
            arrays[f"{key}_{i}"] = np.ascontiguousarray(mat, dtype="<c16")
    cfg = scenario.config.to_dict()
    cfg["snr_db"] = repr(cfg["snr_db"])
    meta = {"config": cfg, "sigma2": scenario.sigma2,
            "n_user": len(scenario.user_channels or []),
            "n_bs": len(scenario.bs_channels or [])}
    np.savez(path, meta=np.array(json.dumps(meta)), **arrays)


def load_scenario(path):
    """Inverse of :func:`save_scenario`. Geometry details are not stored."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        cfg = meta["config"]
        cfg["snr_db"] = float(cfg["snr_db"])
        config = SystemConfig.from_dict(cfg)
        users = [data[f"user_{i}"] for i in range(meta["n_user"])] or None
        bss = [data[f"bs_{i}"] for i in range(meta["n_bs"])] or None
        arrays = {name: data[name] for name in _ARRAY_FIELDS}
        channels = ChannelPair(data["H"], data["G"])
    return Scenario(config, channels, sigma2=meta["sigma2"], user_channels=users,
                    bs_channels=bss, **arrays)
