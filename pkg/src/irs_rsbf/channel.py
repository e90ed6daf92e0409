"""Geometric mmWave channels, path loss, Eve uncertainty sets and sample banks.

Geometry conventions
--------------------
* Alice carries a ULA along the x axis; the AoD of a path is the angle
  between the departure direction and that axis.
* The IRS is a UPA in the y-z plane: its "azimuth" axis is y and its
  "elevation" axis is z, so ``cos(theta)`` and ``cos(phi)`` are the direction
  cosines along those axes.
* ``H_AR`` is N x M (IRS rows, Alice columns) so that ``diag(h) @ H_AR`` is the
  cascaded N x M channel used everywhere else.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import kron

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class SystemConfig:
    M: int = 16
    N_az: int = 4
    N_el: int = 4
    K: int = 2
    L: int = 4
    P_max: float = 1.0
    sigma0_sq: float = 1e-14  # -110 dBm in W
    varsigma0: float = -61.4  # dB at 1 m
    c_los: float = 2.0
    c_nlos: float = 5.0
    wavelength: float = SPEED_OF_LIGHT / 28e9
    d0: float | None = None  # defaults to wavelength / 2
    alice: tuple = (10.0, 0.0, 20.0)
    irs: tuple = (0.0, 80.0, 20.0)
    bob: tuple = (20.0, 80.0, 0.0)
    eve_centers: tuple = ((10.0, 70.0, 0.0), (10.0, 90.0, 0.0))
    eve_region_radius: float = 2.0
    nlos_spread_deg: float = 10.0
    epsilon: float = 1e-3
    D_K: int = 16
    rand_trials: int = 100
    eval_samples: int = 200
    inner_max: int = 50
    outer_max: int = 20
    sample_amplitude: str = "min"  # "min" or "max" end of the amplitude interval
    weight_mode: str = "proportional"  # or "worst"
    delta_angle_deg: float = 5.0
    delta_amp_db: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.d0 is None:
            object.__setattr__(self, "d0", self.wavelength / 2)
        problems = []
        if self.M < 1:
            problems.append("M must be >= 1")
        if self.N_az < 1 or self.N_el < 1:
            problems.append("N_az and N_el must be >= 1")
        if self.K < 0:
            problems.append("K must be >= 0")
        if self.L < 1:
            problems.append("L must be >= 1")
        if self.P_max <= 0:
            problems.append("P_max must be > 0")
        if self.sigma0_sq <= 0:
            problems.append("sigma0_sq must be > 0")
        if self.D_K < 1:
            problems.append("D_K must be >= 1")
        if self.epsilon <= 0:
            problems.append("epsilon must be > 0")
        if self.d0 > self.wavelength / 2 * (1 + 1e-12):
            problems.append("d0 must not exceed wavelength/2")
        if self.K > 0 and len(self.eve_centers) == 0:
            problems.append("eve_centers is empty but K > 0")
        if self.sample_amplitude not in ("min", "max"):
            problems.append("sample_amplitude must be 'min' or 'max'")
        if self.weight_mode not in ("proportional", "worst"):
            problems.append("weight_mode must be 'proportional' or 'worst'")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def N(self):
        return self.N_az * self.N_el

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class PathComponent:
    alpha: complex
    amplitude: float
    is_los: bool
    aod_alice: float | None = None
    aoa_irs_az: float | None = None
    aoa_irs_el: float | None = None
    aod_irs_az: float | None = None
    aod_irs_el: float | None = None


@dataclass
class ChannelRealization:
    H_AR: np.ndarray  # N x M
    h_RB: np.ndarray  # N
    h_RE: np.ndarray  # K x N
    H_AB: np.ndarray  # N x M
    G_true: np.ndarray  # K x N x M
    paths: dict = field(default_factory=dict)
    eve_positions: np.ndarray | None = None

    @property
    def K(self):
        return self.h_RE.shape[0]


@dataclass
class UncertaintySet:
    """Per Eve (rows) and per path (columns) intervals.

    ``phase`` keeps the nominal phase of each small-scale gain; only its
    magnitude is uncertain.
    """

    amp_lo: np.ndarray
    amp_hi: np.ndarray
    az_lo: np.ndarray
    az_hi: np.ndarray
    el_lo: np.ndarray
    el_hi: np.ndarray
    phase: np.ndarray
    amp_nominal: np.ndarray
    az_nominal: np.ndarray
    el_nominal: np.ndarray

    def __post_init__(self):
        for lo, hi in ((self.amp_lo, self.amp_hi), (self.az_lo, self.az_hi), (self.el_lo, self.el_hi)):
            if np.any(lo > hi):
                raise ValueError("empty uncertainty interval")
        if np.any(self.amp_lo < 0):
            raise ValueError("amplitude bounds must be nonnegative")

    @property
    def K(self):
        return self.amp_lo.shape[0]

    def is_degenerate(self):
        return bool(np.all(self.amp_lo == self.amp_hi) and np.all(self.az_lo == self.az_hi)
                    and np.all(self.el_lo == self.el_hi))

    def midpoint(self):
        """Degenerate set at the interval midpoints (nominal amplitude)."""
        az = 0.5 * (self.az_lo + self.az_hi)
        el = 0.5 * (self.el_lo + self.el_hi)
        amp = self.amp_nominal
        return UncertaintySet(amp, amp, az, az, el, el, self.phase, amp, az, el)


@dataclass
class SampleBank:
    samples: np.ndarray  # K x D x N x M
    weights: np.ndarray  # K x D

    def __post_init__(self):
        if self.weights.size and (np.any(self.weights < 0)
                                  or np.any(np.abs(self.weights.sum(axis=1) - 1) > 1e-12)):
            raise ValueError("sample weights must lie on the simplex")

    @property
    def K(self):
        return self.samples.shape[0]

    @property
    def D(self):
        return self.samples.shape[1]

    def with_weights(self, weights):
        return SampleBank(self.samples, np.asarray(weights, dtype=float))


def steering_vector(count, angle, wavelength, d0):
    m = np.arange(count)
    return np.exp(-1j * 2 * np.pi / wavelength * m * d0 * np.cos(angle))


def upa_steering(n_az, n_el, theta, phi, wavelength, d0):
    return kron(steering_vector(n_az, theta, wavelength, d0),
                steering_vector(n_el, phi, wavelength, d0))


def path_loss_db(exponent, distance, varsigma0=-61.4):
    if distance <= 0:
        raise ValueError("distance must be positive")
    return varsigma0 - 10.0 * exponent * np.log10(distance)


def path_gain(exponent, distance, varsigma0=-61.4):
    """Linear power gain ``10**(path_loss_db/10)``."""
    return 10.0 ** (path_loss_db(exponent, distance, varsigma0) / 10.0)


def _unit(src, dst):
    v = np.asarray(dst, float) - np.asarray(src, float)
    d = np.linalg.norm(v)
    return v / d, d


def irs_angles(direction):
    """(theta, phi) of a unit direction seen from the IRS."""
    return float(np.arccos(np.clip(direction[1], -1, 1))), float(np.arccos(np.clip(direction[2], -1, 1)))


def alice_angle(direction):
    return float(np.arccos(np.clip(direction[0], -1, 1)))


def _cn(rng, size=None):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def _path_gains(config, distance):
    g = np.full(config.L, path_gain(config.c_nlos, distance, config.varsigma0))
    g[0] = path_gain(config.c_los, distance, config.varsigma0)
    return g


def _irs_link(config, rng, direction, distance, fixed_alpha):
    """Paths and row vector of one IRS -> receiver link."""
    theta0, phi0 = irs_angles(direction)
    spread = np.deg2rad(config.nlos_spread_deg)
    gains = _path_gains(config, distance)
    alphas = _cn(rng, config.L) if fixed_alpha is None else np.full(config.L, complex(fixed_alpha))
    pert = rng.uniform(-spread, spread, size=(config.L, 2))
    pert[0] = 0.0
    az = (theta0 + pert[:, 0]) % (2 * np.pi)
    el = (phi0 + pert[:, 1]) % (2 * np.pi)
    amp = np.abs(alphas) * np.sqrt(gains / config.L)
    paths = [PathComponent(alpha=complex(alphas[l]), amplitude=float(amp[l]), is_los=(l == 0),
                           aod_irs_az=float(az[l]), aod_irs_el=float(el[l]))
             for l in range(config.L)]
    # rebuilt from (amplitude, phase, angles) so that degenerate uncertainty
    # sets reproduce these rows bit for bit
    h = irs_rows(amp, az, el, np.angle(alphas), config)
    return paths, h


def draw_eve_positions(config, rng):
    centers = [config.eve_centers[k % len(config.eve_centers)] for k in range(config.K)]
    pos = np.zeros((config.K, 3))
    for k, c in enumerate(centers):
        r = config.eve_region_radius * np.sqrt(rng.uniform())
        a = rng.uniform(0, 2 * np.pi)
        pos[k] = np.asarray(c, float) + np.array([r * np.cos(a), r * np.sin(a), 0.0])
    return pos


def draw_channel(config, rng, fixed_alpha=None):
    """One realization of all links.

    Draw order (alice-irs link, bob link, eve positions, eve links) is part of
    the determinism contract.
    """
    u_ar, d_ar = _unit(config.alice, config.irs)
    u_ra, _ = _unit(config.irs, config.alice)
    phi_a0 = alice_angle(u_ar)
    th_r0, ph_r0 = irs_angles(u_ra)
    spread = np.deg2rad(config.nlos_spread_deg)
    gains = _path_gains(config, d_ar)
    alphas = _cn(rng, config.L) if fixed_alpha is None else np.full(config.L, complex(fixed_alpha))
    pert = rng.uniform(-spread, spread, size=(config.L, 3))
    pert[0] = 0.0
    H_AR = np.zeros((config.N, config.M), dtype=complex)
    ar_paths = []
    for l in range(config.L):
        pa = (phi_a0 + pert[l, 0]) % (2 * np.pi)
        th = (th_r0 + pert[l, 1]) % (2 * np.pi)
        ph = (ph_r0 + pert[l, 2]) % (2 * np.pi)
        scale = np.sqrt(gains[l] / config.L)
        a_A = steering_vector(config.M, pa, config.wavelength, config.d0)
        a_R = upa_steering(config.N_az, config.N_el, th, ph, config.wavelength, config.d0)
        H_AR += scale * alphas[l] * np.outer(a_R, a_A)
        ar_paths.append(PathComponent(alpha=complex(alphas[l]), amplitude=float(abs(alphas[l]) * scale),
                                      is_los=(l == 0), aod_alice=pa, aoa_irs_az=th, aoa_irs_el=ph))

    u_rb, d_rb = _unit(config.irs, config.bob)
    bob_paths, h_RB = _irs_link(config, rng, u_rb, d_rb, fixed_alpha)

    eve_pos = draw_eve_positions(config, rng)
    h_RE = np.zeros((config.K, config.N), dtype=complex)
    eve_paths = []
    for k in range(config.K):
        u, d = _unit(config.irs, eve_pos[k])
        p, h = _irs_link(config, rng, u, d, fixed_alpha)
        eve_paths.append(p)
        h_RE[k] = h

    return ChannelRealization(
        H_AR=H_AR, h_RB=h_RB, h_RE=h_RE,
        H_AB=h_RB[:, None] * H_AR,
        G_true=h_RE[:, :, None] * H_AR[None, :, :],
        paths={"AR": ar_paths, "RB": bob_paths, "RE": eve_paths},
        eve_positions=eve_pos,
    )


def cascade(h, H_AR):
    """``diag(h) @ H_AR`` for a single row h or a stack of rows."""
    h = np.asarray(h)
    return h[..., :, None] * H_AR


def build_uncertainty(realization, delta_angle, delta_amp_db=0.0):
    """Intervals ``nominal +/- delta_angle`` on both IRS AoDs of every Eve path.

    The amplitude interval is ``nominal * 10**(-/+ delta_amp_db / 20)``, i.e. a
    total width of ``delta_amp_db`` in power.
    """
    if delta_angle < 0:
        raise ValueError("delta_angle must be >= 0")
    eve_paths = realization.paths.get("RE", [])
    K = len(eve_paths)
    L = len(eve_paths[0]) if K else 0
    amp = np.array([[p.amplitude for p in ps] for ps in eve_paths]).reshape(K, L)
    az = np.array([[p.aod_irs_az for p in ps] for ps in eve_paths]).reshape(K, L)
    el = np.array([[p.aod_irs_el for p in ps] for ps in eve_paths]).reshape(K, L)
    phase = np.array([[np.angle(p.alpha) for p in ps] for ps in eve_paths]).reshape(K, L)
    f = 10.0 ** (delta_amp_db / 20.0)
    return UncertaintySet(
        amp_lo=amp / f, amp_hi=amp * f,
        az_lo=az - delta_angle, az_hi=az + delta_angle,
        el_lo=el - delta_angle, el_hi=el + delta_angle,
        phase=phase, amp_nominal=amp, az_nominal=az, el_nominal=el,
    )


def degenerate_uncertainty(realization):
    return build_uncertainty(realization, 0.0, 0.0)


def irs_rows(amp, az, el, phase, config):
    """IRS -> receiver row vectors from per-path parameters; arrays (..., L)."""
    k = 2 * np.pi / config.wavelength * config.d0
    a_az = np.exp(-1j * k * np.arange(config.N_az) * np.cos(az)[..., None])
    a_el = np.exp(-1j * k * np.arange(config.N_el) * np.cos(el)[..., None])
    steer = (a_az[..., :, None] * a_el[..., None, :]).reshape(az.shape + (config.N,))
    coef = amp * np.exp(1j * phase)
    return np.einsum("...l,...ln->...n", coef, steer)


def sample_eve_parameters(uncertainty, count, rng, amplitude="min"):
    """Draw ``count`` angle sets per Eve; returns (amp, az, el) of shape (K, count, L)."""
    K, L = uncertainty.amp_lo.shape
    u = rng.uniform(size=(count, K, L, 2)).transpose(1, 0, 2, 3)
    az = (uncertainty.az_lo[:, None] + u[..., 0] * (uncertainty.az_hi - uncertainty.az_lo)[:, None]) % (2 * np.pi)
    el = (uncertainty.el_lo[:, None] + u[..., 1] * (uncertainty.el_hi - uncertainty.el_lo)[:, None]) % (2 * np.pi)
    src = {"min": uncertainty.amp_lo, "max": uncertainty.amp_hi, "nominal": uncertainty.amp_nominal}[amplitude]
    amp = np.broadcast_to(src[:, None, :], (K, count, L)).copy()
    return amp, az, el


def sample_eve_rows(uncertainty, count, rng, config, amplitude="min"):
    amp, az, el = sample_eve_parameters(uncertainty, count, rng, amplitude)
    phase = np.broadcast_to(uncertainty.phase[:, None, :], amp.shape)
    return irs_rows(amp, az, el, phase, config)


def build_sample_bank(uncertainty, H_AR, config, rng, amplitude=None):
    """D_K cascaded wiretap samples per Eve with uniform weights."""
    amplitude = amplitude or config.sample_amplitude
    rows = sample_eve_rows(uncertainty, config.D_K, rng, config, amplitude)
    samples = rows[..., :, None] * H_AR
    K = uncertainty.K
    weights = np.full((K, config.D_K), 1.0 / config.D_K)
    return SampleBank(samples.reshape(K, config.D_K, config.N, config.M), weights)


def single_sample_bank(cascades):
    """Bank holding one given cascade per Eve (weight 1)."""
    G = np.asarray(cascades)
    return SampleBank(G[:, None], np.ones((G.shape[0], 1)))
