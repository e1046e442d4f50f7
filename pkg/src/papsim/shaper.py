"""Source spectrum, 4f-shaper mask and FFT synthesis of the temporal envelope.

Conventions
-----------
The physical field is ``E(t) exp(-i wc t) + c.c.`` with the slowly varying
envelope

    E(t) = (dw / 2 pi) * sum_j A(w_j) exp(-i (w_j - wc) t),

so a spectral phase ``(w - wk) T`` delays a window by ``+T`` and a positive
quadratic phase produces an up-chirp. With this normalisation the discrete
Parseval relation reads ``sum |E|^2 dt = (1 / 2 pi) sum |A|^2 dw``.

Amplitude windows are Gaussians in wavelength; their phase terms are
polynomials in angular frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .atom import SPEED_OF_LIGHT, angular_frequency, wavelength_of
from .errors import ConfigurationError, GridTooCoarseError, NotATrainError

LN2 = math.log(2.0)
WRAP_TOLERANCE = 1e-4


def _next_pow2(n):
    return 1 << max(0, int(math.ceil(math.log2(max(n, 1)))))


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform angular-frequency grid ``w_j = omega_min + j * d_omega``."""

    omega_min: float
    omega_max: float
    n_points: int = 2**15

    def __post_init__(self):
        if not self.omega_min < self.omega_max:
            raise ConfigurationError("omega_min must be below omega_max")
        if self.omega_min <= 0:
            raise ConfigurationError("grid frequencies must be positive")
        n = int(self.n_points)
        if n < 2**12 or n & (n - 1):
            raise ConfigurationError(f"n_points must be a power of two >= 4096, got {n}")

    @classmethod
    def from_wavelengths(cls, wl_min, wl_max, n_points=2**15):
        return cls(angular_frequency(wl_max), angular_frequency(wl_min), n_points)

    @property
    def d_omega(self):
        return (self.omega_max - self.omega_min) / self.n_points

    @property
    def omega(self):
        return self.omega_min + self.d_omega * np.arange(self.n_points)

    @property
    def wavelength(self):
        return wavelength_of(self.omega)

    @property
    def time_window(self):
        """Period of the discrete Fourier time axis, fs."""
        return 2.0 * np.pi / self.d_omega

    @property
    def dt(self):
        return 2.0 * np.pi / (self.omega_max - self.omega_min)

    @property
    def wavelength_range(self):
        return wavelength_of(self.omega_max), wavelength_of(self.omega_min)

    def contains_wavelength(self, wl):
        lo, hi = self.wavelength_range
        return lo <= wl <= hi

    def contains_omega(self, omega):
        return self.omega_min <= omega <= self.omega_max


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: SpectralGrid
    amplitude: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitude, dtype=complex)
        if amp.shape != (self.grid.n_points,):
            raise ConfigurationError("amplitude length does not match the grid")
        if not np.all(np.isfinite(amp)):
            raise ConfigurationError("spectral amplitude must be finite")
        object.__setattr__(self, "amplitude", amp)

    def energy(self):
        return float(np.sum(np.abs(self.amplitude) ** 2) * self.grid.d_omega / (2.0 * np.pi))

    @property
    def intensity(self):
        return np.abs(self.amplitude) ** 2

    def at_wavelength(self, wl):
        """Linear interpolation of the complex amplitude at a wavelength."""
        om = angular_frequency(wl)
        re = np.interp(om, self.grid.omega, self.amplitude.real)
        im = np.interp(om, self.grid.omega, self.amplitude.imag)
        return re + 1j * im


@dataclass(frozen=True)
class WindowSpec:
    """One Gaussian amplitude window of the shaper.

    ``fwhm`` in nm, ``chirp_alpha`` in fs^2, ``phase_offset`` in rad,
    ``delay`` in fs.
    """

    center_wavelength: float
    fwhm: float
    rel_amplitude: float = 1.0
    chirp_alpha: float = 0.0
    phase_offset: float = 0.0
    delay: float = 0.0

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ConfigurationError(f"window fwhm must be positive, got {self.fwhm}")
        if self.rel_amplitude < 0:
            raise ConfigurationError("rel_amplitude must be non-negative")
        if not self.center_wavelength > 0:
            raise ConfigurationError("center_wavelength must be positive")

    @property
    def omega(self):
        return angular_frequency(self.center_wavelength)


@dataclass(frozen=True)
class ShapeSpec:
    windows: tuple
    pixel_width: Optional[float] = None
    fwhm_convention: str = "intensity"

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))
        if not self.windows:
            raise ConfigurationError("shape needs at least one window")
        if self.pixel_width is not None and not self.pixel_width > 0:
            raise ConfigurationError("pixel_width must be positive")
        if self.fwhm_convention not in ("intensity", "amplitude"):
            raise ConfigurationError("fwhm_convention must be 'intensity' or 'amplitude'")

    def with_windows(self, windows):
        return replace(self, windows=tuple(windows))

    def map_windows(self, **changes):
        return self.with_windows(replace(w, **changes) for w in self.windows)

    @property
    def max_delay(self):
        delays = [w.delay for w in self.windows]
        return max(max(delays), 0.0) - min(min(delays), 0.0)


def gaussian_profile(wavelength, center, fwhm, convention="intensity"):
    """Unit-peak Gaussian field amplitude in wavelength.

    With ``convention='intensity'`` the squared profile has FWHM ``fwhm``,
    otherwise the amplitude itself does.
    """
    x = (np.asarray(wavelength) - center) / fwhm
    k = 2.0 * LN2 if convention == "intensity" else 4.0 * LN2
    return np.exp(-k * x * x)


def source_spectrum(grid, center, fwhm, convention="intensity"):
    """Flat-phase Gaussian pump spectrum with unit peak amplitude."""
    if not grid.contains_wavelength(center):
        raise ConfigurationError(f"source center {center} nm lies outside the grid")
    if not fwhm > 0:
        raise ConfigurationError("source fwhm must be positive")
    amp = gaussian_profile(grid.wavelength, center, fwhm, convention)
    return SpectralField(grid, amp.astype(complex))


def _check_window(grid, w):
    lo, hi = grid.wavelength_range
    if w.center_wavelength - 2 * w.fwhm < lo or w.center_wavelength + 2 * w.fwhm > hi:
        raise ConfigurationError(
            f"window at {w.center_wavelength} nm (fwhm {w.fwhm} nm) extends outside the grid [{lo:.2f}, {hi:.2f}] nm"
        )


def window_mask(grid, window, convention="intensity"):
    """Complex transmission of a single window on the grid."""
    _check_window(grid, window)
    g = window.rel_amplitude * gaussian_profile(grid.wavelength, window.center_wavelength, window.fwhm, convention)
    dw = grid.omega - window.omega
    phase = 0.5 * window.chirp_alpha * dw * dw + window.phase_offset + dw * window.delay
    return g * np.exp(1j * phase)


def shape_mask(grid, shape):
    mask = np.zeros(grid.n_points, dtype=complex)
    for w in shape.windows:
        mask += window_mask(grid, w, shape.fwhm_convention)
    return mask


def apply_shape(field, shape):
    """Multiply a spectrum by the coherent sum of the shape's windows, then pixelize."""
    out = SpectralField(field.grid, field.amplitude * shape_mask(field.grid, shape))
    if shape.pixel_width is not None:
        out = pixelize(out, shape.pixel_width)
    return out


def pixel_bins(grid, pixel_width):
    """Number of grid bins per shaper pixel.

    Pixels are taken uniform in frequency, using the nm -> rad/fs slope at
    the grid's central wavelength.
    """
    if not pixel_width > 0:
        raise ConfigurationError("pixel_width must be positive")
    omega_mid = 0.5 * (grid.omega_min + grid.omega_max)
    wl_mid = wavelength_of(omega_mid)
    d_omega_pix = 2.0 * np.pi * SPEED_OF_LIGHT * pixel_width / wl_mid**2
    ratio = d_omega_pix / grid.d_omega
    if ratio < 1.0 - 1e-9:
        raise ConfigurationError(
            f"pixel width {pixel_width} nm is narrower than one grid bin ({pixel_width / ratio:.3g} nm)"
        )
    return max(1, int(round(ratio)))


def pixelize(field, pixel_width):
    """Replace the amplitude by its mean over each pixel (blocks of grid bins)."""
    k = pixel_bins(field.grid, pixel_width)
    if k == 1:
        return SpectralField(field.grid, field.amplitude.copy())
    n = field.grid.n_points
    idx = np.arange(n) // k
    sums = np.bincount(idx, weights=field.amplitude.real) + 1j * np.bincount(idx, weights=field.amplitude.imag)
    counts = np.bincount(idx)
    return SpectralField(field.grid, (sums / counts)[idx])


@dataclass(frozen=True, eq=False)
class TemporalField:
    """Complex envelope sampled on ``t_start + dt * arange(n)``.

    ``omega_band`` records the spectral support the envelope was synthesized
    from (None for analytic test fields).
    """

    t_start: float
    dt: float
    envelope: np.ndarray
    carrier: float
    amplitude_scale: float = 1.0
    omega_band: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "envelope", np.asarray(self.envelope, dtype=complex))
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")

    @property
    def n(self):
        return self.envelope.size

    @property
    def times(self):
        return self.t_start + self.dt * np.arange(self.n)

    @property
    def scaled_envelope(self):
        return self.amplitude_scale * self.envelope

    def energy(self):
        return float(np.sum(np.abs(self.envelope) ** 2) * self.dt)

    def with_scale(self, scale):
        return replace(self, amplitude_scale=float(scale))


def synthesize(field, carrier):
    """Inverse-transform a shaped spectrum into its envelope about ``carrier``.

    Raises :class:`GridTooCoarseError` when the envelope has not decayed to
    1e-4 of its peak at the edges of the time window.
    """
    grid = field.grid
    if not grid.contains_omega(carrier):
        raise ConfigurationError("carrier lies outside the spectral grid")
    amp = field.amplitude
    if not np.any(amp != 0):
        raise ConfigurationError("cannot synthesize an empty spectrum")
    n = grid.n_points
    dt = grid.dt
    t = (np.arange(n) - n // 2) * dt
    env = np.fft.fftshift(np.fft.fft(amp))
    env *= (grid.d_omega / (2.0 * np.pi)) * np.exp(-1j * (grid.omega_min - carrier) * t)
    mag = np.abs(env)
    peak = mag.max()
    if max(mag[0], mag[-1]) >= WRAP_TOLERANCE * peak:
        raise GridTooCoarseError("envelope wraps around the FFT time window", 2 * n)
    return TemporalField(float(t[0]), dt, env, float(carrier), 1.0, (grid.omega_min, grid.omega_max))


def required_n_points(grid, shape, margin=2.0):
    """Smallest power-of-two grid size whose time window covers ``margin`` x the largest delay."""
    need = margin * shape.max_delay
    if need <= grid.time_window:
        return grid.n_points
    span = grid.omega_max - grid.omega_min
    return _next_pow2(need * span / (2.0 * np.pi))


def check_time_window(grid, shape, margin=2.0):
    n_req = required_n_points(grid, shape, margin)
    if n_req > grid.n_points:
        raise GridTooCoarseError(
            f"time window {grid.time_window:.0f} fs is shorter than {margin} x delay {shape.max_delay:.0f} fs",
            n_req,
        )


def crop(field, threshold=1e-10, pad=8):
    """Index range ``[i0, i1)`` where |E| exceeds ``threshold`` x peak, padded."""
    mag = np.abs(field.envelope)
    peak = mag.max()
    if peak == 0:
        return 0, 0
    idx = np.nonzero(mag > threshold * peak)[0]
    return max(0, idx[0] - pad), min(field.n, idx[-1] + pad + 1)


def upsample(field, factor, i0=0, i1=None):
    """Band-limited (FFT) interpolation of ``envelope[i0:i1]`` by an integer factor.

    Returns a new :class:`TemporalField` with spacing ``dt / factor`` that
    starts at the same time as sample ``i0`` and ends at sample ``i1 - 1``.
    The envelope is demodulated to the centre of its band first so that the
    interpolant is exact for any band-limited field that vanishes at the
    segment edges.
    """
    i1 = field.n if i1 is None else i1
    seg = field.envelope[i0:i1]
    m = seg.size
    t = field.t_start + field.dt * np.arange(i0, i1)
    shift = 0.0
    if field.omega_band is not None:
        shift = 0.5 * (field.omega_band[0] + field.omega_band[1]) - field.carrier
    seg = seg * np.exp(1j * shift * (t - t[0]))
    spec = np.fft.fft(seg)
    big = np.zeros(m * factor, dtype=complex)
    h = m // 2
    if m % 2:
        big[: h + 1] = spec[: h + 1]
        big[-h:] = spec[h + 1 :]
    else:
        big[:h] = spec[:h]
        big[-h:] = spec[h:]
        # split the Nyquist bin to keep the interpolant real-symmetric
        big[h] = 0.5 * spec[h]
        big[-h] = 0.5 * spec[h]
    fine = np.fft.ifft(big) * factor
    n_keep = (m - 1) * factor + 1
    fine = fine[:n_keep]
    dt_f = field.dt / factor
    fine *= np.exp(-1j * shift * dt_f * np.arange(n_keep))
    return replace(field, t_start=float(t[0]), dt=dt_f, envelope=fine)


def _refine_parabola(y, i):
    """Sub-sample vertex offset of the parabola through y[i-1], y[i], y[i+1]."""
    if i <= 0 or i >= len(y) - 1:
        return 0.0
    a, b, c = y[i - 1], y[i], y[i + 1]
    den = a - 2 * b + c
    return 0.0 if den == 0 else 0.5 * (a - c) / den


def train_spacing(field, rel_height=0.1, oversample=16):
    """Pulse period of a train envelope, in fs.

    Peaks are the local maxima of |E| above ``rel_height`` of the global
    maximum. Within a smooth overall envelope the maxima are pulled towards
    the train centre, while the interference nodes separating them are not,
    so when two or more separating minima exist the period is the median
    spacing of those minima; otherwise the median spacing of the maxima.
    """
    i0, i1 = crop(field, 1e-6, pad=4)
    if i1 - i0 < 3:
        raise NotATrainError("envelope is empty")
    fine = upsample(field, oversample, i0, i1) if oversample > 1 else field
    p = np.abs(fine.envelope) ** 2
    thr = (rel_height * np.sqrt(p.max())) ** 2
    inner = p[1:-1]
    is_max = (inner > p[:-2]) & (inner >= p[2:]) & (inner > thr)
    peaks = np.nonzero(is_max)[0] + 1
    if peaks.size < 2:
        raise NotATrainError(f"found {peaks.size} peak(s) above {rel_height:.0%} of the maximum")
    t_peaks = np.array([i + _refine_parabola(p, i) for i in peaks]) * fine.dt
    mins = []
    for a, b in zip(peaks[:-1], peaks[1:]):
        j = a + int(np.argmin(p[a : b + 1]))
        mins.append(j + _refine_parabola(p, j))
    mins = np.array(mins) * fine.dt
    if mins.size >= 2:
        return float(np.median(np.diff(mins)))
    return float(np.median(np.diff(t_peaks)))
