"""Uniform-grid periodic fields on the torus with exact Fourier-multiplier operators.

A :class:`PeriodicField` stores real samples at the nodes ``theta_j = 2*pi*j/N``
(``N`` even).  All operators below act exactly per Fourier mode:

* :func:`derivative`        -- multiplier ``i*k``
* :func:`hilbert`           -- multiplier ``-i*sgn(k)``
* :func:`frac_laplacian_half` -- multiplier ``|k|``
* :func:`poisson_smooth`    -- multiplier ``s**|k|``
* :func:`poisson_semigroup` -- multiplier ``exp(-t*|k|)``

Odd multipliers (derivative, Hilbert transform) zero the Nyquist mode, which is
sign-ambiguous on an even grid.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "PeriodicField",
    "derivative",
    "hilbert",
    "frac_laplacian_half",
    "poisson_smooth",
    "poisson_semigroup",
    "dealias",
    "shifted_samples",
    "resample",
    "evaluate_at",
]


class PeriodicField:
    """Real periodic function sampled at ``theta_j = 2*pi*j/N``.

    Immutable value object: arithmetic returns new instances and the sample
    buffer is marked read-only.
    """

    __slots__ = ("samples",)

    def __init__(self, samples):
        arr = np.array(samples, dtype=float)
        if arr.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        n = arr.shape[0]
        if n < 8 or n % 2 != 0:
            raise ValueError(f"need an even number of samples >= 8, got {n}")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __setattr__(self, name, value):
        raise AttributeError("PeriodicField is immutable")

    # -- construction helpers -------------------------------------------------
    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n))

    @classmethod
    def from_function(cls, fn, n):
        return cls(fn(cls.nodes(n)))

    @classmethod
    def from_coeffs(cls, coeffs, n):
        """Build from normalized spectral coefficients (mode 0 = mean)."""
        return cls(np.fft.irfft(np.asarray(coeffs, dtype=complex) * n, n=n))

    @staticmethod
    def nodes(n, shift=0.0):
        """Grid nodes ``2*pi*(j + shift)/n``."""
        return 2.0 * np.pi * (np.arange(n) + shift) / n

    # -- basic views ----------------------------------------------------------
    @property
    def N(self):
        return self.samples.shape[0]

    def coeffs(self):
        """Normalized rfft coefficients: ``coeffs()[0]`` is the mean."""
        return np.fft.rfft(self.samples) / self.N

    def mean(self):
        return float(np.mean(self.samples))

    def sup_norm(self):
        return float(np.max(np.abs(self.samples)))

    def mode_amplitude(self, k):
        """Amplitude of the real mode ``a*cos(k t)+b*sin(k t)``: ``2*|c_k|``."""
        c = self.coeffs()
        if k == 0:
            return abs(float(c[0].real))
        if k >= self.N // 2 or k < 0:
            raise ValueError("mode out of range")
        return 2.0 * abs(c[k])

    def mode(self, k):
        """Complex normalized coefficient of mode ``k >= 0``."""
        return complex(self.coeffs()[k])

    def remove_mean(self):
        return PeriodicField(self.samples - np.mean(self.samples))

    # -- arithmetic -----------------------------------------------------------
    def _binary(self, other, op):
        if isinstance(other, PeriodicField):
            if other.N != self.N:
                raise ValueError("grid size mismatch")
            return PeriodicField(op(self.samples, other.samples))
        return PeriodicField(op(self.samples, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return PeriodicField(other - self.samples)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return PeriodicField(-self.samples)

    def apply_multiplier(self, mult, zero_nyquist=False):
        """Return the field with spectral coefficients multiplied by ``mult(k)``.

        ``mult`` is an array over ``k = 0..N/2``.  With ``zero_nyquist`` the
        ``k = N/2`` coefficient is dropped (required after odd multipliers).
        """
        c = np.fft.rfft(self.samples)
        c = c * mult
        if zero_nyquist:
            c[-1] = 0.0
        return PeriodicField(np.fft.irfft(c, n=self.N))

    def __repr__(self):
        return f"PeriodicField(N={self.N}, mean={self.mean():.6g})"


def _wavenumbers(n):
    return np.arange(n // 2 + 1)


def derivative(f):
    """Spectral derivative; multiplier ``i*k``, Nyquist zeroed."""
    k = _wavenumbers(f.N)
    return f.apply_multiplier(1j * k, zero_nyquist=True)


def hilbert(f):
    """Hilbert transform on the torus; multiplier ``-i*sgn(k)``, mean to 0."""
    k = _wavenumbers(f.N)
    mult = -1j * np.sign(k)
    return f.apply_multiplier(mult, zero_nyquist=True)


def frac_laplacian_half(f):
    """Half Laplacian ``(-Delta)^(1/2)``; multiplier ``|k|``."""
    return f.apply_multiplier(_wavenumbers(f.N).astype(float))


def poisson_smooth(f, s):
    """Poisson-kernel smoothing; multiplier ``s**|k|`` with ``0 <= s < 1``."""
    if not 0.0 <= s < 1.0:
        raise ValueError(f"smoothing parameter must lie in [0, 1), got {s}")
    return f.apply_multiplier(s ** _wavenumbers(f.N).astype(float))


def poisson_semigroup(f, t):
    """Poisson semigroup ``exp(-t(-Delta)^(1/2))``; multiplier ``exp(-t|k|)``."""
    if t < 0.0:
        raise ValueError(f"semigroup time must be nonnegative, got {t}")
    return f.apply_multiplier(np.exp(-t * _wavenumbers(f.N).astype(float)))


def dealias(f):
    """Zero all modes with ``|k| > N/3`` (2/3-rule truncation)."""
    kmax = f.N // 3
    k = _wavenumbers(f.N)
    return f.apply_multiplier((k <= kmax).astype(float))


def shifted_samples(f, shift=0.5):
    """Samples of the trigonometric interpolant at ``theta_j + shift*2*pi/N``.

    The Nyquist mode is zeroed (its phase-shifted value is not representable
    as a real rfft coefficient).
    """
    c = np.fft.rfft(f.samples)
    k = _wavenumbers(f.N)
    c = c * np.exp(2j * np.pi * k * shift / f.N)
    c[-1] = 0.0
    return np.fft.irfft(c, n=f.N)


def resample(f, m):
    """Trigonometric resampling onto ``m`` uniform nodes (zero pad/truncate)."""
    if m == f.N:
        return PeriodicField(f.samples.copy())
    c = np.fft.rfft(f.samples) / f.N
    out = np.zeros(m // 2 + 1, dtype=complex)
    keep = min(len(c), len(out))
    out[:keep] = c[:keep]
    if keep == len(out) and m < f.N:
        out[-1] = out[-1].real  # fold to a real Nyquist coefficient
    return PeriodicField(np.fft.irfft(out * m, n=m))


def evaluate_at(f, theta):
    """Evaluate the trigonometric interpolant at arbitrary angles."""
    theta = np.asarray(theta, dtype=float)
    c = f.coeffs()
    out = np.full(theta.shape, float(c[0].real))
    for k in range(1, len(c)):
        weight = 1.0 if k == f.N // 2 else 2.0
        out = out + weight * (
            c[k].real * np.cos(k * theta) - c[k].imag * np.sin(k * theta)
        )
    return out
