"""Tempo-spectral EEG biomarkers.

Per-channel temporal features (Hjorth parameters, fractal dimensions, DFA,
Hurst exponent) and spectral features (band power intensity, relative
intensity ratio, spectral entropy) assembled into a fixed-order trial
feature vector.

Feature ordering contract
-------------------------
``extract_trial`` emits features channel-major: all features for channel 0,
then channel 1, etc.  Within a channel the order is:

1. selected temporal features, in the order of ``TEMPORAL_FEATURES``;
2. PSI for each selected band (band order), if ``psi`` selected;
3. RIR for each selected band (band order), if ``rir`` selected;
4. spectral entropy, if selected.

With the default selection (Hjorth mobility/complexity, HFD, PFD; PSI, RIR
and spectral entropy over the four bands alpha_low..gamma) a 32-channel
trial yields 32 * (4 + 4 + 4 + 1) = 416 features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSignal, ShapeError

TEMPORAL_FEATURES = (
    "hjorth_mobility",
    "hjorth_complexity",
    "hfd",
    "pfd",
    "dfa",
    "hurst",
)

SPECTRAL_FEATURES = ("psi", "rir", "spectral_entropy")

#: Standard EEG bands (Hz).
STANDARD_BANDS = (
    ("theta", 4.0, 8.0),
    ("alpha_low", 8.0, 10.0),
    ("alpha_high", 10.0, 13.0),
    ("beta", 13.0, 25.0),
    ("gamma", 25.0, 40.0),
)


@dataclass(frozen=True)
class BandSet:
    """Ordered, non-overlapping frequency bands."""

    bands: tuple = STANDARD_BANDS

    def __post_init__(self):
        prev_high = 0.0
        for name, low, high in self.bands:
            if not 0.0 < low < high:
                raise ValueError(f"band {name}: need 0 < low < high")
            if low < prev_high:
                raise ValueError(f"band {name}: bands must be ascending and non-overlapping")
            prev_high = high

    @property
    def names(self):
        return tuple(b[0] for b in self.bands)

    def __len__(self):
        return len(self.bands)

    def validate_against(self, sample_rate):
        nyquist = sample_rate / 2.0
        for name, _low, high in self.bands:
            if high >= nyquist:
                raise ValueError(f"band {name} exceeds Nyquist frequency {nyquist} Hz")


#: Four-band set used by the default feature selection (theta dropped).
DEFAULT_BANDS = BandSet(STANDARD_BANDS[1:])


@dataclass(frozen=True)
class FeatureSelection:
    """Which temporal/spectral features to extract per channel."""

    temporal: tuple = ("hjorth_mobility", "hjorth_complexity", "hfd", "pfd")
    bands: BandSet = DEFAULT_BANDS
    spectral: tuple = ("psi", "rir", "spectral_entropy")

    def __post_init__(self):
        for f in self.temporal:
            if f not in TEMPORAL_FEATURES:
                raise ValueError(f"unknown temporal feature {f!r}")
        for f in self.spectral:
            if f not in SPECTRAL_FEATURES:
                raise ValueError(f"unknown spectral feature {f!r}")
        if not self.temporal and not self.spectral:
            raise ValueError("feature selection is empty")

    def dim_per_channel(self):
        n_band_feats = sum(1 for f in ("psi", "rir") if f in self.spectral)
        n = len(self.temporal) + len(self.bands) * n_band_feats
        if "spectral_entropy" in self.spectral:
            n += 1
        return n

    def output_dim(self, n_channels):
        """Closed-form output dimension of ``extract_trial``."""
        return n_channels * self.dim_per_channel()


@dataclass
class EegTrial:
    """Raw multi-channel EEG segment.

    Parameters
    ----------
    channels : ndarray, shape (n_channels, n_samples)
    sample_rate : float
        Sampling rate in Hz.  Never inferred from data.
    trial_id : str
    """

    channels: np.ndarray
    sample_rate: float = 128.0
    trial_id: str = ""

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.float64)
        if self.channels.ndim != 2 or self.channels.shape[0] < 1:
            raise ShapeError("channels must be a (n_channels, n_samples) matrix")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.isfinite(self.channels).all():
            raise ValueError("trial contains non-finite samples")


@dataclass
class FeatureVector:
    """Fixed-dimension feature vector with a modality tag."""

    values: np.ndarray
    modality: str = "eeg"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        if not np.isfinite(self.values).all():
            raise ValueError("feature vector contains non-finite entries")
        if self.modality not in ("eeg", "speech"):
            raise ValueError(f"unknown modality {self.modality!r}")

    @property
    def dim(self):
        return self.values.size


# ---------------------------------------------------------------------------
# temporal features


def hjorth(signal):
    """Hjorth mobility and complexity.

    mobility = sqrt(var(dx) / var(x)); complexity = mobility(dx) / mobility(x).
    A signal whose first difference is constant gets complexity 0 by
    convention (no curvature information, avoids a 0/0).
    """
    x = _as_signal(signal, min_len=3)
    var_x = np.var(x)
    if var_x == 0.0:
        raise DegenerateSignal("constant signal has no Hjorth parameters")
    dx = np.diff(x)
    var_dx = np.var(dx)
    mobility = np.sqrt(var_dx / var_x)
    if var_dx == 0.0:
        return float(mobility), 0.0
    ddx = np.diff(dx)
    mobility_dx = np.sqrt(np.var(ddx) / var_dx)
    return float(mobility), float(mobility_dx / mobility)


def petrosian_fd(signal):
    """Petrosian fractal dimension from sign changes of the first difference."""
    x = _as_signal(signal, min_len=2)
    dx = np.diff(x)
    n_delta = int(np.sum(dx[:-1] * dx[1:] < 0))
    n = x.size
    log_n = np.log10(n)
    return float(log_n / (log_n + np.log10(n / (n + 0.4 * n_delta))))


def higuchi_fd(signal, k_max=8):
    """Higuchi fractal dimension.

    Least-squares slope of log(L(k)) against log(1/k) over curve lengths
    L(k) for k = 1..k_max.
    """
    x = _as_signal(signal, min_len=2 * k_max)
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    n = x.size
    log_lk = []
    log_inv_k = []
    for k in range(1, k_max + 1):
        lengths = []
        for m in range(k):
            idx = np.arange(m, n, k)
            if idx.size < 2:
                continue
            dist = np.sum(np.abs(np.diff(x[idx])))
            norm = (n - 1) / ((idx.size - 1) * k)
            lengths.append(dist * norm / k)
        lk = np.mean(lengths)
        if lk <= 0.0:
            raise DegenerateSignal("constant signal has zero curve length")
        log_lk.append(np.log(lk))
        log_inv_k.append(np.log(1.0 / k))
    slope, _ = np.polyfit(log_inv_k, log_lk, 1)
    return float(slope)


def _box_sizes(n):
    # powers of 2 from 4 up to n // 4
    sizes = []
    size = 4
    while size <= n // 4:
        sizes.append(size)
        size *= 2
    return sizes


def dfa(signal):
    """Detrended fluctuation analysis scaling exponent.

    Box sizes are powers of 2 from 4 to N/4; linear detrending per box.
    """
    x = _as_signal(signal, min_len=64)
    if np.var(x) == 0.0:
        raise DegenerateSignal("constant signal has no fluctuation")
    profile = np.cumsum(x - np.mean(x))
    log_n, log_f = [], []
    for size in _box_sizes(x.size):
        n_boxes = x.size // size
        segs = profile[: n_boxes * size].reshape(n_boxes, size)
        t = np.arange(size, dtype=np.float64)
        # per-box linear fit via least squares on the shared design
        design = np.vstack([t, np.ones_like(t)]).T
        coef, *_ = np.linalg.lstsq(design, segs.T, rcond=None)
        resid = segs.T - design @ coef
        f = np.sqrt(np.mean(resid**2))
        if f > 0.0:
            log_n.append(np.log(size))
            log_f.append(np.log(f))
    if len(log_n) < 2:
        raise DegenerateSignal("not enough non-degenerate box sizes for DFA")
    slope, _ = np.polyfit(log_n, log_f, 1)
    return float(slope)


def hurst(signal):
    """Rescaled-range Hurst exponent over the DFA box schedule."""
    x = _as_signal(signal, min_len=64)
    if np.var(x) == 0.0:
        raise DegenerateSignal("constant signal has no Hurst exponent")
    log_n, log_rs = [], []
    for size in _box_sizes(x.size):
        n_boxes = x.size // size
        segs = x[: n_boxes * size].reshape(n_boxes, size)
        means = segs.mean(axis=1, keepdims=True)
        z = np.cumsum(segs - means, axis=1)
        r = z.max(axis=1) - z.min(axis=1)
        s = segs.std(axis=1)
        ok = s > 0.0
        if not ok.any():
            continue
        rs = np.mean(r[ok] / s[ok])
        if rs > 0.0:
            log_n.append(np.log(size))
            log_rs.append(np.log(rs))
    if len(log_n) < 2:
        raise DegenerateSignal("not enough non-degenerate box sizes for Hurst")
    slope, _ = np.polyfit(log_n, log_rs, 1)
    return float(slope)


# ---------------------------------------------------------------------------
# spectral features


def band_powers(signal, sample_rate, bands=DEFAULT_BANDS, window=None):
    """Power spectral intensity and relative intensity ratio per band.

    PSI sums magnitude-spectrum bins inside each band; RIR normalizes PSI
    to sum to one.  The spectrum is the plain DFT magnitude of the raw
    signal; pass ``window='hann'`` to taper first.
    """
    x = _as_signal(signal, min_len=2)
    bands.validate_against(sample_rate)
    if window == "hann":
        x = x * np.hanning(x.size)
    elif window is not None:
        raise ValueError(f"unknown window {window!r}")
    spectrum = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(x.size, d=1.0 / sample_rate)
    psi = np.array(
        [spectrum[(freqs >= low) & (freqs < high)].sum() for _name, low, high in bands.bands]
    )
    total = psi.sum()
    if total == 0.0:
        raise DegenerateSignal("no spectral mass inside the requested bands")
    return psi, psi / total


def spectral_entropy(rir):
    """Normalized Shannon entropy of a band-probability vector, in [0, 1]."""
    p = np.asarray(rir, dtype=np.float64)
    nonzero = p[p > 0.0]
    return float(-np.sum(nonzero * np.log(nonzero)) / np.log(p.size))


# ---------------------------------------------------------------------------
# trial assembly


def channel_features(x, sample_rate, selection, k_max=8, window=None):
    """Feature vector for one channel, in the documented order."""
    feats = []
    hjorth_pair = None
    for name in TEMPORAL_FEATURES:
        if name not in selection.temporal:
            continue
        if name in ("hjorth_mobility", "hjorth_complexity"):
            if hjorth_pair is None:
                hjorth_pair = hjorth(x)
            feats.append(hjorth_pair[0 if name == "hjorth_mobility" else 1])
        elif name == "hfd":
            feats.append(higuchi_fd(x, k_max=k_max))
        elif name == "pfd":
            feats.append(petrosian_fd(x))
        elif name == "dfa":
            feats.append(dfa(x))
        elif name == "hurst":
            feats.append(hurst(x))
    if selection.spectral:
        psi, rir = band_powers(x, sample_rate, selection.bands, window=window)
        if "psi" in selection.spectral:
            feats.extend(psi)
        if "rir" in selection.spectral:
            feats.extend(rir)
        if "spectral_entropy" in selection.spectral:
            feats.append(spectral_entropy(rir))
    return np.array(feats, dtype=np.float64)


def extract_trial(trial, selection=FeatureSelection(), k_max=8, window=None):
    """Extract the selected biomarkers for every channel of a trial.

    Returns a :class:`FeatureVector` whose length equals
    ``selection.output_dim(n_channels)``.  A degenerate channel raises
    :class:`DegenerateSignal` carrying the channel index.
    """
    parts = []
    for ch, x in enumerate(trial.channels):
        try:
            parts.append(channel_features(x, trial.sample_rate, selection, k_max=k_max, window=window))
        except DegenerateSignal as err:
            raise DegenerateSignal(str(err), channel=ch) from err
    return FeatureVector(np.concatenate(parts), modality="eeg")


def _as_signal(signal, min_len):
    x = np.asarray(signal, dtype=np.float64).ravel()
    if x.size < min_len:
        raise ValueError(f"signal too short: need at least {min_len} samples, got {x.size}")
    return x
