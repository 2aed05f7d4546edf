"""Extract tempo-spectral biomarkers from a synthetic EEG trial.

Walks through the per-channel features (Hjorth parameters, fractal
dimensions, band powers) and shows the fixed 416-dimension contract for a
32-channel, 60-second trial at 128 Hz.
"""

import numpy as np

from jmml.biomarkers import (
    EegTrial,
    FeatureSelection,
    band_powers,
    extract_trial,
    higuchi_fd,
    hjorth,
    petrosian_fd,
    spectral_entropy,
)

rng = np.random.default_rng(0)
fs = 128.0

# A toy "EEG" channel: pink-ish noise plus a 10 Hz alpha burst.
t = np.arange(int(60 * fs)) / fs
alpha = 1.5 * np.sin(2 * np.pi * 10.0 * t)
noise = np.cumsum(rng.standard_normal(t.size)) * 0.05 + rng.standard_normal(t.size)
channel = alpha + noise

mobility, complexity = hjorth(channel)
print(f"Hjorth mobility   {mobility:.4f}")
print(f"Hjorth complexity {complexity:.4f}")
print(f"Petrosian FD      {petrosian_fd(channel):.4f}")
print(f"Higuchi FD        {higuchi_fd(channel):.4f}")

psi, rir = band_powers(channel, fs)
for (name, lo, hi), p, r in zip(FeatureSelection().bands.bands, psi, rir):
    print(f"  {name:<10} {lo:>4.0f}-{hi:<4.0f} Hz  PSI {p:10.1f}  RIR {r:.3f}")
print(f"spectral entropy  {spectral_entropy(rir):.4f}  (alpha burst -> low)")

# The full trial-level contract: 32 channels x 13 features = 416.
trial = EegTrial(rng.standard_normal((32, int(60 * fs))), fs, "demo")
vec = extract_trial(trial)
print(f"\n32-channel trial -> {vec.dim} features "
      f"(closed form: {FeatureSelection().output_dim(32)})")
