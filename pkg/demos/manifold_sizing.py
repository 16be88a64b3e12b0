"""How many Fourier terms an array of a given size needs.

Scans the minimum odd P whose discarded coefficients fall below each
threshold and compares with the linear rule used by default.

    python3 demos/manifold_sizing.py
"""

import numpy as np

from arbdoa import manifold

radii = np.arange(1.0, 10.01, 1.0)
levels = [-80.0, -120.0, -160.0]
rows = manifold.bandwidth_profile(radii, levels)
table = {(r, g): p for r, g, p in rows}

print("r/lambda " + "".join(f"{g:>9.0f}dB" for g in levels) + "   rule(-160)")
for r in radii:
    print(f"{r:8.1f} " + "".join(f"{table[(r, g)]:11d}" for g in levels) + f"{manifold.linear_rule(r):13d}")

fit = manifold.bandwidth_profile(np.arange(2.0, 10.01, 0.5), [-160.0])
slope, icpt = manifold.fit_line(fit)
print(f"\nleast-squares line at -160 dB over r = 2..10: P = {slope:.2f} r + {icpt:.2f}")
print(f"default rule: P = {manifold.RULE_SLOPE} r + {manifold.RULE_INTERCEPT} (rounded up to odd)")

# coefficient decay for one sensor on a 2-wavelength circle
mags = manifold.coefficient_magnitudes(2.0, 101)
db = 20 * np.log10(np.maximum(mags, 1e-300) / mags.max())
print("\n|alpha_k| relative to peak, r = 2 wavelengths")
for k in (0, 10, 15, 20, 25, 30):
    print(f"  k = {k:3d}: {db[k]:8.1f} dB")
