"""Two sources 10 degrees apart: the beamformer sees one peak, the SDP finds both.

    python3 demos/resolution_vs_cbf.py
"""

import numpy as np

from arbdoa import pipeline, scenario, simulate

scn = scenario.load_scenario(scenario.bundled("fig3.scenario"))
y = pipeline.synthesize(scn)
res = pipeline.run_scenario(scn)

theta = simulate.angle_grid(36000)
cbf = simulate.cbf_spectrum(y, scn.geometry, theta.size)
peaks = simulate.local_maxima(cbf, theta=theta, lo=-np.pi, hi=np.pi, rel_height=0.5)

print("true DOAs (deg):     ", np.round(np.rad2deg(scn.angles), 4).tolist())
print("beamformer peaks:    ", np.round(np.rad2deg(theta[peaks]), 2).tolist())
print("gridless estimate:   ", np.round(res.doa.angles_deg, 6).tolist())
print("estimated magnitudes:", np.round(np.abs(res.doa.amplitudes), 6).tolist())

# a coarse text plot of the beamformer around the pair
print("\nbeamformer output, 50..80 deg")
for deg in range(50, 81, 2):
    v = cbf[np.argmin(np.abs(np.rad2deg(theta) - deg))]
    mark = " <" if any(abs(deg - t) < 1 for t in np.rad2deg(scn.angles)) else ""
    print(f"{deg:4d} {'#' * int(round(40 * v / cbf.max())):40s}{mark}")
