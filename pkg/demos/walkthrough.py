"""Step through one estimate: manifold, SDP, dual polynomial, roots, amplitudes.

Uses the bundled three-source UCA scene (40 sensors, radius 2 wavelengths).

    python3 demos/walkthrough.py
"""

import numpy as np

from arbdoa import geometry, manifold, pipeline, rooting, scenario, sdp

scn = scenario.load_scenario(scenario.bundled("fig2.scenario"))
geom = scn.geometry
y = pipeline.synthesize(scn)
print(f"array: {geom.n_sensors} sensors, farthest at {geom.max_radius:.2f} wavelengths")
print("true DOAs (deg):", np.round(np.rad2deg(scn.angles), 4).tolist())

# 1. Fourier basis of the array manifold
P = scn.resolved_p()
basis = manifold.build_basis(geom, P)
err = basis.reconstruction_error(geom).max()
print(f"\nP = {P} Fourier terms, worst manifold reconstruction error {err:.1e}")

# 2. Solve the dual SDP
sol = sdp.solve(sdp.assemble(basis, y), scn.solver)
print(f"SDP: {sol.status.value} after {sol.iterations} iterations, objective {sol.objective:.8f}")
print(f"     (sum of source magnitudes is {np.abs(scn.amplitudes).sum():.8f})")

# 3. The dual polynomial touches 1 only at the sources
cert = sdp.check_certificate(sol, basis)
print(f"max |b(theta)| = {cert.max_magnitude:.9f} at {np.rad2deg(cert.argmax_rad):.4f} deg")

# 4. Root 1 - |b|^2 and keep the unit-circle roots
q = rooting.nonneg_poly(sol.h)
z = rooting.roots(q)
print(f"\n{z.size} roots of the degree-{q.size - 1} polynomial; closest to the unit circle:")
for zz in sorted(z, key=lambda v: abs(abs(v) - 1))[:8]:
    print(f"  |z| = {abs(zz):.6f}  angle {np.rad2deg(np.angle(zz)):9.4f} deg")
doa = rooting.extract_doas(z)
print("selected DOAs (deg):", np.round(np.rad2deg(doa.angles), 6).tolist())

# 5. Amplitudes by least squares on the selected steering vectors
amps, resid = pipeline.recover_amplitudes(y, geom, doa.angles)
print("magnitudes:", np.round(np.abs(amps), 6).tolist(), f" residual {resid:.1e}")
