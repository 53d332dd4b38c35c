#!/usr/bin/env python3
"""Recombination of the two retrieved modes on the measured beamsplitter.

Two indistinguishable photons meeting at the splitter bunch, so the
one-photon-per-arm component barely produces coincidences (a11 is tiny); the
two-in-one-arm components dominate with weights near 0.4. The correction
factor converts a measured coincidence probability into the convention where
both arms are measured simultaneously and separately.
"""

from heraldsim import (
    BeamSplitterCoeffs,
    DetectorParams,
    TwoPhotonDiagonal,
    bunching_coefficients,
    effective_bunching_weight,
    effective_efficiencies,
    q_from_q11,
    recombined_p11,
)

bs = BeamSplitterCoeffs(at2=0.479, ar2=0.422, bt2=0.482, br2=0.409)
a11, a20, a02 = bunching_coefficients(bs)
print(f"measured splitter intensities: T = {bs.transmission}, R = {bs.reflection}, "
      f"loss = ({bs.loss_a:.3f}, {bs.loss_b:.3f})")
print(f"bunching coefficients: a11 = {a11:.4f}, a20 = {a20:.4f}, a02 = {a02:.4f}")
print("(a11 is two orders of magnitude down: photons from opposite arms bunch)")

q20, q02 = q_from_q11(1.0, bs.reflection, bs.transmission)
print(f"\noccupation relations per unit q11: q20 = {q20:.4f}, q02 = {q02:.4f}, "
      f"sum = {q20 + q02:.4f}")

det1, det2 = DetectorParams(0.15), DetectorParams(0.30)
q = TwoPhotonDiagonal(1e-6, q20 * 1e-6, q02 * 1e-6)
print(f"coincidence probability for q11 = 1e-6, eta = (0.15, 0.30): "
      f"{recombined_p11(q, bs, det1, det2):.4e}")

print(f"\nexact effective bunching weight: {effective_bunching_weight(bs):.4f}")
eta_a, eta_b, corr_exact = effective_efficiencies(bs, DetectorParams(0.5), DetectorParams(1.0))
_, _, corr_rounded = effective_efficiencies(
    bs, DetectorParams(0.5), DetectorParams(1.0), bunching_weight=0.4
)
print(f"effective per-arm efficiencies at eta1 = eta2/2: "
      f"eta_A = {eta_a:.4f} eta2, eta_B = {eta_b:.4f} eta2")
print(f"convention correction: {corr_exact:.4f} exact, "
      f"{corr_rounded:.4f} with the rounded 0.4 weight")

symmetric = BeamSplitterCoeffs(0.5, 0.5, 0.5, 0.5)
s11, s20, s02 = bunching_coefficients(symmetric)
print(f"\nlossless symmetric splitter: a11 = {s11}, a20 = a02 = {s20}; "
      f"correction = {effective_efficiencies(symmetric, det1, det1)[2]:.1f}")
