"""Plant a direction in one chunk and check whether the memory still finds it.

Compares sticky sampling (past locations follow earlier attention) with
uniform sampling on the default synthetic scenario, then sweeps amplitude.
"""

from contmem import harness

spec = harness.SyntheticStreamSpec()
print(f"scenario: {spec.chunks} chunks x {spec.M} frames, dim {spec.e}, needle in chunk "
      f"{spec.needle_chunk} frames {spec.needle_start}-{spec.needle_stop}, amplitude {spec.amplitude}")

out = harness.compare_variants(spec, fine_grid=20001)
for name in ("sticky", "uniform", "control"):
    rep = out[name]
    print(f"{name:8s} ratio {rep['ratio']:6.2f}  hit rate {rep['hit_rate']:.2f}  "
          f"interval [{rep['interval'][0]:.4f}, {rep['interval'][1]:.4f}]")
print(f"sticky on a 20001-point grid: {out['sticky_fine']['ratio']:.2f}")
print(f"discrete attention over all frames: {out['full_attention_ratio']:.2f}")

for amp in (0.0, 1.0, 2.0, 4.0, 8.0):
    r = harness.run_needle_scenario(harness.SyntheticStreamSpec(amplitude=amp))["aligned"].ratio
    print(f"amplitude {amp:3.1f} -> sticky ratio {r:.2f}")
