"""Measure the price of privacy: detection delay at matched false-alarm rates.

Comparing detectors at the same threshold is meaningless because noise
inflates false alarms; the fair comparison matches empirical ARL.  This
demo tunes a small threshold ladder per detector, estimates (ARL, WADD)
along it, and interpolates delays onto a common ARL grid.

Trial counts are kept small so the demo runs in about a minute; the
committed fig configs do the same at publication scale.
"""

import time

from dpcusum import ModelPair, compare_detectors

model = ModelPair.laplace_shift(0.5)
grid = [300.0, 1000.0]

t0 = time.time()
report = compare_detectors(
    {
        "cusum": {"variant": "cusum"},
        "dp eps=2": {"variant": "dp_cusum", "epsilon": 2.0},
        "dp eps=1": {"variant": "dp_cusum", "epsilon": 1.0},
    },
    model,
    arl_grid=grid,
    trials=400,
    seed=11,
)

print(f"matched-ARL delays, laplace mu=0.5 ({time.time() - t0:.0f}s):")
print(f"  {'detector':<14}" + "".join(f" wadd@{int(g):<6}" for g in grid))
for curve in report.curves:
    cells = "".join(f" {w:>10.1f}" for w in curve.matched_wadd)
    print(f"  {curve.label:<14}{cells}")

base = report.wadd_of("cusum")
for curve in report.curves:
    if curve.label == "cusum":
        continue
    ratios = [w / b for w, b in zip(curve.matched_wadd, base)]
    print(f"  {curve.label}: delay ratio vs exact = " + ", ".join(f"{r:.2f}" for r in ratios))

print("""
Reading the table: the private detectors pay a delay premium that shrinks
as epsilon grows, and at eps = 2 (= 2x the llr sensitivity) the premium
is small; pushing trials up tightens these numbers toward the committed
figure configs.""")
