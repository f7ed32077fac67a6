"""Value-noise sweep and a demand-shift check through the experiment harness.

Both commands write CSV files and SVG plots; the sizes here are tiny so the
script is a smoke run of the pipeline, not a measurement.
"""
import tempfile
from pathlib import Path

from invgraph import harness
from invgraph.harness import ExperimentSpec

small = {"batch_size": 200}
with tempfile.TemporaryDirectory() as d:
    out = Path(d)
    spec = ExperimentSpec(net="net6", seeds=(0,), iterations=3, episodes=5, out=out / "sweep", algo_overrides=small)
    sweep = harness.cmd_noise_sweep(spec, sigmas=(0.0, 0.5, 2.0))
    for row in harness.read_csv(sweep):
        print(f"sigma {row['sigma']:<4g} profit {row['profit_mean']:8.1f}  final entropy {row['final_entropy']:.3f}")
    print(f"best sigma in this tiny sweep: {harness.best_sigma(sweep):g}")

    ck = out / "sweep" / "sigma_0.5" / "checkpoint_seed0.npz"
    shift = harness.cmd_demand_shift(ExperimentSpec(net="net6", seeds=(0,), episodes=5, out=out / "shift"), ck)
    for row in harness.read_csv(shift):
        print(
            f"demand rate {row['lambda_d']:g}: profit {row['profit_mean']:8.1f}  "
            f"median backlog {row['backlog_median']:6.1f}  histogram TV {row['tv_distance']:.4f}"
        )
    print("files:", sorted(p.name for p in (out / "shift").iterdir()))
