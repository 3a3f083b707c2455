"""How trustworthy are the decisions? A small simulation study.

Each trial simulates a treated series and three reference series sharing a
latent random walk and weekly cycle, runs the control + impact pipeline,
and compares the call with the truth. Without an injected effect we want
the 90% interval to cover zero about 90% of the time and few increase or
decrease calls; with a +50% lift we want the increase to be detected.

The acceptance suite runs the same study with 500 and 200 trials; here a
smaller run keeps the demo under a minute.

Run:  python3 demos/calibration.py [n_trials]
"""

import math
import sys

from eventimpact.simulate import SimConfig, run_calibration


def describe(title: str, rep) -> None:
    print(f"{title} ({rep.trials} trials)")
    print(f"  decisions:            {rep.decisions}")
    print(f"  90% interval covers the true cumulative effect: {rep.coverage:.2f}")
    if math.isnan(rep.detection):
        print(f"  false positive rate:  {rep.fpr:.2f}")
    else:
        print(f"  detection rate:       {rep.detection:.2f}")
    print(f"  mean bias of rel_effect (points, shifted scale): {rep.bias:+.3f}")


def main(n_trials: int) -> None:
    describe("no effect", run_calibration(SimConfig(effect=0.0, seed=1), n_trials))
    describe("+50% lift, base rate 200/day", run_calibration(SimConfig(effect=0.5, base_rate=200.0, seed=1), n_trials))
    print("\nthe same study from the command line:\n  eventimpact --out calib calibrate --trials 500 --effect 0")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 60)
