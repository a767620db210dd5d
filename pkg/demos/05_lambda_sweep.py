"""Sweeping the pool-scale knob, including the cells that cannot exist.

Larger lambda draws a larger candidate pool, strengthening the bias toward
high-loss samples; past lambda = 1 + alpha*P_F/P_S the pool would exceed
the dataset and the configuration is rejected rather than clamped.

The CLI equivalent:  hetsgd sweep-lambda <config> --lambdas 1 2 4 8 16 32
"""

from dataclasses import replace

import numpy as np

from hetsgd.config import parse_config_file, validate
from hetsgd.data import InvalidLambdaError
from hetsgd.harness import bundled_config_path, run

cfg = parse_config_file(bundled_config_path("hard"))
print(f"task: alpha={cfg.alpha}, tau=(32,1), {len(cfg.seeds)} seeds, "
      f"{cfg.rounds} rounds\n")
print(f"{'lambda':>7} {'median acc':>11} {'spread':>8}")
for lam in (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0):
    c = replace(cfg, lam=lam)
    try:
        validate(c)
    except InvalidLambdaError:
        print(f"{lam:>7g} {'N/A':>11} {'-':>8}")
        continue
    result = run(c)
    finals = [sr.final_acc for sr in result.per_seed]
    print(f"{lam:>7g} {np.median(finals):>11.4f} {result.summary['final_acc_spread']:>8.4f}")

print("\nlambda = 1 is plain uniform selection over the pool's worth of data;"
      "\nmoderate values bias toward hard examples; oversized pools are N/A.")
