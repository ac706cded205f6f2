"""Walk through the direct-vs-transfer benchmark protocol on one fixture.

The protocol has four steps:
  1. trace the direct learning curve (test RMSE vs number of target samples),
  2. read off n_direct, the plateau of that curve (the direct-learning cost),
  3. sweep transfer ensembles over increasingly dense target sub-grids,
  4. pick the smallest sub-grid that matches the direct baseline and report
     the sample- and RMSE-reduction percentages.

Reduced repetition counts keep the demo under a minute; the `benchmark` CLI
subcommand runs the same steps at full strength.

Run:  python3 demos/benchmark_protocol.py
"""

import time

from fffwidth import (
    SearchConfig,
    SourceModelConfig,
    SvrParams,
    default_synthetic_config,
    direct_learning_curve,
    find_n_direct,
    generate_source_pool,
    generate_synthetic_target,
    select_n_t,
    transfer_sweep,
)

H = 0.85
SEED = 0
# reduced search grids keep the demo fast; the CLI defaults search much wider
FAST = SearchConfig(
    grid=(SvrParams(c=10.0, epsilon=0.001, gamma=0.01),),
    transfer_grid=tuple(SvrParams(c=c, epsilon=0.001, gamma=g)
                        for c in (10.0, 100.0) for g in (0.01, 0.1)))


def main():
    t0 = time.perf_counter()
    target = generate_synthetic_target(
        cfg_src=SourceModelConfig(h=H),
        cfg_syn=default_synthetic_config(H, seed=SEED))
    source = generate_source_pool(H)

    print(f"step 1: direct learning curve on {len(target)} target samples")
    curve = direct_learning_curve(target, n_grid=range(10, 151, 20), reps=20,
                                  search=FAST, seed=SEED)
    for p in curve.points:
        print(f"  n={p.n_train:4d}  rmse = {p.mean_rmse:.4f} +/- {p.std_rmse:.4f} mm")

    baseline = find_n_direct(curve)
    print(f"\nstep 2: curve plateaus at n_direct = {baseline.n_direct} "
          f"(rmse {baseline.rmse_mean:.4f} mm, plateau_found={baseline.plateau_found})")

    print(f"\nstep 3: transfer sweep over target sub-grids "
          f"({len(source)} source samples per fit)")
    sweep = transfer_sweep(source, target, baseline,
                           subgrid_sizes=[(4, 4), (5, 5), (6, 6)],
                           eval_reps=10, test_size=55, config=None,
                           seed=SEED, search=FAST)
    for c in sweep.cells:
        marker = " <= baseline" if c.mean_rmse_t <= baseline.rmse_mean else ""
        print(f"  {c.n_s}x{c.n_f} grid ({c.n_t_actual:3d} stable samples)  "
              f"rmse_t = {c.mean_rmse_t:.4f} +/- {c.std_rmse_t:.4f} mm{marker}")

    report = select_n_t(sweep)
    print(f"\nstep 4: report (h = {report.h} mm)")
    print(f"  direct baseline:   {report.n_direct} samples, "
          f"rmse {report.rmse_direct_mean:.4f} mm")
    print(f"  transfer choice:   {report.n_s}x{report.n_f} grid, "
          f"{report.n_t_total} samples, rmse {report.rmse_t_mean:.4f} mm")
    print(f"  sample reduction:  {report.sample_reduction_pct:.1f} %")
    print(f"  rmse reduction:    {report.rmse_reduction_pct:+.1f} %")
    print(f"  achieved:          {report.achieved}")
    print(f"\ntotal time {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
