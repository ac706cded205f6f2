"""Fit a direct SVR and a transfer ensemble on a synthetic fixture, then
compare their predictions against the ground truth away from the training
points.

Run:  python3 demos/train_and_predict.py
"""

from fffwidth import (
    SourceModelConfig,
    SvrParams,
    TransferConfig,
    default_synthetic_config,
    fit_tradaboost_r2,
    fit_weighted_svr,
    generate_source_pool,
    generate_synthetic_target,
    rmse,
    subgrid_select,
    synthetic_truth,
)

H = 0.85
PARAMS = SvrParams(c=10.0, epsilon=0.001, gamma=0.01)


def main():
    cfg_src = SourceModelConfig(h=H)
    cfg_syn = default_synthetic_config(H, seed=0)

    # "expensive" experimental data: a noisy grid of printed-line widths
    target = generate_synthetic_target(cfg_src=cfg_src, cfg_syn=cfg_syn)
    # "cheap" analytical data: mass-conservation widths on a denser grid
    source = generate_source_pool(H)
    print(f"h = {H} mm: {len(target)} target samples, {len(source)} source samples")

    # scarce-data scenario: only a 3 x 3 sub-grid of measurements is available
    scarce = subgrid_select(target, 3, 3)
    print(f"training on a 3x3 sub-grid -> {len(scarce)} stable measurements")

    direct = fit_weighted_svr(scarce, None, PARAMS)
    ensemble = fit_tradaboost_r2(source, scarce, TransferConfig(svr_params=PARAMS))

    # evaluate on the off-grid points the models never saw
    seen = set(zip(scarce.f, scarce.s))
    held_out = target.subset(
        [i for i in range(len(target)) if (target.f[i], target.s[i]) not in seen])
    truth = synthetic_truth(held_out.f, held_out.s, cfg_src, cfg_syn)

    print(f"direct SVR (sub-grid only):  rmse = {rmse(direct.predict_dataset(held_out), truth):.4f} mm")
    print(f"transfer ensemble:           rmse = {rmse(ensemble.predict_dataset(held_out), truth):.4f} mm")

    f, s = 450.0, 550.0
    print(f"\nsample prediction at F={f}, S={s}:")
    print(f"  truth     {synthetic_truth(f, s, cfg_src, cfg_syn):.4f} mm")
    print(f"  direct    {float(direct.predict_many([f], [s])[0]):.4f} mm")
    print(f"  transfer  {float(ensemble.predict_many([f], [s])[0]):.4f} mm")


if __name__ == "__main__":
    main()
