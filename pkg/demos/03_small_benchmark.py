# %% [markdown]
# # A small paired benchmark
#
# Baseline BP-OSD and preprocessing arms on the same 2,000 syndromes of the
# [[72,8,6]] code.  The CLI equivalent is
# `bbprep bench --spec 72 --p 0.002 --shots 2000 --scale-factor 2,4 --max-iter 100`.
# Run with `python demos/03_small_benchmark.py`.

# %%
from bbprep import BB_CODES
from bbprep.harness import ExperimentConfig, aggregate, build_experiment, run_experiment

cfg = ExperimentConfig(BB_CODES["72"], p=0.002, shots=2000, seed=1, max_iterations=100, factors=(2.0, 4.0))
exp = build_experiment(cfg)
records = run_experiment(exp)

# %%
print(f"{'factor':>6} {'rel. iters':>10} {'conv. base':>10} {'conv. pre':>10} {'LER base':>9} {'LER pre':>9}")
for f in cfg.factors:
    c = aggregate(records, f)
    print(
        f"{f:>6g} {c.relative_iterations:>10.3f} {c.baseline.convergence_probability:>10.4f} "
        f"{c.preprocessed.convergence_probability:>10.4f} {c.baseline.logical_error_rate:>9.4f} "
        f"{c.preprocessed.logical_error_rate:>9.4f}"
    )
