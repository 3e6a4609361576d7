"""
A small training-size sweep
===========================

The experiment drivers behind the ``qrc`` command can be used directly. This
runs a reduced version of the training-size sweep (5 reservoirs, 200 test
phases) and writes the same CSV tables, manifest and SVG charts as the CLI.

Equivalent command line::

    qrc run --experiment train_size_sweep --n-reservoirs 5 --test-size 200 \\
        --train-sizes 5,10,20,30 --dims 6 --out-dir demo_output/sweep
"""

from kerrqrc.experiments import ExperimentConfig, run_experiment
from kerrqrc.outputs import emit_outputs, load_result

cfg = ExperimentConfig(
    experiment="train_size_sweep",
    n_reservoirs=5,
    test_size=200,
    train_sizes=[5, 10, 20, 30],
    dims=[6],
    out_dir="demo_output/sweep",
)
result = run_experiment(cfg)
paths = emit_outputs(result, cfg.out_dir)

for a in result.aggregates:
    print(f"{a['model']:4s} d={a['dim']:2d} M={a['train_size']:3d}  "
          f"mean {a['rms_mean']:.2e}  spread {a['spread_factor']:.2f}")

###############################################################################
# Reloading checks the aggregates against the per-reservoir rows.

again = load_result(cfg.out_dir)
print(len(again.rows), "rows reloaded;", [p.name for p in paths["charts"]])
