"""Run the four-setup experiment end to end on a small synthetic corpus.

Produces the eight-row report (four setups x two modalities) and renders
the side-by-side table.  Scale n_per_class up (or drop the overrides) for
the full benchmark.
"""

from jmml.config import (
    EdccConfig,
    ExperimentConfig,
    JeclConfig,
    MbplsConfig,
    RfConfig,
)
from jmml.experiment import render_table, rows_to_json, run_experiment
from jmml.pipeline import SynthSpec

config = ExperimentConfig(
    seed=0,
    synth=SynthSpec(n_per_class=120, latent_dim=6, dims=(32, 20), noise=1.0, seed=0),
    jecl=JeclConfig(epochs=60),
    edcc=EdccConfig(epochs=25),
    mbpls=MbplsConfig(n_components=20),
    rf=RfConfig(n_estimators=60, max_depth=8),
)

rows = run_experiment(config)
print(render_table(rows, config.dimension))
print()
print(rows_to_json(rows))
