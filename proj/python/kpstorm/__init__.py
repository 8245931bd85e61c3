"""Kp forecasting toolkit.

Build a feature table from solar-wind, Dst and Kp series, fit random-forest
or linear models, and score them on a chronological split::

    import kpstorm
    sources = kpstorm.synth(seed=7)
    rows = kpstorm.compare(sources, seed=7, cutoff="2021-04-01T00:00Z")
"""

from ._kpstorm import (
    Dataset,
    ForestConfig,
    ForestModel,
    KpstormError,
    LagSpec,
    LinearModel,
    PcaModel,
    Sources,
    accuracy_within_1,
    compare,
    fit_forest,
    fit_linear,
    fit_pca,
    fuse,
    kp_label,
    load_sources,
    run_experiment,
    synth,
    write_synth,
)

__all__ = [
    "Dataset",
    "ForestConfig",
    "ForestModel",
    "KpstormError",
    "LagSpec",
    "LinearModel",
    "PcaModel",
    "Sources",
    "accuracy_within_1",
    "compare",
    "fit_forest",
    "fit_linear",
    "fit_pca",
    "fuse",
    "kp_label",
    "load_sources",
    "run_experiment",
    "synth",
    "write_synth",
]
