"""Likelihood-based tabular anomaly detection with coupling flows.

Library layout:

* :mod:`flowbench.rng`, :mod:`flowbench.linalg`, :mod:`flowbench.mlp` -
  deterministic numerical substrate.
* :mod:`flowbench.flows` - NICE / RealNVP models, likelihoods, training.
* :mod:`flowbench.data` - dataset ingestion, scaling, splits, persistence.
* :mod:`flowbench.scoring` - anomaly scorers and evaluation metrics.
* :mod:`flowbench.counterintuitive` - relative-failure detector and sweeps.
* :mod:`flowbench.intrinsic_dim` - TwoNN / MLE dimension estimators.
* :mod:`flowbench.synthetic` - synthetic dataset generators.
* :mod:`flowbench.theory` - closed-form checks and dimension-sweep studies.
* :mod:`flowbench.cli` - the ``flowbench`` command-line entry point.
"""

__version__ = "0.1.0"
