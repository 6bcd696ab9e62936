"""Angular-similarity search and spatio-temporal exploration engine for
large street-level image corpora.

Submodules:
  core     shared domain types, geometry, time primitives
  store    binary feature files, metadata, urban datasets, synthetic corpus
  lsh      sign-random-projection hashing, packed signatures, search
  geotime  spatio-temporal selection, aggregation, time-series predicates
  cluster  greedy leader clustering of results on coarse signatures
  service  HTTP JSON API over an immutable corpus snapshot
  cli      operational entry points
"""

__version__ = "0.1.0"

from . import core

__all__ = ["core", "__version__"]
