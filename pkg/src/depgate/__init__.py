"""depgate: direct-dependency governance for build pipelines.

Records every direct open-source and internal dependency into a reference
database, gates builds by dependency status under configurable reprieve
policies, synchronizes versions and advisories from external feeds, and
serves a vetting console for the governance committee.
"""

__version__ = "0.1.0"
