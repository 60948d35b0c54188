"""Persistent identifiers: minting, redirecting, linting and auditing.

Modules: ``erdi8`` (identifier alphabet and counting), ``urikit`` (URI
parsing and style lint), ``conneg`` (Accept negotiation), ``rdfmin`` (small
RDF model), ``redirector`` (response planning), ``idstore`` (minting and the
ledger), ``server`` (HTTP service), ``auditor`` (redirect-chain checks) and
``cli``.
"""

__version__ = "0.1.0"
