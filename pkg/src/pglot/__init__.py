"""pglot: a toolkit for building, detecting, and disarming polyglot files.

A polyglot is a single file that is valid in two or more file formats at
once.  This package covers the whole workflow around them:

* ``pglot.formats`` — magic/structural identification, per-format
  validators, insertion-point discovery, and tolerant covert-payload
  locators for 12 formats.
* ``pglot.forge`` — polyglot generation (stack and parasite methods) over
  the combination matrix of pairings observed in real abuse.
* ``pglot.corpus`` — donor synthesis, dataset generation with donor
  holdout, and manifest persistence.
* ``pglot.features`` / ``pglot.linear`` — byte-histogram + n-gram feature
  space and a per-label linear classifier over it.
* ``pglot.conv`` — a byte-level convolutional detector trained from
  scratch (binary and multi-label heads).
* ``pglot.scan`` — structural rule scanning of images for extraneous
  content.
* ``pglot.sanitize`` — content disarmament and reconstruction for images.
* ``pglot.evaluate`` — precision/recall/F1, PR curves, exact-set
  multi-label metrics, and external-tool adapters.
"""

from pglot.formats import FormatId

__version__ = "0.1.0"

__all__ = ["FormatId", "__version__"]
