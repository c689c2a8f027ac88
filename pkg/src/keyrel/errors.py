"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: usage problems exit 1 (handled
by the CLI layer itself), ``DataError`` and its subclasses exit 2, and
``ScorerError`` subclasses exit 3.
"""
from __future__ import annotations


class KeyrelError(Exception):
    """Base class for all errors raised by this package."""


class DataError(KeyrelError):
    """Malformed or inconsistent input data (files, configs, corpora)."""


class ParseError(DataError):
    """A file could not be parsed; the message names file and line."""


class IntegrityError(DataError):
    """Parsed data violates an internal consistency requirement."""


class ScorerError(KeyrelError):
    """Base class for failures while obtaining token scores."""


class TransportError(ScorerError):
    """The scorer endpoint could not be reached or timed out."""


class ProtocolError(ScorerError):
    """The scorer answered, but the response violates the protocol."""


class NoKeywordsError(KeyrelError):
    """No scoreable keywords could be derived from a summary."""
