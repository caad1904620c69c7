"""Shared exception types.

FileFormatError marks malformed input *content* (bad binary header, broken
JSON line, inconsistent sidecar, ...). The CLI maps it, together with plain
I/O failures, to exit status 2; semantic validation problems stay ValueError
and map to exit status 1.
"""


class FileFormatError(ValueError):
    """An input file does not conform to its documented format."""
