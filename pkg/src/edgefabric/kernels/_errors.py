"""Error codes shared by the pure-Python and compiled kernel backends."""

TRUNCATED = 1
BAD_MAGIC = 2
BAD_VERSION = 3
UNKNOWN_KIND = 4
LENGTH_MISMATCH = 5
INVALID_FIELD = 6
PAYLOAD_TOO_LARGE = 7


class CodecError(Exception):
    """Raised by kernel codec routines; `code` names the violated check."""

    def __init__(self, code: int, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail
