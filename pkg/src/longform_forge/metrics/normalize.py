import re
import unicodedata

_WS = re.compile(r"\s+")


def normalize_text(s):
    """Lowercase, drop every Unicode punctuation character, collapse whitespace."""
    s = s.lower()
    s = "".join(ch for ch in s if not unicodedata.category(ch).startswith("P"))
    return _WS.sub(" ", s).strip()
