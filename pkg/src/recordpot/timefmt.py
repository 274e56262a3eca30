"""Parsing and formatting of race times.

Internally the package works on the performance scale (negated seconds);
these helpers only deal with the human-facing positive-seconds side.
"""

from .errors import SchemaError


def parse_time(text: str) -> float:
    """Parse "HH:MM:SS", "MM:SS" or a plain number of seconds.

    Fractional seconds are accepted in the last field.
    """
    text = str(text).strip()
    if not text:
        raise SchemaError("empty time string")
    parts = text.split(":")
    if len(parts) > 3:
        raise SchemaError(f"cannot parse time {text!r}")
    try:
        fields = [float(p) for p in parts]
    except ValueError:
        raise SchemaError(f"cannot parse time {text!r}") from None
    if any(f < 0 for f in fields):
        raise SchemaError(f"negative field in time {text!r}")
    seconds = 0.0
    for f in fields:
        seconds = seconds * 60.0 + f
    return seconds


def format_hms(seconds: float) -> str:
    """Render positive seconds as HH:MM:SS, rounding to the whole second."""
    if seconds < 0:
        raise ValueError("format_hms expects positive seconds")
    total = round(seconds)
    h, rem = divmod(total, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"
