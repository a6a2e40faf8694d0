"""Label-code to condition mapping.

The native label stream uses small integer codes whose meaning is fixed
by the dataset's own documentation.  The mapping ships as data rather
than logic so a re-release with different codes cannot silently corrupt
labels: pass ``--code-map`` with the corrected file and nothing else
changes.

Map-file format: one ``code = condition`` pair per line, ``#`` comments.
"""

from .errors import CodeMapError

VALID_CONDITIONS = frozenset(
    {"baseline", "amusement", "stress", "meditation", "other"}
)

# Dataset convention: 0 transient/undefined, 1 baseline, 2 stress,
# 3 amusement, 4 meditation, 5-7 protocol bookkeeping (ignored).
DEFAULT_CODE_MAP: dict[int, str] = {
    0: "other",
    1: "baseline",
    2: "stress",
    3: "amusement",
    4: "meditation",
    5: "other",
    6: "other",
    7: "other",
}


def parse_code_map(path) -> dict[int, str]:
    """Read a ``code = condition`` file; unknown conditions are errors."""
    mapping: dict[int, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CodeMapError(
                    f"{path}:{lineno}: expected 'code = condition', got {raw.strip()!r}"
                )
            code_part, cond = (part.strip() for part in line.split("=", 1))
            try:
                code = int(code_part)
            except ValueError as exc:
                raise CodeMapError(
                    f"{path}:{lineno}: label code must be an integer, got {code_part!r}"
                ) from exc
            if cond not in VALID_CONDITIONS:
                raise CodeMapError(
                    f"{path}:{lineno}: unknown condition {cond!r} "
                    f"(expected one of {sorted(VALID_CONDITIONS)})"
                )
            if code in mapping:
                raise CodeMapError(f"{path}:{lineno}: duplicate code {code}")
            mapping[code] = cond
    if not mapping:
        raise CodeMapError(f"{path}: empty code map")
    return mapping
