"""
BL-10: Result files.

CSV tables start with '#' metadata lines and contain no timestamps, so a
rerun with the same seed and configuration is byte-identical. Floats are
written with 12 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from pkg import __version__
from pkg.errors import ConfigError
from pkg.models.slits import CountData, JointPattern

FLOAT_FORMAT = ".12g"


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), FLOAT_FORMAT)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(getattr(v, "value", v))


def metadata_lines(command: str, seed: int | None, config_sha256: str | None, **extra: Any) -> list[str]:
    lines = [f"# biphoton-lab {__version__}"]
    if seed is not None:
        lines.append(f"# seed={seed}")
    if config_sha256 is not None:
        lines.append(f"# config_sha256={config_sha256}")
    lines.append(f"# command={command}")
    for key in sorted(extra):
        lines.append(f"# {key}={_cell(extra[key])}")
    return lines


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], metadata: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in metadata:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    metadata: Sequence[str] = (),
) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(render_csv(header, rows, metadata))
    return p


def write_jsonl(path: str | Path, records: Iterable[Any]) -> Path:
    """One JSON object per line, keys sorted; pydantic models are dumped in JSON mode."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w") as fh:
        for rec in records:
            data = rec.model_dump(mode="json") if hasattr(rec, "model_dump") else rec
            fh.write(json.dumps(data, sort_keys=True) + "\n")
    return p


def pattern_rows(pattern: JointPattern) -> list[tuple[float, float, float]]:
    """(x1, x2, density) in row-major grid order."""
    return [
        (float(x1), float(x2), float(pattern.density[i, j]))
        for i, x1 in enumerate(pattern.x1)
        for j, x2 in enumerate(pattern.x2)
    ]


def marginal_rows(pattern: JointPattern) -> list[tuple[str, float, float]]:
    rows = [("1", float(x), float(m)) for x, m in zip(pattern.x1, pattern.marginal1)]
    rows += [("2", float(x), float(m)) for x, m in zip(pattern.x2, pattern.marginal2)]
    return rows


def read_count_csv(path: str | Path) -> CountData:
    """Counts file with columns position (m), counts, stderr; '#' lines are skipped."""
    p = Path(path)
    try:
        lines = [ln for ln in p.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    except OSError as e:
        raise ConfigError(f"cannot read counts file {p}: {e}") from e
    reader = csv.DictReader(lines)
    required = {"position", "counts", "stderr"}
    if reader.fieldnames is None or not required <= set(reader.fieldnames):
        raise ConfigError(f"{p}: expected columns {sorted(required)}")
    try:
        rows = [(float(r["position"]), float(r["counts"]), float(r["stderr"])) for r in reader]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{p}: non-numeric entry ({e})") from e
    if not rows:
        raise ConfigError(f"{p}: no data rows")
    arr = np.array(rows)
    try:
        return CountData(positions=arr[:, 0], counts=arr[:, 1], stderr=arr[:, 2])
    except ValueError as e:
        raise ConfigError(f"{p}: {e}") from e
