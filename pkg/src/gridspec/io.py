"""CSV and key=value exports.

Numbers are written with ``repr`` (shortest round-trip decimal), so reading a
file back reproduces the in-memory floats exactly.  Every file is written to a
temporary sibling first and renamed into place.
"""
from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import GridSpecError
from .freq_core import FrequencyResponse
from .sysid import FrequencyResponseMatrix
from .testbench import TimeSeriesRecord

FRF_COLUMNS = (
    "omega_p_hz",
    "re_g_wp", "im_g_wp",
    "re_g_wq", "im_g_wq",
    "re_g_vp", "im_g_vp",
    "re_g_vq", "im_g_vq",
    "cond_u",
)
BODE_COLUMNS = ("omega_p_hz", "re", "im", "mag_db", "phase_deg")
NYQUIST_COLUMNS = ("omega_p_hz", "re_w", "im_w")


class ExportError(GridSpecError, OSError):
    pass


def fmt(x) -> str:
    """Shortest round-trip text for a float (``inf``/``nan`` spelled out)."""
    return repr(float(x))


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def _read_csv(path, header: Sequence[str]) -> np.ndarray:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc}") from exc
    if not rows or tuple(c.strip() for c in rows[0]) != tuple(header):
        raise ExportError(f"{path}: unexpected header {rows[0] if rows else None}")
    return np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))


def write_timeseries(rec: TimeSeriesRecord, out_dir) -> Path:
    return write_atomic(Path(out_dir) / rec.filename(), _csv_text(rec.COLUMNS, rec.as_array()))


def read_timeseries(path) -> np.ndarray:
    return _read_csv(path, TimeSeriesRecord.COLUMNS)


def write_frf(frm: FrequencyResponseMatrix, path) -> Path:
    rows = []
    for f, G, c in zip(frm.hz, frm.G, frm.cond_u):
        rows.append([f, G[0, 0].real, G[0, 0].imag, G[0, 1].real, G[0, 1].imag,
                     G[1, 0].real, G[1, 0].imag, G[1, 1].real, G[1, 1].imag, c])
    return write_atomic(path, _csv_text(FRF_COLUMNS, rows))


def read_frf(path) -> FrequencyResponseMatrix:
    a = _read_csv(path, FRF_COLUMNS)
    G = np.empty((a.shape[0], 2, 2), dtype=complex)
    G[:, 0, 0] = a[:, 1] + 1j * a[:, 2]
    G[:, 0, 1] = a[:, 3] + 1j * a[:, 4]
    G[:, 1, 0] = a[:, 5] + 1j * a[:, 6]
    G[:, 1, 1] = a[:, 7] + 1j * a[:, 8]
    return FrequencyResponseMatrix(a[:, 0], G, a[:, 9])


def bode_rows(frf: FrequencyResponse):
    v = frf.values
    with np.errstate(divide="ignore"):
        mag_db = 20.0 * np.log10(np.abs(v))
    phase = np.degrees(np.unwrap(np.angle(v))) if v.size else v.real
    return [[f, z.real, z.imag, m, p] for f, z, m, p in zip(frf.hz, v, mag_db, phase)]


def write_bode(frf: FrequencyResponse, path) -> Path:
    return write_atomic(path, _csv_text(BODE_COLUMNS, bode_rows(frf)))


def write_nyquist(rows: Iterable, path) -> Path:
    """``rows`` yields ``(omega_p_hz, w)``; limit rows may carry infinite parts."""
    return write_atomic(path, _csv_text(NYQUIST_COLUMNS, ([f, complex(w).real, complex(w).imag] for f, w in rows)))


def read_nyquist(path) -> np.ndarray:
    return _read_csv(path, NYQUIST_COLUMNS)


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v).replace("\n", " ")


def write_verdicts(items: Mapping[str, object], path) -> Path:
    """``key=value`` lines in insertion order."""
    return write_atomic(path, "".join(f"{k}={format_value(v)}\n" for k, v in items.items()))


def read_verdicts(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                k, _, v = line.partition("=")
                out[k] = v
    return out
