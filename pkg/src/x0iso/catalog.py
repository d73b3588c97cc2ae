"""Reference-curve data for the labels used in the result tables.

Ships an embedded text snapshot (one record per line:
``label | a1,a2,a3,a4,a6 | j_num/j_den | deg1,deg2,...``) so everything
works offline; an opt-in refresh path re-fetches the same records from the
LMFDB REST API and rewrites the snapshot atomically.
"""

import os
import tempfile
from dataclasses import dataclass
from importlib import resources

from gmpy2 import mpq

from .errors import (NetworkUnavailable, SchemaMismatch, UnknownLabel,
                     UnknownLevel)
from .tables import POINT_COUNTS

DEFAULT_ENDPOINT = "https://www.lmfdb.org"
ENV_ENDPOINT = "X0ISO_LMFDB_URL"
ENV_CACHE_DIR = "X0ISO_CACHE_DIR"


@dataclass(frozen=True)
class RefCurve:
    label: str
    a_invariants: tuple  # (a1, a2, a3, a4, a6)
    j: object
    isogeny_degrees: frozenset

    def short_curve(self):
        """Short Weierstrass model (A, B) of the same isomorphism class."""
        from .moduli import EllCurve
        a1, a2, a3, a4, a6 = (mpq(a) for a in self.a_invariants)
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        c4 = b2 * b2 - 24 * b4
        c6 = -b2 ** 3 + 36 * b2 * b4 - 216 * b6
        return EllCurve(-c4 / 48, -c6 / 864)


def _parse_line(line):
    parts = [p.strip() for p in line.split("|")]
    if len(parts) != 4:
        raise SchemaMismatch(f"bad snapshot record: {line!r}")
    label = parts[0]
    try:
        ainvs = tuple(mpq(v) for v in parts[1].split(","))
        if len(ainvs) != 5:
            raise ValueError
        j = mpq(parts[2])
        degrees = frozenset(int(v) for v in parts[3].split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaMismatch(f"bad snapshot record for {label}: {exc}") from exc
    return RefCurve(label, ainvs, j, degrees)


def _snapshot_path():
    override = os.environ.get(ENV_CACHE_DIR)
    if override:
        p = os.path.join(override, "lmfdb_snapshot.txt")
        if os.path.exists(p):
            return p
    return None


class Catalog:
    """Read-only view of a snapshot; refresh builds a replacement atomically."""

    def __init__(self, path=None):
        if path is None:
            path = _snapshot_path()
        if path is None:
            text = (resources.files("x0iso") / "data" / "lmfdb_snapshot.txt"
                    ).read_text()
        else:
            with open(path) as fh:
                text = fh.read()
        self._curves = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rc = _parse_line(line)
            self._curves[rc.label] = rc

    def get_curve(self, label):
        try:
            return self._curves[label]
        except KeyError:
            raise UnknownLabel(f"label {label!r} not in snapshot") from None

    def all_curves(self):
        return list(self._curves.values())

    def labels(self):
        return list(self._curves)


def get_curve(label, catalog=None):
    return (catalog or _default()).get_curve(label)


_DEFAULT = None


def _default():
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Catalog()
    return _DEFAULT


def expected_point_count(N):
    """Number of non-cuspidal rational points at a sporadic level."""
    try:
        return POINT_COUNTS[N]
    except KeyError:
        raise UnknownLevel(f"level {N} is not in the sporadic set") from None


def _fetch_record(session, endpoint, label, timeout):
    url = f"{endpoint}/api/ec_curvedata/"
    params = {"lmfdb_label": label, "_format": "json"}
    try:
        resp = session.get(url, params=params, timeout=timeout)
        resp.raise_for_status()
        payload = resp.json()
    except Exception as exc:
        raise NetworkUnavailable(f"fetching {label}: {exc}") from exc
    try:
        rows = payload["data"]
        if not rows:
            raise KeyError("empty result")
        row = rows[0]
        ainvs = row["ainvs"]
        jinv = row["jinv"]
        degrees = row["isogeny_degrees"]
        if len(ainvs) != 5:
            raise KeyError("ainvs length")
        j = mpq(jinv[0], jinv[1]) if isinstance(jinv, (list, tuple)) else mpq(str(jinv))
        return RefCurve(label, tuple(mpq(a) for a in ainvs), j,
                        frozenset(int(d) for d in degrees))
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"unexpected LMFDB schema for {label}: {exc}") from exc


def format_snapshot(curves):
    lines = []
    for rc in sorted(curves, key=lambda c: c.label):
        ainvs = ",".join(str(a) for a in rc.a_invariants)
        degs = ",".join(str(d) for d in sorted(rc.isogeny_degrees))
        lines.append(f"{rc.label} | {ainvs} | {rc.j} | {degs}")
    return "\n".join(lines) + "\n"


def refresh_snapshot(labels, path=None, endpoint=None, timeout=30):
    """Re-fetch the given labels and rewrite the snapshot file atomically."""
    import requests
    if not labels:
        return path
    endpoint = endpoint or os.environ.get(ENV_ENDPOINT, DEFAULT_ENDPOINT)
    if path is None:
        cache = os.environ.get(ENV_CACHE_DIR)
        if cache is None:
            raise ValueError(f"no snapshot path; set {ENV_CACHE_DIR} or pass path")
        os.makedirs(cache, exist_ok=True)
        path = os.path.join(cache, "lmfdb_snapshot.txt")
    session = requests.Session()
    curves = [_fetch_record(session, endpoint.rstrip("/"), lab, timeout)
              for lab in labels]
    text = format_snapshot(curves)
    # round-trip check before replacing anything
    for line in text.splitlines():
        _parse_line(line)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
