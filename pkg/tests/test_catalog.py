import os

import pytest
from gmpy2 import mpq

from x0iso.catalog import (Catalog, RefCurve, _parse_line, expected_point_count,
                           format_snapshot, get_curve, refresh_snapshot)
from x0iso.errors import (NetworkUnavailable, SchemaMismatch, UnknownLabel,
                          UnknownLevel)
from x0iso.moduli import j_invariant
from x0iso.tables import TABLE3, POINT_COUNTS


def test_snapshot_covers_all_table_labels(catalog):
    labels = {r.dom_label for r in TABLE3} | {r.cod_label for r in TABLE3}
    for label in labels:
        rc = catalog.get_curve(label)
        assert rc.label == label


def test_short_curve_matches_j(catalog):
    for rc in catalog.all_curves():
        assert j_invariant(rc.short_curve()) == rc.j


def test_level_in_isogeny_degrees(catalog):
    for row in TABLE3:
        degs = catalog.get_curve(row.dom_label).isogeny_degrees
        assert row.level in degs


def test_known_record():
    rc = get_curve("361.a1")
    assert rc.a_invariants == (0, 0, 1, -38, 90)
    assert rc.j == -884736
    assert rc.isogeny_degrees == frozenset({1, 19})


def test_unknown_label(catalog):
    with pytest.raises(UnknownLabel):
        catalog.get_curve("9999.z9")


def test_expected_point_count():
    for N, count in POINT_COUNTS.items():
        assert expected_point_count(N) == count
    with pytest.raises(UnknownLevel):
        expected_point_count(12)


def test_parse_line_errors():
    with pytest.raises(SchemaMismatch):
        _parse_line("361.a1 | 0,0,1,-38,90 | -884736")  # missing field
    with pytest.raises(SchemaMismatch):
        _parse_line("361.a1 | 0,0,1,-38 | -884736 | 1,19")  # short ainvs
    with pytest.raises(SchemaMismatch):
        _parse_line("361.a1 | 0,0,1,-38,90 | x | 1,19")  # bad rational


def test_format_snapshot_round_trip():
    rc = RefCurve("361.a1", tuple(mpq(v) for v in (0, 0, 1, -38, 90)),
                  mpq(-884736), frozenset({1, 19}))
    text = format_snapshot([rc])
    assert _parse_line(text.strip()) == rc


def test_catalog_cache_dir_override(tmp_path, monkeypatch):
    path = tmp_path / "lmfdb_snapshot.txt"
    path.write_text("42.x1 | 0,0,0,1,1 | 6912/31 | 1\n")
    monkeypatch.setenv("X0ISO_CACHE_DIR", str(tmp_path))
    cat = Catalog()
    assert cat.labels() == ["42.x1"]


def test_refresh_requires_cache_dir(monkeypatch):
    monkeypatch.delenv("X0ISO_CACHE_DIR", raising=False)
    with pytest.raises(ValueError):
        refresh_snapshot(["361.a1"])


def test_refresh_network_error(tmp_path):
    # closed local port: fails fast without real network
    with pytest.raises(NetworkUnavailable):
        refresh_snapshot(["361.a1"], path=str(tmp_path / "snap.txt"),
                         endpoint="http://127.0.0.1:9", timeout=2)


def test_refresh_empty_labels_is_noop(tmp_path):
    p = str(tmp_path / "snap.txt")
    assert refresh_snapshot([], path=p) == p
    assert not os.path.exists(p)
