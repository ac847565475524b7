import json

import numpy as np
import pytest

from sonartopo.core import DomainDescriptor, PointCloud, SignalMap
from sonartopo.io import (
    FormatError,
    ShapeError,
    ingest_array,
    read_cloud,
    read_diagram,
    sidecar_path,
    write_array,
    write_binary,
    write_cloud,
    write_diagram,
)
from sonartopo.persistence import Feature, PersistenceDiagram, diagram_equal


def f32_map(rows=12, cols=5, cplx=False, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((rows, cols)).astype(np.float32).astype(np.float64)
    if cplx:
        a = a + 1j * rng.standard_normal((rows, cols)).astype(np.float32)
    return SignalMap(DomainDescriptor.circle(rows), a)


@pytest.mark.parametrize("suffix", [".f32", ".csv"])
def test_real_roundtrip(tmp_path, suffix):
    m = f32_map()
    write_array(m, tmp_path / f"a{suffix}")
    assert ingest_array(tmp_path / f"a{suffix}") == m


@pytest.mark.parametrize("suffix", [".c64", ".csv"])
def test_complex_roundtrip(tmp_path, suffix):
    m = f32_map(cplx=True)
    write_array(m, tmp_path / f"a{suffix}")
    back = ingest_array(tmp_path / f"a{suffix}")
    assert back.is_complex and back == m


def test_csv_roundtrip_is_exact_for_float64(tmp_path):
    m = SignalMap(DomainDescriptor.circle(3), np.array([[0.1, 1 / 3], [np.pi, -2e-300], [7.0, 0.0]]))
    write_array(m, tmp_path / "x.csv")
    assert ingest_array(tmp_path / "x.csv") == m


def test_lab_binary_shape(tmp_path):
    p = tmp_path / "scan.bin"
    p.write_bytes(np.arange(360 * 1000, dtype="<f4").tobytes())
    sidecar_path(p).write_text(json.dumps({"rows": 360, "cols": 1000, "dtype": "f32", "angular_units": "deg"}))
    m = ingest_array(p)
    assert m.domain == DomainDescriptor.circle(360)
    assert m.samples.shape == (360, 1000)
    assert m.samples[1, 0] == 1000.0


def test_small_csv(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("a,b\n1,2\n3,4\n5,6\n7,8\n")
    m = ingest_array(p)
    assert m.domain.size == 4 and m.channels == 2
    assert m.samples[3, 1] == 8.0


def test_truncated_binary_names_rows(tmp_path):
    p = tmp_path / "short.f32"
    p.write_bytes(np.zeros(359 * 4, dtype="<f4").tobytes())
    sidecar_path(p).write_text(json.dumps({"rows": 360, "cols": 4, "dtype": "f32"}))
    with pytest.raises(ShapeError, match="rows=360.*359 rows"):
        ingest_array(p)


def test_nan_in_binary_reports_offset(tmp_path):
    a = np.zeros((4, 3), dtype="<f4")
    a[2, 1] = np.nan
    p = tmp_path / "n.f32"
    p.write_bytes(a.tobytes())
    sidecar_path(p).write_text(json.dumps({"rows": 4, "cols": 3, "dtype": "f32"}))
    with pytest.raises(FormatError, match="byte offset 28"):
        ingest_array(p)


def test_inf_in_csv_reports_cell(tmp_path):
    p = tmp_path / "n.csv"
    p.write_text("a,b\n1,2\n3,inf\n")
    with pytest.raises(FormatError, match=r"line 3, column 2"):
        ingest_array(p)


def test_csv_needs_header(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("1,2\n3,4\n5,6\n")
    with pytest.raises(FormatError, match="header"):
        ingest_array(p)


def test_csv_rejects_semicolons(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("a;b\n1;2\n3;4\n")
    with pytest.raises(FormatError, match="semicolon"):
        ingest_array(p)


def test_ragged_csv(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("a,b\n1,2\n3\n")
    with pytest.raises(ShapeError, match="line 3"):
        ingest_array(p)


def test_unknown_suffix_and_missing_file(tmp_path):
    (tmp_path / "a.xyz").write_text("")
    with pytest.raises(FormatError, match="unknown format"):
        ingest_array(tmp_path / "a.xyz")
    with pytest.raises(FormatError, match="not found"):
        ingest_array(tmp_path / "nope.csv")


def test_missing_or_bad_sidecar(tmp_path):
    p = tmp_path / "a.f32"
    write_binary(f32_map(), p)
    sidecar_path(p).write_text(json.dumps({"rows": 12, "cols": 5, "dtype": "f64"}))
    with pytest.raises(FormatError, match="dtype"):
        ingest_array(p)
    sidecar_path(p).unlink()
    with pytest.raises(FormatError, match="sidecar"):
        ingest_array(p)


def test_cloud_roundtrip(tmp_path):
    c = PointCloud(np.random.default_rng(1).standard_normal((7, 3)), np.arange(7.0) * 10)
    write_cloud(c, tmp_path / "c.csv")
    back = read_cloud(tmp_path / "c.csv")
    np.testing.assert_array_equal(back.points, c.points)
    np.testing.assert_array_equal(back.labels, c.labels)


def test_diagram_roundtrip(tmp_path):
    d = PersistenceDiagram((Feature(0, 0.0, 0.5), Feature(0, 0.0, float("inf"), True), Feature(1, 0.1, 0.3)), 0.9)
    write_diagram(d, tmp_path / "d.csv")
    assert diagram_equal(read_diagram(tmp_path / "d.csv", 0.9), d)
