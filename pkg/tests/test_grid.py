"""Domain discretization: masks, boundary legs, field containers."""

import json

import numpy as np
import pytest

import curvforge as cf
from curvforge.errors import ConfigError


def test_disk_grid_basics(disk65):
    g = disk65
    assert g.spacing == pytest.approx(2.0 / 64)
    # interior mask is exactly the lattice points strictly inside
    assert np.all(np.abs(g.z) < 1.0)
    xs, ys = np.meshgrid(g.xs, g.ys)
    inside = xs**2 + ys**2 < 1.0
    assert np.array_equal(g.mask, inside)


def test_annulus_mask_exact():
    g = cf.build_grid(cf.DomainDescriptor.annulus(0.25, 0.5), 129)
    r = np.abs(g.z)
    assert np.all((r > 0.25) & (r < 0.5))
    xs, ys = np.meshgrid(g.xs, g.ys)
    rr = np.hypot(xs, ys)
    assert np.array_equal(g.mask, (rr > 0.25) & (rr < 0.5))


def test_resolution_floor():
    with pytest.raises(ConfigError):
        cf.build_grid(cf.DomainDescriptor.disk(), 9)


def test_annulus_gap_must_be_resolved():
    # gap 0.02 at resolution 17 is under four cells across
    with pytest.raises(ConfigError):
        cf.build_grid(cf.DomainDescriptor.annulus(0.40, 0.42), 17)


def test_descriptor_validation():
    with pytest.raises(ConfigError):
        cf.DomainDescriptor.annulus(0.5, 0.25)
    with pytest.raises(ConfigError):
        cf.DomainDescriptor.rectangle(0 + 0j, 0 + 1j)  # zero width


def test_boundary_legs_hit_the_circle(disk65):
    g = disk65
    for nb, alpha, zb in g.legs.values():
        cut = nb < 0
        assert np.all(alpha[cut] > 0) and np.all(alpha[cut] <= 1 + 1e-12)
        # crossing points sit on |z| = 1 to rounding
        np.testing.assert_allclose(np.abs(zb[cut]), 1.0, atol=1e-12)
        assert np.all(alpha[~cut] == 1.0)


def test_every_interior_node_has_resolved_neighbors(disk65):
    g = disk65
    for nb, alpha, _zb in g.legs.values():
        assert np.all((nb >= 0) | (alpha > 0))


def test_rectangle_grid_has_no_cut_legs_on_lattice_aligned_box():
    g = cf.build_grid(cf.DomainDescriptor.rectangle(-1 - 1j, 1 + 1j), 33)
    assert g.interior_count > 0
    assert np.all(np.abs(g.z.real) < 1) and np.all(np.abs(g.z.imag) < 1)


def test_scalar_field_length_checked(disk65):
    with pytest.raises(ConfigError):
        cf.ScalarField(disk65, np.zeros(disk65.interior_count - 1))
    with pytest.raises(ConfigError):
        cf.ScalarField(disk65, np.full(disk65.interior_count, np.nan))


def test_field_dense_roundtrip(disk65):
    vals = np.cos(disk65.z.real) + disk65.z.imag
    f = cf.ScalarField(disk65, vals)
    dense = f.dense()
    assert dense.shape == disk65.mask.shape
    np.testing.assert_array_equal(dense[disk65.iy, disk65.ix], vals)
    assert np.all(np.isnan(dense[~disk65.mask]))


def test_field_csv_format(tmp_path, disk65):
    f = cf.ScalarField(disk65, np.full(disk65.interior_count, 1.0 / 3.0))
    path = tmp_path / "u.csv"
    f.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,value"
    assert len(lines) == disk65.interior_count + 1
    # 17 significant digits survive the round trip
    assert float(lines[1].split(",")[2]) == 1.0 / 3.0


def test_grid_json_descriptor(disk65):
    d = json.loads(json.dumps(disk65.to_json()))
    assert d["kind"] == "disk"
    assert d["resolution"] == 65
