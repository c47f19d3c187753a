import json
from pathlib import Path

import numpy as np
import pytest

from stentkit import io as stent_io
from stentkit.errors import ConfigError, ParseError, UnsupportedEncodingError
from stentkit.io import (
    PolyDataDocument,
    centerline_to_polydata,
    mesh_to_polydata,
    parse_config,
    polydata_to_mesh,
    read_centerline,
    read_obj,
    read_polydata,
    write_obj,
    write_polydata,
)
from stentkit.synthetic import icosphere, stenotic_tube

FIXTURES = Path(__file__).parent / "fixtures"

MINIMAL_TRIANGLE = """<?xml version="1.0"?>
<VTKFile type="PolyData" version="0.1" byte_order="LittleEndian">
  <PolyData>
    <Piece NumberOfPoints="3" NumberOfVerts="0" NumberOfLines="0" NumberOfStrips="0" NumberOfPolys="1">
      <Points>
        <DataArray type="Float32" NumberOfComponents="3" format="ascii">
          0 0 0  1 0 0  0 1 0
        </DataArray>
      </Points>
      <Polys>
        <DataArray type="Int32" Name="connectivity" format="ascii">0 1 2</DataArray>
        <DataArray type="Int32" Name="offsets" format="ascii">3</DataArray>
      </Polys>
    </Piece>
  </PolyData>
</VTKFile>
"""


class TestReadPolydata:
    def test_minimal_triangle(self):
        doc = read_polydata(MINIMAL_TRIANGLE)
        assert doc.points.shape == (3, 3)
        assert doc.polys.tolist() == [[0, 1, 2]]
        assert doc.lines == []

    def test_quads_fan_triangulated_area_preserved(self):
        quad = MINIMAL_TRIANGLE.replace(
            'NumberOfPoints="3"', 'NumberOfPoints="4"').replace(
            'NumberOfPolys="1"', 'NumberOfPolys="1"').replace(
            "0 0 0  1 0 0  0 1 0", "0 0 0  1 0 0  1 1 0  0 1 0").replace(
            'format="ascii">0 1 2<', 'format="ascii">0 1 2 3<').replace(
            'format="ascii">3<', 'format="ascii">4<')
        doc = read_polydata(quad)
        assert len(doc.polys) == 2
        mesh = polydata_to_mesh(doc)
        assert mesh.face_areas().sum() == pytest.approx(1.0)

    def test_binary_rejected(self):
        bad = MINIMAL_TRIANGLE.replace('format="ascii">\n          0 0 0  1 0 0  0 1 0\n        <',
                                       'format="binary">AAAA<')
        with pytest.raises(UnsupportedEncodingError, match="unsupported encoding"):
            read_polydata(bad)

    def test_appended_rejected(self):
        bad = MINIMAL_TRIANGLE.replace(
            "</VTKFile>", '<AppendedData encoding="raw">_</AppendedData></VTKFile>')
        with pytest.raises(UnsupportedEncodingError):
            read_polydata(bad)

    def test_malformed_xml(self):
        with pytest.raises(ParseError, match="malformed XML"):
            read_polydata(b"<VTKFile><unclosed>")

    def test_wrong_dataset_type(self):
        with pytest.raises(ParseError, match="expected PolyData"):
            read_polydata(MINIMAL_TRIANGLE.replace('type="PolyData"', 'type="ImageData"'))

    def test_out_of_range_connectivity(self):
        bad = MINIMAL_TRIANGLE.replace('format="ascii">0 1 2<', 'format="ascii">0 1 7<')
        with pytest.raises(ParseError, match="out of range"):
            read_polydata(bad)

    def test_multi_piece_rejected(self):
        bad = MINIMAL_TRIANGLE.replace(
            "</Piece>",
            '</Piece><Piece NumberOfPoints="0" NumberOfPolys="0"></Piece>')
        with pytest.raises(ParseError, match="one Piece"):
            read_polydata(bad)


class TestRoundTrip:
    def test_mesh_round_trip_bit_identical(self):
        mesh, _ = stenotic_tube(n_theta=16, n_z=12)
        mesh.point_data["Thickness"] = np.linspace(0.1, 1.0, mesh.vertex_count)
        doc = mesh_to_polydata(mesh)
        data = write_polydata(doc)
        doc2 = read_polydata(data)
        assert doc2.points.tobytes() == mesh.positions.tobytes()
        assert doc2.polys.tobytes() == mesh.faces.tobytes()
        assert doc2.point_data["Thickness"].tobytes() == mesh.point_data["Thickness"].tobytes()

    def test_sphere_round_trip(self):
        mesh = icosphere(2, radius=3.7)
        doc2 = read_polydata(write_polydata(mesh_to_polydata(mesh)))
        assert np.array_equal(doc2.points, mesh.positions)
        assert np.array_equal(doc2.polys, mesh.faces)

    def test_centerline_round_trip(self):
        _, tree = stenotic_tube(n_theta=8, n_z=10)
        data = write_polydata(centerline_to_polydata(tree))
        tree2 = read_centerline(read_polydata(data))
        assert tree2.parent == tree.parent
        p0, p1 = tree.path(0), tree2.path(0)
        assert np.array_equal(p0.points, p1.points)
        assert np.array_equal(p0.mis_radius, p1.mis_radius)

    def test_write_deterministic(self):
        mesh = icosphere(1)
        doc = mesh_to_polydata(mesh)
        assert write_polydata(doc) == write_polydata(doc)

    def test_lines_block_omitted_when_absent(self):
        data = write_polydata(mesh_to_polydata(icosphere(0)))
        assert b"<Lines>" not in data
        assert b"<Polys>" in data

    def test_reference_fixture_cross_check(self):
        # authored by hand, not by write_polydata; pins the byte layout
        raw = (FIXTURES / "reference_triangles.vtp").read_bytes()
        doc = read_polydata(raw)
        assert np.array_equal(doc.points, [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.25]])
        assert doc.polys.tolist() == [[0, 1, 2], [1, 3, 2]]
        assert np.array_equal(doc.point_data["Thickness"], [0.5, 1.0, 1.5, 2.0])
        assert write_polydata(doc) == raw

    def test_high_precision_floats_survive(self):
        pts = np.array([[np.pi, np.e, 1.0 / 3.0], [0.1, 0.2, 0.3], [1e-17, 1.0, 2.0]])
        doc = PolyDataDocument(points=pts, polys=np.array([[0, 1, 2]]))
        doc2 = read_polydata(write_polydata(doc))
        assert doc2.points.tobytes() == pts.tobytes()


class TestCenterlineRead:
    def fig6_doc(self):
        pts = []
        lines = []
        radius = []
        trunk = np.array([[0, 0, float(z)] for z in range(41)])
        c2 = np.array([[0, 0, 20.0]]) + np.outer(
            np.linspace(0, 25, 26), np.array([1, 0, 1]) / np.sqrt(2))
        c3 = np.array([[0, 0, 30.0]]) + np.outer(
            np.linspace(0, 20, 21), np.array([-1, 0, 1]) / np.sqrt(2))
        for chunk in (trunk, c2, c3):
            lines.append(np.arange(len(pts), len(pts) + len(chunk), dtype=np.int64))
            pts.extend(chunk)
            radius.extend([2.0] * len(chunk))
        return PolyDataDocument(
            points=np.array(pts), polys=np.empty((0, 3), dtype=np.int64),
            lines=lines,
            point_data={"MaximumInscribedSphereRadius": np.array(radius)},
        )

    def test_fig6_topology(self):
        tree = read_centerline(self.fig6_doc())
        assert tree.parent == {1: 0, 2: 0}
        assert tree.root_ids() == [0]

    def test_single_polyline(self):
        doc = self.fig6_doc()
        doc.lines = doc.lines[:1]
        tree = read_centerline(doc)
        assert len(tree.paths) == 1
        assert tree.parent == {}

    def test_fallback_radius_name(self):
        doc = self.fig6_doc()
        doc.point_data = {"Radius": doc.point_data["MaximumInscribedSphereRadius"]}
        tree = read_centerline(doc)
        assert tree.path(0).mis_radius[0] == 2.0

    def test_missing_radius_names_reported(self):
        doc = self.fig6_doc()
        doc.point_data = {}
        with pytest.raises(ParseError, match="MaximumInscribedSphereRadius.*Radius"):
            read_centerline(doc)

    def test_missing_lines(self):
        doc = self.fig6_doc()
        doc.lines = []
        with pytest.raises(ParseError, match="no Lines"):
            read_centerline(doc)

    def test_generator_round_trip(self, rng):
        from stentkit.centerline import build_ancestry
        from tests.test_centerline import random_tree

        paths, truth = random_tree(rng, n_paths=5)
        data = write_polydata(centerline_to_polydata(build_ancestry(paths)))
        tree = read_centerline(read_polydata(data))
        assert tree.parent == truth


class TestObj:
    def test_round_trip(self):
        mesh = icosphere(1, radius=2.0)
        mesh2 = read_obj(write_obj(mesh))
        assert np.array_equal(mesh2.positions, mesh.positions)
        assert np.array_equal(mesh2.faces, mesh.faces)

    def test_rejects_non_triangle(self):
        with pytest.raises(ParseError, match="triangle"):
            read_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n")

    def test_load_save_files(self, tmp_path):
        mesh = icosphere(1)
        p = tmp_path / "m.obj"
        stent_io.save_mesh(p, mesh)
        again = stent_io.load_mesh(p)
        assert np.array_equal(again.positions, mesh.positions)


class TestParseConfig:
    def minimal(self):
        return {
            "schema": 1,
            "mesh": "mesh.vtp",
            "centerline": "cl.vtp",
            "stents": [{
                "start": {"path": 0, "arc": 10.0},
                "end": {"path": 0, "arc": 30.0},
                "target_diameter": 6.0,
            }],
        }

    def test_defaults_filled(self):
        cfg = parse_config(json.dumps(self.minimal()))
        entry = cfg.stents[0]
        assert entry.k == 0.4
        assert entry.d_infl == 6.5
        assert entry.dr == 0.1
        assert entry.d_con == 0.1
        assert entry.r_init == 0.1
        assert entry.foreshortening == 0.0
        assert entry.diameters == (6.0,)
        assert entry.lengths == (None,)
        assert cfg.emit_metrics is True

    def test_nonpositive_diameter_names_field(self):
        raw = self.minimal()
        raw["stents"][0]["target_diameter"] = 0
        with pytest.raises(ConfigError, match=r"stents\[0\].target_diameter"):
            parse_config(json.dumps(raw))

    def test_hourglass_average_diameter(self):
        raw = self.minimal()
        raw["stents"][0]["target_diameter"] = 7.3
        cfg = parse_config(json.dumps(raw))
        assert cfg.stents[0].diameters == (7.3,)

    def test_sweep_lists_cartesian(self):
        raw = self.minimal()
        raw["stents"][0]["target_diameter"] = [5.0, 6.0, 7.0]
        raw["stents"][0]["nominal_length"] = [20.0, 30.0]
        raw["stents"][0]["positions"] = [
            {"start": {"path": 0, "arc": 5.0}, "end": {"path": 0, "arc": 25.0}},
            {"start": {"path": 0, "arc": 10.0}, "end": {"path": 0, "arc": 30.0}},
        ]
        del raw["stents"][0]["start"], raw["stents"][0]["end"]
        cfg = parse_config(json.dumps(raw))
        combos = list(cfg.stents[0].combinations())
        assert len(combos) == 12  # 2 positions x 3 diameters x 2 lengths

    def test_empty_stents_rejected(self):
        raw = self.minimal()
        raw["stents"] = []
        with pytest.raises(ConfigError, match="stents"):
            parse_config(json.dumps(raw))

    def test_bad_schema_version(self):
        raw = self.minimal()
        raw["schema"] = 2
        with pytest.raises(ConfigError, match="schema"):
            parse_config(json.dumps(raw))

    def test_bad_foreshortening(self):
        raw = self.minimal()
        raw["stents"][0]["foreshortening"] = 1.0
        with pytest.raises(ConfigError, match=r"stents\[0\].foreshortening"):
            parse_config(json.dumps(raw))

    def test_invalid_json(self):
        with pytest.raises(ConfigError, match="invalid JSON"):
            parse_config(b"{nope")

    def test_missing_mesh_named(self):
        raw = self.minimal()
        del raw["mesh"]
        with pytest.raises(ConfigError, match="mesh"):
            parse_config(json.dumps(raw))
