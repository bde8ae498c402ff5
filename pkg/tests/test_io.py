import csv
import hashlib
import json
import math
import xml.etree.ElementTree as ET

import numpy as np

from striplab import __version__
from striplab.io import format_number, to_jsonable, write_csv, write_json_report, write_manifest, write_svg_plot
from striplab.kernels import BoundarySide


def test_format_number_round_trips():
    for v in (0.1, 1 / 3, 1e-300, -2.5e17, math.pi):
        assert float(format_number(v)) == v
    assert format_number(np.int64(3)) == "3"
    assert format_number(True) == "true"
    assert format_number(BoundarySide.UPPER) == "upper"


def test_to_jsonable_handles_special_values():
    doc = to_jsonable({"a": np.array([1.0, math.inf]), "b": math.nan, "c": (np.float32(0.5), BoundarySide.LOWER)})
    assert doc == {"a": [1.0, "inf"], "b": "nan", "c": [0.5, "lower"]}
    json.dumps(doc)


def test_csv_layout(tmp_path):
    p = write_csv(tmp_path / "t.csv", [{"x": 0.1, "y": 2}, {"x": 1 / 3, "y": -1}])
    raw = p.read_bytes()
    assert raw.startswith(b"x,y\r\n") and raw.count(b"\r\n") == 3
    rows = list(csv.DictReader(p.open(newline="")))
    assert float(rows[1]["x"]) == 1 / 3
    assert write_csv(tmp_path / "e.csv", [], ["a"]).read_bytes() == b"a\r\n"


def test_json_report_keys(tmp_path):
    p = write_json_report(tmp_path / "r.json", {"n": 1}, {"v": math.inf}, ["oops"])
    doc = json.loads(p.read_text())
    assert set(doc) == {"params", "results", "errors", "version"}
    assert doc["results"]["v"] == "inf" and doc["errors"] == ["oops"] and doc["version"] == __version__


def test_manifest_hashes(tmp_path):
    a = write_csv(tmp_path / "a.csv", [{"x": 1}])
    m = json.loads(write_manifest(tmp_path, "energy", {"k": 1}, [a, tmp_path / "missing"], 0).read_text())
    assert m["artifacts"] == {"a.csv": hashlib.sha256(a.read_bytes()).hexdigest()}
    assert m["subcommand"] == "energy" and m["exit_code"] == 0 and m["params"] == {"k": 1}


def test_svg_is_well_formed(tmp_path):
    x = np.linspace(0.1, 10, 50)
    p = write_svg_plot(tmp_path / "p.svg", {"a": (x, x ** 2), "b": (x, np.where(x > 5, np.nan, x))},
                       title="t", logx=True, logy=True)
    root = ET.parse(p).getroot()
    assert root.tag.endswith("svg")
    assert len([e for e in root.iter() if e.tag.endswith("polyline")]) == 2
    # degenerate data does not fail
    write_svg_plot(tmp_path / "q.svg", {"c": ([1.0], [1.0])})
