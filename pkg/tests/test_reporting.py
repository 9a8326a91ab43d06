import orjson
import pytest

from secroute import __about__
from secroute.model import EavesdropperMode
from secroute.reporting import CsvTable, config_hash, render, write_sidecar, write_text


@pytest.fixture
def table() -> CsvTable:
    t = CsvTable("scp-eval", ("mode", "lambda_e", "path", "scp"))
    t.add(EavesdropperMode.NON_COLLUDING, 1e-4, (0, 2, 4), 0.9)
    t.add(EavesdropperMode.COLLUDING, 1e-5, (0, 2, 4), 0.1 + 0.2)
    t.add(EavesdropperMode.COLLUDING, 1e-6, (0, 4), None)
    return t


def test_header_lines(table: CsvTable):
    lines = table.format(seed=42, digest="abc").splitlines()
    assert lines[:5] == [
        "# secroute-csv v1",
        f"# tool_version={__about__.__version__}",
        "# command=scp-eval",
        "# seed=42",
        "# config_hash=abc",
    ]
    assert lines[5] == "mode,lambda_e,path,scp"


def test_rows_sorted_and_floats_round_trip(table: CsvTable):
    body = table.format(seed=0, digest="x").splitlines()[6:]
    assert body == [
        "colluding,1e-06,0-4,",
        "colluding,1e-05,0-2-4,0.30000000000000004",
        "noncolluding,0.0001,0-2-4,0.9",
    ]


def test_insertion_order_does_not_matter(table: CsvTable):
    shuffled = CsvTable(table.command, table.columns, list(reversed(table.rows)))
    assert shuffled.format(seed=1, digest="d") == table.format(seed=1, digest="d")


def test_row_width_checked(table: CsvTable):
    with pytest.raises(ValueError):
        table.add(1, 2)


def test_records_are_sorted_dicts(table: CsvTable):
    records = table.records()
    assert records[0]["lambda_e"] == 1e-6
    assert records[-1]["mode"] is EavesdropperMode.NON_COLLUDING


def test_config_hash_ignores_key_order():
    a = config_hash({"seed": 1, "modes": [EavesdropperMode.COLLUDING], "lambdas": (1e-5, 1e-4)})
    b = config_hash({"lambdas": [1e-5, 1e-4], "modes": ["colluding"], "seed": 1})
    assert a == b
    assert len(a) == 64
    assert a != config_hash({"seed": 2, "modes": ["colluding"], "lambdas": [1e-5, 1e-4]})


def test_render_selftest_template():
    text = render(
        "selftest.txt.j2",
        {
            "version": "9.9",
            "checks": [{"name": "one", "passed": True, "detail": "fine"}, {"name": "two", "passed": False, "detail": "off"}],
            "passed": 1,
        },
    )
    assert "secroute 9.9 selftest" in text
    assert "[ok] one: fine" in text
    assert "[FAIL] two: off" in text
    assert "1/2 checks passed" in text


def test_dry_run_writes_nothing(tmp_path):
    target = tmp_path / "out" / "result.csv"
    write_text(target, "data", dry_run=True)
    assert not target.exists()
    write_text(target, "data")
    assert target.read_text(encoding="utf-8") == "data"


def test_sidecar_is_sorted_json(tmp_path):
    target = tmp_path / "result.json"
    write_sidecar(target, {"b": 1, "a": EavesdropperMode.COLLUDING})
    data = orjson.loads(target.read_bytes())
    assert data == {"a": "colluding", "b": 1}
    assert target.read_text(encoding="utf-8").index('"a"') < target.read_text(encoding="utf-8").index('"b"')
