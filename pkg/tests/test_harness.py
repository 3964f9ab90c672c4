import json

import pytest

from dmtu.analytic import Formula, PositionMode
from dmtu.harness import (
    Figure,
    Scenario,
    ScenarioError,
    SweepSpec,
    REFERENCE_PROBABILITIES,
    csv_text,
    emit_figure_data,
    emit_table1,
    load_scenario,
    parse_scenario,
    run_compare,
    scenario_to_dict,
    topology_for_drops,
)
from dmtu.model import IpVersion, Packet, PathTopology, Priority, TimingParams, ValidationError


def base_doc():
    return {
        "protocol": "pmtud",
        "topology": {"links": [{"current_mtu": 1500, "max_mtu": 9216}]},
        "packet": {"size": 100},
    }


def test_load_case_study(scenarios_dir):
    s = load_scenario(scenarios_dir / "case_study_pmtud.json")
    assert s.topology.n == 5
    assert s.packet == Packet(1800)
    assert s.protocol == "pmtud"
    r = run_compare(s).report
    assert r.drop_positions == [2, 3, 5]


def test_load_minimal(scenarios_dir):
    s = load_scenario(scenarios_dir / "minimal.json")
    assert s.topology.n == 0 and s.packet.size_octets == 100
    assert s.params == TimingParams()


def test_load_rejects_current_above_max(scenarios_dir):
    with pytest.raises(ScenarioError, match=r"links\[1\].*exceeds max_mtu"):
        load_scenario(scenarios_dir / "invalid_mtu.json")


def test_syntax_errors_carry_line_numbers(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{\n  "protocol": "pmtud",\n  oops\n}\n')
    with pytest.raises(ScenarioError, match=r"bad.json:3:"):
        load_scenario(f)


@pytest.mark.parametrize("mutate,where", [
    (lambda d: d.update(extra=1), "unknown key"),
    (lambda d: d["packet"].update(colour="red"), "packet: unknown key"),
    (lambda d: d["topology"]["links"][0].update(speed=1), r"links\[0\]: unknown key"),
    (lambda d: d.update(params={"t_x": 1}), "params: unknown key"),
    (lambda d: d.update(protocol="tcp"), "protocol"),
    (lambda d: d["packet"].update(size=0), "packet.size"),
    (lambda d: d["packet"].update(size="big"), "packet.size"),
    (lambda d: d["packet"].update(version=5), "packet.version"),
    (lambda d: d["packet"].update(priority="urgent"), "packet.priority"),
    (lambda d: d.update(params={"dt_d": 0.5}), "params:"),
    (lambda d: d.update(pmtud_enabled="yes"), "pmtud_enabled"),
    (lambda d: d.update(label=3), "label"),
    (lambda d: d["topology"].update(links=[]), "topology.links"),
    (lambda d: d.pop("packet"), "missing required key 'packet'"),
])
def test_parse_reports_field_context(mutate, where):
    doc = base_doc()
    mutate(doc)
    with pytest.raises(ScenarioError, match=where):
        parse_scenario(doc)


def test_parse_accepts_all_fields():
    doc = base_doc()
    doc.update(label="x", pmtud_enabled=False, protocol="dmtu_parallel",
               params={"t_d": 0.2, "retransmit_timeout": None})
    doc["packet"].update(version="v4", priority="low")
    s = parse_scenario(doc)
    assert s.packet.ip_version is IpVersion.V4 and s.packet.priority is Priority.LOW
    assert s.params.t_d == 0.2 and s.params.retransmit_timeout is None
    assert not s.behavior().pmtud_enabled
    assert parse_scenario(json.loads(json.dumps(scenario_to_dict(s)))) == s


def test_compare_case_study(scenarios_dir):
    c = run_compare(load_scenario(scenarios_dir / "case_study_pmtud.json"))
    assert c.analytic.formula is Formula.PMTUD_TOTAL
    assert c.report.total_time == pytest.approx(2.4503, abs=1e-12)
    assert c.diff <= 1e-12
    c = run_compare(load_scenario(scenarios_dir / "case_study_dmtu.json"))
    assert c.analytic.formula is Formula.DMTU_TOTAL
    assert c.report.total_time == pytest.approx(0.663, abs=1e-12)
    assert c.diff <= 1e-12


def test_compare_no_drop_is_exact():
    topo = PathTopology.from_mtus([1500] * 8)
    for proto in ("pmtud", "dmtu_standalone", "dmtu_parallel"):
        c = run_compare(Scenario(topo, proto, Packet(1000)))
        assert c.diff == 0


def test_compare_flags_unrepresentable_runs():
    topo = PathTopology.from_mtus([1500, 9000, 9000], max_mtu=80000)
    c = run_compare(Scenario(topo, "dmtu_standalone", Packet(70000)))
    assert not c.representable and c.diff is None and c.within()


def test_topology_for_drops():
    t = topology_for_drops(5, [2, 3, 5])
    assert [l.current_mtu for l in t.links] == [1800, 1800, 1700, 1600, 1800, 1500]
    with pytest.raises(ValidationError):
        topology_for_drops(3, [1, 2, 3], packet_size=250)


def test_sweep_spec_validation():
    for kw in [dict(n_range=(0, 5)), dict(n_range=(5, 4)), dict(drop_fractions=(0.3, 0.1)),
               dict(drop_fractions=(0.0,)), dict(drop_fractions=()), dict(packet_size=0)]:
        with pytest.raises(ValidationError):
            SweepSpec(**kw)


def test_probability_figure_row():
    rows = emit_figure_data(SweepSpec(n_range=(1, 300)), Figure.PROBABILITY)
    assert len(rows) == 300
    row = rows[19]
    assert row["n"] == 20 and abs(float(row["probability"]) - 0.75) <= 5e-4


def test_delay_figure_case_study_row():
    rows = emit_figure_data(SweepSpec(n_range=(5, 5), drop_fractions=(0.5,)), "delay")
    (row,) = rows
    assert list(row) == ["n", "fraction", "pmtud_total", "dmtu_total", "diff"]
    # Min positions 1..3 for a=3
    assert float(row["diff"]) == pytest.approx(0.663 - (0.6 + 6 * 0.185 + 3e-4), abs=1e-12)
    assert float(row["diff"]) < 0


def test_delay_figure_max_mode_matches_case_study_scale():
    (row,) = emit_figure_data(SweepSpec(n_range=(5, 5), drop_fractions=(0.5,),
                                        position_mode=PositionMode.MAX), "delay")
    assert float(row["pmtud_total"]) == pytest.approx(0.6 + 12 * 0.185 + 3e-4, rel=1e-5)


def test_throughput_figure_row():
    rows = emit_figure_data(SweepSpec(n_range=(10, 10), drop_fractions=(0.1,)), Figure.THROUGHPUT)
    (row,) = rows
    assert list(row) == ["n", "fraction", "tr_pmtud", "tr_dmtu"]
    assert float(row["tr_dmtu"]) == pytest.approx(1073.49, abs=0.01)
    assert float(row["tr_pmtud"]) == pytest.approx(1011.59, abs=0.01)


def test_latency_figure_columns():
    (row,) = emit_figure_data(SweepSpec(n_range=(5, 5), drop_fractions=(0.5,)), Figure.LATENCY)
    assert list(row) == ["n", "fraction", "l_pmtud", "l_dmtu"]
    assert float(row["l_dmtu"]) < float(row["l_pmtud"])


def test_figure_rows_are_ordered_and_stable():
    spec = SweepSpec(n_range=(1, 40))
    a = csv_text(emit_figure_data(spec, Figure.DELAY))
    b = csv_text(emit_figure_data(spec, Figure.DELAY))
    assert a == b
    rows = emit_figure_data(spec, Figure.DELAY)
    keys = [(r["n"], float(r["fraction"])) for r in rows]
    assert keys == sorted(keys)


def test_table1():
    rows = emit_table1()
    assert [r["n"] for r in rows] == [1, 5, 10, 20, 30, 40, 50, 100, 200, 300]
    for r in rows:
        assert abs(float(r["success_probability"]) - REFERENCE_PROBABILITIES[r["n"]]) <= 5e-4
    by_n = {r["n"]: r for r in rows}
    assert by_n[1]["reference"] == "0.4384"
    assert by_n[50]["reference"] == "0.8278"
    assert by_n[100]["reference"] == "0.8728"
