import json

import pytest

from m1lab import cadlag
from m1lab.cadlag import make_step
from m1lab.cli import PRESETS, Resolved, atomic_write, env_layer, resolve_config, run, build_parser

SMALL = """\
[model]
alpha = 1.5
p = 1.0

[coeffs]
values = [1.0, 0.5]

[experiment]
n = 50
n_list = [50, 500]
N = 1000
seed = 3
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(SMALL)
    return p


def test_presets_resolve():
    for name in PRESETS:
        r = Resolved(resolve_config(build_parser().parse_args(["converge", "--preset", name]), environ={}))
        assert r.model and r.coeffs
    assert Resolved(resolve_config(build_parser().parse_args(["converge", "--preset", "ma2_positive"]), {})).spec.beta == 1.75


def test_simulate_and_distance(tmp_path, cfg, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["simulate", "--config", str(cfg), "--out", str(a)], environ={}) == 0
    assert run(["simulate", "--config", str(cfg), "--seed", "4", "--out", str(b)], environ={}) == 0
    doc = json.loads(a.read_text())
    assert doc["n"] == 50 and doc["config"]["experiment"]["seed"] == 3
    path = cadlag.from_json(json.dumps(doc["path"]))
    assert path.first.n_jumps <= 50
    capsys.readouterr()
    assert run(["distance", "--metric", "pm2", str(a), str(b)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["metric"] == "pm2" and out["value"] > 0
    assert run(["distance", "--metric", "m1", str(a), str(b)]) == 1


def test_distance_on_step_files(tmp_path, capsys):
    f, g = tmp_path / "f.json", tmp_path / "g.csv"
    f.write_text(cadlag.to_json(make_step(0.0, [(0.5, 1.0)])))
    g.write_text(cadlag.to_csv(make_step(0.0, [(0.6, 1.0)])))
    assert run(["distance", "--metric", "m2", str(f), str(g)]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(0.1)
    assert run(["distance", "--metric", "m1", "--mesh", "0.001", str(f), str(g)]) == 0
    r = json.loads(capsys.readouterr().out)
    assert r["lower"] <= 0.1 + 1e-12 <= r["upper"] + 2e-12 and r["mesh"] == 0.001
    assert run(["distance", "--metric", "zz", str(f), str(g)]) == 1


def test_limit_subcommand(tmp_path, cfg):
    out = tmp_path / "lim.json"
    assert run(["limit", "--config", str(cfg), "--out", str(out)], environ={}) == 0
    doc = json.loads(out.read_text())
    assert doc["limit"]["beta"] == 1.5
    w = cadlag.from_dict(doc["path"]["second"])
    assert all(b >= a for a, b in zip(w.levels(), w.levels()[1:]))


def test_unknown_key_is_line_precise(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text(SMALL.replace("seed = 3", "seeed = 3"))
    out = tmp_path / "never.json"
    assert run(["converge", "--config", str(p), "--out", str(out)], environ={}) == 1
    err = capsys.readouterr().err
    assert "line 12" in err and "seeed" in err
    assert not out.exists()


def test_invalid_values_rejected_before_output(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text(SMALL.replace("alpha = 1.5", "alpha = 2.5"))
    out = tmp_path / "never.json"
    assert run(["simulate", "--config", str(p), "--out", str(out)], environ={}) == 1
    assert not out.exists()
    p.write_text(SMALL.replace("values = [1.0, 0.5]", "values = [1.0, -0.5]\nallow_mixed = true"))
    assert run(["converge", "--config", str(p), "--out", str(out)], environ={}) == 1
    assert "diagnostic" in capsys.readouterr().err
    p.write_text("[model\nalpha = 1")
    assert run(["simulate", "--config", str(p)], environ={}) == 1
    assert run(["simulate"], environ={}) == 1
    assert run(["nosuch"]) == 1


def test_env_and_flag_overrides(cfg):
    args = build_parser().parse_args(["simulate", "--config", str(cfg)])
    env = {"M1LAB_EXPERIMENT__SEED": "11", "M1LAB_MODEL__P": "0.5", "OTHER": "x"}
    c = resolve_config(args, env)
    assert c["experiment"]["seed"] == 11 and c["model"]["p"] == 0.5
    args = build_parser().parse_args(["simulate", "--config", str(cfg), "--seed", "12"])
    assert resolve_config(args, env)["experiment"]["seed"] == 12
    with pytest.raises(ValueError):
        env_layer({"M1LAB_MODEL__BETA": "1"})
    assert env_layer({"M1LAB_COEFFS__SIGN": "nonpositive"}) == {"coeffs": {"sign": "nonpositive"}}


def test_converge_exit_codes_and_outputs(tmp_path, cfg, capsys):
    out = tmp_path / "rep.json"
    code = run(["converge", "--config", str(cfg), "--out", str(out)], environ={})
    assert code in (0, 2)
    rep = json.loads(out.read_text())
    assert code == (0 if rep["body"]["passed"] else 2)
    assert "timestamp" in rep["header"] and "timestamp" not in json.dumps(rep["body"])
    assert (tmp_path / "rep.csv").read_text().startswith("n,t,component,statistic_name,value")
    strict = tmp_path / "strict.toml"
    strict.write_text(SMALL + "\n[thresholds]\nw_ks = 0.0\n")
    assert run(["converge", "--config", str(strict), "--out", str(tmp_path / "s.json")], environ={}) == 2
    assert "FAIL" in capsys.readouterr().err
    csv_out = tmp_path / "again.csv"
    assert run(["report", str(out), "--out", str(csv_out)]) == 0
    assert csv_out.read_text() == (tmp_path / "rep.csv").read_text()


def test_self_distance_kind(tmp_path):
    p = tmp_path / "sd.toml"
    p.write_text(SMALL.replace("seed = 3", "seed = 3\nkind = \"self_distance\"\ndraws = 3"))
    out = tmp_path / "sd.json"
    assert run(["converge", "--config", str(p), "--out", str(out)], environ={}) == 0
    assert len(json.loads(out.read_text())["body"]["draws"]) == 3


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "sub" / "x.txt"
    atomic_write(target, "hello")
    atomic_write(target, "again")
    assert target.read_text() == "again"
    assert [q.name for q in target.parent.iterdir()] == ["x.txt"]


def test_iid_preset_end_to_end(tmp_path):
    out = tmp_path / "iid.json"
    assert run(["converge", "--preset", "iid_frechet", "--workers", "4", "--out", str(out)], environ={}) == 0
    body = json.loads(out.read_text())["body"]
    ks = [s["value"] for s in body["statistics"] if s["component"] == "W" and s["n"] == 10000]
    assert max(ks) <= 0.02
