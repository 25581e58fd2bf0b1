import json

from lwe_hardness.cli import main


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def test_plan_json_and_exit_codes(capsys):
    code, out, err = run(["plan"], capsys)
    assert code == 2  # the asymptotic checklist cannot hold at desk scale
    assert "predicate failed" in err
    report = json.loads(out)
    assert report["schema"] == "lwe-hardness-report/1"
    assert report["results"][0]["q"] == 1024
    code, out, _ = run(["plan", "--desk"], capsys)
    assert code == 0 and json.loads(out)["checklist_passed"] is False


def test_plan_precondition_named(capsys):
    code, _, err = run(["plan", "--sparsity", "8"], capsys)
    assert code == 2 and "k <= cn violated" in err


def test_usage_errors(capsys):
    assert run([], capsys)[0] == 1
    assert run(["plan", "--bogus"], capsys)[0] == 1
    assert run(["reduce"], capsys)[0] == 1  # --in is required
    assert run(["generate"], capsys)[0] == 1  # --out is required
    assert run(["reduce", "--in", "x", "--stages", "widen,nope"], capsys)[0] == 1


def test_lwe_pipeline_round_trip(tmp_path, capsys):
    raw, red, rep = (str(tmp_path / n) for n in ("raw.lwe", "red.lwe", "rep.json"))
    assert run(["generate", "--samples", "200000", "--disclose-secret", "--out", raw,
                "--seed", "3"], capsys)[0] == 0
    code, out, _ = run(["reduce", "--in", raw, "--out", red, "--report", rep, "--seed", "3"],
                       capsys)
    assert code == 0
    assert json.load(open(rep)) == json.loads(out)
    code, out, _ = run(["verify", "--in", red, "--claims", "witness-gap,null-independence"],
                       capsys)
    results = json.loads(out)["results"]
    assert [r["claim_id"] for r in results] == ["witness-gap", "null-independence"]
    # the witness pair sees the planted direction; random projections see nothing
    assert results[0]["passed"] is True, results[0]
    assert results[1]["passed"] is True
    assert code == 0


def test_direct_instance_claims(tmp_path, capsys):
    path = str(tmp_path / "d.lwe")
    assert run(["generate", "--source", "direct", "--period", "0.25", "--noise-scale", "0.0025",
                "--dim", "8", "--samples", "400000", "--disclose-secret", "--out", path],
               capsys)[0] == 0
    code, out, _ = run(["verify", "--in", path, "--noise-scale", "0.0025", "--claims",
                        "witness-gap,relu-correlation,l2-conversion,fact-a4"], capsys)
    report = json.loads(out)
    assert code == 0, report
    assert report["passed"] is True


def test_null_verify_passes(tmp_path, capsys):
    path = str(tmp_path / "n.lwe")
    run(["generate", "--source", "direct", "--period", "0.25", "--dim", "8",
         "--hypothesis", "null", "--samples", "100000", "--out", path], capsys)
    code, out, _ = run(["verify", "--in", path], capsys)
    assert code == 0 and json.loads(out)["results"][0]["claim_id"] == "null-independence"


def test_raw_batch_verify(tmp_path, capsys):
    path = str(tmp_path / "b.lwe")
    run(["generate", "--samples", "50000", "--hypothesis", "null", "--out", path], capsys)
    code, out, _ = run(["verify", "--in", path], capsys)
    assert code == 0 and json.loads(out)["results"][0]["claim_id"] == "batch-independence"
    code, _, err = run(["verify", "--in", path, "--claims", "witness-gap"], capsys)
    assert code == 2 and "dataset" in err


def test_format_errors(tmp_path, capsys):
    path = str(tmp_path / "b.lwe")
    run(["generate", "--samples", "100", "--out", path], capsys)
    data = open(path, "rb").read()
    open(path, "wb").write(data[:-3])
    code, _, err = run(["verify", "--in", path], capsys)
    assert code == 4 and "truncated" in err
    code, _, _ = run(["verify", "--in", str(tmp_path / "missing")], capsys)
    assert code == 4


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dim": 100, "sparsity": 5, "beta": 0.7, "kappa": 3}))
    code, out, _ = run(["plan", "--desk", "--config", str(cfg)], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["results"][0]["q"] == 5**4 and report["config"]["dim"] == 100
    # flags still override the config
    code, out, _ = run(["plan", "--desk", "--config", str(cfg), "--kappa", "1"], capsys)
    assert json.loads(out)["results"][0]["q"] == 25
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert run(["plan", "--config", str(cfg)], capsys)[0] == 1


def test_distinguish_small(capsys):
    code, out, _ = run(["distinguish", "--dim", "3", "--period", "0.9", "--degree", "3",
                        "--samples", "20000", "--trials", "2"], capsys)
    assert code == 0
    res = json.loads(out)["results"][0]
    assert res["alt_accepts"] == 2 and res["null_accepts"] == 0


def test_determinism(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = str(tmp_path / f"g{i}.lwe")
        _, out, _ = run(["generate", "--samples", "2000", "--seed", "9", "--out", path], capsys)
        outs.append((open(path, "rb").read(), out))
    assert outs[0][0] == outs[1][0]
    # output paths are excluded from the config, so stdout matches too
    assert outs[0][1] == outs[1][1]
