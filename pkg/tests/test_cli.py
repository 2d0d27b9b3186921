import csv
import json

import numpy as np
import pytest

from qagibbs.cli import main
from qagibbs.distributions import build_alpha_grid, sampling_floor_trials
from qagibbs.instances import load_instance
from qagibbs.errors import CapacityError
from qagibbs.ising import IsingModel, enumerate_gibbs


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def rows_of(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("name,deg", [("GSD-10", 10), ("GSD-F-5", 5)])
def test_degeneracy(capsys, name, deg):
    code, out = run(capsys, "degeneracy", name)
    report = json.loads(out.out)
    assert code == 0 and report["degeneracy"] == deg == report["declared_degeneracy"]


def test_generated_instance_degeneracy_matches_oracle(capsys, tmp_path):
    code, out = run(capsys, "gen-instance", "--seed", 11, "--with-fields", "--out", tmp_path)
    info = json.loads(out.out)
    assert code == 0
    manifest = json.loads((tmp_path / "instance-11.manifest.json").read_text())
    assert manifest["seeds"] == {"run": 11} and manifest["degeneracy"] == info["degeneracy"]
    data = json.loads((tmp_path / "instance-11.json").read_text())
    # brute force over an explicit +-1 table
    spins = np.array(np.meshgrid(*[[-1, 1]] * 16, indexing="ij")).reshape(16, -1).T
    pos = {s: k for k, s in enumerate(data["sites"])}
    e = np.zeros(len(spins))
    for i, j, v in data["couplings"]:
        e -= v * spins[:, pos[i]] * spins[:, pos[j]]
    for i, v in data["fields"]:
        e -= v * spins[:, pos[i]]
    assert int((e == e.min()).sum()) == info["degeneracy"]
    code, out = run(capsys, "degeneracy", info["path"])
    assert json.loads(out.out)["degeneracy"] == info["degeneracy"]


def test_gen_instance_exhaustion(capsys, tmp_path):
    code, out = run(capsys, "gen-instance", "--target-degeneracy", 3, "--max-tries", 3, "--out", tmp_path)
    assert code == 2 and "3 attempts" in out.err


def test_tv_sweep_exact_backend(capsys, tmp_path):
    code, _ = run(capsys, "tv-sweep", "--instance", "GSD-2", "--alpha-in", 0, 0.3, "--labels", 1, 5,
                  "--samples", 20000, "--alpha-max", 4, "--out", tmp_path, "--seed", 3)
    assert code == 0
    rows = rows_of(tmp_path / "tv_sweep.csv")
    assert list(rows[0]) == ["alpha_in", "anneal_label", "tv", "alpha_out", "tv_floor"]
    assert [(r["alpha_in"], r["anneal_label"]) for r in rows] == [("0.0", "1"), ("0.0", "5"), ("0.3", "1"), ("0.3", "5")]
    assert all(float(r["alpha_out"]) == 0 for r in rows[:2])
    manifest = json.loads((tmp_path / "tv_sweep.manifest.json").read_text())
    assert manifest["rows"] == 4 and manifest["seeds"]["run"] == 3 and len(manifest["seeds"]["cells"]) == 4
    assert {"numpy", "qagibbs", "python"} <= set(manifest["versions"])


def test_tv_sweep_deterministic_and_worker_independent(capsys, tmp_path):
    args = ["tv-sweep", "--instance", "GSD-4", "--alpha-in", 0.1, 0.2, 0.4, "--labels", 1, 25,
            "--samples", 5000, "--backend", "emulator"]
    run(capsys, *args, "--out", tmp_path / "a")
    run(capsys, *args, "--out", tmp_path / "b", "--workers", 3)
    assert (tmp_path / "a/tv_sweep.csv").read_bytes() == (tmp_path / "b/tv_sweep.csv").read_bytes()


def test_emulator_tv_tracks_floor(capsys, tmp_path, monkeypatch):
    # betas chosen so every beta * alpha_in lands on the alpha_out grid
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"backend_options": {"betas": {"1": 13.0, "5": 13.0}}}))
    alphas = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0]
    code, _ = run(capsys, "tv-sweep", "--config", cfg, "--backend", "emulator", "--alpha-in", *alphas,
                  "--labels", 1, 5, "--samples", 20000, "--out", tmp_path)
    assert code == 0
    model = load_instance("GSD-6").model
    for r in rows_of(tmp_path / "tv_sweep.csv"):
        # one empirical TV is a single draw from the floor's own spread
        trials = sampling_floor_trials(enumerate_gibbs(model, float(r["alpha_out"])), 20000, trials=32, seed=1)
        assert float(r["tv"]) <= trials.mean() + 4 * trials.std()
        assert float(r["tv_floor"]) == pytest.approx(trials.mean(), rel=0.25)


def test_toy_backend_cannot_hold_gsd6(capsys, tmp_path):
    code, out = run(capsys, "tv-sweep", "--backend", "toy", "--samples", 100, "--out", tmp_path)
    assert code == 2 and "at most 10" in out.err


def test_toy_backend_sweep_on_small_instance(capsys, tmp_path):
    path = tmp_path / "chain.json"
    path.write_text(IsingModel((0, 1, 2), {(0, 1): 1.0, (1, 2): 1.0}).to_json())
    code, _ = run(capsys, "tv-sweep", "--instance", path, "--backend", "toy", "--samples", 2000,
                  "--alpha-max", 11, "--out", tmp_path)
    rows = rows_of(tmp_path / "tv_sweep.csv")
    assert code == 0 and len(rows) == 30 * 4
    assert all(float(r["alpha_out"]) == 0 for r in rows if r["alpha_in"] == "0.0")


def test_chain3_toy(capsys, tmp_path):
    code, _ = run(capsys, "chain3", "--out", tmp_path)
    rows = rows_of(tmp_path / "chain3.csv")
    assert code == 0 and list(rows[0]) == ["j_in", "j12_rec", "j23_rec", "j13_rec"]
    assert [float(r["j_in"]) for r in rows] == list(build_alpha_grid(1.0))
    manifest = json.loads((tmp_path / "chain3.manifest.json").read_text())
    assert 0.2 <= manifest["j13_zero_crossing"] <= 0.35 and manifest["converged"]


def test_chain3_backend_source(capsys, tmp_path):
    code, _ = run(capsys, "chain3", "--source", "backend", "--backend", "exact", "--j-grid", 0.2, 0.6,
                  "--samples", 20000, "--out", tmp_path, "--seed", 4)
    manifest = json.loads((tmp_path / "chain3.manifest.json").read_text())
    assert code == 0 and manifest["seeds"]["points"] == [4, 5]
    rows = rows_of(tmp_path / "chain3.csv")
    assert float(rows[1]["j12_rec"]) == pytest.approx(0.6, abs=0.05)


def test_bs_command(capsys, tmp_path):
    code, _ = run(capsys, "bs", "--j-grid", 0.25, 0.5, 1.0, "--out", tmp_path)
    rows = rows_of(tmp_path / "bs.csv")
    assert code == 0
    for r in rows:
        j = float(r["j_in"])
        assert float(r["j13_rec"]) == pytest.approx(11 * 0.05 * j * j, abs=1e-6)
    assert json.loads((tmp_path / "bs.manifest.json").read_text())["j13_zero_crossing"] is None


def test_out_of_range_alpha(capsys, tmp_path):
    with pytest.raises(SystemExit):
        main(["tv-sweep", "--alpha-in", "1.5", "--out", str(tmp_path)])
    with pytest.raises(SystemExit):
        main(["bs", "--j-grid", "-0.1", "--out", str(tmp_path)])


def test_fit_alpha_from_probs(capsys, tmp_path):
    m = IsingModel((0, 1, 2), {(0, 1): 1.0, (1, 2): 1.0})
    path, nu = tmp_path / "m.json", tmp_path / "nu.json"
    path.write_text(m.to_json())
    nu.write_text(json.dumps({"n_sites": 3, "probs": enumerate_gibbs(m, 2.8).probs.tolist()}))
    code, out = run(capsys, "fit-alpha", nu, "--instance", path, "--alpha-max", 4)
    report = json.loads(out.out)
    assert code == 0 and report["alpha_out"] == pytest.approx(2.8) and report["tv"] < 1e-12


def test_sample_then_fit(capsys, tmp_path):
    code, _ = run(capsys, "sample", "--instance", "GSD-2", "--alpha-in", 0.05, "--samples", 50000,
                  "--out", tmp_path, "--seed", 2)
    data = json.loads((tmp_path / "samples.json").read_text())
    assert code == 0 and len(data["configs"]) == 50000 and len(data["gauges"]) == 500
    code, out = run(capsys, "fit-alpha", tmp_path / "samples.json", "--instance", "GSD-2", "--alpha-max", 1)
    assert json.loads(out.out)["alpha_out"] == pytest.approx(0.05)


def test_config_file_sets_defaults(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"j_grid": [0.25, 0.5], "chi": 0.1, "seed": 9}))
    run(capsys, "bs", "--config", cfg, "--out", tmp_path)
    rows = rows_of(tmp_path / "bs.csv")
    assert [float(r["j13_rec"]) for r in rows] == pytest.approx([11 * 0.1 * 0.0625, 11 * 0.1 * 0.25], abs=1e-6)
    manifest = json.loads((tmp_path / "bs.manifest.json").read_text())
    assert manifest["inputs"]["seed"] == 9
    # explicit flags still win over the file
    run(capsys, "bs", "--config", cfg, "--chi", 0.05, "--out", tmp_path)
    assert float(rows_of(tmp_path / "bs.csv")[1]["j13_rec"]) == pytest.approx(0.1375, abs=1e-6)


def test_convention_flag(capsys):
    _, a = run(capsys, "degeneracy", "GSD-F-3")
    _, b = run(capsys, "degeneracy", "GSD-F-3", "--no-dwave-convention")
    assert json.loads(a.out)["degeneracy"] == 3 and json.loads(b.out)["degeneracy"] == 2


def test_remote_replay_through_cli(capsys, tmp_path):
    code, out = run(capsys, "sample", "--backend", "remote", "--fixtures", tmp_path, "--samples", 10, "--out", tmp_path)
    assert code == 2 and "fixture" in out.err


def test_toy_capacity_error_type():
    from qagibbs.backends import SampleRequest, ToyModelBackend
    with pytest.raises(CapacityError):
        ToyModelBackend().sample(SampleRequest(IsingModel(tuple(range(11))), 1, 1))
