import filecmp
import json
import os

import numpy as np
import pytest

import weylkit as wk
import weylkit.io as wio
from weylkit.cli import main
from weylkit.grids import DifferenceKernel, GridFunction

from conftest import make_params

FIXTURES = os.path.join(os.path.dirname(wio.__file__), "fixtures")


class TestJson:
    def test_params_round_trip_bit_exact(self, tmp_path):
        prm = make_params(3, 2, seed=90, negative=False)
        path = tmp_path / "p.json"
        wio.save_params(path, prm)
        back = wio.load_params(path)
        assert np.array_equal(back.alpha, prm.alpha)
        assert np.array_equal(back.lambda1, prm.lambda1)
        assert np.array_equal(back.lambda2, prm.lambda2)
        assert np.array_equal(back.d, prm.d)

    def test_realization_round_trip_bit_exact(self, tmp_path):
        r = wk.realization_from_params(make_params(3, 2, seed=91))
        path = tmp_path / "r.json"
        wio.save_realization(path, r)
        back = wio.load_realization(path)
        assert np.array_equal(back.gamma, r.gamma)
        assert np.array_equal(back.psi1_0, r.psi1_0)
        assert np.array_equal(back.psi2, r.psi2)

    def test_wrong_kind_is_structural(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text('{"kind": "something"}')
        with pytest.raises(wk.StructuralError):
            wio.load_params(path)

    def test_malformed_json_is_structural(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text("{nope")
        with pytest.raises(wk.StructuralError):
            wio.load_params(path)


class TestCsv:
    def test_grid_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(5)
        vals = rng.normal(size=(12, 2, 4)) + 1j * rng.normal(size=(12, 2, 4))
        grid = GridFunction(h=1 / 8, values=vals, x0=1 / 16)
        path = tmp_path / "g.csv"
        wio.write_grid_csv(path, grid)
        back = wio.read_grid_csv(path)
        assert np.array_equal(back.values, grid.values)
        assert back.h == grid.h and back.x0 == grid.x0

    def test_kernel_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        vals = rng.normal(size=(16, 2, 2)) + 1j * rng.normal(size=(16, 2, 2))
        kern = DifferenceKernel(p=2, h=1 / 16, samples=vals)
        path = tmp_path / "k.csv"
        wio.write_kernel_csv(path, kern)
        back = wio.read_kernel_csv(path)
        assert np.array_equal(back.samples, kern.samples)
        assert back.h == kern.h and back.p == kern.p

    def test_weyl_samples_round_trip(self, tmp_path):
        zetas = np.linspace(-3, 3, 7)
        vals = np.exp(1j * zetas)[:, None, None] * np.eye(1)
        path = tmp_path / "w.csv"
        wio.write_weyl_samples_csv(path, zetas, vals)
        z2, v2 = wio.read_weyl_samples_csv(path)
        assert np.array_equal(z2, zetas) and np.array_equal(v2, vals)

    def test_node_grid_rejected_as_kernel(self, tmp_path):
        grid = GridFunction(h=1 / 8, values=np.zeros((8, 1, 1)), x0=0.0)
        path = tmp_path / "bad.csv"
        wio.write_grid_csv(path, grid)
        with pytest.raises(wk.StructuralError):
            wio.read_kernel_csv(path)


class TestCli:
    def test_direct_free_system_constant_phi(self, tmp_path):
        out = tmp_path / "run"
        code = main(["direct", "--params", os.path.join(FIXTURES, "free_params.json"),
                     "--xmax", "2", "--nx", "9", "--z", "0+1i",
                     "--out", str(out)])
        assert code == 0
        rows = (out / "phi.csv").read_text().strip().split("\n")
        assert rows[1].split(",")[2:] == ["0", "1"]
        manifest = json.loads((out / "run-manifest.json").read_text())
        assert manifest["command"] == "direct"
        assert "H.csv" in manifest["outputs"]

    def test_determinism(self, tmp_path):
        args = ["direct", "--params", os.path.join(FIXTURES, "scalar_params.json"),
                "--nx", "5", "--z=-1:1:3x0.5:1.5:2"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        for name in ("H.csv", "phi.csv", "phi_hat.csv", "w.csv", "run-manifest.json"):
            assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name,
                               shallow=False), name

    def test_inverse_then_direct_reproduces_phi(self, tmp_path):
        r = wk.realization_from_params(make_params(2, 1, seed=95))
        rpath = tmp_path / "r.json"
        wio.save_realization(rpath, r)
        inv = tmp_path / "inv"
        assert main(["inverse", "--realization", str(rpath), "--nx", "3",
                     "--z=-1:1:4x0.5:2:3", "--out", str(inv)]) == 0
        dout = tmp_path / "dir"
        assert main(["direct", "--params", str(inv / "params.json"), "--nx", "3",
                     "--z=-1:1:4x0.5:2:3", "--out", str(dout)]) == 0
        a = (inv / "phi.csv").read_text().strip().split("\n")[1:]
        b = (dout / "phi.csv").read_text().strip().split("\n")[1:]
        for ra, rb in zip(a, b):
            va = np.array([float(t) for t in ra.split(",")])
            vb = np.array([float(t) for t in rb.split(",")])
            assert np.abs(va - vb).max() < 1e-8
        # and the CLI phi matches the input realization pointwise
        zs = [complex(float(r0.split(",")[0]), float(r0.split(",")[1])) for r0 in a]
        for row, z in zip(a, zs):
            cells = [float(t) for t in row.split(",")]
            assert abs(complex(cells[2], cells[3]) - r.phi(z)[0, 0]) < 1e-8

    def test_recover_subcommand_dirac(self, tmp_path):
        zetas = np.linspace(-50, 50, 2001)
        vals = np.tile(1j * np.eye(1)[None], (zetas.size, 1, 1))
        spath = tmp_path / "samples.csv"
        wio.write_weyl_samples_csv(spath, zetas, vals)
        out = tmp_path / "rec"
        assert main(["recover", "--samples", str(spath), "--eta", "1.0",
                     "--a", "50", "--step", "0.015625", "--xmax", "1.0",
                     "--mode", "dirac", "--out", str(out)]) == 0
        s = wio.read_grid_csv(out / "s.csv")
        assert np.abs(s.values - 0.5).max() < 1e-2
        v = wio.read_grid_csv(out / "v.csv")
        assert np.abs(v.values).max() < 5e-2
        assert (out / "v_alt.csv").exists() and (out / "k.csv").exists()

    def test_recover_subcommand_canonical(self, tmp_path):
        zetas = np.linspace(-50, 50, 2001)
        vals = np.tile(1j * np.eye(1)[None], (zetas.size, 1, 1))
        spath = tmp_path / "samples.csv"
        wio.write_weyl_samples_csv(spath, zetas, vals)
        out = tmp_path / "rec"
        assert main(["recover", "--samples", str(spath), "--eta", "1.0",
                     "--a", "50", "--step", "0.015625", "--xmax", "1.0",
                     "--mode", "canonical", "--d", "-2", "--out", str(out)]) == 0
        assert (out / "H.csv").exists() and (out / "beta.csv").exists()
        ham = wio.read_grid_csv(out / "H.csv")
        expect = np.array([[1.0, -1.0], [-1.0, 1.0]])
        assert np.abs(ham.values - expect[None]).max() < 5e-2

    def test_fundamental_subcommand(self, tmp_path):
        out = tmp_path / "fun"
        assert main(["fundamental", "--kernel", os.path.join(FIXTURES, "kernel.csv"),
                     "--d", "-1", "--z", "0.5+1j", "--out", str(out)]) == 0
        rows = (out / "w.csv").read_text().strip().split("\n")
        assert len(rows) == 2

    def test_interpolate_subcommand(self, tmp_path):
        qs = np.arange(61, dtype=float)
        wio.write_weyl_samples_csv(tmp_path / "s.csv", qs,
                                   np.full((61, 1, 1), 1j))
        out = tmp_path / "it"
        assert main(["interpolate", "--samples", str(tmp_path / "s.csv"),
                     "--z", "3j", "--n", "60", "--mode", "weyl-dirac",
                     "--out", str(out)]) == 0
        row = (out / "value.csv").read_text().strip().split("\n")[1].split(",")
        assert abs(complex(float(row[2]), float(row[3])) - 1j) < 1e-3
        conv = (out / "convergence.csv").read_text().strip().split("\n")
        assert len(conv) == 62

    def test_check_passes_on_fixtures(self, capsys):
        assert main(["check"]) == 0
        out = capsys.readouterr().out
        assert "invariants pass" in out and "FAIL" not in out

    def test_missing_file_exits_2(self):
        assert main(["direct", "--params", "/nonexistent.json"]) == 2

    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["direct", "--nonsense"])
        assert exc.value.code == 2

    def test_invalid_params_exit_1(self, tmp_path):
        bad = wio.params_to_json(make_params(2, 1, seed=97))
        bad["alpha"][0][0] = [5.0, 5.0]   # break the identity
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        assert main(["direct", "--params", str(path), "--out",
                     str(tmp_path / "o")]) == 1

    def test_outdir_env_override(self, tmp_path, monkeypatch):
        target = tmp_path / "env_out"
        monkeypatch.setenv("WEYLKIT_OUTDIR", str(target))
        assert main(["direct", "--params",
                     os.path.join(FIXTURES, "free_params.json"),
                     "--nx", "3", "--out", str(tmp_path / "ignored")]) == 0
        assert (target / "phi.csv").exists()
        assert not (tmp_path / "ignored").exists()


class TestJsonGrids:
    def test_grid_json_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        vals = rng.normal(size=(6, 2, 3)) + 1j * rng.normal(size=(6, 2, 3))
        grid = GridFunction(h=0.25, values=vals, x0=0.125)
        path = tmp_path / "g.json"
        wio.save_grid_json(path, grid)
        back = wio.load_grid_json(path)
        assert np.array_equal(back.values, grid.values)
        assert back.h == grid.h and back.x0 == grid.x0

    def test_kernel_json_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        vals = rng.normal(size=(8, 2, 2)) + 1j * rng.normal(size=(8, 2, 2))
        kern = DifferenceKernel(p=2, h=0.125, samples=vals)
        path = tmp_path / "k.json"
        wio.save_kernel_json(path, kern)
        back = wio.load_kernel_json(path)
        assert np.array_equal(back.samples, kern.samples)
        assert back.p == kern.p and back.h == kern.h

    def test_lattice_samples_json(self, tmp_path):
        samples = np.array([1.0 / (q + 0.1) for q in range(21)], dtype=complex)
        path = tmp_path / "s.json"
        wio.write_lattice_samples_json(path, samples)
        back = wio.read_lattice_samples(path)
        assert np.array_equal(back[:, 0, 0], samples)

    def test_interpolate_accepts_json_samples(self, tmp_path):
        wio.write_lattice_samples_json(tmp_path / "s.json",
                                       np.full(41, 1j, dtype=complex))
        out = tmp_path / "it"
        assert main(["interpolate", "--samples", str(tmp_path / "s.json"),
                     "--z", "3j", "--n", "40", "--mode", "weyl-dirac",
                     "--out", str(out)]) == 0
        row = (out / "value.csv").read_text().strip().split("\n")[1].split(",")
        assert abs(complex(float(row[2]), float(row[3])) - 1j) < 1e-3

    def test_fundamental_accepts_json_kernel(self, tmp_path):
        kern = DifferenceKernel(p=1, h=1 / 32, samples=np.zeros((32, 1, 1)))
        wio.save_kernel_json(tmp_path / "k.json", kern)
        out = tmp_path / "fun"
        assert main(["fundamental", "--kernel", str(tmp_path / "k.json"),
                     "--d", "-1", "--z", "0+0j", "--out", str(out)]) == 0
        row = (out / "w.csv").read_text().strip().split("\n")[1].split(",")
        vals = np.array([float(t) for t in row[2:]])
        expect = np.eye(2).astype(complex)
        got = vals[::2] + 1j * vals[1::2]
        assert np.abs(got.reshape(2, 2) - expect).max() == 0.0
