"""Command-line front end.

Subcommands: ``direct`` (explicit system to H, w, phi), ``inverse``
(realization to parameter matrices and H), ``recover`` (tabulated Weyl
samples to amplitude/accelerant and then potential or Hamiltonian),
``fundamental`` (kernel to fundamental solution), ``interpolate`` (lattice
samples to values), ``check`` (invariant suite over bundled fixtures).

Exit codes: 0 success, 1 failed validation or mathematical domain problem,
2 structural/IO/usage errors.  Identical inputs produce byte-identical
outputs; every run writes a ``run-manifest.json`` echoing the effective
parameters.  The output directory may be overridden with the
``WEYLKIT_OUTDIR`` environment variable.
"""

import argparse
import json
import os
import sys
from importlib import resources

import numpy as np

from . import defaults, io
from .exceptions import (
    DomainError,
    PositivityError,
    SingularityError,
    StructuralError,
    ValidationError,
    WeylkitError,
)
from .fourier import WeylSampler, amplitude_from_weyl, herglotz_check, weyl_from_amplitude
from .gbdt import (
    evolve_state,
    fundamental_direct,
    hamiltonian_grid,
    state_identity_residual,
    transfer_matrix,
    validate_params,
    weyl_pair,
)
from .grids import GridFunction
from .interpolation import InterpCoeffs, coeff_c, interpolate_series
from .rational import params_from_realization, realization_from_params, validate_realization
from .structured import (
    build_structured_operator,
    canonical_from_kernel,
    factorize_triangular,
    fundamental_from_kernel,
    recover_potential,
)


def _parse_complex(text):
    try:
        return complex(text.replace("i", "j").replace(" ", ""))
    except ValueError as exc:
        raise StructuralError(f"cannot parse complex number {text!r}") from exc


def _parse_zgrid(text):
    """Grid spec 're0:re1:n x im0:im1:m' -> flat list of complex points."""
    parts = text.replace("×", "x").split("x")
    if len(parts) != 2:
        return [_parse_complex(text)]

    def axis(spec):
        bits = spec.split(":")
        if len(bits) != 3:
            raise StructuralError(f"bad grid axis {spec!r} (want start:stop:count)")
        start, stop, num = float(bits[0]), float(bits[1]), int(bits[2])
        if num < 1:
            raise StructuralError("grid axis needs at least one point")
        return np.linspace(start, stop, num)

    res, ims = axis(parts[0]), axis(parts[1])
    return [complex(r, i) for i in ims for r in res]


def _parse_diag(text):
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise StructuralError(f"cannot parse diagonal {text!r}") from exc


def _outdir(args):
    out = os.environ.get("WEYLKIT_OUTDIR") or args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _manifest(outdir, command, params, outputs):
    payload = {
        "command": command,
        "parameters": params,
        "outputs": sorted(outputs),
        "version": "0.1.0",
    }
    with open(os.path.join(outdir, "run-manifest.json"), "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_z_rows(path, zs, values):
    values = np.asarray(values)
    header = ["Re_z", "Im_z"] + [
        name for i in range(values.shape[1]) for j in range(values.shape[2])
        for name in (f"Re_{i}_{j}", f"Im_{i}_{j}")
    ]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for z, val in zip(zs, values):
            cells = [io.fmt(z.real), io.fmt(z.imag)]
            for i in range(values.shape[1]):
                for j in range(values.shape[2]):
                    cells.append(io.fmt(val[i, j].real))
                    cells.append(io.fmt(val[i, j].imag))
            fh.write(",".join(cells) + "\n")


def _write_xz_rows(path, rows, shape):
    header = ["x", "Re_z", "Im_z"] + [
        name for i in range(shape[0]) for j in range(shape[1])
        for name in (f"Re_{i}_{j}", f"Im_{i}_{j}")
    ]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for x, z, val in rows:
            cells = [io.fmt(x), io.fmt(z.real), io.fmt(z.imag)]
            for i in range(shape[0]):
                for j in range(shape[1]):
                    cells.append(io.fmt(val[i, j].real))
                    cells.append(io.fmt(val[i, j].imag))
            fh.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_direct(args):
    params = io.load_params(args.params)
    report = validate_params(params)
    if not report["passed"]:
        raise ValidationError(
            f"parameter identity violated (residual {report['identity_residual']:.3e})",
            report,
        )
    outdir = _outdir(args)
    xs = np.linspace(0.0, args.xmax, args.nx)
    zs = _parse_zgrid(args.z)
    hvals = hamiltonian_grid(params, xs)
    hgrid = GridFunction(h=xs[1] - xs[0] if len(xs) > 1 else 1.0, values=hvals, x0=0.0)
    io.write_grid_csv(os.path.join(outdir, "H.csv"), hgrid)
    pair = weyl_pair(params, validate=False)
    _write_z_rows(os.path.join(outdir, "phi.csv"), zs, [pair.phi(z) for z in zs])
    _write_z_rows(os.path.join(outdir, "phi_hat.csv"), zs, [pair.phi_hat(z) for z in zs])
    wrows = [(x, z, fundamental_direct(params, x, z)) for z in zs for x in xs]
    _write_xz_rows(os.path.join(outdir, "w.csv"), wrows, (2 * params.p, 2 * params.p))
    _manifest(outdir, "direct", {
        "params": os.path.basename(args.params), "xmax": args.xmax,
        "nx": args.nx, "z": args.z,
    }, ["H.csv", "phi.csv", "phi_hat.csv", "w.csv"])
    return 0


def _cmd_inverse(args):
    real = io.load_realization(args.realization)
    zs = _parse_zgrid(args.z)
    report = validate_realization(real, [z for z in zs if z.imag > 0] or [1j])
    if not report["passed"]:
        raise ValidationError("realization failed validation", report)
    params = params_from_realization(real)
    outdir = _outdir(args)
    io.save_params(os.path.join(outdir, "params.json"), params)
    xs = np.linspace(0.0, args.xmax, args.nx)
    hvals = hamiltonian_grid(params, xs)
    hgrid = GridFunction(h=xs[1] - xs[0] if len(xs) > 1 else 1.0, values=hvals, x0=0.0)
    io.write_grid_csv(os.path.join(outdir, "H.csv"), hgrid)
    pair = weyl_pair(params, validate=False)
    _write_z_rows(os.path.join(outdir, "phi.csv"), zs, [pair.phi(z) for z in zs])
    _manifest(outdir, "inverse", {
        "realization": os.path.basename(args.realization), "xmax": args.xmax,
        "nx": args.nx, "z": args.z,
    }, ["params.json", "H.csv", "phi.csv"])
    return 0


def _cmd_recover(args):
    zetas, values = io.read_weyl_samples_csv(args.samples)
    sampler = WeylSampler.from_table(zetas, values, eta=args.eta)
    d = _parse_diag(args.d) if args.d else None
    if args.mode == "canonical" and d is None:
        raise StructuralError("canonical mode requires --d")
    outdir = _outdir(args)
    s_grid, kernel, report = amplitude_from_weyl(
        sampler, eta=args.eta, a=args.a, h=args.step, xmax=args.xmax,
        mode=args.mode, d=d,
    )
    io.write_grid_csv(os.path.join(outdir, "s.csv"), s_grid)
    io.write_kernel_csv(os.path.join(outdir, "k.csv"), kernel)
    outputs = ["s.csv", "k.csv"]
    if args.mode == "dirac":
        v = recover_potential(kernel, mode="endpoint")
        v_alt = recover_potential(kernel, mode="kernel-edge")
        io.write_grid_csv(os.path.join(outdir, "v.csv"), v)
        io.write_grid_csv(os.path.join(outdir, "v_alt.csv"), v_alt)
        outputs += ["v.csv", "v_alt.csv"]
    else:
        beta, ham = canonical_from_kernel(kernel, d=d)
        io.write_grid_csv(os.path.join(outdir, "beta.csv"), beta)
        io.write_grid_csv(os.path.join(outdir, "H.csv"), ham)
        outputs += ["beta.csv", "H.csv"]
    _manifest(outdir, "recover", {
        "samples": os.path.basename(args.samples), "eta": args.eta, "a": args.a,
        "step": args.step, "xmax": args.xmax, "mode": args.mode,
        "d": None if d is None else [float(v) for v in d],
        "tail_estimate": report["tail_estimate"],
    }, outputs)
    return 0


def _cmd_fundamental(args):
    if str(args.kernel).endswith(".json"):
        kernel = io.load_kernel_json(args.kernel)
    else:
        kernel = io.read_kernel_csv(args.kernel)
    d = _parse_diag(args.d)
    zs = _parse_zgrid(args.z)
    l = args.l if args.l is not None else kernel.l / float(np.abs(d).max())
    op = build_structured_operator(kernel, d=d, l=l)
    fac = factorize_triangular(op)
    outdir = _outdir(args)
    vals = [fundamental_from_kernel(kernel, d, l, z, op=op, factor=fac) for z in zs]
    _write_z_rows(os.path.join(outdir, "w.csv"), zs, vals)
    _manifest(outdir, "fundamental", {
        "kernel": os.path.basename(args.kernel), "d": [float(v) for v in d],
        "l": l, "z": args.z,
    }, ["w.csv"])
    return 0


def _cmd_interpolate(args):
    values = io.read_lattice_samples(args.samples)
    n = min(args.n, values.shape[0] - 1)
    z = _parse_complex(args.z)
    value, partials = interpolate_series(
        values, z, n_terms=n, epsilon=args.epsilon, mode=args.mode,
        z0=_parse_complex(args.z0), truncation=args.truncation,
        return_partials=True,
    )
    outdir = _outdir(args)
    _write_z_rows(os.path.join(outdir, "value.csv"), [z], [np.atleast_2d(value)])
    final = partials[-1]
    with open(os.path.join(outdir, "convergence.csv"), "w", newline="\n") as fh:
        fh.write("N,residual\n")
        for i, part in enumerate(partials):
            fh.write(f"{i},{io.fmt(np.linalg.norm(np.atleast_2d(part - final)))}\n")
    _manifest(outdir, "interpolate", {
        "samples": os.path.basename(args.samples), "z": args.z, "z0": args.z0,
        "epsilon": args.epsilon, "n": n, "mode": args.mode,
        "truncation": args.truncation, "effective_n": len(partials) - 1,
    }, ["value.csv", "convergence.csv"])
    return 0


# ---------------------------------------------------------------------------
# invariant suite


def _fixture(name):
    return resources.files("weylkit.fixtures").joinpath(name)


def _run_checks():
    """Fast invariant rows over the bundled fixtures; yields (name, ok, detail)."""
    from .grids import DifferenceKernel

    tol = defaults.IDENTITY_TOL
    with resources.as_file(_fixture("scalar_params.json")) as path:
        params = io.load_params(path)
    with resources.as_file(_fixture("free_params.json")) as path:
        free = io.load_params(path)
    with resources.as_file(_fixture("realization.json")) as path:
        real = io.load_realization(path)

    rep = validate_params(params)
    yield "parameter identity", rep["passed"], f"residual {rep['identity_residual']:.2e}"

    st = evolve_state(params, 1.0)
    res = state_identity_residual(params, st)
    yield "state identity at x=1", res < tol, f"residual {res:.2e}"

    J = np.zeros((2, 2), dtype=complex)
    J[0, 1] = J[1, 0] = 1.0
    z = 0.7 + 0.9j
    wplus = transfer_matrix(params, 1.0, np.conj(z)).conj().T
    jres = np.linalg.norm(wplus @ J @ transfer_matrix(params, 1.0, z) - J)
    yield "transfer J-unitarity", jres < 1e-8, f"residual {jres:.2e}"

    hvals = hamiltonian_grid(params, np.linspace(0.0, 2.0, 9))
    eigs = np.concatenate([np.linalg.eigvalsh(hv) for hv in hvals])
    ranks = [int(np.sum(np.linalg.svd(hv, compute_uv=False) > defaults.RANK_TOL))
             for hv in hvals]
    yield "H PSD and rank <= p", bool(eigs.min() > -defaults.PSD_TOL and max(ranks) <= params.p), (
        f"eigmin {eigs.min():.2e}, max rank {max(ranks)}"
    )

    pair = weyl_pair(params, validate=False)
    dphi = max(np.linalg.norm(pair.phi(zz) - pair.phi_hat(zz)) for zz in (1j, 2j, 1 + 1j))
    yield "Weyl pair coincides (D<0)", dphi < tol, f"max diff {dphi:.2e}"

    fpair = weyl_pair(free, validate=False)
    yield "free system phi = i", bool(abs(fpair.phi(1.5j)[0, 0] - 1j) < 1e-12), ""

    rrep = validate_realization(real, [1j, 2j, 1 + 1j])
    yield "realization identity + Herglotz", rrep["passed"], (
        f"residual {rrep['identity_residual']:.2e}"
    )

    back = realization_from_params(params_from_realization(real))
    rt = max(
        np.linalg.norm(back.gamma - real.gamma),
        np.linalg.norm(back.psi1_0 - real.psi1_0),
        np.linalg.norm(back.psi2 - real.psi2),
    )
    yield "realization round trip", rt < 1e-12, f"max diff {rt:.2e}"

    with resources.as_file(_fixture("kernel.csv")) as path:
        kern = io.read_kernel_csv(path)
    op = build_structured_operator(kern)
    fac = factorize_triangular(op)
    eye = np.eye(op.s.shape[0])
    fres = np.linalg.norm(fac.w @ op.s @ fac.w.conj().T - eye, 2)
    yield "factorization residual", fres < defaults.FACTOR_RESIDUAL_TOL, f"{fres:.2e}"
    ires = np.linalg.norm(fac.w @ fac.winv - eye, 2)
    yield "factor inverse pair", ires < 1e-10, f"{ires:.2e}"

    kz = DifferenceKernel(p=1, h=1.0 / 64, samples=np.zeros((64, 1, 1)))
    vz = recover_potential(kz)
    yield "free kernel recovers v = 0", bool(np.abs(vz.values).max() == 0.0), ""

    tab = InterpCoeffs.build(30)
    import math as _math
    worst = 0.0
    for nn in range(31):
        for qq in range(nn + 1):
            sgn, lmag = tab.a(nn, qq)
            exact = _math.comb(nn + qq, qq) * _math.comb(nn, qq)
            worst = max(worst, abs(sgn * np.exp(lmag) - (-1) ** qq * exact) / exact)
    yield "coefficient recurrence vs factorials", worst < defaults.COEFF_TOL, f"{worst:.2e}"

    lam = 2 + 3j
    c25 = coeff_c(25, lam)
    num = np.prod([q - 0.5 + 1j * lam for q in range(1, 26)])
    den = np.prod([q + 0.5 - 1j * lam for q in range(0, 26)])
    crel = abs(c25 - 51 * num / den) / abs(51 * num / den)
    yield "weight recurrence vs product", crel < defaults.COEFF_TOL, f"{crel:.2e}"

    hrep = herglotz_check(lambda zz: 1j * np.eye(1), [1j, 1 + 1j, -2 + 0.5j])
    hrep2 = herglotz_check(lambda zz: -1j * np.eye(1), [1j])
    yield "Herglotz check sign discrimination", bool(hrep["passed"] and not hrep2["passed"]), ""

    sfree = GridFunction(h=1.0 / 32, values=np.tile(0.5 * np.eye(1)[None], (int(40 * 32) + 1, 1, 1)))
    vals = weyl_from_amplitude(sfree, np.array([1j, 2j]), mode="dirac")
    aerr = float(np.abs(vals - 1j * np.eye(1)).max())
    yield "free amplitude transform", aerr < 1e-6, f"err {aerr:.2e}"


def _cmd_check(args):
    rows = list(_run_checks())
    width = max(len(name) for name, _, _ in rows) + 2
    failed = 0
    lines = []
    for name, ok, detail in rows:
        status = "pass" if ok else "FAIL"
        failed += 0 if ok else 1
        line = f"{name:<{width}} {status}   {detail}"
        lines.append((name, status, detail))
        print(line)
    print(f"{len(rows) - failed}/{len(rows)} invariants pass")
    if args.out:
        outdir = _outdir(args)
        with open(os.path.join(outdir, "check.csv"), "w", newline="\n") as fh:
            fh.write("invariant,status,detail\n")
            for name, status, detail in lines:
                fh.write(f"{name},{status},{detail}\n")
        _manifest(outdir, "check", {}, ["check.csv"])
    return 0 if failed == 0 else 1


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(
        prog="weylkit",
        description="Direct and inverse spectral problems via Weyl functions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("direct", help="explicit system: H, fundamental solution, Weyl pair")
    d.add_argument("--params", required=True, help="GbdtParams JSON file")
    d.add_argument("--xmax", type=float, default=defaults.XMAX)
    d.add_argument("--nx", type=int, default=41)
    d.add_argument("--z", default="0+1j", help="complex point or grid re0:re1:n x im0:im1:m")
    d.add_argument("--out", default=None)
    d.set_defaults(func=_cmd_direct)

    i = sub.add_parser("inverse", help="realization -> parameter matrices and H")
    i.add_argument("--realization", required=True)
    i.add_argument("--xmax", type=float, default=defaults.XMAX)
    i.add_argument("--nx", type=int, default=41)
    i.add_argument("--z", default="0+1j")
    i.add_argument("--out", default=None)
    i.set_defaults(func=_cmd_inverse)

    r = sub.add_parser("recover", help="tabulated Weyl samples -> amplitude, accelerant, v or H")
    r.add_argument("--samples", required=True, help="CSV of zeta, Re/Im entries at fixed eta")
    r.add_argument("--eta", type=float, default=defaults.ETA)
    r.add_argument("--a", type=float, default=defaults.FOURIER_CUTOFF)
    r.add_argument("--step", type=float, default=defaults.GRID_STEP)
    r.add_argument("--xmax", type=float, default=defaults.XMAX)
    r.add_argument("--mode", choices=["dirac", "canonical"], default="dirac")
    r.add_argument("--d", default=None, help="comma-separated negative diagonal")
    r.add_argument("--out", default=None)
    r.set_defaults(func=_cmd_recover)

    f = sub.add_parser("fundamental", help="kernel -> fundamental solution at z")
    f.add_argument("--kernel", required=True)
    f.add_argument("--d", required=True)
    f.add_argument("--l", type=float, default=None)
    f.add_argument("--z", default="0+1j")
    f.add_argument("--out", default=None)
    f.set_defaults(func=_cmd_fundamental)

    it = sub.add_parser("interpolate", help="lattice samples -> interpolated value")
    it.add_argument("--samples", required=True, help="CSV of q, Re/Im entries")
    it.add_argument("--z", required=True)
    it.add_argument("--z0", default="0")
    it.add_argument("--epsilon", type=float, default=defaults.EPSILON)
    it.add_argument("--n", type=int, default=defaults.SERIES_ORDER)
    it.add_argument("--mode", choices=["general", "weyl-dirac", "shifted"],
                    default="weyl-dirac")
    it.add_argument("--truncation", choices=["fixed", "auto"], default="fixed")
    it.add_argument("--out", default=None)
    it.set_defaults(func=_cmd_interpolate)

    c = sub.add_parser("check", help="run the invariant suite on bundled fixtures")
    c.add_argument("--out", default=None)
    c.set_defaults(func=_cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, PositivityError, DomainError, SingularityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (StructuralError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WeylkitError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return 1


# alias matching the documented operation name
dispatch = main


if __name__ == "__main__":
    sys.exit(main())
