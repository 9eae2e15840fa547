"""Command-line entry point: ``nlsecap <command> [flags]``.

Exit codes: 0 success, 1 invalid flags, 2 a numerical check or tolerance
failed, 3 file I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import envelope as env
from .coefficients import QuadratureSpec, ToleranceError, UnsupportedEnvelope, buildTensor
from .information import ChannelParams

log = logging.getLogger("nlsecap")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VALIDATION, EXIT_TOLERANCE, EXIT_IO = 0, 1, 2, 3


class CheckFailed(RuntimeError):
    pass


# ----------------------------------------------------------------------------
# flag parsing helpers
# ----------------------------------------------------------------------------

def _grid(text):
    """start:stop:step (inclusive stop) or a comma list."""
    try:
        if ":" in text:
            a, b, s = (float(v) for v in text.split(":"))
            if s <= 0 or b < a:
                raise ValueError
            n = int(math.floor((b - a) / s + 1e-9)) + 1
            return [round(a + i * s, 12) for i in range(n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:stop:step or a,b,c") from None


def _nonneg(text):
    v = float(text)
    if not math.isfinite(v) or v < 0:
        raise argparse.ArgumentTypeError("must be a finite non-negative number")
    return v


def _M(text):
    v = int(text)
    if not 0 <= v <= 8:
        raise argparse.ArgumentTypeError("M must be in 0..8")
    return v


def _envelope(text):
    try:
        return env.parse_envelope(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _spec(args):
    return QuadratureSpec(legendreOrder=args.legendre, hermiteOrder=args.hermite)


def _params(args, M=None, beta=None):
    return ChannelParams(
        M=args.M if M is None else M,
        betaTilde=args.beta if beta is None else beta,
        gammaTilde=args.gamma_lp,
        snr=10.0 ** (args.snr_db / 10.0),
        noiseBandRatio=getattr(args, "noise_band_ratio", 8.0),
    )


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])
    _emit(path, buf.getvalue())


def _emit(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
    log.info("wrote %s", p)


def _cplx(z):
    z = np.asarray(z)
    return {"re": np.real(z).tolist(), "im": np.imag(z).tolist()}


def _bundle(args, M, beta):
    from .jtensors import JBundle

    return JBundle(beta, M, _spec(args), args.envelope, args.cache_dir)


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def cmdCoeffs(args):
    t = buildTensor(args.kind, args.beta, args.M, _spec(args), args.envelope, args.cache_dir)
    M = t.M
    rows = []
    for s in np.ndindex(*t.values.shape):
        v = t.values[s]
        rows.append([*(i - M for i in s), float(v.real), float(v.imag)])
    _write_csv(args.out, ["s1", "s2", "s3", "s4", "re", "im"], rows)
    return EXIT_OK


def cmdJTensor(args):
    jb = _bundle(args, args.M, args.beta)
    t = {"J": jb.J, "JLambda": jb.JLambda, "JI": jb.JI}[args.which]
    M = args.M
    rows = []
    for s in np.ndindex(*t.values.shape):
        v = t.values[s]
        rows.append([*(i - M for i in s), float(v.real), float(v.imag)])
    _write_csv(args.out, ["s1", "s2", "s3", "s4", "re", "im"], rows)
    log.info("jSigma = %.10g", jb.jSigma)
    return EXIT_OK


def cmdMiCurve(args):
    from .jtensors import jSigmaContracted, jSigmaZeroBeta

    snr = 10.0 ** (args.snr_db / 10.0)
    rows = []
    for b in args.beta_grid:
        if b < 0:
            raise ValueError("betaTilde must be non-negative")
        if b == 0:
            js = jSigmaZeroBeta(args.M, args.envelope)
        else:
            if args.envelope.variant != "sinc":
                raise UnsupportedEnvelope("dispersive curves need the sinc envelope")
            js = jSigmaContracted(b, args.M, _spec(args))
        mi = math.log(snr) + args.gamma_lp**2 * js
        rows.append([float(b), float(js), float(mi), float(mi / math.log(2.0))])
        log.info("beta %g  jSigma %.8f", b, js)
    _write_csv(args.out, ["betaTilde", "jSigma", "miPerSymbolNats", "miPerSymbolBits"], rows)
    return EXIT_OK


def cmdPdf(args):
    from .distribution import condDensity, marginalDensity

    params = _params(args)
    jb = _bundle(args, args.M, args.beta)
    JI = jb.JI
    x = np.linspace(0.0, args.x_max, args.points)
    p0 = np.exp(-x * x) / math.pi
    if args.kind == "marginal":
        if abs(args.q) > args.M:
            raise ValueError("|q| must not exceed M")
        p = marginalDensity(args.q, x, JI, params)
    else:
        if abs(args.q) > args.M or abs(args.j) > args.M or args.q == args.j:
            raise ValueError("need distinct q, j within -M..M")
        p = condDensity(args.q, args.j, x, complex(args.given), JI, params)
    rows = [[float(a), float(b), float(c)] for a, b, c in zip(x, p0, p)]
    _write_csv(args.out, ["x", "p0", "popt"], rows)
    log.info("sup |p0 - popt| = %.6g", float(np.max(np.abs(p - p0))))
    return EXIT_OK


def cmdSample(args):
    from .sampler import SamplerConfig, sampleChain, sampleIndependent, sampleJointSmallM

    params = _params(args)
    cfg = SamplerConfig(chainOrder=args.order, seed=args.seed, maxRejects=args.max_rejects)
    rng = np.random.default_rng(args.seed)
    if args.order == "independent":
        S = sampleIndependent(params, args.n, rng)
    else:
        JI = _bundle(args, args.M, args.beta).JI
        fn = sampleChain if args.order == "chain" else sampleJointSmallM
        S = fn(args.M, JI, params, cfg, rng, nSeq=args.n)
    rows = []
    for i, row in enumerate(S):
        for k, c in zip(range(-args.M, args.M + 1), row):
            rows.append([i, k, float(c.real), float(c.imag)])
    _write_csv(args.out, ["seq", "k", "re", "im"], rows)
    return EXIT_OK


def cmdSimulate(args):
    from .channel_sim import SimGrid, mcCorrelators
    from .condpdf import ChannelKernels

    params = _params(args)
    if args.runs < 1000:
        raise ValueError("--runs must be at least 1000")
    grid = SimGrid.default(args.M, nTime=args.n_time, nSteps=args.n_steps,
                           **({"timeSpan": args.time_span} if args.time_span else {}))
    grid.check(args.M, params)
    srng = np.random.default_rng(np.random.SeedSequence([args.seed, 1]))
    C = (srng.standard_normal(params.n) + 1j * srng.standard_normal(params.n)) / math.sqrt(2.0)
    kernels = ChannelKernels(args.beta, args.M, _spec(args), args.envelope)
    rep = mcCorrelators(C, params, grid, args.runs, args.seed, args.envelope, kernels=kernels)
    z = rep.zscores()
    doc = {
        "schemaVersion": SCHEMA_VERSION,
        "command": "simulate",
        "params": {"M": args.M, "betaTilde": args.beta, "gammaTilde": args.gamma_lp, "snr": params.snr,
                   "noiseBandRatio": params.noiseBandRatio, "runs": args.runs, "seed": args.seed,
                   "envelope": args.envelope.tag},
        "grid": {"nTime": grid.nTime, "timeSpan": grid.timeSpan, "nSteps": grid.nSteps},
        "input": _cplx(C),
    }
    for key in ("mean", "covCC", "covCCbar"):
        doc[key] = {
            "mc": _cplx(getattr(rep, key)),
            "se": _cplx(getattr(rep, key + "SE")),
            "analytic": _cplx(rep.analytic[key]),
            "zMax": np.asarray(z[key]).tolist(),
        }
    _emit(args.out, json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmdValidate(args):
    from . import validation

    results = validation.run(quick=args.quick)
    failed = [r for r in results if not r.ok]
    lines = [f"{'PASS' if r.ok else 'FAIL'}  {r.name}  {r.detail}" for r in results]
    if args.out:
        doc = {"schemaVersion": SCHEMA_VERSION, "command": "validate",
               "results": [{"name": r.name, "ok": r.ok, "detail": r.detail} for r in results]}
        _emit(args.out, json.dumps(doc, indent=1, sort_keys=True) + "\n")
    sys.stderr.write("\n".join(lines) + "\n")
    if failed:
        raise CheckFailed(f"{len(failed)} check(s) failed")
    return EXIT_OK


# ----------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="nlsecap", description=__doc__.splitlines()[0])
    p.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, beta=True, M=1):
        sp.add_argument("--M", type=_M, default=M, help="half-width of the symbol block")
        if beta:
            sp.add_argument("--beta", type=_nonneg, default=0.0, help="dimensionless dispersion betaTilde")
        sp.add_argument("--envelope", type=_envelope, default=env.SINC, help="sinc | rect | gauss[:tau]")
        sp.add_argument("--legendre", type=int, default=48, help="Gauss-Legendre order per z axis")
        sp.add_argument("--hermite", type=int, default=40, help="Gauss-Hermite order")
        sp.add_argument("--cache-dir", default=os.environ.get("NLSECAP_CACHE"),
                        help="tensor cache directory (default $NLSECAP_CACHE; no cache if unset)")
        sp.add_argument("--out", default=None, help="output file; stdout if omitted")

    def channel(sp):
        sp.add_argument("--gamma-lp", type=_nonneg, default=0.1, help="gammaTilde = gamma L P")
        sp.add_argument("--snr-db", type=float, default=30.0, help="P T0 / (Q L) in dB")

    s = sub.add_parser("coeffs", help="dense coupling tensor as CSV")
    common(s)
    s.add_argument("--kind", choices=["a1", "b1", "A2L", "A2P", "b2"], default="a1")
    s.set_defaults(func=cmdCoeffs)

    s = sub.add_parser("jtensor", help="J, J_Lambda or J_I tensor as CSV")
    common(s)
    s.add_argument("--which", choices=["J", "JLambda", "JI"], default="JI")
    s.set_defaults(func=cmdJTensor)

    s = sub.add_parser("mi-curve", help="J_Sigma and mutual information versus betaTilde")
    common(s, beta=False, M=5)
    channel(s)
    s.add_argument("--beta-grid", type=_grid, default=_grid("0,0.5,1,2,5,10"))
    s.set_defaults(func=cmdMiCurve)

    s = sub.add_parser("pdf", help="optimal-input marginal or conditional density on a radial grid")
    s.add_argument("kind", choices=["marginal", "cond"])
    common(s)
    channel(s)
    s.add_argument("--q", type=int, default=0, help="symbol index of the density")
    s.add_argument("--j", type=int, default=1, help="conditioning index (cond)")
    s.add_argument("--given", type=complex, default=1 + 0j, help="conditioning value (cond)")
    s.add_argument("--x-max", type=_nonneg, default=3.0)
    s.add_argument("--points", type=int, default=121)
    s.set_defaults(func=cmdPdf)

    s = sub.add_parser("sample", help="draw symbol sequences from the optimal input density")
    common(s)
    channel(s)
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--order", choices=["independent", "chain", "joint"], default="chain")
    s.add_argument("--max-rejects", type=int, default=200)
    s.set_defaults(func=cmdSample)

    s = sub.add_parser("simulate", help="Monte-Carlo channel correlators versus analytic predictions")
    common(s, M=2)
    channel(s)
    s.add_argument("--runs", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-time", type=int, default=512)
    s.add_argument("--n-steps", type=int, default=200)
    s.add_argument("--time-span", type=float, default=None)
    s.add_argument("--noise-band-ratio", type=_nonneg, default=8.0)
    s.set_defaults(func=cmdSimulate)

    s = sub.add_parser("validate", help="run the invariant suite")
    s.add_argument("--quick", action="store_true", help="cheap invariants only")
    s.add_argument("--out", default=None, help="JSON report")
    s.set_defaults(func=cmdValidate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ToleranceError, CheckFailed) as e:
        log.error("%s", e)
        return EXIT_TOLERANCE
    except OSError as e:
        log.error("%s", e)
        return EXIT_IO
    except ValueError as e:
        log.error("%s", e)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
