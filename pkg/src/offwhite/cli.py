"""Command-line front end.

Exit codes: 0 success, 2 an honest Inconclusive (or Undecided) result,
1 errors, including usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import report as rep
from .cayley import moderation_order, pushforward_density
from .classify import classify, verdict_cross_check
from .density import DensitySpec, load_spec, validate
from .errors import OffWhiteError, SpecError, Undecided
from .paf import DEFAULT_KS, hs_sweep, index_estimate, shift_law_check
from .quadrature import INCONCLUSIVE, LadderParams
from .simul import SimConfig, run_simulation
from .sobolev import (FunctionalResult, circle_double_arc_probe, circle_double_probe, circle_fourier_probe,
                      derivative_functional, doubling_functional, line_sobolev_functional)

SUBCOMMANDS = ("validate", "functional", "classify", "paf", "shift-check", "simulate", "report-bundle")
WHICH = ("circle-double", "circle-fourier", "line-sobolev", "doubling", "derivative")
CONFIG_KEYS = {"lambda0", "ladder_steps", "tau_rel", "fit_quality", "m_max"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    subcommand: str
    spec: Path | None
    out: Path | None
    params: LadderParams
    m_max: int = 6
    seed: int = 0
    options: dict = field(default_factory=dict)


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="offwhite", description="Off-white noise classification and past/future geometry.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, spec_required=True):
        sp.add_argument("--spec", type=Path, required=spec_required, help="density spec JSON")
        sp.add_argument("--out", type=Path, help="output file (directory for report-bundle)")
        sp.add_argument("--config", type=Path, help="JSON with ladder overrides")
        sp.add_argument("--lambda0", type=float)
        sp.add_argument("--ladder-steps", type=int)
        sp.add_argument("--tau-rel", type=float)
        sp.add_argument("--fit-quality", type=float)
        sp.add_argument("--m-max", type=int)
        return sp

    common(sub.add_parser("validate", help="check symmetry, positivity and splice"))
    f = common(sub.add_parser("functional", help="probe one functional"))
    f.add_argument("--which", choices=WHICH, required=True)
    f.add_argument("--csv", type=Path, help="ladder CSV (cutoff,value)")
    c = common(sub.add_parser("classify", help="off-white verdict"))
    c.add_argument("--zeros", type=str, help="declared zero angles, comma-separated")
    c.add_argument("--cross-check", action="store_true", help="add the finite-section HS check")
    a = common(sub.add_parser("paf", help="finite-section sweep and index"))
    a.add_argument("--K", type=str, default=",".join(map(str, DEFAULT_KS)))
    a.add_argument("--N", type=int, default=-1, help="pair (P0, F_{N+1}) of the line measure")
    a.add_argument("--z0", type=float, help="multiply by |z - e^{i z0}|^2 first")
    a.add_argument("--csv", type=Path, help="sweep CSV (K,sigma1,hs_sum)")
    s = common(sub.add_parser("shift-check", help="index shift under |z - z0|^2"))
    s.add_argument("--z0", type=str, required=True, help="angle(s), comma-separated")
    s.add_argument("--K", type=str, default=",".join(map(str, DEFAULT_KS)))
    m = common(sub.add_parser("simulate", help="empirical vs Gram canonical correlations"))
    m.add_argument("--paths", type=int, default=2000)
    m.add_argument("--block", type=int, default=16)
    m.add_argument("--seed", type=int, default=42)
    m.add_argument("--null-reps", type=int, default=200)
    b = common(sub.add_parser("report-bundle", help="all reports and plot data into a directory"))
    b.add_argument("--zeros", type=str)
    b.add_argument("--K", type=str, default=",".join(map(str, DEFAULT_KS)))
    return p


def _config(args) -> RunConfig:
    overrides = {}
    if args.config is not None:
        try:
            d = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"config: {exc}") from exc
        if not isinstance(d, dict):
            raise SpecError("config must be a JSON object")
        unknown = set(d) - CONFIG_KEYS
        if unknown:
            raise SpecError(f"unknown config keys: {sorted(unknown)}")
        overrides.update(d)
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            overrides[key] = v
    m_max = int(overrides.pop("m_max", 6))
    if not 0 <= m_max <= 32:
        raise SpecError("m_max must lie in [0, 32]")
    kw = {}
    if "lambda0" in overrides:
        kw["lambda0"] = float(overrides["lambda0"])
    if "ladder_steps" in overrides:
        kw["steps"] = int(overrides["ladder_steps"])
    if "tau_rel" in overrides:
        kw["tau_rel"] = float(overrides["tau_rel"])
    if "fit_quality" in overrides:
        kw["fit_quality"] = float(overrides["fit_quality"])
    params = LadderParams(**kw)
    return RunConfig(args.subcommand, args.spec, args.out, params, m_max, getattr(args, "seed", 0) or 0)


def _emit(obj, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(rep.dumps(obj))
    else:
        rep.write_json(out, obj)


def emit_plot_data(obj, out_dir, stem: str) -> list:
    """Write plot-ready CSVs for a report object; returns the paths written."""
    out_dir = Path(out_dir)
    paths = []
    if isinstance(obj, FunctionalResult):
        for j, st in enumerate(obj.probe.stages):
            suffix = "" if j == 0 else f"_stage{j + 1}"
            paths.append(rep.write_atomic(out_dir / f"{stem}_ladder{suffix}.csv", rep.stage_csv(st)))
    elif isinstance(obj, rep.SweepReport):
        paths.append(rep.write_atomic(out_dir / f"{stem}_sweep.csv", rep.sweep_csv(obj)))
        paths.append(rep.write_atomic(out_dir / f"{stem}_spectrum.csv", rep.spectrum_csv(obj.sections[-1])))
    elif isinstance(obj, rep.SectionReport):
        paths.append(rep.write_atomic(out_dir / f"{stem}_spectrum.csv", rep.spectrum_csv(obj)))
    elif isinstance(obj, rep.Verdict):
        if obj.moderation is not None:
            for m, pr in obj.moderation.probes.items():
                for j, st in enumerate(pr.stages):
                    paths.append(rep.write_atomic(out_dir / f"{stem}_moderation_m{m}_stage{j + 1}.csv",
                                                  rep.stage_csv(st)))
        if obj.decisive is not None:
            paths += emit_plot_data(obj.decisive, out_dir, f"{stem}_{obj.decisive.functional}")
    else:
        raise TypeError(f"no plot data for {type(obj).__name__}")
    return paths


def _functional(spec: DensitySpec, which: str, params: LadderParams, m_max: int) -> FunctionalResult:
    if which == "line-sobolev":
        return line_sobolev_functional(spec, params)
    if which == "doubling":
        return doubling_functional(spec, params)
    if which == "derivative":
        return derivative_functional(spec, params)
    if spec.family == "circle_direct":
        phi = spec.impl.phi
    else:
        mod = moderation_order(spec, m_max, params)
        if mod.order is None or mod.order == 0:
            raise SpecError("circle functionals need a moderate density with a pole (m >= 1)")
        dens = pushforward_density(spec, mod.order)
        if which == "circle-double":
            return circle_double_arc_probe(dens.log_w, params, dens.breaks)
        phi = dens.log_w
    probe = circle_double_probe if which == "circle-double" else circle_fourier_probe
    try:
        return probe(phi, params)
    except ValueError as exc:
        raise SpecError(f"{which} needs ln w finite on the whole circle ({exc}); "
                        "use circle-double, which truncates by arcs") from exc


def _line_pair(spec: DensitySpec, params, m_max):
    if spec.family == "circle_direct":
        return pushforward_density(spec, 1)
    mod = moderation_order(spec, m_max, params)
    if mod.order is None:
        raise SpecError(f"density is not moderate up to m = {m_max}: {mod.note}")
    return pushforward_density(spec, mod.order)


def _dispatch(args, cfg: RunConfig) -> int:
    spec = load_spec(cfg.spec)
    params = cfg.params
    if cfg.subcommand == "validate":
        r = validate(spec)
        _emit(r, cfg.out)
        return 0 if r.ok else 1

    if cfg.subcommand == "functional":
        res = _functional(spec, args.which, params, cfg.m_max)
        _emit(res, cfg.out)
        if args.csv is not None:
            emit_plot_data(res, args.csv.parent, args.csv.stem)
        return 2 if res.verdict == INCONCLUSIVE else 0

    if cfg.subcommand == "classify":
        zeros = _floats(args.zeros) if args.zeros else None
        v = classify(spec, zeros, params, cfg.m_max)
        out = {"verdict": v}
        if args.cross_check:
            out["cross_check"] = verdict_cross_check(spec, v)
        _emit(out if args.cross_check else v, cfg.out)
        return 2 if v.outcome == INCONCLUSIVE else 0

    if cfg.subcommand == "paf":
        Ks = _ints(args.K)
        dens = _line_pair(spec, params, cfg.m_max)
        if args.z0 is not None:
            dens = dens.times_zero(args.z0)
        finite, shift = dens.pole_free()
        sweep = hs_sweep(finite, Ks, N=args.N + shift)
        out = {"pair": f"P0 vs F{args.N + 1}", "pole_shift": shift, "sweep": sweep}
        code = 0
        try:
            out["index"] = index_estimate(dens, Ks)
        except Undecided as exc:
            out["index"] = {"undecided_at": exc.k, "note": str(exc)}
            code = 2
        _emit(out, cfg.out)
        if args.csv is not None:
            emit_plot_data(sweep, args.csv.parent, args.csv.stem)
        return code

    if cfg.subcommand == "shift-check":
        dens = _line_pair(spec, params, cfg.m_max)
        try:
            r = shift_law_check(dens, _floats(args.z0), Ks=_ints(args.K))
        except Undecided as exc:
            _emit({"undecided_at": exc.k, "note": str(exc)}, cfg.out)
            return 2
        _emit(r, cfg.out)
        return 0 if r.ok else 1

    if cfg.subcommand == "simulate":
        dens, _ = _line_pair(spec, params, cfg.m_max).pole_free()
        r = run_simulation(SimConfig(dens, args.block, args.paths, args.seed), null_reps=args.null_reps)
        _emit(r, cfg.out)
        return 0

    if cfg.subcommand == "report-bundle":
        if cfg.out is None:
            raise SpecError("report-bundle needs --out DIR")
        d = cfg.out
        zeros = _floats(args.zeros) if args.zeros else None
        rep.write_json(d / "validation.json", validate(spec))
        v = classify(spec, zeros, params, cfg.m_max)
        rep.write_json(d / "verdict.json", v)
        emit_plot_data(v, d, "verdict")
        for which in ("line-sobolev", "doubling", "derivative"):
            try:
                res = _functional(spec, which, params, cfg.m_max)
            except OffWhiteError as exc:
                rep.write_json(d / f"{which}.json", {"error": type(exc).__name__, "message": str(exc)})
                continue
            rep.write_json(d / f"{which}.json", res)
            emit_plot_data(res, d, which)
        cc = verdict_cross_check(spec, v, _ints(args.K))
        rep.write_json(d / "cross_check.json", cc)
        if cc.sweep is not None:
            emit_plot_data(cc.sweep, d, "cross_check")
        return 2 if v.outcome == INCONCLUSIVE else 0
    raise UsageError(f"unknown subcommand {cfg.subcommand}")


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        return _dispatch(args, cfg)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (OffWhiteError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
