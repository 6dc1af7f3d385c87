"""JSON and CSV output with deterministic formatting.

Floats are written with 17 significant digits and keys keep insertion order,
so identical inputs give byte-identical files. Writes go to a temporary file
that is renamed into place.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import tempfile
from functools import singledispatch
from pathlib import Path

import numpy as np

from .cayley import ModerationReport
from .classify import CrossCheck, Verdict
from .density import ValidationReport
from .paf import AngleDecision, IndexEstimate, ReversalReport, SectionReport, ShiftReport, SweepReport
from .quadrature import ConvergenceProbe, LadderStage
from .simul import SimulationReport
from .sobolev import FunctionalResult, ImplicationReport


@singledispatch
def to_jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    return repr(obj)


@to_jsonable.register
def _(p: ConvergenceProbe):
    return {
        "verdict": p.verdict,
        "value": p.value,
        "error": p.error,
        "model": p.model,
        "rate": p.rate,
        "quality": p.quality,
        "monotone": p.monotone,
        "note": p.note,
        "stages": [to_jsonable(s) for s in p.stages],
    }


@to_jsonable.register
def _(s: LadderStage):
    return {"variable": s.variable, "cutoffs": list(s.cutoffs), "values": list(s.values)}


@to_jsonable.register
def _(r: FunctionalResult):
    return {
        "functional": r.functional,
        "verdict": r.verdict,
        "value": r.value,
        "kernel": r.kernel,
        "spec": r.spec,
        "extra": to_jsonable(r.extra),
        "probe": to_jsonable(r.probe),
    }


@to_jsonable.register
def _(m: ModerationReport):
    return {
        "order": m.order,
        "verdict": m.verdict,
        "m_max": m.m_max,
        "monotone": m.monotone,
        "note": m.note,
        "probes": {str(k): to_jsonable(v) for k, v in m.probes.items()},
    }


@to_jsonable.register
def _(v: ValidationReport):
    d = {f.name: to_jsonable(getattr(v, f.name)) for f in dataclasses.fields(v)}
    d["ok"] = v.ok
    return d


@to_jsonable.register
def _(v: Verdict):
    return {
        "outcome": v.outcome,
        "m": v.m,
        "reason": v.reason,
        "spec": v.spec,
        "poles": [list(p) for p in v.poles],
        "zeros": list(v.zeros),
        "decisive": to_jsonable(v.decisive),
        "moderation": to_jsonable(v.moderation),
        "evidence": to_jsonable(v.evidence),
    }


@to_jsonable.register
def _(s: SectionReport):
    return {"K": s.K, "N": s.N, "label": s.label, "sigma1": s.sigma1, "hs_sum": s.hs,
            "ill_conditioned": s.ill_conditioned, "sigma": to_jsonable(s.sigma)}


@to_jsonable.register
def _(s: SweepReport):
    return {"N": s.N, "K": s.Ks, "sigma1": s.sigma1, "hs_sum": s.hs, "hs_cauchy": s.hs_cauchy,
            "log_rate": s.log_rate, "log_quality": s.log_quality, "trend": s.trend,
            "monotone": s.monotone, "sections": [to_jsonable(x) for x in s.sections]}


@to_jsonable.register
def _(e: IndexEstimate):
    return {"index": e.index, "K": e.Ks, "pole_shift": e.pole_shift, "monotone": e.monotone,
            "notes": e.notes, "decisions": [to_jsonable(d) for d in e.decisions]}


@to_jsonable.register
def _(d: AngleDecision):
    return {"k": d.k, "decision": d.decision, "sigma1": d.sigma1, "gap_slope": d.gap_slope,
            "gap_quality": d.gap_quality}


@to_jsonable.register
def _(s: ShiftReport):
    return {"angles": s.angles, "ok": s.ok, "before": to_jsonable(s.before), "after": to_jsonable(s.after)}


@to_jsonable.register
def _(r: ReversalReport):
    return {"ok": r.ok, "max_difference": r.max_difference, "forward": to_jsonable(r.forward),
            "reversed": to_jsonable(r.reversed)}


@to_jsonable.register
def _(r: SimulationReport):
    return {"p": r.p, "paths": r.paths, "seed": r.seed, "sigma_hat": to_jsonable(r.sigma_hat),
            "sigma_gram": to_jsonable(r.sigma_gram), "deviations": to_jsonable(r.deviations),
            "null_q95": to_jsonable(r.null_q95), "below_null": r.below_null,
            "clipped_mass": r.clipped_mass, "notes": r.notes}


@to_jsonable.register
def _(c: CrossCheck):
    return {"outcome": c.outcome, "consistent": c.consistent, "note": c.note,
            "sweep": to_jsonable(c.sweep)}


@to_jsonable.register
def _(r: ImplicationReport):
    return {"ok": r.ok, "line_sobolev": r.line_sobolev, "doubling": r.doubling,
            "derivative": r.derivative, "violations": r.violations}


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(to_jsonable(obj), indent, 0) + "\n"


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj) -> Path:
    return write_atomic(path, dumps(obj))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(x, ".17g") if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def stage_csv(stage: LadderStage) -> str:
    """``cutoff,value`` rows of one ladder; on a ``log-lambda`` ladder the cutoff is ``ln Lambda``."""
    return csv_text(["cutoff", "value"], [(float(c), float(v)) for c, v in zip(stage.cutoffs, stage.values)])


def sweep_csv(sweep: SweepReport) -> str:
    return csv_text(["K", "sigma1", "hs_sum"], [(s.K, s.sigma1, s.hs) for s in sweep.sections])


def spectrum_csv(section: SectionReport) -> str:
    return csv_text(["i", "sigma"], [(i + 1, float(x)) for i, x in enumerate(section.sigma)])
