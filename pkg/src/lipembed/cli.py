"""Command line front end: ``lipembed <command> ...``.

Exit codes: 0 success, 1 unreadable input, 2 precondition failure,
3 search failure, 4 germs not equivalent.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .errors import LipembedError, PreconditionError
from .extension import extend_embedding, extend_embedding_local
from .geometry import PointCloud, SampledMap
from .germs import ambient_curve_equivalence, sphere_section
from .projection import germ_whitney_reduce, whitney_reduce
from .serialize import (
    FormatError,
    cloud_from_json,
    cloud_to_json,
    germ_from_json,
    germ_to_json,
    pairing_from_json,
    read_json,
    tame_from_json,
    tame_to_json,
    write_json,
)
from .tame import evaluate, invert, isotopy_eval
from .verify import GridSpec, certify_extension, hausdorff, lne_ratio

log = logging.getLogger("lipembed")
DEFAULT_TOL = 1e-8


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    seed: int = 0
    tol: float = DEFAULT_TOL
    out: Optional[str] = None
    emit_plot_data: Optional[str] = None
    options: dict = field(default_factory=dict)

    def header(self) -> dict:
        return {"command": self.command, "seed": self.seed, "tol": self.tol,
                "version": __version__, "inputs": self.inputs, "options": self.options,
                "threads": os.environ.get("LIPEMBED_THREADS")}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help="interpolation / round-trip tolerance (default 1e-8)")
    common.add_argument("--out", help="output JSON path (default: stdout)")
    common.add_argument("--emit-plot-data", metavar="CSV", help="write a plot series as CSV")

    p = _Parser(prog="lipembed", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("embed", parents=[common], help="reduce a point cloud by generic projections")
    e.add_argument("--cloud", required=True)
    e.add_argument("--target-dim", type=int)
    e.add_argument("--local", action="store_true", help="germ reduction at the origin")
    e.add_argument("--trials", type=int, default=64)

    x = sub.add_parser("extend", parents=[common], help="extend a sampled embedding to a tame map")
    x.add_argument("--source", required=True)
    x.add_argument("--target", required=True)
    x.add_argument("--pairing")
    x.add_argument("--mode", choices=("sa", "plain"), default="sa")
    x.add_argument("--local", action="store_true")
    x.add_argument("--k", type=int, help="intrinsic dimension (default: from the source file)")

    g = sub.add_parser("germ-equiv", parents=[common], help="ambient equivalence of plane curve germs")
    g.add_argument("--x", required=True)
    g.add_argument("--y", required=True)

    a = sub.add_parser("apply", parents=[common], help="evaluate a stored map on points")
    a.add_argument("--map", required=True)
    a.add_argument("--points", required=True)
    a.add_argument("--inverse", action="store_true")
    a.add_argument("--t", type=float, help="isotopy parameter in [0, 1]")

    v = sub.add_parser("verify", parents=[common], help="run a verification oracle")
    v.add_argument("--what", choices=("lne", "hausdorff", "extension"), required=True)
    v.add_argument("--cloud")
    v.add_argument("--rho", type=float)
    v.add_argument("--a")
    v.add_argument("--b")
    v.add_argument("--map")
    v.add_argument("--source")
    v.add_argument("--target")
    v.add_argument("--pairing")
    v.add_argument("--grid", type=int, default=20, help="grid points per axis in [-10, 10]")
    return p


def _load_map(cfg: RunConfig, source_key="source", target_key="target") -> SampledMap:
    src = cloud_from_json(read_json(cfg.inputs[source_key]), source_key)
    dst = cloud_from_json(read_json(cfg.inputs[target_key]), target_key)
    pairing = None
    if cfg.inputs.get("pairing"):
        pairing = pairing_from_json(read_json(cfg.inputs["pairing"]))
    return SampledMap(src, dst, pairing)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _embed(cfg: RunConfig) -> dict:
    cloud = cloud_from_json(read_json(cfg.inputs["cloud"]))
    o = cfg.options
    if o["local"]:
        res = germ_whitney_reduce(cloud, True, o["target_dim"], None, cfg.seed, o["trials"])
    else:
        target = o["target_dim"] if o["target_dim"] is not None else 2 * cloud.intrinsic_dim + 1
        res = whitney_reduce(cloud, target, cfg.seed, o["trials"])
    if cfg.emit_plot_data:
        _write_csv(cfg.emit_plot_data, ["step", "epsilon", "resulting_dim"],
                   [(i, s.epsilon, s.resulting_dim) for i, s in enumerate(res.steps)])
    return {"result": res.to_dict()}


def _extend(cfg: RunConfig) -> dict:
    f = _load_map(cfg)
    o = cfg.options
    k = o["k"] if o["k"] is not None else f.source.intrinsic_dim
    if o["local"]:
        res = extend_embedding_local(f, k, seed=cfg.seed, tol=cfg.tol)
    else:
        res = extend_embedding(f, k, mode=o["mode"], seed=cfg.seed, tol=cfg.tol)
    if cfg.emit_plot_data:
        X = f.source.points if res.kept_indices is None else f.source.points[res.kept_indices]
        rows = []
        for t in np.linspace(0.0, 1.0, 11):
            moved = isotopy_eval(res.F, float(t), X)
            rows.append((float(t), float(np.max(np.linalg.norm(moved - X, axis=1)))))
        _write_csv(cfg.emit_plot_data, ["t", "sup_motion"], rows)
    return {"summary": res.summary(), "map": tame_to_json(res.F)}


def _germ_equiv(cfg: RunConfig) -> dict:
    X = germ_from_json(read_json(cfg.inputs["x"]), "x")
    Y = germ_from_json(read_json(cfg.inputs["y"]), "y")
    F = ambient_curve_equivalence(X, Y)
    if cfg.emit_plot_data:
        rows = []
        for j in range(4, 13):
            r = 2.0 ** -j
            rows.append((r, hausdorff(F(sphere_section(X, r)), sphere_section(Y, r)) / r))
        _write_csv(cfg.emit_plot_data, ["r", "hausdorff_over_r"], rows)
    out = F.to_dict()
    out.update({"x": germ_to_json(X), "y": germ_to_json(Y)})
    return {"map": out}


def _rebuild(obj):
    if obj.get("type") == "piecewise-germ":
        return ambient_curve_equivalence(germ_from_json(obj["x"], "map.x"),
                                         germ_from_json(obj["y"], "map.y"))
    return tame_from_json(obj)


def _apply(cfg: RunConfig) -> dict:
    obj = read_json(cfg.inputs["map"])
    obj = obj.get("map", obj)
    F = _rebuild(obj)
    cloud = cloud_from_json(read_json(cfg.inputs["points"]), "points")
    pts = cloud.points
    t = cfg.options["t"]
    if hasattr(F, "factors"):
        if t is not None:
            if cfg.options["inverse"]:
                raise PreconditionError("--t and --inverse cannot be combined")
            image = isotopy_eval(F, t, pts)
        else:
            image = invert(F, pts) if cfg.options["inverse"] else evaluate(F, pts)
    else:
        if t is not None:
            raise PreconditionError("germ maps carry no isotopy parameter")
        image = F.inverse(pts) if cfg.options["inverse"] else F(pts)
    return {"points": cloud_to_json(PointCloud(image, cloud.intrinsic_dim, cloud.label))}


def _verify(cfg: RunConfig) -> dict:
    what = cfg.options["what"]
    need = {"lne": ("cloud",), "hausdorff": ("a", "b"),
            "extension": ("map", "source", "target")}[what]
    missing = [k for k in need if not cfg.inputs.get(k)]
    if missing:
        raise FormatError(f"verify --what {what} needs --{' --'.join(missing)}")
    if what == "lne":
        cloud = cloud_from_json(read_json(cfg.inputs["cloud"]))
        return {"lne_ratio": lne_ratio(cloud, cfg.options["rho"])}
    if what == "hausdorff":
        a = cloud_from_json(read_json(cfg.inputs["a"]), "a")
        b = cloud_from_json(read_json(cfg.inputs["b"]), "b")
        return {"hausdorff": hausdorff(a, b)}
    obj = read_json(cfg.inputs["map"])
    F = tame_from_json(obj.get("map", obj))
    f = _load_map(cfg)
    return {"report": certify_extension(F, f, GridSpec(cfg.options["grid"]), cfg.tol, cfg.tol)}


COMMANDS = {"embed": _embed, "extend": _extend, "germ-equiv": _germ_equiv,
            "apply": _apply, "verify": _verify}
INPUT_KEYS = ("cloud", "source", "target", "pairing", "x", "y", "map", "points", "a", "b")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d = vars(ns).copy()
    inputs = {k: d.pop(k) for k in INPUT_KEYS if k in d and d[k] is not None}
    for k in INPUT_KEYS:
        d.pop(k, None)
    return RunConfig(command=d.pop("command"), inputs=inputs, seed=d.pop("seed"),
                     tol=d.pop("tol"), out=d.pop("out"), emit_plot_data=d.pop("emit_plot_data"),
                     options=d)


def run(cfg: RunConfig) -> int:
    try:
        body = COMMANDS[cfg.command](cfg)
    except OSError as exc:
        print(f"lipembed: error: {exc}", file=sys.stderr)
        return 1
    except LipembedError as exc:
        stage = getattr(exc, "stage", None)
        tag = f" [{stage}]" if stage else ""
        print(f"lipembed: {type(exc).__name__}{tag}: {exc}", file=sys.stderr)
        return exc.exit_code
    doc = cfg.header()
    doc.update(body)
    text = write_json(doc, cfg.out)
    if cfg.out is None:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    ns = build_parser().parse_args(argv)
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
