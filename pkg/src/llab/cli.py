"""Batch front end: construct, sample, generate, scan, and report.

Every run writes its outputs plus a ``manifest.json`` echoing the full
configuration and the code version, so any result file can be traced to
and reproduced from its manifest (``--config manifest.json``).
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .beurling import BeurlingSystem, rational_primes
from .constructions import (
    build_aligned_offsets,
    build_deletion_sequence,
    build_mk_offsets,
    certificates_json,
)
from .core import (
    LinearMean,
    LogIntegralMean,
    Norm,
    PointSequence,
    TabulatedStepMean,
    scan,
)
from .errors import ConfigInvalid, FileNotFound, LlabError, SchemaMismatch
from .random_models import SamplerKind, SamplerSpec, monte_carlo, sample
from .zeta import (
    TemplateZetaParams,
    critical_line_scan,
    template_logderiv,
    template_psi,
    zeta_continued,
    zeta_euler,
    zeta_series,
)

_COMMANDS = ("construct", "sample", "beurling", "zeta", "scan", "report")


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: dict
    seed: int
    output_dir: str
    format: str = "csv"

    def __post_init__(self):
        if self.command not in _COMMANDS:
            raise ConfigInvalid(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ConfigInvalid(f"unknown format {self.format!r}")
        if not isinstance(self.params, dict):
            raise ConfigInvalid("params must be an object")

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"bad JSON: {exc}") from exc
        d.pop("version", None)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _write_manifest(cfg):
    os.makedirs(cfg.output_dir, exist_ok=True)
    body = json.loads(cfg.to_json())
    body["version"] = __version__
    _write(
        os.path.join(cfg.output_dir, "manifest.json"),
        json.dumps(body, indent=2, sort_keys=True),
    )


def _sequence_csv(seq):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value"])
    for v in seq.values:
        w.writerow([format(v, ".17g")])
    return buf.getvalue()


def _load_sequence(path):
    if not os.path.exists(path):
        raise FileNotFound(path)
    vals = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:1] != ["value"]:
            raise SchemaMismatch(f"{path}: expected a 'value' column")
        for row in reader:
            vals.append(float(row[0]))
    return PointSequence(vals)


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v != ""]
    except ValueError as exc:
        raise ConfigInvalid(f"bad number list {text!r}") from exc


def _model_from(params):
    kind = params.get("model", "linear")
    if kind == "linear":
        return LinearMean(float(params.get("slope", 1.0)), float(params.get("x0", 0.0)))
    if kind == "li":
        return LogIntegralMean()
    if kind == "comb":
        return TabulatedStepMean.comb(
            int(params.get("comb_k", 1)), int(params.get("comb_count", 1000))
        )
    raise ConfigInvalid(f"unknown model {kind!r}")


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------


def _run_construct(cfg):
    p = cfg.params
    kind = p.get("kind")
    alpha = float(p.get("alpha", math.pi / 12.0))
    if kind == "aligned":
        seq, certs = build_aligned_offsets(
            [int(v) for v in _floats(p["k_list"])], alpha
        )
        payload = certificates_json("aligned", {"alpha": alpha, **p}, certs)
    elif kind == "arc":
        seq, certs = build_mk_offsets(
            int(p["m"]), int(p["k"]), [int(v) for v in _floats(p["k_list"])], alpha
        )
        payload = certificates_json("arc", {"alpha": alpha, **p}, certs)
    elif kind == "deletion":
        seq, certs = build_deletion_sequence(
            [int(v) for v in _floats(p["m_list"])], float(p.get("eps", 0.1))
        )
        payload = certificates_json("deletion", dict(p), certs)
    else:
        raise ConfigInvalid("construct needs kind in {aligned, arc, deletion}")
    _write(os.path.join(cfg.output_dir, "sequence.csv"), _sequence_csv(seq))
    _write(os.path.join(cfg.output_dir, "certificates.json"), payload)


def _sampler_spec(cfg):
    p = cfg.params
    kind = SamplerKind(p.get("kind", "quantile"))
    common = dict(J=int(p.get("J", 1000)), seed=int(cfg.seed))
    if kind is SamplerKind.UNIFORM_WINDOW:
        return SamplerSpec(
            kind,
            A=float(p.get("A", 1.0)),
            K=float(p.get("K", 1.0)),
            theta=float(p.get("theta", 0.5)),
            **common,
        )
    model = _model_from(p)
    if kind is SamplerKind.QUANTILE_BLOCK:
        return SamplerSpec(
            kind,
            model=model,
            block_ends=tuple(int(v) for v in _floats(p["block_ends"])),
            block_c=float(p.get("block_c", 2.0)),
            **common,
        )
    return SamplerSpec(kind, model=model, **common)


def _run_sample(cfg):
    p = cfg.params
    spec = _sampler_spec(cfg)
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from exc
    if "trials" in p:
        report = monte_carlo(
            spec,
            int(p["trials"]),
            _floats(p.get("x_grid", "100,1000")),
            _floats(p.get("t_grid", "10,100")),
            Norm(p.get("norm", "PROB_BOUND")),
        )
        _write(os.path.join(cfg.output_dir, "montecarlo.json"), report.to_json())
        _write(os.path.join(cfg.output_dir, "maxima.csv"), report.maxima_csv())
    else:
        seq = sample(spec, int(p.get("trial", 0)), workers=cfg.params.get("_threads", 1))
        _write(os.path.join(cfg.output_dir, "sequence.csv"), _sequence_csv(seq))


def _run_beurling(cfg):
    p = cfg.params
    if "rational_limit" in p:
        primes = rational_primes(int(p["rational_limit"]))
    elif "primes" in p:
        primes = _floats(p["primes"])
    else:
        raise ConfigInvalid("beurling needs primes or rational_limit")
    X = float(p.get("cutoff", 100.0))
    system = BeurlingSystem.generate(
        primes, X, workers=int(cfg.params.get("_threads", 1))
    )
    system.save(os.path.join(cfg.output_dir, "system.npz"))
    if len(system.integers) <= 100000:
        _write(os.path.join(cfg.output_dir, "system.csv"), system.to_csv())
    summary = {
        "primes": len(system.primes),
        "cutoff": system.X,
        "integer_count": len(system.integers),
        "psi_at_cutoff": system.psi(system.X),
    }
    _write(
        os.path.join(cfg.output_dir, "summary.json"), json.dumps(summary, indent=2)
    )


def _run_zeta(cfg):
    p = cfg.params
    op = p.get("op")
    out = {}
    if op in ("series", "euler", "continued"):
        s = complex(float(p.get("sigma", 2.0)), float(p.get("tau", 0.0)))
        if "seq" in p:
            target = _load_sequence(p["seq"])
        elif "system" in p:
            if not os.path.exists(p["system"]):
                raise FileNotFound(p["system"])
            target = BeurlingSystem.load(p["system"])
        else:
            target = PointSequence.integers(int(p.get("n_max", 100000)))
        if op == "series":
            z = zeta_series(target, s, float(p.get("tail_A", 1.0)))
        elif op == "euler":
            z = zeta_euler(target, s, float(p.get("cutoff_P", math.inf)))
        else:
            z = zeta_continued(
                target,
                float(p.get("A", 1.0)),
                s,
                float(p.get("x", 1000.0)),
                theta=float(p.get("theta", 0.0)),
            )
        out = {
            "value_re": z.value.real,
            "value_im": z.value.imag,
            "abs_error_bound": z.abs_error_bound,
            "method": z.method.value,
        }
    elif op == "template_psi":
        params = TemplateZetaParams.default(beta=float(p.get("beta", 0.8)))
        xs = _floats(p.get("x_grid", "10,100,1000"))
        out = {"psi": {format(x, "g"): template_psi(params, x) for x in xs}}
    elif op == "template_logderiv":
        params = TemplateZetaParams.default(beta=float(p.get("beta", 0.8)))
        s = complex(float(p.get("sigma", 2.0)), float(p.get("tau", 0.0)))
        v = template_logderiv(params, s)
        out = {"value_re": v.real, "value_im": v.imag}
    elif op == "critical_line":
        seq = (
            _load_sequence(p["seq"])
            if "seq" in p
            else PointSequence.integers(int(p.get("n_max", 1000000)))
        )
        taus = _floats(p.get("tau_grid", "10,31.6,100,316,1000"))
        result = critical_line_scan(seq, float(p.get("A", 1.0)), taus)
        _write(os.path.join(cfg.output_dir, "critical_line.csv"), result.to_csv())
        out = {"slope": result.slope}
    else:
        raise ConfigInvalid(
            "zeta needs op in {series, euler, continued, template_psi, "
            "template_logderiv, critical_line}"
        )
    _write(os.path.join(cfg.output_dir, "zeta.json"), json.dumps(out, indent=2))


def _run_scan(cfg):
    p = cfg.params
    seq = _load_sequence(p["seq"])
    model = _model_from(p)
    if "t_power" in p:
        t_rule = ("power", float(p["t_power"]))
    else:
        t_rule = _floats(p.get("t_grid", "10,100"))
    grid = scan(
        seq,
        model,
        _floats(p.get("x_grid", "100,1000")),
        t_rule,
        Norm(p.get("norm", "LH_TILDE")),
        eps=float(p.get("eps", 0.1)),
    )
    if cfg.format == "json":
        _write(os.path.join(cfg.output_dir, "scan.json"), grid.to_json())
    else:
        _write(os.path.join(cfg.output_dir, "scan.csv"), grid.to_csv())


_SCAN_HEADER = ["x", "t", "raw_dev", "normalized_dev", "norm", "eps"]


def _run_report(cfg):
    inputs = cfg.params.get("inputs", [])
    if not inputs:
        raise ConfigInvalid("report needs at least one input file")
    kinds = set()
    rows = []
    mc = []
    for path in inputs:
        if not os.path.exists(path):
            raise FileNotFound(path)
        if path.endswith(".json"):
            with open(path) as fh:
                data = json.load(fh)
            if "per_trial_max" not in data:
                raise SchemaMismatch(f"{path}: not a Monte-Carlo report")
            kinds.add("mc")
            mc.append((path, data))
        else:
            with open(path, newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header != _SCAN_HEADER:
                    raise SchemaMismatch(f"{path}: not a scan file")
                kinds.add("scan")
                for row in reader:
                    rows.append((float(row[0]), float(row[1]), row, path))
    if len(kinds) > 1:
        raise SchemaMismatch("cannot merge Monte-Carlo and scan inputs")
    summary = {"inputs": list(inputs)}
    if rows:
        rows.sort(key=lambda r: (r[0], r[1]))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_SCAN_HEADER + ["source"])
        for _, _, row, src in rows:
            w.writerow(row + [src])
        _write(os.path.join(cfg.output_dir, "merged.csv"), buf.getvalue())
        devs = [float(r[2][3]) for r in rows if r[2][3] != "nan"]
        finite = [d for d in devs if math.isfinite(d)]
        if finite:
            summary["normalized_dev_quantiles"] = {
                "q50": float(np.quantile(finite, 0.5)),
                "q90": float(np.quantile(finite, 0.9)),
                "q99": float(np.quantile(finite, 0.99)),
            }
    if mc:
        maxima = [v for _, d in mc for v in d["per_trial_max"] if math.isfinite(v)]
        summary["per_file"] = {p: d["quantiles"] for p, d in mc}
        if maxima:
            summary["normalized_dev_quantiles"] = {
                "q50": float(np.quantile(maxima, 0.5)),
                "q90": float(np.quantile(maxima, 0.9)),
                "q99": float(np.quantile(maxima, 0.99)),
            }
    _write(
        os.path.join(cfg.output_dir, "summary.json"),
        json.dumps(summary, indent=2, sort_keys=True),
    )


_RUNNERS = {
    "construct": _run_construct,
    "sample": _run_sample,
    "beurling": _run_beurling,
    "zeta": _run_zeta,
    "scan": _run_scan,
    "report": _run_report,
}


def run(cfg):
    """Execute one configuration; outputs land in ``cfg.output_dir``."""
    _write_manifest(cfg)
    _RUNNERS[cfg.command](cfg)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

# flags mirror config keys one-to-one; everything except the plumbing
# options below is collected into the params object
_PLUMBING = {"command", "config", "out", "format", "seed", "threads", "inputs"}


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="llab",
        description="exponential-sum and zeta-growth experiment runner",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="run from a config/manifest JSON file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=None)

    c = sub.add_parser("construct", help="deterministic counterexample sequences")
    c.add_argument("--kind", choices=("aligned", "arc", "deletion"))
    c.add_argument("--alpha", type=float)
    c.add_argument("--k-list", dest="k_list")
    c.add_argument("--m", type=int)
    c.add_argument("--k", type=int)
    c.add_argument("--m-list", dest="m_list")
    c.add_argument("--eps", type=float)
    common(c)

    s = sub.add_parser("sample", help="random sequence models")
    s.add_argument("--kind", choices=[k.value for k in SamplerKind])
    s.add_argument("--model", choices=("linear", "li", "comb"))
    s.add_argument("--slope", type=float)
    s.add_argument("--x0", type=float)
    s.add_argument("--J", type=int)
    s.add_argument("--A", type=float)
    s.add_argument("--K", type=float)
    s.add_argument("--theta", type=float)
    s.add_argument("--block-ends", dest="block_ends")
    s.add_argument("--trials", type=int)
    s.add_argument("--trial", type=int)
    s.add_argument("--x-grid", dest="x_grid")
    s.add_argument("--t-grid", dest="t_grid")
    s.add_argument("--norm", choices=[n.value for n in Norm])
    common(s)

    b = sub.add_parser("beurling", help="generalized number systems")
    b.add_argument("--primes")
    b.add_argument("--rational-limit", dest="rational_limit", type=int)
    b.add_argument("--cutoff", type=float)
    common(b)

    z = sub.add_parser("zeta", help="zeta evaluation and diagnostics")
    z.add_argument(
        "--op",
        choices=(
            "series",
            "euler",
            "continued",
            "template_psi",
            "template_logderiv",
            "critical_line",
        ),
    )
    z.add_argument("--sigma", type=float)
    z.add_argument("--tau", type=float)
    z.add_argument("--x", type=float)
    z.add_argument("--A", type=float)
    z.add_argument("--theta", type=float)
    z.add_argument("--beta", type=float)
    z.add_argument("--n-max", dest="n_max", type=int)
    z.add_argument("--seq")
    z.add_argument("--system")
    z.add_argument("--tail-A", dest="tail_A", type=float)
    z.add_argument("--cutoff-P", dest="cutoff_P", type=float)
    z.add_argument("--x-grid", dest="x_grid")
    z.add_argument("--tau-grid", dest="tau_grid")
    common(z)

    g = sub.add_parser("scan", help="deviation grids over (x, t)")
    g.add_argument("--seq")
    g.add_argument("--model", choices=("linear", "li", "comb"))
    g.add_argument("--slope", type=float)
    g.add_argument("--x0", type=float)
    g.add_argument("--x-grid", dest="x_grid")
    g.add_argument("--t-grid", dest="t_grid")
    g.add_argument("--t-power", dest="t_power", type=float)
    g.add_argument("--norm", choices=[n.value for n in Norm])
    g.add_argument("--eps", type=float)
    common(g)

    r = sub.add_parser("report", help="merge scan or Monte-Carlo outputs")
    r.add_argument("inputs", nargs="*")
    common(r)
    return ap


def _config_from_args(args):
    given = {
        k: v
        for k, v in vars(args).items()
        if v is not None and k not in _PLUMBING and v != []
    }
    if args.config is not None:
        if given or args.out is not None:
            raise ConfigInvalid("--config cannot be combined with other flags")
        if not os.path.exists(args.config):
            raise FileNotFound(args.config)
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_json(fh.read())
        if cfg.command != args.command:
            raise ConfigInvalid(
                f"config is for {cfg.command!r}, invoked as {args.command!r}"
            )
        return cfg
    if args.out is None:
        raise ConfigInvalid("--out is required (or use --config)")
    params = dict(given)
    if args.command == "report":
        params["inputs"] = list(args.inputs)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("LLAB_THREADS", "1"))
    if threads > 1:
        params["_threads"] = threads
    return ExperimentConfig(
        command=args.command,
        params=params,
        seed=args.seed,
        output_dir=args.out,
        format=args.format,
    )


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except (ConfigInvalid, FileNotFound) as exc:
        print(exc, file=sys.stderr)
        return 2 if isinstance(exc, ConfigInvalid) else 1
    try:
        return run(cfg)
    except ConfigInvalid as exc:
        print(exc, file=sys.stderr)
        return 2
    except LlabError as exc:
        print(exc.code, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
