"""Command-line batch runner: ``ffdist <subcommand>``.

Subcommands: ``field-info``, ``sphere-table``, ``count``, ``verify``, ``replay``.
Configuration files are ``key = value`` lines with JSON literal values
(a TOML subset), e.g.::

    fields = [3, 5]
    dims = [2]
    forms = ["bilinear:dot"]
    labels = "all"
    sets = ["full"]
    seeds = [0]
    theorems = ["functional-distance"]
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field as dc_field, fields as dc_fields
from fractions import Fraction
from pathlib import Path

from .bounds import qp
from .embed import (DEFAULT_BUDGET, GraphSpecError, count_cycles, count_cycles_nondegenerate, count_graph,
                    count_graph_distinct, count_paths, parse_graph)
from .field import FieldError, field_of_order, make_field
from .forms import BILINEAR, FormError, make_space, parse_form, sphere_sizes
from .kernel import BudgetExceeded
from .sets import SetSpecError, make_set
from .verify import (CAMPAIGN_BUDGET, PRESETS, SCHEMA, THEOREM_IDS, Grid, TheoremCheck, replay,
                     run_campaign)

FORMATS = ("jsonl", "csv", "summary")


class ConfigParse(ValueError):
    pass


# -- configuration -----------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Everything a campaign needs; every field is written to the report header."""

    preset: str = "default"
    fields: list = dc_field(default_factory=lambda: list(PRESETS["default"].fields))
    dims: list = dc_field(default_factory=lambda: list(PRESETS["default"].dims))
    forms: list = dc_field(default_factory=lambda: list(PRESETS["default"].forms))
    labels: object = "all"
    sets: list = dc_field(default_factory=lambda: list(PRESETS["default"].sets))
    seeds: list = dc_field(default_factory=lambda: [0, 1, 2])
    theorems: object = "all"
    tiers: str = "auto"
    max_size: int = 10**6
    budget: int = CAMPAIGN_BUDGET
    jobs: int = 1
    out: str = ""
    formats: list = dc_field(default_factory=lambda: list(FORMATS))

    @classmethod
    def from_preset(cls, name: str) -> ExperimentConfig:
        if name not in PRESETS:
            raise ConfigParse(f"unknown preset {name!r} (choose from {', '.join(PRESETS)})")
        g = PRESETS[name]
        seeds = list(range(g.seeds)) if isinstance(g.seeds, int) else list(g.seeds)
        return cls(preset=name, fields=list(g.fields), dims=list(g.dims), forms=list(g.forms),
                   labels=g.labels if isinstance(g.labels, str) else list(g.labels), sets=list(g.sets),
                   seeds=seeds, theorems=g.theorems, tiers=g.tiers, max_size=g.max_size)

    def grid(self) -> Grid:
        return Grid(fields=tuple(self.fields), dims=tuple(self.dims), forms=tuple(self.forms),
                    labels=self.labels if isinstance(self.labels, str) else tuple(self.labels),
                    sets=tuple(self.sets), seeds=tuple(self.seeds), theorems=self.theorems,
                    max_size=self.max_size, tiers=self.tiers)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {json.dumps(getattr(self, f.name))}\n" for f in dc_fields(self))

    @classmethod
    def from_text(cls, text: str) -> ExperimentConfig:
        values = {}
        names = {f.name for f in dc_fields(cls)}
        for no, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            key = key.strip()
            if not sep or key not in names:
                raise ConfigParse(f"line {no}: unknown or malformed entry {raw.strip()!r}")
            try:
                values[key] = json.loads(val.strip())
            except json.JSONDecodeError as exc:
                raise ConfigParse(f"line {no}: {key}: {exc}") from exc
        cfg = cls.from_preset(values.pop("preset", "default"))
        explicit = {"labels", "sets", "seeds"} & values.keys()
        for k, v in values.items():
            setattr(cfg, k, v)
        if explicit and "tiers" not in values:
            cfg.tiers = "fixed"
        cfg.validate()
        return cfg

    def validate(self):
        """Raise ConfigParse naming the first offending entry."""
        for key in ("fields", "dims", "forms", "sets", "seeds", "formats"):
            if not isinstance(getattr(self, key), list):
                raise ConfigParse(f"{key} must be a list")
        for i, q in enumerate(self.fields):
            try:
                field_of_order(int(q))
            except (FieldError, ValueError) as exc:
                raise ConfigParse(f"fields[{i}] = {q!r}: {exc}") from exc
        for i, d in enumerate(self.dims):
            if not isinstance(d, int) or d < 2:
                raise ConfigParse(f"dims[{i}] = {d!r}: dimension must be an integer >= 2")
        for i, spec in enumerate(self.forms):
            for q in self.fields:
                for d in self.dims:
                    F = field_of_order(int(q))
                    try:
                        parse_form(spec, make_space(F.p, F.k, d))
                    except FormError as exc:
                        raise ConfigParse(f"forms[{i}] = {spec!r} (q={q}, d={d}): {exc}") from exc
        if not (self.labels in ("all", "sampled") or isinstance(self.labels, list)):
            raise ConfigParse(f"labels = {self.labels!r}: use \"all\", \"sampled\" or a list")
        ids = [self.theorems] if isinstance(self.theorems, str) else self.theorems
        for tid in ids:
            if tid != "all" and tid not in THEOREM_IDS:
                raise ConfigParse(f"theorems: unknown id {tid!r}")
        for i, fmt in enumerate(self.formats):
            if fmt not in FORMATS:
                raise ConfigParse(f"formats[{i}] = {fmt!r}: choose from {', '.join(FORMATS)}")
        if self.tiers not in ("auto", "fixed"):
            raise ConfigParse(f"tiers = {self.tiers!r}: use \"auto\" or \"fixed\"")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParse(f"cannot read {path}: {exc}") from exc
    return ExperimentConfig.from_text(text)


# -- shared argument handling ------------------------------------------------------------------

def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _field(args):
    if args.q is not None:
        qs = _ints(args.q)
        if len(qs) != 1:
            raise SystemExit("this subcommand takes a single --q")
        return field_of_order(qs[0])
    if args.p is not None:
        return make_field(args.p, args.k or 1)
    raise SystemExit("give --q, or --p with --k")


def _space_and_form(args):
    F = _field(args)
    d = _ints(args.d)[0] if args.d else 2
    forms = args.form or ["quadratic:norm"]
    fn = parse_form(forms[0], make_space(F.p, F.k, d))
    return F, fn


def _label(text, F) -> int:
    if text in (None, "all", "sampled"):
        return 1
    return int(text)


def _num(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# -- subcommands ---------------------------------------------------------------------------

def cmd_field_info(args) -> int:
    F = _field(args)
    print(f"GF({F.q}) = GF({F.p}^{F.k})")
    print(f"modulus (low to high): {list(F.modulus)}")
    print(f"primitive element index: {F.primitive}")
    print(f"canonical non-square index: {F.nonsquare}")
    squares = [i for i in range(1, F.q) if F.eta_table[i] == 1]
    print(f"nonzero squares: {squares}")
    return 0


def cmd_sphere_table(args) -> int:
    F, fn = _space_and_form(args)
    if fn.kind == BILINEAR:
        raise SystemExit("sphere-table needs a quadratic form")
    q, d = F.q, fn.space.d
    sizes = sphere_sizes(fn)
    main = q ** (d - 1)
    bound = qp(q, Fraction(d, 2))
    bound_txt = _num(bound.v) if bound.exact else f"{float(bound):.6f}"
    print(f"{'t':>4} {'|S_t|':>10} {'q^(d-1)':>10} {'deviation':>10} {'q^(d/2)':>12}")
    for t in range(1, q):
        print(f"{t:>4} {int(sizes[t]):>10} {main:>10} {int(sizes[t]) - main:>10} {bound_txt:>12}")
    return 0


def cmd_count(args) -> int:
    F, fn = _space_and_form(args)
    lam = _label(args.label, F)
    A = make_set(args.set[0] if args.set else "full", fn, _ints(args.seed)[0] if args.seed else 0)
    spec = args.graph
    budget = args.budget
    head, _, rest = spec.partition(":")
    if head == "cycle":
        n = int(rest)
        rep = (count_cycles_nondegenerate(A, n, lam, fn, budget) if args.distinct
               else count_cycles(A, n, lam, fn, budget))
    elif head == "path" and not args.distinct:
        rep = count_paths(A, int(rest), lam, fn)
    else:
        G = parse_graph(spec, lam)
        rep = count_graph_distinct(A, G, fn, budget) if args.distinct else count_graph(A, G, fn, budget)
    out = {"graph": spec, "q": F.q, "d": fn.space.d, "form": fn.describe(), "label": lam,
           "set": A.descriptor, "set_size": A.size, **rep.to_dict()}
    print(json.dumps(out, sort_keys=True))
    return 0


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig.from_preset(args.preset or "default")
    if args.config and args.preset:
        raise ConfigParse("give either --config or --preset")
    fixed = False
    if args.q is not None:
        cfg.fields = _ints(args.q)
    elif args.p is not None:
        cfg.fields = [args.p ** (args.k or 1)]
    if args.d is not None:
        cfg.dims = _ints(args.d)
    if args.form:
        cfg.forms = list(args.form)
    if args.label is not None:
        cfg.labels = args.label if args.label in ("all", "sampled") else _ints(args.label)
        fixed = True
    if args.set:
        cfg.sets = list(args.set)
        fixed = True
    if args.seed is not None:
        cfg.seeds = _ints(args.seed)
        fixed = True
    if args.theorem is not None:
        cfg.theorems = "all" if args.theorem == "all" else args.theorem.split(",")
    if args.budget is not None:
        cfg.budget = int(args.budget)
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.out is not None:
        cfg.out = args.out
    if args.format is not None:
        cfg.formats = args.format.split(",")
    if fixed:
        if cfg.tiers == "auto":
            cfg.tiers = "fixed"
        if args.seed is None and not args.config and cfg.seeds == [0, 1, 2] and cfg.preset == "default":
            cfg.seeds = [0]
    cfg.validate()
    return cfg


def cmd_verify(args) -> int:
    cfg = _config_from_args(args)

    def progress(i, n):
        if args.verbose and (i == n or i % 500 == 0):
            print(f"  {i}/{n} tasks", file=sys.stderr)

    t0 = time.time()
    result = run_campaign(cfg.grid(), budget=cfg.budget, jobs=cfg.jobs, config=cfg.to_dict(), progress=progress)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if "jsonl" in cfg.formats:
            (out / "report.jsonl").write_text(result.jsonl())
        if "csv" in cfg.formats:
            (out / "report.csv").write_text(result.csv())
        if "summary" in cfg.formats:
            (out / "summary.txt").write_text(result.summary())
        (out / "config.toml").write_text(cfg.to_text())
    print(result.summary(), end="")
    if args.verbose:
        print(f"elapsed: {time.time() - t0:.1f}s", file=sys.stderr)
    for r in result.violations[:20]:
        print("VIOLATION " + r.to_json())
    return result.exit_code


def _records(source: str) -> list[dict]:
    path = Path(source)
    text = path.read_text() if len(source) < 4096 and path.is_file() else source
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        if "schema" in obj:
            continue
        out.append(obj)
    return out


def cmd_replay(args) -> int:
    status = 0
    for obj in _records(args.witness):
        witness = obj.get("witness", obj)
        rec: TheoremCheck = replay(witness, budget=args.budget)
        fresh = rec.to_dict()
        if "witness" in obj:
            same = all(fresh[k] == obj.get(k) for k in ("lhs", "rhs", "margin", "hypothesis_satisfied"))
            fresh["replay"] = "identical" if same else "MISMATCH"
            status |= 0 if same else 1
        print(json.dumps(fresh, sort_keys=True))
    return status


# -- entry point ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", help="field order (comma list for verify)")
    common.add_argument("--p", type=int, help="characteristic (with --k)")
    common.add_argument("--k", type=int, help="extension degree (with --p)")
    common.add_argument("--d", help="dimension (comma list for verify)")
    common.add_argument("--form", action="append", help="form spec, e.g. quadratic:diag=1,1 (repeatable)")
    common.add_argument("--label", help="label index, 'all' or 'sampled'")
    common.add_argument("--set", action="append", help="set generator, e.g. random:1/2 (repeatable)")
    common.add_argument("--seed", help="seed (comma list for verify)")
    common.add_argument("--budget", type=float, default=None, help="per-check search budget")

    p = argparse.ArgumentParser(prog="ffdist", description="Exact distance-graph counts over finite fields.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("field-info", parents=[common], help="field tables summary")
    sub.add_parser("sphere-table", parents=[common], help="sphere sizes against q^(d-1)")
    c = sub.add_parser("count", parents=[common], help="run one counter")
    c.add_argument("--graph", required=True, help="path:k, cycle:n, star:r, random-tree:r:seed or an edge list")
    c.add_argument("--distinct", action="store_true", help="count tuples with distinct vertices")
    v = sub.add_parser("verify", parents=[common], help="run a verification campaign")
    v.add_argument("--config", help="configuration file")
    v.add_argument("--preset", choices=sorted(PRESETS), help="named grid (default: default)")
    v.add_argument("--theorem", help="theorem id, comma list or 'all'")
    v.add_argument("--jobs", type=int, help="worker processes")
    v.add_argument("--out", help="output directory for report files")
    v.add_argument("--format", help="comma list of jsonl,csv,summary")
    v.add_argument("-v", "--verbose", action="store_true")
    r = sub.add_parser("replay", help="re-evaluate checks from witnesses")
    r.add_argument("witness", help="a JSON record or witness, or a report file")
    r.add_argument("--budget", type=float, default=CAMPAIGN_BUDGET)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in ("field-info", "sphere-table", "count") and args.budget is None:
        args.budget = DEFAULT_BUDGET
    handlers = {"field-info": cmd_field_info, "sphere-table": cmd_sphere_table, "count": cmd_count,
                "verify": cmd_verify, "replay": cmd_replay}
    try:
        return handlers[args.command](args)
    except (ConfigParse, FormError, SetSpecError, GraphSpecError, FieldError, BudgetExceeded) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
