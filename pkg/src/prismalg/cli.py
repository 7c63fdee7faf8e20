"""Batch front end: parse a problem file, run tasks, emit deterministic reports.

Input grammar (line oriented, '#' comments):

    prism p=<int> N=<int> mode=<crystalline|qdr> [K=<int>]
    ring <name> cap <int> [pd]
    higgs rank=<int>
    theta <i> [<row>,<col>] = <poly>
    caps W=<int> imax=<int> jmax=<int> nilbound=<int>
    task <name>            # check dr stratify cocycle ca-compare duality base-change

Polynomials: signed integer coefficients, '*', '^', generator names, divided
powers as name[k]; whitespace insignificant; omitted matrix entries are zero.

Reports are byte-identical across runs for identical inputs; the human stream
carries a timing trailer line (excluded from determinism comparisons), the
structured stream carries none.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algebra import (
    GeneratorSpec,
    PD,
    POLY,
    AlgebraHom,
    FreeModuleMap,
    TruncatedAlgebra,
    algebra_hom,
)
from .cech import build_cech_double, compare_with_dr
from .duality import build_pairing, cohomology_duality_table, verify_duality_iso
from .higgs import HiggsModule, base_change, check_higgs, dr_complex
from .scalars import is_prime
from .strat import PDTower, check_cocycle, epsilon_from_theta

TASKS = ("check", "dr", "stratify", "cocycle", "ca-compare", "duality", "base-change")


class InputError(Exception):
    """Syntax or semantic error in a problem description."""


@dataclass
class ProblemSpec:
    p: int
    N: int
    mode: str
    qcap: int | None
    ring_gens: list[tuple[str, int, bool]]
    rank: int
    theta_entries: dict[tuple[int, int, int], str]
    W: int
    imax: int
    jmax: int
    nilbound: int
    tasks: list[str]

    @property
    def n(self) -> int:
        return len(self.ring_gens)


# ---------------------------------------------------------------------------
# polynomial parsing

_TOKEN = re.compile(r"\s*(?:(?P<int>-?\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
                    r"|(?P<op>[*^+\-\[\]]))")


def _tokenize(text: str, line_no: int):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise InputError(f"line {line_no}, column {pos + 1}: "
                                 f"cannot read polynomial at {text[pos:]!r}")
            break
        kind = m.lastgroup
        out.append((kind, m.group(kind), pos))
        pos = m.end()
    return out


def parse_poly(text: str, algebra: TruncatedAlgebra, line_no: int):
    """Sum of products of integer literals and (divided) generator powers."""
    toks = _tokenize(text, line_no)
    if not toks:
        raise InputError(f"line {line_no}: empty polynomial")
    idx = 0

    def error(msg, at):
        raise InputError(f"line {line_no}, column {at + 1}: {msg}")

    def factor():
        nonlocal idx
        kind, val, at = toks[idx]
        if (kind, val) == ("op", "-"):
            idx += 1
            return -factor()
        if (kind, val) == ("op", "+"):
            idx += 1
            return factor()
        if kind == "int":
            idx += 1
            return algebra.scalar(int(val))
        if kind == "name":
            if val not in [g.name for g in algebra.gens]:
                error(f"unknown generator {val!r}", at)
            idx += 1
            base = algebra.gen(val)
            if idx < len(toks) and toks[idx][:2] == ("op", "^"):
                idx += 1
                if idx >= len(toks) or toks[idx][0] != "int":
                    error("expected integer exponent", toks[idx - 1][2])
                e = int(toks[idx][1])
                idx += 1
                return base**e
            if idx < len(toks) and toks[idx][:2] == ("op", "["):
                gen_spec = next(g for g in algebra.gens if g.name == val)
                if gen_spec.kind != PD:
                    error(f"{val} is not a divided-power generator", at)
                idx += 1
                if idx >= len(toks) or toks[idx][0] != "int":
                    error("expected divided-power index", at)
                e = int(toks[idx][1])
                idx += 1
                if idx >= len(toks) or toks[idx][:2] != ("op", "]"):
                    error("expected closing bracket", at)
                idx += 1
                exps = [0] * len(algebra.gens)
                exps[[g.name for g in algebra.gens].index(val)] = e
                if tuple(exps) not in algebra._index:
                    return algebra.zero()
                return algebra.element({tuple(exps): 1})
            return base
        error("expected integer or generator", at)

    def term():
        nonlocal idx
        acc = factor()
        while idx < len(toks) and toks[idx][:2] == ("op", "*"):
            idx += 1
            acc = acc * factor()
        return acc

    acc = term()
    while idx < len(toks):
        kind, val, at = toks[idx]
        if (kind, val) == ("op", "+"):
            idx += 1
            acc = acc + term()
        elif (kind, val) == ("op", "-"):
            idx += 1
            acc = acc - term()
        elif kind == "int" and val.startswith("-"):
            acc = acc + term()
        else:
            error(f"unexpected token {val!r}", at)
    return acc


# ---------------------------------------------------------------------------
# problem parsing


def _kv_fields(body: str, line_no: int) -> dict[str, str]:
    out = {}
    for piece in body.split():
        if "=" not in piece:
            raise InputError(f"line {line_no}: expected key=value, got {piece!r}")
        k, v = piece.split("=", 1)
        out[k] = v
    return out


_THETA = re.compile(r"^theta\s+(\d+)\s*\[\s*(\d+)\s*,\s*(\d+)\s*\]\s*=\s*(.+)$")


def parse(text: str) -> ProblemSpec:
    p = N = None
    mode = "crystalline"
    qcap = None
    ring_gens: list[tuple[str, int, bool]] = []
    rank = None
    theta_entries: dict[tuple[int, int, int], str] = {}
    caps = {}
    tasks: list[str] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, body = line.partition(" ")
        if head == "prism":
            kv = _kv_fields(body, line_no)
            try:
                p, N = int(kv.pop("p")), int(kv.pop("N"))
            except KeyError as exc:
                raise InputError(f"line {line_no}: prism needs {exc}") from None
            mode = kv.pop("mode", "crystalline")
            if "K" in kv:
                qcap = int(kv.pop("K"))
            if kv:
                raise InputError(f"line {line_no}: unknown prism fields {sorted(kv)}")
            if mode not in ("crystalline", "qdr"):
                raise InputError(f"line {line_no}: unknown mode {mode!r}")
        elif head == "ring":
            m = re.match(r"^(\w+)\s+cap\s+(\d+)(\s+pd)?$", body)
            if not m:
                raise InputError(f"line {line_no}: expected 'ring <name> cap <int> [pd]'")
            ring_gens.append((m.group(1), int(m.group(2)), bool(m.group(3))))
        elif head == "higgs":
            kv = _kv_fields(body, line_no)
            rank = int(kv.get("rank", "-1"))
            if rank < 0:
                raise InputError(f"line {line_no}: higgs needs rank=<int> >= 0")
        elif head == "theta":
            m = _THETA.match(line)
            if not m:
                raise InputError(f"line {line_no}: expected 'theta <i> [<r>,<c>] = <poly>'")
            i, r, c = int(m.group(1)), int(m.group(2)), int(m.group(3))
            theta_entries[(i, r, c)] = (m.group(4), line_no)
        elif head == "caps":
            caps.update({k: int(v) for k, v in _kv_fields(body, line_no).items()})
        elif head == "task":
            name = body.strip()
            if name not in TASKS:
                raise InputError(f"line {line_no}: unknown task {name!r}")
            tasks.append(name)
        else:
            raise InputError(f"line {line_no}: unknown directive {head!r}")
    if p is None:
        raise InputError("missing 'prism' line")
    if not is_prime(p):
        raise InputError(f"p = {p} is not prime")
    if N < 1:
        raise InputError(f"N = {N} must be >= 1")
    if mode == "qdr" and qcap is None:
        raise InputError("qdr mode needs K=<int>")
    if rank is None:
        rank = 1 if not theta_entries else max(max(r, c) for (_, r, c) in theta_entries)
    n = len(ring_gens)
    for (i, r, c) in theta_entries:
        if not (1 <= i <= n):
            raise InputError(f"theta index {i} out of range 1..{n}")
        if not (1 <= r <= rank and 1 <= c <= rank):
            raise InputError(f"theta entry ({r},{c}) outside rank {rank}")
    W = caps.get("W", max(2, n + 2))
    spec = ProblemSpec(p, N, mode, qcap, ring_gens, rank, theta_entries,
                       W=W, imax=caps.get("imax", n + 2), jmax=caps.get("jmax", n + 2),
                       nilbound=caps.get("nilbound", 16), tasks=tasks)
    build_problem(spec)  # semantic validation happens during construction
    return spec


# ---------------------------------------------------------------------------
# construction


def q_base_rewrite(p: int) -> list[int]:
    """(q-1)^(p-1) = -(sum_{j<p-1} C(p, j+1) (q-1)^j), from [p]_q = 0."""
    return [-math.comb(p, j + 1) for j in range(p - 1)]


@dataclass
class Problem:
    spec: ProblemSpec
    algebra: TruncatedAlgebra
    higgs: HiggsModule


def build_problem(spec: ProblemSpec) -> Problem:
    gens = []
    rewrites = {}
    if spec.mode == "qdr":
        gens.append(GeneratorSpec("q1", POLY, max(1, spec.p - 1)))
        rewrites["q1"] = q_base_rewrite(spec.p)
    for name, cap, is_pd in spec.ring_gens:
        if cap < 1:
            raise InputError(f"generator {name} needs cap >= 1")
        gens.append(GeneratorSpec(name, PD if is_pd else POLY, cap))
    try:
        algebra = TruncatedAlgebra(spec.p, spec.N, tuple(gens),
                                   weight_cap=None if not any(g.kind == PD for g in gens)
                                   else spec.W,
                                   rewrites=rewrites or None)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if spec.mode == "qdr":
        u = algebra.gen("q1")
        if not (u**spec.qcap).is_zero():
            raise InputError(f"(q-1)^{spec.qcap} does not vanish mod p^{spec.N}; "
                             "the q-de Rham base is not free at this precision")
        rng = np.random.default_rng(0)
        for _ in range(50):
            x, y, z = (algebra.random_element(rng) for _ in range(3))
            if (x * y) * z != x * (y * z) or x * y != y * x:
                raise InputError("q-de Rham base ring fails ring axioms")
    thetas = []
    zero = algebra.zero()
    for i in range(1, spec.n + 1):
        data = [[zero for _ in range(spec.rank)] for _ in range(spec.rank)]
        for (ti, r, c), (poly, line_no) in spec.theta_entries.items():
            if ti == i:
                data[r - 1][c - 1] = parse_poly(poly, algebra, line_no)
        thetas.append(FreeModuleMap.from_entries(algebra, data)
                      if spec.rank else FreeModuleMap.zero(algebra, 0, 0))
    try:
        higgs = HiggsModule(algebra, spec.rank, thetas, check=False)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return Problem(spec, algebra, higgs)


# ---------------------------------------------------------------------------
# report assembly


class Report:
    def __init__(self):
        self.lines: list[str] = []
        self.kv: list[tuple[str, str]] = []
        self.worst = "PASS"

    def put(self, section: str, key: str, value) -> None:
        self.kv.append((f"{section}.{key}", str(value)))
        self.lines.append(f"{key}: {value}")

    def section(self, name: str) -> None:
        self.lines.append(f"[task {name}]")

    def verdict(self, section: str, verdict: str) -> None:
        self.put(section, "verdict", verdict)
        order = {"PASS": 0, "ARTIFACT-AT-TOP-WEIGHT": 1, "FAIL": 2}
        if order.get(verdict, 2) > order.get(self.worst, 0):
            self.worst = verdict

    def text(self, elapsed_ms: int | None = None) -> str:
        out = "\n".join(self.lines)
        if elapsed_ms is not None:
            out += f"\n# elapsed-ms {elapsed_ms}"
        return out + "\n"

    def structured(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in self.kv) + "\n"

    @property
    def exit_code(self) -> int:
        return 0 if self.worst in ("PASS", "ARTIFACT-AT-TOP-WEIGHT") else 1


def _divisor_table(report: Report, section: str, table: dict) -> None:
    for k in sorted(table):
        report.put(section, f"H{k}", str(table[k]))


def run(spec: ProblemSpec, seed: int = 0) -> Report:
    problem = build_problem(spec)
    H = problem.higgs
    report = Report()
    tower = None
    strat = None

    def get_tower():
        nonlocal tower
        if tower is None:
            tower = PDTower(problem.algebra, spec.n, spec.W)
        return tower

    def get_strat():
        nonlocal strat
        if strat is None:
            strat = epsilon_from_theta(H, spec.W, get_tower(), nil_bound=spec.nilbound)
        return strat

    for task in spec.tasks:
        report.section(task)
        try:
            if task == "check":
                rep = check_higgs(H, bound=spec.nilbound)
                if rep.ok:
                    report.put(task, "W_theta", rep.W_theta)
                report.verdict(task, "PASS" if rep.ok else "FAIL")
                for f in rep.failures:
                    report.put(task, "witness", f)
            elif task == "dr":
                K = dr_complex(H)
                table = K.cohomology(range(0, spec.n + 1))
                _divisor_table(report, task, table)
                for k in sorted(table):
                    report.put(task, f"twist{k}", K.twist(k))
                report.verdict(task, "PASS")
            elif task == "stratify":
                S = get_strat()
                nonzero = int(np.count_nonzero(S.eps.data.any(axis=2)))
                report.put(task, "matrix_entries_nonzero", nonzero)
                report.put(task, "weight_cap", spec.W)
                report.verdict(task, "PASS")
            elif task == "cocycle":
                rep = check_cocycle(get_strat())
                report.put(task, "unit_part", "id" if rep.unit_part_ok else "BROKEN")
                report.verdict(task, "PASS" if rep.ok else "FAIL")
                for f in rep.failures:
                    report.put(task, "witness", f)
            elif task == "ca-compare":
                D = build_cech_double(H, get_strat(), i_max=max(spec.imax, spec.n + 2),
                                      j_max=max(spec.jmax, spec.n + 2),
                                      total_cap=spec.n + 2)
                rep = compare_with_dr(D)
                for k in sorted(rep.ca_table):
                    report.put(task, f"CA.H{k}", str(rep.ca_table[k]))
                for k in sorted(rep.dr_table):
                    report.put(task, f"DR.H{k}", str(rep.dr_table[k]))
                for k in sorted(rep.tot_table):
                    report.put(task, f"Tot.H{k}", str(rep.tot_table[k]))
                report.put(task, "cone_CA_defects",
                           ",".join(str(rep.ca_cone_defects[k]) for k in sorted(rep.ca_cone_defects)))
                report.put(task, "cone_DR_defects",
                           ",".join(str(rep.dr_cone_defects[k]) for k in sorted(rep.dr_cone_defects)))
                report.put(task, "window_threshold", rep.threshold)
                report.verdict(task, rep.verdict)
            elif task == "duality":
                w = build_pairing(H)
                rep = verify_duality_iso(w)
                table = cohomology_duality_table(w)
                for i, a, b in table.rows:
                    report.put(task, f"H{i}_dual_vs_H{spec.n - i}", f"{a} | {b}")
                report.put(task, "degreewise_symmetric", table.symmetric)
                report.verdict(task, "PASS" if rep.ok else "FAIL")
                for f in rep.failures:
                    report.put(task, "witness", f)
            elif task == "base-change":
                ok = True
                for label, f in canonical_base_changes(problem):
                    try:
                        base_change(H, f)
                        report.put(task, f"map[{label}]", "PASS")
                    except ValueError as exc:
                        ok = False
                        report.put(task, f"map[{label}]", f"FAIL ({exc})")
                report.verdict(task, "PASS" if ok else "FAIL")
        except (ValueError, InputError) as exc:
            report.put(task, "error", str(exc))
            report.verdict(task, "FAIL")
    return report


def canonical_base_changes(problem: Problem):
    """A deterministic family of ring maps for the base-change task:
    identity, kill each declared generator, and scale each by a unit."""
    alg = problem.algebra
    out = [("identity", AlgebraHom.identity(alg))]
    declared = [name for name, _, _ in problem.spec.ring_gens]
    for name in declared:
        images = {g.name: alg.gen(g.name) for g in alg.gens}
        images[name] = alg.zero()
        out.append((f"{name}->0", algebra_hom(alg, alg, images)))
    if problem.spec.p > 2:
        for name in declared:
            images = {g.name: alg.gen(g.name) for g in alg.gens}
            images[name] = 2 * alg.gen(name)
            out.append((f"{name}->2{name}", algebra_hom(alg, alg, images)))
    return out


# ---------------------------------------------------------------------------
# entry point


def run_file(path: Path, emit: str, seed: int) -> tuple[str, int]:
    try:
        spec = parse(path.read_text())
    except InputError as exc:
        return f"input error: {exc}\n", 2
    t0 = time.perf_counter()
    report = run(spec, seed=seed)
    elapsed = int((time.perf_counter() - t0) * 1000)
    body = report.structured() if emit == "structured" else report.text(elapsed)
    return body, report.exit_code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="prismalg",
                                 description="exact truncated prismatic-crystal computations")
    sub = ap.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one problem file or a corpus directory")
    runp.add_argument("path", type=Path)
    runp.add_argument("--emit", choices=("text", "structured"), default="text")
    runp.add_argument("--seed", type=int, default=0)
    runp.add_argument("--corpus", action="store_true",
                      help="treat path as a directory of .prism files")
    args = ap.parse_args(argv)

    if args.corpus or args.path.is_dir():
        files = sorted(args.path.glob("*.prism"))
        if not files:
            print(f"no .prism files under {args.path}", file=sys.stderr)
            return 2
        worst = 0
        for f in files:
            body, code = run_file(f, args.emit, args.seed)
            sys.stdout.write(f"=== {f.name} ===\n")
            sys.stdout.write(body)
            worst = max(worst, code)
        return worst
    body, code = run_file(args.path, args.emit, args.seed)
    sys.stdout.write(body)
    return code


if __name__ == "__main__":
    sys.exit(main())
