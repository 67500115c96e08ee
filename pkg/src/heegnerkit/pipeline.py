"""Per-(curve, prime) certificates, the append-only store, verify and report.

A certificate is a JSON object.  Exact integers are decimal strings and
high-precision reals are hex-floats, so a rerun with the same inputs and
RunConfig yields the same bytes apart from the timestamp.  The ``digest``
field is a SHA-256 over the canonical encoding with the timestamp removed.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, arith
from .analytic import (
    elliptic_exp,
    eval_modular_map,
    manin_scaling,
    newform_periods,
    period_lattice,
    recognize_point,
    tau_of_form,
    terms_needed,
    trace_point,
)
from .analytic.heegner import coefficients_needed
from .analytic.recognize import on_curve_quadratic
from .config import RunConfig
from .curves import CurveSpec
from .errors import DomainError, HeegnerKitError
from .galois import DihedralGroup
from .heights import RationalPoint, canonical_height, is_torsion
from .modular import coefficients
from .prime_family import HypothesisCertificate, build_congruence, verify_hypothesis
from .quadforms import QuadForm, compose, enumerate_class_group, heegner_forms, reduce, reduced_forms

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
_UNHASHED = ("timestamp", "digest")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def certificate_digest(cert: dict) -> str:
    body = {k: v for k, v in cert.items() if k not in _UNHASHED}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def _form(f: QuadForm) -> list[str]:
    return f.to_json()


class _Precondition(DomainError):
    """Raised inside a stage when the request itself is invalid; aborts the run."""


@dataclass
class _Run:
    cert: dict
    stages: list = field(default_factory=list)
    failed: bool = False

    def stage(self, name: str, fn) -> None:
        if self.failed:
            self.stages.append({"name": name, "status": "skipped"})
            return
        try:
            note = fn()
        except _Precondition:
            raise
        except HeegnerKitError as exc:
            self.failed = True
            self.stages.append({"name": name, "status": "failed", "error": f"{type(exc).__name__}: {exc}"})
            return
        entry = {"name": name, "status": "ok"}
        if note:
            entry["note"] = note
        self.stages.append(entry)


def in_family(p: int, N: int) -> bool:
    cong = build_congruence(N)
    return p % cong.modulus == cong.residue and arith.is_prime(p) and verify_hypothesis(p, N).valid


def certify(
    curve: CurveSpec,
    p: int,
    j: int = 1,
    config: RunConfig | None = None,
    force: bool = False,
    trace: bool = True,
    timestamp: str | None = None,
) -> dict:
    """Run the pipeline for one prime and return its certificate.

    Precondition failures (p outside A_N without ``force``, j > h_p) raise
    DomainError.  Failures inside a stage are recorded and the remaining
    stages are marked skipped; the partial certificate is still returned.
    """
    config = config or RunConfig()
    N = curve.conductor
    prec = config.prec_bits
    if not arith.is_prime(p):
        raise DomainError(f"{p} is not prime")
    cert: dict = {
        "schema": SCHEMA_VERSION,
        "tool_version": __version__,
        "curve": curve.to_json(),
        "p": str(p),
        "j": str(j),
        "prec_bits": prec,
        "warnings": [],
    }
    member = in_family(p, N)
    cert["in_family"] = member
    if not member:
        cong = build_congruence(N)
        if not force:
            raise DomainError(
                f"p = {p} is not in A_{N} (need p = {cong.residue} mod {cong.modulus} and the Heegner hypothesis); use --force"
            )
        cert["warnings"].append(f"forced: p = {p} is not in A_{N} (p mod {cong.modulus} = {p % cong.modulus})")

    run = _Run(cert)
    ctx_state: dict = {}

    def hypothesis():
        hc = verify_hypothesis(p, N)
        cert["hypothesis"] = hc.to_json()
        if not hc.valid:
            raise DomainError(f"Heegner hypothesis fails for p = {p}, N = {N}")

    def class_group():
        G = enumerate_class_group(p)
        ctx_state["G"] = G
        cert["class_group"] = {"h": str(G.h), "structure": [str(d) for d in G.structure]}
        cert["h_above_floor"] = G.h >= config.class_number_floor
        if j > G.h:
            raise _Precondition(f"involution index j = {j} exceeds h_p = {G.h} for p = {p}")

    def involution():
        G = ctx_state["G"]
        label = DihedralGroup(G).involution(j)
        ctx_state["label"] = label
        cert["involution"] = {"j": str(j), "gamma": str(label.element.gamma), "gamma_form": _form(G.forms[label.element.gamma])}

    def fixed_class():
        G = ctx_state["G"]
        D = DihedralGroup(G)
        closed = D.fixed_heegner_classes(ctx_state["label"], "closed")
        scan = D.fixed_heegner_classes(ctx_state["label"], "scan")
        if closed != scan:
            raise DomainError(f"closed form {closed} and scan {scan} disagree")
        ctx_state["fixed"] = closed[0]
        cert["fixed_class"] = {"index": str(closed[0]), "form": _form(G.forms[closed[0]])}

    def heegner_form():
        forms = heegner_forms(p, N, group=ctx_state["G"], budget=config.prime_search_budget)
        ctx_state["forms"] = forms
        hf = forms[ctx_state["fixed"]]
        ctx_state["hf"] = hf
        cert["heegner_form"] = hf.to_json()

    def modular_image():
        hf = ctx_state["hf"]
        used = ctx_state["forms"] if trace else [hf]
        M = max(coefficients_needed(used, prec, config.max_qexp_terms), terms_needed(1 / N, prec // 2, config.max_qexp_terms))
        coeffs = coefficients(curve, M, config.coeff_cache)
        lat = period_lattice(curve, prec)
        c0 = manin_scaling(lat, newform_periods(coeffs, N, prec_bits=prec, max_terms=config.max_qexp_terms))
        tau = tau_of_form(hf, prec)
        img = eval_modular_map(coeffs, tau, prec, config.max_qexp_terms)
        ctx_state.update(coeffs=coeffs, lat=lat, c0=c0)
        cert["tau"] = arith.mpc_to_hex(tau.tau)
        cert["modular_image"] = {
            "z": arith.mpc_to_hex(img.z),
            "terms_used": str(img.terms_used),
            "tail_bound_log2": float(img.tail_bound).hex(),
        }
        cert["manin_c0"] = str(c0)

    def trace_stage():
        lat = ctx_state["lat"]
        tr = trace_point(
            curve,
            ctx_state["coeffs"],
            p,
            prec,
            config.max_qexp_terms,
            workers=1,
            group=ctx_state["G"],
            lattice=lat,
            manin_c0=ctx_state["c0"],
        )
        xy = elliptic_exp(lat, tr.scaled)
        ctx_state["xy"] = xy
        cert["trace"] = {
            "z": arith.mpc_to_hex(tr.z_trace),
            "conjugation_sign": str(tr.conjugation_sign),
            "conjugation_residual": arith.mpf_to_hex(tr.conjugation_residual),
            "distinct_images": str(tr.distinct_images),
            "identity": xy is None,
        }
        if xy is not None:
            ctx = lat.ctx
            if abs(ctx.im(xy[0])) >= ctx.ldexp(1, -(prec // 4)):
                raise DomainError(f"trace x-coordinate has imaginary part {float(abs(ctx.im(xy[0]))):.3g}")
            cert["trace"]["x"] = arith.mpc_to_hex(ctx.mpc(xy[0]))
            cert["trace"]["y"] = arith.mpc_to_hex(ctx.mpc(xy[1]))

    def recognition():
        xy = ctx_state["xy"]
        if xy is None:
            cert["point"] = {"identity": True}
            return "trace is the identity"
        rp = recognize_point(curve, xy[0], xy[1], p, prec_bits=prec)
        if rp is None:
            cert["point"] = None
            return "recognition failed within the height cap"
        cert["point"] = rp.to_json()
        ctx_state["rp"] = rp
        if not rp.on_curve_exact:
            raise DomainError("recognized coordinates do not satisfy the curve equation")
        return None

    def height():
        rp = ctx_state.get("rp")
        if rp is None or not rp.is_rational:
            cert["height"] = None
            return "no rational point"
        rep = canonical_height(RationalPoint(rp.x, rp.y_rational_part, curve), prec)
        cert["height"] = {
            "hhat": rep.hhat.hex(),
            "hhat_decimal": f"{rep.hhat:.15g}",
            "naive": rep.naive.hex(),
            "torsion": rep.torsion,
            "method": rep.method,
        }
        return None

    try:
        run.stage("hypothesis", hypothesis)
        run.stage("class_group", class_group)
    except _Precondition as exc:
        raise DomainError(str(exc)) from None
    run.stage("involution", involution)
    run.stage("fixed_class", fixed_class)
    run.stage("heegner_form", heegner_form)
    run.stage("modular_image", modular_image)
    if trace:
        run.stage("trace", trace_stage)
        run.stage("recognize", recognition)
        run.stage("height", height)
    cert["stages"] = run.stages
    cert["status"] = "failed" if run.stages[0]["status"] == "failed" else ("partial" if run.failed else "complete")
    cert["timestamp"] = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
    cert["digest"] = certificate_digest(cert)
    return cert


def _certify_job(args):
    return certify(*args[:3], **args[3])


def certify_many(
    curve: CurveSpec,
    primes: list[int],
    j: int = 1,
    config: RunConfig | None = None,
    force: bool = False,
    trace: bool = True,
    timestamp: str | None = None,
) -> list[dict]:
    """Certificates for several primes, in increasing p whatever the completion order."""
    config = config or RunConfig()
    primes = sorted(set(primes))
    jobs = [(curve, p, j, {"config": config, "force": force, "trace": trace, "timestamp": timestamp}) for p in primes]
    if config.threads <= 1 or len(jobs) <= 1:
        certs = [_certify_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            certs = list(pool.map(_certify_job, jobs))
    return sorted(certs, key=lambda c: int(c["p"]))


# ---------------------------------------------------------------------------
# store


def append_certificates(path: str | Path, certs: list[dict]) -> None:
    """Append one line per certificate under an exclusive lock."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="ascii") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            for cert in certs:
                fh.write(canonical_json(cert) + "\n")
            fh.flush()
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


@dataclass
class StoreContents:
    certificates: list[dict]
    warnings: list[str]
    lines: int

    @property
    def all_corrupt(self) -> bool:
        return self.lines > 0 and not self.certificates


def read_store(path: str | Path) -> StoreContents:
    path = Path(path)
    if not path.exists():
        raise DomainError(f"store {path} does not exist")
    certs, warnings, n = [], [], 0
    for lineno, line in enumerate(path.read_text(encoding="ascii", errors="replace").splitlines(), 1):
        if not line.strip():
            continue
        n += 1
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("not an object")
            if obj.get("schema") != SCHEMA_VERSION:
                raise ValueError(f"schema {obj.get('schema')!r}")
            CurveSpec.from_json(obj["curve"])
            int(obj["p"])
        except (ValueError, KeyError, TypeError, HeegnerKitError) as exc:
            warnings.append(f"line {lineno}: skipped corrupt entry ({exc})")
            continue
        certs.append(obj)
    return StoreContents(certs, warnings, n)


# ---------------------------------------------------------------------------
# verify: exact fields only


def verify_certificate(cert: dict) -> list[str]:
    """Problems found when re-checking the exact content of a certificate."""
    problems: list[str] = []

    def check(cond: bool, msg: str) -> None:
        if not cond:
            problems.append(msg)

    try:
        check(cert.get("digest") == certificate_digest(cert), "digest mismatch")
        curve = CurveSpec.from_json(cert["curve"])
        N = curve.conductor
        p = int(cert["p"])
        j = int(cert["j"])
        check(arith.is_prime(p), f"p = {p} is not prime")
        check(cert.get("in_family") == in_family(p, N), "family membership flag is wrong")
        if "hypothesis" in cert:
            stored = HypothesisCertificate.from_json(cert["hypothesis"])
            check(stored == verify_hypothesis(p, N), "hypothesis certificate does not recompute")
            check(cert["hypothesis"].get("valid") == stored.valid, "hypothesis validity flag is wrong")
        if "class_group" in cert:
            forms = reduced_forms(-p)
            h = int(cert["class_group"]["h"])
            check(h == len(forms), f"h_p = {h} but {len(forms)} reduced forms")
            check(h % 2 == 1, "even class number")
            check(math.prod(int(d) for d in cert["class_group"]["structure"]) == h, "structure does not multiply to h")
            check(1 <= j <= h, f"j = {j} out of range for h_p = {h}")
            if "involution" in cert and 1 <= j <= h:
                gf = QuadForm.from_json(cert["involution"]["gamma_form"])
                check(gf == forms[j - 1], "involution class is not the j-th reduced form")
                if "fixed_class" in cert:
                    ff = QuadForm.from_json(cert["fixed_class"]["form"])
                    check(ff.is_reduced and ff.disc == -p, "fixed form is not reduced of discriminant -p")
                    check(compose(ff, ff) == gf, "fixed class does not square to gamma")
                    check(ff == forms[int(cert["fixed_class"]["index"])], "fixed class index mismatch")
                    if "heegner_form" in cert:
                        hf = cert["heegner_form"]
                        f = QuadForm.from_json(hf["form"])
                        beta = int(hf["beta"])
                        check(f.disc == -p, "Heegner form has the wrong discriminant")
                        check(f.a % N == 0, "N does not divide a")
                        check((f.b - beta) % (2 * N) == 0, "b is not beta mod 2N")
                        check((beta * beta + p) % (4 * N) == 0, "beta^2 is not -p mod 4N")
                        check(reduce(f) == ff, "Heegner form is not in the fixed class")
        if "manin_c0" in cert:
            check(1 <= int(cert["manin_c0"]) <= 4, "Manin scaling outside 1..4")
        pt = cert.get("point")
        if pt and not pt.get("identity"):
            from .analytic.recognize import RecognizedPoint

            rp = RecognizedPoint.from_json(pt)
            exact = on_curve_quadratic(curve, rp.x, rp.y_rational_part, rp.y_radical_part, p)
            check(exact and rp.on_curve_exact, "recognized point is not on the curve")
            ht = cert.get("height")
            if ht and rp.is_rational:
                P = RationalPoint(rp.x, rp.y_rational_part, curve)
                check(ht["torsion"] == is_torsion(P), "torsion flag disagrees with the exact order test")
    except (KeyError, ValueError, TypeError, IndexError, HeegnerKitError) as exc:
        problems.append(f"malformed certificate: {type(exc).__name__}: {exc}")
    return problems


# ---------------------------------------------------------------------------
# report


def siegel_statistic(h: int, p: int) -> float:
    return math.log(h) / math.log(p)


def report_rows(certs: list[dict], drop: int = 0) -> dict[str, list[dict]]:
    """Rows grouped by curve label, sorted by p, without the ``drop`` smallest primes.

    Each row carries the Siegel statistic and the running median up to it.
    """
    groups: dict[str, dict[int, dict]] = {}
    for c in certs:
        label = c["curve"].get("label") or "?"
        groups.setdefault(label, {})[int(c["p"])] = c  # later entries supersede earlier ones
    out: dict[str, list[dict]] = {}
    for label in sorted(groups):
        rows, stats = [], []
        for p in sorted(groups[label])[drop:]:
            c = groups[label][p]
            h = int(c["class_group"]["h"]) if "class_group" in c else None
            stat = siegel_statistic(h, p) if h else None
            if stat is not None:
                stats.append(stat)
            ht = c.get("height") or {}
            pt = c.get("point")
            rows.append(
                {
                    "p": p,
                    "h": h,
                    "j": int(c["j"]),
                    "status": c.get("status"),
                    "fixed_form": c.get("fixed_class", {}).get("form"),
                    "manin_c0": c.get("manin_c0"),
                    "point": None if not pt or pt.get("identity") else [pt["x"], pt["y_rational_part"], pt["y_radical_part"]],
                    "hhat": float.fromhex(ht["hhat"]) if ht.get("hhat") else None,
                    "siegel": stat,
                    "running_median": statistics.median(stats) if stats else None,
                }
            )
        out[label] = rows
    return out


def siegel_median(rows: list[dict]) -> float | None:
    stats = [r["siegel"] for r in rows if r["siegel"] is not None]
    return statistics.median(stats) if stats else None


def format_report(groups: dict[str, list[dict]]) -> str:
    lines = []
    for label, rows in groups.items():
        lines.append(f"curve {label}: {len(rows)} certificate(s)")
        lines.append(f"  {'p':>8} {'h':>5} {'j':>3} {'status':>9} {'c0':>3} {'log h/log p':>11} {'median':>7}  point / hhat")
        for r in rows:
            stat = "-" if r["siegel"] is None else f"{r['siegel']:.4f}"
            med = "-" if r["running_median"] is None else f"{r['running_median']:.4f}"
            pt = "-" if r["point"] is None else f"x={r['point'][0]} y={r['point'][1]}+{r['point'][2]}*sqrt(-p)"
            if r["hhat"] is not None:
                pt += f" hhat={r['hhat']:.10f}"
            lines.append(
                f"  {r['p']:>8} {r['h'] if r['h'] is not None else '-':>5} {r['j']:>3} {str(r['status']):>9} "
                f"{r['manin_c0'] or '-':>3} {stat:>11} {med:>7}  {pt}"
            )
        med = siegel_median(rows)
        if med is not None:
            lines.append(f"  median log h_p / log p = {med:.4f} over {len(rows)} primes")
    return "\n".join(lines)
