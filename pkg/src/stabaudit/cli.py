"""Command-line interface: ``stabaudit {audit,generate,oracle,export-mps}``.

Exit codes: 0 success (whatever the audit found), 2 input/parse errors,
3 shape errors, 4 resource limits.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .certificates import (NoFlipPossible, NoFlipWithin, StabilityCertificate,
                           is_flipped, upper_certificate)
from .data import (Dataset, DiDPanel, binary_view, load_csv, load_did_csv, sha256_file, synth_2d,
                   synth_4d, write_csv)
from .exact_binary import audit_binary, binary_removal_set
from .exact_did import audit_did, did_refit_flips, did_removal_set
from .exceptions import MissingColumn, ParseError, ShapeError, SingularCovariance, TooLarge
from .influence import amip_upper_bound, greedy_resolve_upper_bound
from .linalg import ols_fit
from .miqcp import branch_and_bound, build_model, export_mps
from .oracle import brute_force_did, brute_force_stability
from .report import AuditReport, MethodEntry
from .spectral import spectral_lower_bound, verify_envelope_constants

log = logging.getLogger("stabaudit")

METHODS = ("amip", "greedy", "exact-binary", "exact-did", "spectral", "miqcp-frac", "miqcp-int", "oracle")
EXIT_OK, EXIT_PARSE, EXIT_SHAPE, EXIT_RESOURCE = 0, 2, 3, 4


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1e3


# ---------------------------------------------------------------------------
# Regression audits


class _Audit:
    """Runs the requested methods on a regression dataset, sharing the greedy warm start."""

    def __init__(self, ds: Dataset, args):
        self.ds = ds
        self.args = args
        self._greedy_result = None

    def greedy_result(self):
        if self._greedy_result is None:
            self._greedy_result = greedy_resolve_upper_bound(self.ds)
        return self._greedy_result

    def run(self, method: str):
        """Return ``(entries, skip_note)``."""
        t0 = time.perf_counter()
        fn = getattr(self, "_" + method.replace("-", "_"))
        return fn(t0)

    def _influence(self, name, res, t0):
        if isinstance(res, StabilityCertificate):
            return [MethodEntry.from_certificate(res, _ms(t0))], None
        return [MethodEntry(name, "upper", None, _ms(t0), notes=["no flipping removal set found"])], None

    def _amip(self, t0):
        return self._influence("amip", amip_upper_bound(self.ds), t0)

    def _greedy(self, t0):
        return self._influence("greedy", self.greedy_result(), t0)

    def _exact_binary(self, t0):
        try:
            view = binary_view(self.ds)
        except ShapeError as exc:
            return [], f"dataset is not a single binary treatment with intercept ({exc})"
        res = audit_binary(view)
        if isinstance(res, NoFlipPossible):
            return [MethodEntry("exact-binary", "exact", None, _ms(t0),
                                notes=["no removal keeping both groups flips the sign"])], None
        removed = binary_removal_set(view, res)
        try:
            cert = upper_certificate(self.ds, "exact-binary", removed, bound_type="exact")
            return [MethodEntry.from_certificate(cert, _ms(t0))], None
        except ValueError:
            return [MethodEntry("exact-binary", "lower", int(res), _ms(t0),
                                notes=["removal set did not re-verify by refit; reported as a lower bound"])], None

    def _exact_did(self, t0):
        return [], "exact-did needs a DiD panel (use --did)"

    def _spectral(self, t0):
        try:
            cert = spectral_lower_bound(self.ds)
        except SingularCovariance as exc:
            return [], f"spectral bound unavailable: {exc}"
        ok = verify_envelope_constants(self.ds, cert.C1, cert.C2, trials=1000, seed=self.args.seed)
        notes = [f"C1={cert.C1:.6g} C2={cert.C2:.6g} epsilon={cert.epsilon:.6g}",
                 f"envelope check on 1000 random directions: {'passed' if ok else 'FAILED'}"]
        return [MethodEntry("spectral", "lower", cert.lower_bound, _ms(t0), notes=notes)], None

    def _miqcp(self, mode: str, name: str, t0):
        g = self.greedy_result()
        seed = g.removed if isinstance(g, StabilityCertificate) else None
        model = build_model(self.ds, mode, self.args.beta_box)
        res = branch_and_bound(model, self.args.time_limit_s, warm_start=seed, method=name)
        notes = []
        if mode == "fractional" and res.dual_bound < 1.0 and not is_flipped(self.ds, ()):
            msg = "degenerate all-zero weight optimum; re-solved with sum(w) >= 1"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
            model = build_model(self.ds, mode, self.args.beta_box, safeguard=True)
            res = branch_and_bound(model, self.args.time_limit_s, warm_start=seed, method=name)
        notes.append(f"status={res.status} nodes={res.nodes} dual_bound={res.dual_bound:.6g}")
        if res.incumbent_value is not None and mode == "fractional":
            notes.append(f"attained fractional objective {res.incumbent_value:.6g}")
        lower = res.lower_certificate(name)
        entries = [MethodEntry.from_certificate(lower, _ms(t0), notes)]
        if res.certificate is not None:
            entries.append(MethodEntry.from_certificate(res.certificate, _ms(t0)))
        return entries, None

    def _miqcp_frac(self, t0):
        return self._miqcp("fractional", "miqcp-frac", t0)

    def _miqcp_int(self, t0):
        return self._miqcp("integral", "miqcp-int", t0)

    def _oracle(self, t0):
        max_k = self.ds.n if self.args.max_k is None else self.args.max_k
        try:
            res = brute_force_stability(self.ds, max_k, return_set=True)
        except TooLarge as exc:
            return [], f"oracle skipped: {exc}"
        if isinstance(res, NoFlipWithin):
            return [MethodEntry("oracle", "lower", res.max_k + 1, _ms(t0),
                                qualifiers=[f"no flip within {res.max_k} removals"])], None
        cert = upper_certificate(self.ds, "oracle", res[1], bound_type="exact")
        return [MethodEntry.from_certificate(cert, _ms(t0))], None


def _run_methods(runner, methods, parallel: bool, report: AuditReport):
    if parallel and len(methods) > 1:
        with ThreadPoolExecutor(max_workers=len(methods)) as pool:
            results = list(pool.map(runner.run, methods))
    else:
        results = [runner.run(m) for m in methods]
    for m, (entries, note) in zip(methods, results):
        for e in entries:
            report.add(e)
        if note:
            report.skip(m, note)


# ---------------------------------------------------------------------------
# DiD audits


class _DiDAudit:
    def __init__(self, panel: DiDPanel, args):
        self.panel = panel
        self.args = args
        self.view = panel.view()

    def _entry(self, name, k, ids, t0, bound_type="exact"):
        ok = did_refit_flips(self.panel.before, self.panel.after, self.panel.treated.astype(bool), ids)
        if not ok:
            return MethodEntry(name, "lower", int(k), _ms(t0),
                               notes=["removal set did not re-verify by refit; reported as a lower bound"])
        names = ", ".join(self.panel.ids[i] for i in ids)
        return MethodEntry(name, bound_type, int(k), _ms(t0), True, list(ids),
                           notes=[f"removed individuals: {names}"] if ids else [])

    def run(self, method: str):
        t0 = time.perf_counter()
        if method == "exact-did":
            res = audit_did(self.view)
            if isinstance(res, NoFlipPossible):
                return [MethodEntry("exact-did", "exact", None, _ms(t0),
                                    notes=["no removal keeping both groups flips the sign"])], None
            return [self._entry("exact-did", res, did_removal_set(self.view, res), t0)], None
        if method == "oracle":
            max_k = self.view.N if self.args.max_k is None else self.args.max_k
            try:
                res = brute_force_did(self.view, max_k, return_set=True)
            except TooLarge as exc:
                return [], f"oracle skipped: {exc}"
            if isinstance(res, NoFlipWithin):
                return [MethodEntry("oracle", "lower", res.max_k + 1, _ms(t0),
                                    qualifiers=[f"no flip within {res.max_k} removals"])], None
            return [self._entry("oracle", res[0], res[1], t0)], None
        return [], "not applicable to DiD panels (removals act on whole individuals)"


# ---------------------------------------------------------------------------
# Commands


def _parse_methods(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown method(s): {', '.join(unknown)}")
    return methods


def _load_regression(args) -> Dataset:
    if not args.target or not args.response:
        raise _UsageError("--target and --response are required with --data")
    return load_csv(args.data, args.target, args.response, intercept=args.intercept)


class _UsageError(Exception):
    pass


def cmd_audit(args) -> AuditReport:
    if (args.data is None) == (args.did is None):
        raise _UsageError("give exactly one of --data or --did")
    methods = args.methods
    if args.did is not None:
        panel = load_did_csv(args.did)
        X, y = panel.design()
        beta = ols_fit(X, y)
        descriptor = {"path": str(args.did), "sha256": sha256_file(args.did), "n": panel.N, "d": 4,
                      "target": "interaction"}
        report = AuditReport(descriptor, list(beta))
        _run_methods(_DiDAudit(panel, args), methods, args.parallel, report)
    else:
        ds = _load_regression(args)
        descriptor = {"path": str(args.data), "sha256": sha256_file(args.data), "n": ds.n, "d": ds.d,
                      "target": ds.target_name}
        report = AuditReport(descriptor, list(ds.beta_full))
        _run_methods(_Audit(ds, args), methods, args.parallel, report)
    report.check_invariants()
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
    sys.stdout.write(report.render_table())
    return report


def cmd_generate(args) -> None:
    ds = synth_2d(args.n, args.seed) if args.kind == "synth2d" else synth_4d(args.n, args.seed)
    write_csv(ds, args.out)
    print(f"wrote {args.kind} n={args.n} seed={args.seed} to {args.out}")


def cmd_oracle(args) -> int:
    ds = _load_regression(args)
    max_k = ds.n if args.max_k is None else args.max_k
    res = brute_force_stability(ds, max_k, return_set=True)
    if isinstance(res, NoFlipWithin):
        print(f"no flip within {res.max_k} removals (Stability > {res.max_k})")
    else:
        print(f"Stability = {res[0]}  removed rows: {list(res[1])}")
    return EXIT_OK


def cmd_export_mps(args) -> None:
    ds = _load_regression(args)
    model = build_model(ds, args.mode, args.beta_box, args.safeguard)
    export_mps(model, args.out)
    print(f"wrote {args.mode} model (n={model.n}, d={model.d}, B={model.B:.6g}) to {args.out}")


def _add_data_flags(p, *, did: bool = False):
    p.add_argument("--data", type=Path, help="regression CSV with a header row")
    if did:
        p.add_argument("--did", type=Path, help="DiD panel CSV with columns id,before,after,treated")
    p.add_argument("--target", help="name of the audited regressor column")
    p.add_argument("--response", help="name of the response column")
    p.add_argument("--intercept", action="store_true", help="append a constant regressor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stabaudit",
                                     description="Audit how many samples must be dropped to flip an OLS sign.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="run audit methods and write a JSON report")
    _add_data_flags(p, did=True)
    p.add_argument("--methods", type=_parse_methods, default=["amip", "greedy", "spectral"],
                   help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--time-limit-s", type=float, default=10.0, help="branch-and-bound budget per method")
    p.add_argument("--beta-box", type=float, default=None, help="coefficient box B for the bilinear programs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-k", type=int, default=None, help="oracle search depth")
    p.add_argument("--out", type=Path, default=None, help="JSON report path")
    p.add_argument("--parallel", action="store_true", help="run methods concurrently")

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("kind", choices=["synth2d", "synth4d"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("oracle", help="exact Stability by exhaustive search (small data)")
    _add_data_flags(p)
    p.add_argument("--max-k", type=int, default=None)

    p = sub.add_parser("export-mps", help="write the bilinear program in MPS format")
    _add_data_flags(p)
    p.add_argument("--mode", choices=["integral", "fractional"], default="integral")
    p.add_argument("--beta-box", type=float, default=None)
    p.add_argument("--safeguard", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "audit":
            cmd_audit(args)
        elif args.command == "generate":
            cmd_generate(args)
        elif args.command == "oracle":
            cmd_oracle(args)
        else:
            cmd_export_mps(args)
    except (ParseError, MissingColumn, _UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ShapeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
