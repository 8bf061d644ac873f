"""Machine-readable report files: versioned JSON plus lossless CSV flattening.

Complex numbers serialize as {"re": ..., "im": ...}; configuration radii and
tolerances are written as decimal strings so files never depend on locale.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from typing import Any

from . import __version__
from .identities import IdentityReport
from .orbit import CountingProfile, OrbitSample, WimanRadii

SCHEMA_VERSION = 1

CSV_FIELDS = [
    "identity_id",
    "lhs_re",
    "lhs_im",
    "rhs_re",
    "rhs_im",
    "abs_err",
    "rel_err",
    "tolerance",
    "pass",
    "xfail",
    "runtime_ms",
    "notes",
]


def cplx(value) -> Any:
    if value is None:
        return None
    c = complex(value)
    if c.imag == 0.0 and isinstance(value, (int, float)):
        return float(value)
    return {"re": c.real, "im": c.imag}


def jsonable(value) -> Any:
    """Recursively rewrite complex values (incl. numpy scalars) for JSON."""
    if isinstance(value, complex):
        return cplx(value)
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if hasattr(value, "item"):  # numpy scalar
        return jsonable(value.item())
    return value


def decimal_str(x) -> str:
    return repr(float(x))


def identity_to_dict(r: IdentityReport, xfail: bool = False) -> dict:
    return {
        "identity_id": r.identity_id,
        "inputs": jsonable(r.inputs),
        "lhs": cplx(r.lhs),
        "rhs": cplx(r.rhs),
        "abs_err": r.abs_err,
        "rel_err": r.rel_err,
        "tolerance": decimal_str(r.tolerance),
        "pass": r.passed,
        "xfail": xfail,
        "notes": r.notes,
        "runtime_ms": r.runtime_ms,
    }


def orbit_to_dict(s: OrbitSample, oracle_diff: float | None = None) -> dict:
    out = {
        "z": cplx(s.z),
        "R": decimal_str(s.R),
        "count": s.count,
        "points": [
            {"location": cplx(p), "multiplicity": m, "residual": res}
            for (p, m), res in zip(s.points, s.residuals)
        ],
        "warnings": list(s.warnings),
    }
    if oracle_diff is not None:
        out["oracle_max_distance"] = oracle_diff
    return out


def profile_to_dict(p: CountingProfile) -> dict:
    return {
        "z": cplx(p.z),
        "samples": [{"r": decimal_str(r), "n": n} for r, n in p.samples],
        "rho_hat": p.rho_hat,
        "upper_density": p.upper_density,
        "lower_density": p.lower_density,
        "degenerate_fit": p.degenerate,
    }


def wiman_to_dict(w: WimanRadii) -> dict:
    return {
        "rho": w.rho,
        "epsilon": w.epsilon,
        "radii": [
            {"r": decimal_str(r), "log_m": lm, "log_M": lM} for r, lm, lM in w.radii
        ],
    }


@dataclass
class ReportFile:
    """Everything one CLI invocation produced, ready to serialize."""

    command: str
    config: dict
    identities: list[dict] = field(default_factory=list)
    orbits: list[dict] = field(default_factory=list)
    profiles: list[dict] = field(default_factory=list)
    wiman: list[dict] = field(default_factory=list)
    started: float = field(default_factory=time.perf_counter)

    def add_identity(self, r: IdentityReport, xfail: bool = False) -> None:
        self.identities.append(identity_to_dict(r, xfail))

    @property
    def summary(self) -> dict:
        passed = sum(1 for r in self.identities if r["pass"])
        xfailed = sum(1 for r in self.identities if not r["pass"] and r["xfail"])
        failed = sum(1 for r in self.identities if not r["pass"] and not r["xfail"])
        return {"pass": passed, "fail": failed, "xfail": xfailed}

    @property
    def hard_failures(self) -> int:
        return self.summary["fail"]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "command": self.command,
            "config": self.config,
            "identities": self.identities,
            "orbits": self.orbits,
            "profiles": self.profiles,
            "wiman": self.wiman,
            "summary": self.summary,
            "wall_time_s": time.perf_counter() - self.started,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def to_csv(self) -> str:
        """Flatten the scalar fields of every identity report, one row each."""
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in self.identities:
            lhs = r["lhs"] if isinstance(r["lhs"], dict) else {"re": r["lhs"], "im": 0.0}
            rhs = r["rhs"] if isinstance(r["rhs"], dict) else {"re": r["rhs"], "im": 0.0}
            if r["lhs"] is None:
                lhs = {"re": "", "im": ""}
            if r["rhs"] is None:
                rhs = {"re": "", "im": ""}
            writer.writerow(
                {
                    "identity_id": r["identity_id"],
                    "lhs_re": lhs["re"],
                    "lhs_im": lhs["im"],
                    "rhs_re": rhs["re"],
                    "rhs_im": rhs["im"],
                    "abs_err": r["abs_err"],
                    "rel_err": r["rel_err"],
                    "tolerance": r["tolerance"],
                    "pass": r["pass"],
                    "xfail": r["xfail"],
                    "runtime_ms": r["runtime_ms"],
                    "notes": r["notes"],
                }
            )
        return buf.getvalue()

    def density_csv(self) -> str:
        """(r, n, log_m, log_M) rows for plotting, merging profile and Wiman data."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "n", "log_m", "log_M"])
        wiman_by_r = {}
        for w in self.wiman:
            for entry in w["radii"]:
                wiman_by_r[entry["r"]] = (entry["log_m"], entry["log_M"])
        for p in self.profiles:
            for s in p["samples"]:
                lm, lM = wiman_by_r.get(s["r"], ("", ""))
                writer.writerow([s["r"], s["n"], lm, lM])
        for w in self.wiman:
            for entry in w["radii"]:
                writer.writerow([entry["r"], "", entry["log_m"], entry["log_M"]])
        return buf.getvalue()

    def orbit_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "re", "im", "multiplicity", "residual"])
        for o in self.orbits:
            for i, pt in enumerate(o["points"]):
                loc = pt["location"]
                if not isinstance(loc, dict):
                    loc = {"re": loc, "im": 0.0}
                writer.writerow([i, loc["re"], loc["im"], pt["multiplicity"], pt["residual"]])
        return buf.getvalue()
