"""End-to-end runs: load, normalize, rescale, dead-end spaces, basis, cone suite."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ._version import __version__
from .basis import TAU_ORTH, TAU_RANK, extract_basis, range_basis, verify_contractions, verify_expansion
from .cone import (
    TAU_CONE,
    C_stability,
    build_context,
    endpoint_inequalities,
    equicontinuity_check,
    estimate_C,
    hypothesis_checks,
    verify_context,
    verify_decomposition,
)
from .deadend import build_deadend, valid_cone_grades, verify_diagonal_map, verify_multipliers, verify_inclusions
from .errors import ConfigError, KoetheError
from .koethe import koethe_from_config, normalize, verify_conditions
from .operator import operator_from_config, rescale_to_contraction, verify_half_contraction
from .reporting import plain

__all__ = ["STAGES", "DEMO_CONFIG", "PipelineConfig", "PipelineReport", "run_pipeline", "emit_plot_data", "dumps_report"]

STAGES = ("verify", "basis", "full")
STABILITY_SPREAD = 0.10

DEMO_CONFIG: dict[str, Any] = {
    "matrix": {"family": "geometric", "base": 4, "exponents": [0, 1, 3, 7], "N": 4},
    "operator": {"family": "coordinate-projection", "coords": [1, 2]},
    "seed": 0,
}

_KNOWN_KEYS = {"matrix", "operator", "tolerances", "cone", "samples", "cone_samples", "stability_seeds", "seed"}


@dataclass
class PipelineConfig:
    matrix: dict
    operator: dict
    tau_rank: float = TAU_RANK
    tau_orth: float = TAU_ORTH
    tau_cone: float = TAU_CONE
    grades: list[int] | None = None
    truncations: list[int] | None = None
    samples: int = 1000
    cone_samples: int = 200
    stability_seeds: int = 3
    seed: int = 0
    source: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], seed: int | None = None) -> "PipelineConfig":
        if not isinstance(doc, Mapping):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("matrix", "operator"):
            if not isinstance(doc.get(key), Mapping):
                raise ConfigError(f"config needs a {key!r} object")
        source = copy.deepcopy(dict(doc))
        if seed is not None:
            source["seed"] = int(seed)
        tol = doc.get("tolerances", {}) or {}
        cone = doc.get("cone", {}) or {}
        try:
            cfg = cls(
                matrix=dict(doc["matrix"]),
                operator=dict(doc["operator"]),
                tau_rank=float(tol.get("rank", TAU_RANK)),
                tau_orth=float(tol.get("orth", TAU_ORTH)),
                tau_cone=float(tol.get("cone", TAU_CONE)),
                grades=[int(r) for r in cone["grades"]] if "grades" in cone else None,
                truncations=[int(n) for n in cone["truncations"]] if "truncations" in cone else None,
                samples=int(doc.get("samples", 1000)),
                cone_samples=int(doc.get("cone_samples", 200)),
                stability_seeds=int(doc.get("stability_seeds", 3)),
                seed=int(source.get("seed", 0)),
                source=source,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        if cfg.samples < 1 or cfg.cone_samples < 1 or cfg.stability_seeds < 1:
            raise ConfigError("sample counts must be positive")
        return cfg

    @classmethod
    def load(cls, path: str | Path, seed: int | None = None) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc, seed)

    @property
    def digest(self) -> str:
        canon = json.dumps(self.source, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class PipelineReport:
    command: str
    sections: dict = field(default_factory=dict)
    error: dict | None = None
    basis: Any = field(default=None, repr=False)
    header: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.error is not None:
            return False
        return all(_section_passed(v) for v in self.sections.values())

    def to_dict(self) -> dict:
        out = dict(self.header)
        out["command"] = self.command
        out["passed"] = self.passed
        if self.error is not None:
            out["error"] = self.error
        out.update(self.sections)
        return plain(out)


# records kept for the reader that do not take part in the verdict
_INFORMATIONAL = {"input"}


def _section_passed(v) -> bool:
    """A sub-report with a ``passed`` flag is taken at its word; anything else is searched."""
    if isinstance(v, dict):
        if isinstance(v.get("passed"), bool):
            return v["passed"]
        return all(_section_passed(x) for k, x in v.items() if k not in _INFORMATIONAL)
    if isinstance(v, list):
        return all(_section_passed(x) for x in v)
    return True


def _default_truncations(N: int) -> list[int]:
    out = sorted({max(1, N // 2), max(1, (3 * N) // 4), N})
    return out


def run_pipeline(cfg: PipelineConfig, command: str = "full") -> PipelineReport:
    """Run the stages required by ``command`` in dependency order.

    A structural error in any stage stops the run and is recorded in
    ``report.error`` with the stage name.  Every suite draws from its own
    seed derived from ``cfg.seed``, so identical configs give identical
    reports.
    """
    if command not in STAGES:
        raise ConfigError(f"unknown command {command!r}")
    rep = PipelineReport(command)
    rep.header = {"tool": "koethelab", "version": __version__, "config_sha256": cfg.digest, "seed": cfg.seed}
    S = rep.sections
    stage = "load"

    def seed(*tag):
        return [cfg.seed, *tag]

    try:
        raw = koethe_from_config(cfg.matrix)
        stage = "normalize"
        cond = verify_conditions(raw)
        # the raw grid may fail; only the matrix actually used gates the run
        norm_sec = {"input": cond.to_dict()}
        if cond.passed:
            m = cond.matrix
            norm_sec["normalizer_applied"] = False
        else:
            m, log = normalize(raw)
            norm_sec["normalizer_applied"] = True
            norm_sec["log"] = log.to_dict()
            out_cond = verify_conditions(m)
            norm_sec["output"] = out_cond.to_dict()
            m = out_cond.matrix
        norm_sec["passed"] = bool(verify_conditions(m).passed)
        S["normalization"] = norm_sec

        stage = "operator"
        T = operator_from_config(cfg.operator, m, seed=cfg.seed)
        Tp, c = rescale_to_contraction(T)
        S["operator"] = {"scale_c": c, "half_contraction": verify_half_contraction(Tp, cfg.samples, seed(1)).to_dict()}

        stage = "deadend"
        dd = build_deadend(m)
        grades = valid_cone_grades(dd) if cfg.grades is None else cfg.grades
        S["deadend"] = {
            "constants": dd.to_dict(),
            "diagonal_map": verify_diagonal_map(Tp, dd, cfg.samples, seed(2)).to_dict(),
            "inclusions": verify_inclusions(m, dd, cfg.samples, seed(3)).to_dict(),
            "multipliers": [verify_multipliers(Tp, dd, r, cfg.samples, seed(4, r)).to_dict() for r in grades],
        }
        if command == "verify":
            return rep

        stage = "basis"
        sub = range_basis(Tp, cfg.tau_rank)
        e = extract_basis(sub, dd, cfg.tau_rank)
        rep.basis = e
        S["basis"] = {
            "d": e.d,
            "lambda": e.lam.tolist(),
            "multiplicities": list(e.multiplicities),
            "expansion": verify_expansion(Tp, e, cfg.samples, seed(5), cfg.tau_orth, cfg.tau_rank).to_dict(),
            "contractions": verify_contractions(Tp, e, cfg.samples, seed(6)).to_dict(),
        }
        if command == "basis":
            return rep

        stage = "cone"
        truncs = _default_truncations(m.N) if cfg.truncations is None else cfg.truncations
        cone_sec = []
        for r in grades:
            entry = {"r": r, "truncations": []}
            for Np in truncs:
                ctx = build_context(m, dd, Tp, r, Np)
                est = estimate_C(ctx, e, cfg.cone_samples, cfg.seed)
                entry["truncations"].append({
                    "Nprime": Np,
                    "context": verify_context(ctx).to_dict(),
                    "decomposition": verify_decomposition(ctx, cfg.samples, seed(7, r, Np), cfg.tau_cone).to_dict(),
                    "hypotheses": hypothesis_checks(ctx, cfg.cone_samples, seed(8, r, Np), cfg.tau_cone).to_dict(),
                    "endpoints": [
                        endpoint_inequalities(ctx, e, n, cfg.samples, seed(9, r, Np, n)).to_dict()
                        for n in range(1, e.d + 1)
                    ],
                    "C_estimate": est.to_dict(),
                })
            full_ctx = build_context(m, dd, Tp, r, m.N)
            C_full = estimate_C(full_ctx, e, cfg.cone_samples, cfg.seed).value
            if r + 3 <= m.K:
                entry["equicontinuity"] = equicontinuity_check(m, e, Tp, C_full, r, cfg.samples, seed(10, r)).to_dict()
            seeds = [cfg.seed + i for i in range(cfg.stability_seeds)]
            stab = C_stability(m, dd, Tp, e, r, truncs, seeds, cfg.cone_samples)
            stab["max_spread"] = STABILITY_SPREAD
            stab["passed"] = stab["spread"] <= STABILITY_SPREAD
            entry["C_stability"] = stab
            cone_sec.append(entry)
        S["cone"] = cone_sec
    except KoetheError as exc:
        rep.error = {"stage": stage, "type": type(exc).__name__, "message": str(exc)}
    return rep


def dumps_report(rep: PipelineReport, fmt: str = "json") -> str:
    doc = rep.to_dict()
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    lines = [
        f"koethelab {doc['version']}  command={doc['command']}  seed={doc['seed']}",
        f"config sha256 {doc['config_sha256']}",
    ]
    if "error" in doc:
        err = doc["error"]
        lines.append(f"ERROR in stage {err['stage']}: {err['type']}: {err['message']}")
    for path, check in _walk_checks(doc):
        flag = "PASS" if check["passed"] else "FAIL"
        lines.append(f"[{flag}] {path}/{check['name']}: worst {check['worst_ratio']!r} bound {check['bound']!r}")
    lines.append(f"overall: {'PASS' if doc['passed'] else 'FAIL'}")
    return "\n".join(lines) + "\n"


def _walk_checks(doc, path=""):
    if isinstance(doc, dict):
        if "checks" in doc and "name" in doc:
            for c in doc["checks"]:
                yield f"{path}", c
            return
        for k in sorted(doc):
            yield from _walk_checks(doc[k], f"{path}/{k}" if path else k)
    elif isinstance(doc, list):
        for i, x in enumerate(doc):
            yield from _walk_checks(x, f"{path}[{i}]")


def _write_series(path: Path, header: tuple[str, str], rows) -> Path:
    lines = ["\t".join(header)] + [f"{a}\t{b!r}" for a, b in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_plot_data(rep: PipelineReport, out_dir: str | Path) -> list[Path]:
    """Write one tab-separated series per file; nothing is written for a failed run."""
    if rep.error is not None:
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    S = rep.sections
    files = []
    if "basis" in S:
        lam = S["basis"]["lambda"]
        files.append(_write_series(out / "lambda.tsv", ("j", "lambda"), enumerate(lam, start=1)))
        vals = S["basis"]["contractions"]["values"]
        for key, fname in (
            ("worst_h1_ratio_by_n", "worst_h1_ratio_vs_n.tsv"),
            ("worst_hinf_ratio_by_n", "worst_hinf_ratio_vs_n.tsv"),
            ("max_rel_approx_error_by_n", "approx_error_vs_n.tsv"),
        ):
            files.append(_write_series(out / fname, ("n", key), enumerate(vals[key])))
    for entry in S.get("cone", []):
        r = entry["r"]
        rows = [(t["Nprime"], t["C_estimate"]["C_hat"]) for t in entry["truncations"]]
        files.append(_write_series(out / f"C_hat_r{r}_vs_Nprime.tsv", ("Nprime", "C_hat"), rows))
        if "equicontinuity" in entry:
            by_n = entry["equicontinuity"]["values"]["worst_ratio_by_n"]
            files.append(_write_series(out / f"equicontinuity_r{r}_vs_n.tsv", ("n", "worst_ratio"), enumerate(by_n, start=1)))
    return files
