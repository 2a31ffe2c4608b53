"""Report generation: JSON, text and HTML run reports, plus CSV artifacts."""

import csv
import html
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from src.utils import ensure_output_dir, round_sig, to_jsonable

REPORT_BASENAME = "report"


@dataclass
class CheckResult:
    """One PASS/FAIL verdict; passed None marks an informational entry that cannot fail."""

    name: str
    passed: Optional[bool]
    value: Any = None
    threshold: Optional[float] = None
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "threshold": self.threshold,
            "detail": self.detail,
        }

    @property
    def verdict(self) -> str:
        if self.passed is None:
            return "INFO"
        return "PASS" if self.passed else "FAIL"


@dataclass
class RunReport:
    """Result of one command: config echo, numbers, verdicts and the files written."""

    command: str
    config_echo: dict[str, Any]
    config_digest: str
    results: dict[str, Any] = field(default_factory=dict)
    checks: list[CheckResult] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(check.passed is not False for check in self.checks)

    def add_check(
        self, name: str, passed: bool, value: Any = None, threshold: Optional[float] = None, detail: str = ""
    ) -> CheckResult:
        check = CheckResult(name, bool(passed), value, threshold, detail)
        self.checks.append(check)
        return check

    def add_info(self, name: str, value: Any = None, detail: str = "") -> CheckResult:
        check = CheckResult(name, None, value, None, detail)
        self.checks.append(check)
        return check

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config_echo,
            "config_digest": self.config_digest,
            "results": self.results,
            "checks": [check.to_dict() for check in self.checks],
            "summary": {
                "passed": self.passed,
                "n_checks": len(self.checks),
                "n_failed": sum(check.passed is False for check in self.checks),
            },
            "artifacts": sorted(self.artifacts),
            "wall_time": self.wall_time,
        }


def report_json(report: RunReport) -> str:
    """Deterministic JSON: sorted keys, 12 significant digits, complex as [re, im], non-finite as null."""
    return json.dumps(to_jsonable(report.to_dict()), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(value: Any) -> str:
    if isinstance(value, complex):
        imag = _fmt(value.imag)
        return f"{_fmt(value.real)}{'' if imag[0] in '+-' else '+'}{imag}i"
    if isinstance(value, float):
        rounded = round_sig(value)
        return f"{value:g}" if rounded is None else f"{rounded:.12g}"
    if value is None:
        return "-"
    return str(value)


def _eigenvalue_rows(report: RunReport) -> list[tuple[int, complex, str]]:
    spectrum = report.results.get("spectrum") or {}
    values = spectrum.get("eigenvalues") or []
    labels = spectrum.get("labels") or [""] * len(values)
    return [(n, complex(v), label) for n, (v, label) in enumerate(zip(values, labels), start=1)]


def report_text(report: RunReport) -> str:
    """Human-readable table: one row per eigenvalue (if any) and one per check."""
    lines = [
        f"eup-spectra {report.command}  (config {report.config_digest})",
        "",
    ]
    eigen_rows = _eigenvalue_rows(report)
    if eigen_rows:
        lines.append(f"{'n':>3}  {'eigenvalue':>44}  label")
        for n, value, label in eigen_rows:
            lines.append(f"{n:>3}  {_fmt(value):>44}  {label}")
        lines.append("")
    lines.append(f"{'check':<40} {'result':<6} {'value':>22} {'threshold':>12}")
    for check in report.checks:
        lines.append(
            f"{check.name:<40} {check.verdict:<6} {_fmt(check.value):>22} {_fmt(check.threshold):>12}"
        )
    lines.append("")
    for path in sorted(report.artifacts):
        lines.append(f"artifact: {path}")
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'}")
    lines.append(f"wall_time: {report.wall_time:.3f} s")
    return "\n".join(lines) + "\n"


def report_html(report: RunReport) -> str:
    """Single-page HTML with the check table and eigenvalues."""
    html_parts = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'><title>eup-spectra report</title>",
        "<style>",
        "body { font: 14px/1.4 monospace; max-width: 70rem; margin: 1rem auto; }",
        "table { border-collapse: collapse; margin-bottom: 1rem; }",
        "th { text-align: left; border-bottom: 2px solid #444; }",
        "td, th { padding: 2px 10px; }",
        "tr.PASS td:nth-child(2) { color: #060; } tr.FAIL td:nth-child(2) { color: #b00; font-weight: bold; }",
        "tr.INFO td:nth-child(2) { color: #555; }",
        "pre.config { background: #eee; padding: 6px; }",
        "</style></head><body>",
        f"<h1>eup-spectra {_html_escape(report.command)}</h1>",
        f"<p><strong>Config:</strong> {_html_escape(report.config_digest)} | "
        f"<strong>Overall:</strong> {'PASS' if report.passed else 'FAIL'} | "
        f"<strong>Wall time:</strong> {report.wall_time:.3f} s</p>",
    ]
    eigen_rows = _eigenvalue_rows(report)
    if eigen_rows:
        html_parts.append("<h2>Eigenvalues</h2><table><tr><th>n</th><th>E</th><th>label</th></tr>")
        for n, value, label in eigen_rows:
            html_parts.append(f"<tr><td>{n}</td><td>{_html_escape(_fmt(value))}</td><td>{_html_escape(label)}</td></tr>")
        html_parts.append("</table>")
    html_parts.append("<h2>Checks</h2><table><tr><th>check</th><th>result</th><th>value</th><th>threshold</th><th>detail</th></tr>")
    for check in report.checks:
        verdict = check.verdict
        html_parts.append(
            f"<tr class='{verdict}'><td>{_html_escape(check.name)}</td><td>{verdict}</td>"
            f"<td>{_html_escape(_fmt(check.value))}</td><td>{_html_escape(_fmt(check.threshold))}</td>"
            f"<td>{_html_escape(check.detail)}</td></tr>"
        )
    html_parts.append("</table>")
    if report.artifacts:
        html_parts.append("<h2>Artifacts</h2><ul>")
        for path in sorted(report.artifacts):
            html_parts.append(f"<li>{_html_escape(path)}</li>")
        html_parts.append("</ul>")
    html_parts.append("<h2>Configuration</h2>")
    html_parts.append(
        f"<pre class='config'>{_html_escape(json.dumps(to_jsonable(report.config_echo), sort_keys=True, indent=2))}</pre>"
    )
    html_parts.append("</body></html>")
    return "".join(html_parts)


def _html_escape(s: Any) -> str:
    """Escape for element text and single- or double-quoted attributes."""
    return html.escape(str(s), quote=True) if s else ""


_RENDERERS = {"json": report_json, "text": report_text, "html": report_html}
_SUFFIXES = {"json": ".json", "text": ".txt", "html": ".html"}


def emit_report(report: RunReport, fmt: str, out_dir: Path) -> Path:
    """Write report.<ext> under out_dir and return its path; IO errors echo the path."""
    if fmt not in _RENDERERS:
        raise ValueError(f"unknown report format {fmt!r}")
    ensure_output_dir(out_dir)
    output_path = out_dir / f"{REPORT_BASENAME}{_SUFFIXES[fmt]}"
    try:
        output_path.write_text(_RENDERERS[fmt](report), encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write report {output_path}: {e.strerror or e}") from e
    return output_path


def write_rows_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]], output_path: Path) -> None:
    """Header plus rows; floats at 17 significant digits so values survive a reload."""
    try:
        with open(output_path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(columns)
            for row in rows:
                w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    except OSError as e:
        raise OSError(f"cannot write {output_path}: {e.strerror or e}") from e
