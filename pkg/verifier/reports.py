"""Report files: CSV tables through pandas and the plain-text sweep summary."""

import logging
import os
from datetime import datetime
from typing import Dict, Iterable, List, Mapping, Optional

import pandas as pd

logger = logging.getLogger(__name__)


def report_date() -> str:
    return datetime.now().strftime('%Y-%m-%d')


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in text).strip("_") or "system"


def violations_frame(reports) -> pd.DataFrame:
    rows = []
    for report in reports:
        data = report.to_dict()
        location = data["location"]
        rows.append({
            "party": data["party"],
            "kind": report.kind,
            "location_kind": location["kind"],
            "location": location.get("state", location.get("transition")),
            "clause": data["clause"],
            "witness_trace": ";".join(data["witness_trace"]),
        })
    return pd.DataFrame(rows, columns=["party", "kind", "location_kind", "location", "clause", "witness_trace"])


def conflicts_frame(findings) -> pd.DataFrame:
    rows = [
        {
            "state": f.state,
            "first": str(f.pair[0]),
            "second": str(f.pair[1]),
            "derivation": " > ".join(f.derivation.rules),
            "trace": ";".join(d for d in f.to_dict()["trace"]),
        }
        for f in findings
    ]
    return pd.DataFrame(rows, columns=["state", "first", "second", "derivation", "trace"])


def save_frame(frame: pd.DataFrame, command: str, system: str, reports_dir: str = "reports",
               date: Optional[str] = None) -> str:
    """Writes `<command>_<system>_<date>.csv` into the reports directory"""
    os.makedirs(reports_dir, exist_ok=True)
    path = os.path.join(reports_dir, f"{command}_{_slug(system)}_{date or report_date()}.csv")
    frame.to_csv(path, index=False)
    logger.info(f"📄 Report saved to: {path}")
    return path


def write_summary_report(title: str, rows: Iterable[Mapping], reports_dir: str = "reports",
                         notes: Optional[List[str]] = None, settings: Optional[Dict] = None,
                         date: Optional[str] = None) -> str:
    """Plain-text summary of a sweep, one line per check"""
    date = date or report_date()
    os.makedirs(reports_dir, exist_ok=True)
    report_path = os.path.join(reports_dir, f"summary_report_{date}.txt")
    rows = list(rows)
    lines = [
        "",
        f"📊 {title}",
        "=" * 60,
        f"📅 Date: {date}",
    ]
    for key, value in (settings or {}).items():
        lines.append(f"{key}: {value}")
    lines += ["", "🔍 CHECKS:", "-" * 60]
    for row in rows:
        mark = {"confirmed": "✅", "refuted": "❌"}.get(row["outcome"], "📝")
        lines.append(f"{mark} {row['check']}: {row['outcome']} ({row['cases']} cases, {row['counterexamples']} counterexamples)")
    if notes:
        lines += ["", "📝 NOTES:", "-" * 60] + notes
    lines += ["", f"🕒 Completed at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}", ""]
    report = "\n".join(lines)
    with open(report_path, 'w', encoding='utf-8') as f:
        f.write(report)
    logger.info("\n" + report)
    logger.info(f"📄 Summary report saved to: {report_path}")
    return report_path
