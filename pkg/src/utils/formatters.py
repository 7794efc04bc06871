"""
Text and JSON formatting of complex values, records and suite summaries.
"""
from typing import Any, Dict, Iterable, List


def complex_pair(z: complex) -> List[float]:
    """[re, im] of a complex scalar."""
    z = complex(z)
    return [z.real, z.imag]


def pair_to_complex(pair: Iterable[float]) -> complex:
    re, im = pair
    return complex(float(re), float(im))


def format_record(record: Dict[str, Any]) -> str:
    """One report line: status, experiment, repetition, check, measured vs threshold."""
    measured = record["measured"]
    measured = "n/a" if measured is None else f"{measured:.3e}"
    line = (
        f"[{record['status'].upper():4}] {record['experiment']} #{record['repetition']} "
        f"{record['check']}: {measured} (threshold {record['threshold']:.1e})"
    )
    if record.get("message"):
        line += f" - {record['message']}"
    return line


def format_summary(summary: Dict[str, int], records: Iterable[Dict[str, Any]]) -> str:
    """
    Human-readable summary of a suite run.

    Args:
        summary: Counts of pass, fail and warn records
        records: Report records as dictionaries

    Returns:
        Formatted multi-line string
    """
    records = list(records)
    output = [f"# krylovlab: {len(records)} checks"]
    experiments: Dict[str, List[Dict[str, Any]]] = {}
    for record in records:
        experiments.setdefault(record["experiment"], []).append(record)

    for name, items in experiments.items():
        failed = sum(1 for r in items if r["status"] == "fail")
        output.append(f"\n## {name} ({len(items) - failed}/{len(items)} passed)")
        for record in items:
            output.append(format_record(record))

    output.append(f"\npass: {summary['pass']}  warn: {summary['warn']}  fail: {summary['fail']}")
    return "\n".join(output)
