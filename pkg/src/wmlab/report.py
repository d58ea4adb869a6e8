"""Plot-ready tables and summaries built from stored experiment records.

Everything here is a pure function of its inputs: the same records produce
byte-identical CSV, TSV and markdown output, and nothing ever writes back
to a record store.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

from .evaluation import PayoffMatrix, nash
from .experiment import describe
from .records import ExperimentRecord


def format_value(value: float) -> str:
    return f"{value:.10f}"


def matrix_to_csv(matrix: PayoffMatrix) -> str:
    """Payoff grid as CSV with the equilibrium in a footer comment line."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["defense"] + list(matrix.attack_params))
    for name, row in zip(matrix.defense_params, matrix.values):
        writer.writerow([name] + [format_value(v) for v in row])
    d_star, a_star, value = nash(matrix)
    buf.write(f"# nash: defense={matrix.defense_params[d_star]} "
              f"attack={matrix.attack_params[a_star]} "
              f"value={format_value(value)}\n")
    return buf.getvalue()


def nash_summary(matrix: PayoffMatrix) -> str:
    d_star, a_star, value = nash(matrix)
    return (f"equilibrium: defender plays {matrix.defense_params[d_star]}, "
            f"attacker answers {matrix.attack_params[a_star]}, "
            f"payoff {format_value(value)}")


def pareto_indices(points: list[tuple[float, float]]) -> list[int]:
    """Indices of the non-dominated points; lower is better on both axes.

    A point is dominated when some other point is no worse in both
    coordinates and strictly better in at least one.
    """
    keep = []
    for i, (xi, yi) in enumerate(points):
        dominated = False
        for j, (xj, yj) in enumerate(points):
            if j != i and xj <= xi and yj <= yi and (xj < xi or yj < yi):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return keep


def _defense_name(record: ExperimentRecord) -> str:
    return describe(record.scheme_id, record.scheme_params)


def _attack_name(record: ExperimentRecord) -> str:
    return describe(record.attack_id, record.attack_params)


def _cell_mark(record: ExperimentRecord) -> str:
    # infeasible attacks match the survey convention of a dash: the attack
    # was never actually run against this scheme
    if record.error and "AttackInfeasible" in record.error:
        return "-"
    return "✗" if record.success else "✓"


def _tsv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    lines = ["\t".join(header)] + ["\t".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _md_table(header: list[str], rows: list[list[str]]) -> str:
    out = ["| " + " | ".join(header) + " |",
           "|" + "|".join(" --- " for _ in header) + "|"]
    out += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(out)


def build_report(records: list[ExperimentRecord], out_dir: str | Path) -> Path:
    """Write report.md plus TSV plot data; returns the markdown path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = out / "report.md"
    if not records:
        report.write_text("# Robustness report\n\n"
                          "The record store is empty; nothing to report.\n",
                          encoding="utf-8")
        return report

    defenses: list[str] = []
    attacks: list[str] = []
    by_defense: dict[str, list[ExperimentRecord]] = {}
    for rec in records:
        dname, aname = _defense_name(rec), _attack_name(rec)
        if dname not in by_defense:
            defenses.append(dname)
            by_defense[dname] = []
        if aname not in attacks:
            attacks.append(aname)
        by_defense[dname].append(rec)

    embed_rows = []
    for dname in defenses:
        first = by_defense[dname][0]
        embed_rows.append([dname,
                           format_value(first.acc_unmarked),
                           format_value(first.acc_marked),
                           format_value(first.embedding_loss),
                           format_value(first.runtime_embed_s)])
    _tsv(out / "embedding_loss.tsv",
         ["defense", "acc_unmarked", "acc_marked", "embedding_loss",
          "runtime_embed_s"], embed_rows)

    # pareto flags are judged among the attacks each defense actually faced
    pareto_rows = []
    for dname in defenses:
        group = by_defense[dname]
        points = [(r.stealing_loss, r.wmacc_rescaled) for r in group]
        front = set(pareto_indices(points))
        for i, rec in enumerate(group):
            pareto_rows.append([dname, _attack_name(rec),
                                format_value(rec.stealing_loss),
                                format_value(rec.wmacc_rescaled),
                                str(int(rec.success)), str(int(i in front))])
    _tsv(out / "pareto.tsv",
         ["defense", "attack", "stealing_loss", "wmacc_rescaled", "success",
          "pareto"], pareto_rows)

    fastest_rows = []
    for dname in defenses:
        wins = [r for r in by_defense[dname] if r.success]
        if wins:
            best = min(wins, key=lambda r: r.runtime_attack_s)
            fastest_rows.append([dname, _attack_name(best),
                                 format_value(best.runtime_attack_s),
                                 str(best.query_count)])
        else:
            fastest_rows.append([dname, "none", "", ""])
    _tsv(out / "fastest_attack.tsv",
         ["defense", "attack", "runtime_s", "queries"], fastest_rows)

    marks: dict[tuple[str, str], str] = {}
    for dname in defenses:
        for rec in by_defense[dname]:
            marks.setdefault((dname, _attack_name(rec)), _cell_mark(rec))
    robust_rows = [[dname] + [marks.get((dname, aname), "-")
                              for aname in attacks] for dname in defenses]
    _tsv(out / "robustness.tsv", ["defense"] + attacks, robust_rows)

    body = ["# Robustness report", "",
            f"{len(records)} experiment records over {len(defenses)} "
            f"defenses and {len(attacks)} attacks.", "",
            "## Embedding losses", "",
            _md_table(["defense", "acc unmarked", "acc marked",
                       "embedding loss", "embed runtime s"], embed_rows), "",
            "## Fastest successful attack per defense", "",
            _md_table(["defense", "attack", "runtime s", "queries"],
                      fastest_rows), "",
            "## Robustness matrix",
            "",
            "✓ the watermark survived, ✗ the attack removed it, "
            "- the attack was infeasible against this deployment.", "",
            _md_table(["defense"] + attacks, robust_rows), "",
            "Scatter data for stealing loss against rescaled watermark "
            "accuracy, with per-defense Pareto flags, is in pareto.tsv.", ""]
    report.write_text("\n".join(body), encoding="utf-8")
    return report
