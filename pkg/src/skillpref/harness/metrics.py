"""Deterministic CSV persistence for every metric family.

One file per family inside an output directory. A sink truncates each
file it touches on first append (so re-running a command reproduces the
file byte for byte) and appends in order afterwards, writing the header
exactly once. Floats are formatted with repr, which round-trips.
"""

from __future__ import annotations

from pathlib import Path

RUN_HEADER = ("step", "return_gt", "return_hat", "feedback_used", "disting_ratio", "match_rate")
PROP1_HEADER = ("delta", "c", "mc_var", "probit_var")
MATCHRATE_HEADER = ("bucket_lo", "bucket_hi", "match_rate", "n")
DISTINGUISH_HEADER = ("method", "seed", "disting_ratio")
ABLATION_HEADER = ("pretrain", "selection", "surf", "final_return_gt", "feedback_used")


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class MetricsSink:
    """Per-directory CSV writer; append-only within one sink's lifetime."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._headers: dict[str, tuple[str, ...]] = {}

    def path(self, family: str) -> Path:
        return self.out_dir / f"{family}.csv"

    def append(self, family: str, header: tuple[str, ...], rows) -> Path:
        path = self.path(family)
        known = self._headers.get(family)
        if known is None:
            self._headers[family] = tuple(header)
            path.write_text(",".join(header) + "\n")
        elif known != tuple(header):
            raise ValueError(f"family {family!r} already has a different header")
        with path.open("a") as f:
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"row width {len(row)} != header width {len(header)}")
                f.write(",".join(format_cell(v) for v in row) + "\n")
        return path


def run_rows(metrics) -> list[tuple]:
    return [
        (r.step, r.return_gt, r.return_hat, r.feedback_used, r.disting_ratio, r.match_rate)
        for r in metrics.rows
    ]


def prop1_rows(sweeps) -> list[tuple]:
    return [
        (row.delta, row.c, row.mc_var, row.probit_var)
        for sweep in sweeps
        for row in sweep.rows
    ]


def matchrate_rows(buckets) -> list[tuple]:
    return [(b.bucket_lo, b.bucket_hi, b.match_rate, b.n) for b in buckets]


def distinguish_rows(result) -> list[tuple]:
    rows = [
        ("skill", seed, ratio)
        for seed, ratio in zip(result.seeds, result.skill_by_seed)
    ]
    rows += [
        ("disagreement", seed, ratio)
        for seed, ratio in zip(result.seeds, result.disagreement_by_seed)
    ]
    return rows


def ablation_rows(cells, last: int = 10) -> list[tuple]:
    return [
        (
            cell.pretrain_on,
            cell.selection,
            cell.surf,
            cell.metrics.final_return_gt(last=last),
            cell.metrics.feedback_used,
        )
        for cell in cells
    ]
