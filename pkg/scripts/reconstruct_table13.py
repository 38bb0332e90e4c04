#!/usr/bin/env python3
"""Derivation printout for the empirical_t13 scenario cells.

The arraignment study behind that scenario published only group sizes and
two-decimal rates: sizes 13,396 (black) / 6,604 (white); success base
rates .89 / .94 (success = no arrest for a violent crime, so the failure
rates are .11 / .06); FNR .49 / .93; FPR .24 / .02.  Cells are rebuilt by
rounding N * rate at each step.  Rerun this script to regenerate the
numbers the catalog and the acceptance suite assert against.
"""

from __future__ import annotations

from fairlens.confusion import derive_quantities
from fairlens.feasibility import table_from_rates


def derive(group: str, n: int, success_rate: float, fnr: float, fpr: float) -> None:
    fail_rate = 1.0 - success_rate
    failures = round(n * fail_rate)
    successes = n - failures
    fn = round(fnr * failures)
    fp = round(fpr * successes)
    table = table_from_rates(n, fail_rate, fnr, fpr)
    assert table.cells() == (failures - fn, fn, fp, successes - fp)
    q = derive_quantities(table)
    print(f"{group}: N = {n}, failure rate = {fail_rate:.2f}")
    print(f"  failures  = round({n} * {fail_rate:.2f}) = {failures}")
    print(f"  fn        = round({fnr:.2f} * {failures}) = {fn}  -> tp = {failures - fn}")
    print(f"  fp        = round({fpr:.2f} * {successes}) = {fp}  -> tn = {successes - fp}")
    print(f"  cells (tp, fn, fp, tn) = {table.cells()}")
    print(f"  realized: NPV = {q.success_pred_accuracy:.4f}, FNR = {q.fnr:.4f}, "
          f"FPR = {q.fpr:.4f}")
    if table.fp >= table.fn:
        print(f"  fp:fn = {table.fp / table.fn:.4f}")
    else:
        print(f"  fn:fp = {table.fn / table.fp:.4f}")
    print()


if __name__ == "__main__":
    derive("black", 13396, success_rate=0.89, fnr=0.49, fpr=0.24)
    derive("white", 6604, success_rate=0.94, fnr=0.93, fpr=0.02)
