from __future__ import annotations

import asyncio
import functools
import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from numbers import Number

from rhlab.errors import PreconditionError, RhlabError
from rhlab.params import Params
from rhlab.resolvent import ASYMPTOTICS_COLUMNS, asymptotics_row, failed_row
from rhlab.table import SweepTable
from rhlab.weaktype import FAMILIES, WEAK_COLUMNS, weak_row

logger = logging.getLogger(__name__)


async def _rows(
    compute: Callable[[Params], dict],
    template: Params,
    M_list: Iterable[int],
    columns: Iterable[str],
    jobs: int,
    extra: dict | None = None,
) -> list[dict]:
    if jobs < 1:
        raise PreconditionError(f"jobs must be >= 1, got {jobs}")
    columns = tuple(columns)
    loop = asyncio.get_running_loop()
    semaphore = asyncio.Semaphore(jobs)

    with ThreadPoolExecutor(max_workers=jobs) as executor:

        async def one(M: int) -> dict:
            async with semaphore:
                try:
                    return await loop.run_in_executor(executor, compute, template.replace(M=M))
                except RhlabError as error:
                    logger.warning("sweep row M=%d failed: %s", M, error)
                    return failed_row(M, columns, error) | (extra or {})

        return await asyncio.gather(*(one(M) for M in sorted(set(M_list))))


async def weak_sweep(
    family: str,
    lam: Number,
    template: Params,
    M_list: Iterable[int],
    jobs: int = 1,
) -> SweepTable:
    if family not in FAMILIES:
        raise PreconditionError(f"unknown family {family!r}, expected one of {sorted(set(FAMILIES))}")
    compute = functools.partial(weak_row, family, lam=lam)
    rows = await _rows(compute, template, M_list, WEAK_COLUMNS, jobs, {"family": FAMILIES[family]})
    return SweepTable.merged(WEAK_COLUMNS, rows, name=f"weak_{FAMILIES[family]}")


async def asymptotics_sweep(
    lam: Number,
    beta0: Number,
    M_list: Iterable[int],
    template: Params,
    jobs: int = 1,
) -> SweepTable:
    compute = functools.partial(asymptotics_row, lam, beta0)
    rows = await _rows(compute, template, M_list, ASYMPTOTICS_COLUMNS, jobs)
    return SweepTable.merged(ASYMPTOTICS_COLUMNS, rows, name="asymptotics")
