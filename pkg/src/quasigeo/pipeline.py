"""End-to-end search for one weakly simple closed quasigeodesic.

The fast path flows sweep-out fibers and certifies the limits. If no fiber
yields a certificate, the bounded word search takes over.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .diskflow import DEFAULT_TOL_FLOW, FlowOutcome, iterate_flow, sweep_out_fibers
from .mesh import IntrinsicMesh
from .search import SearchConfig, search
from .verify import Certificate, check_word

DEFAULT_FLOW_ITER = 2000


@dataclass
class FindResult:
    certificate: Certificate | None
    source: str  # "flow", "search" or "none"
    fiber: int = -1
    complete: bool = True
    notes: list = field(default_factory=list)


def find_quasigeodesic(mesh: IntrinsicMesh, samples_per_face: int = 2, max_iter: int = DEFAULT_FLOW_ITER,
                       tol_flow: float = DEFAULT_TOL_FLOW, config: SearchConfig | None = None,
                       threads: int = 1, use_flow: bool = True) -> FindResult:
    """First certificate from flowing fibers, else from the bounded search."""
    notes = []
    bound = mesh.edge_sum
    if use_flow:
        fibers = sweep_out_fibers(mesh, samples_per_face=samples_per_face)

        def run(i: int) -> FlowOutcome:
            return iterate_flow(mesh, fibers[i].curve, tol_flow, max_iter)

        idx = list(range(len(fibers)))
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                outcomes = list(pool.map(run, idx))
        else:
            outcomes = []
            for i in idx:
                out = run(i)
                outcomes.append(out)
                if out.certificate is not None and out.certificate.length <= bound + 1e-9:
                    break
        for i, out in enumerate(outcomes):
            if out.certificate is not None and out.certificate.length <= bound + 1e-9:
                return FindResult(out.certificate, "flow", i, True, notes)
        notes.append(f"flow: {len(outcomes)} fibers, none certified")
    cfg = config or SearchConfig(max_solutions=1, threads=threads)
    res = search(mesh, cfg)
    if res.certificates:
        cert = res.certificates[0]
        again = check_word(mesh, cert.word)
        if isinstance(again, Certificate):
            return FindResult(again, "search", -1, res.complete, notes)
    notes.append("search exhausted its budget" if not res.complete else "search found nothing within its bounds")
    return FindResult(None, "none", -1, res.complete, notes)
