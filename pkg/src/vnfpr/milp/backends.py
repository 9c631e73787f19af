"""Solver backends: the embedded branch-and-bound or an external LP-file solver."""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from pathlib import Path
from typing import Mapping

from .bnb import solve_lp, solve_mip
from .lpfile import export_lp_file, import_solution
from .model import MilpModel, MipSolution, SolverLimits, relax

EXTERNAL_SOLVER_ENV = "VNFPR_EXTERNAL_SOLVER"


class EmbeddedBackend:
    name = "embedded"

    def __init__(self, lp_method: str = "highs"):
        self.lp_method = lp_method

    def solve_lp(self, model: MilpModel) -> MipSolution:
        return solve_lp(model, self.lp_method)

    def solve_mip(
        self, model: MilpModel, limits: SolverLimits | None = None, incumbent: Mapping[str, float] | None = None
    ) -> MipSolution:
        return solve_mip(model, limits, lp_method=self.lp_method, incumbent=incumbent)


class ExternalBackend:
    """Runs a command that reads an LP file and writes a ``status``/``name value`` listing.

    The command template comes from ``$VNFPR_EXTERNAL_SOLVER`` unless given and
    may use the placeholders ``{lp}``, ``{sol}`` and ``{time_limit}``.
    """

    name = "external"

    def __init__(self, command: str | None = None, timeout: float | None = None):
        command = command or os.environ.get(EXTERNAL_SOLVER_ENV)
        if not command:
            raise RuntimeError(f"external backend needs a command; set ${EXTERNAL_SOLVER_ENV}")
        self.command = command
        self.timeout = timeout

    def _run(self, model: MilpModel, limits: SolverLimits | None) -> MipSolution:
        time_limit = limits.max_seconds if limits and limits.max_seconds else 0
        with tempfile.TemporaryDirectory(prefix="vnfpr-") as tmp:
            lp_path, sol_path = Path(tmp) / "model.lp", Path(tmp) / "model.sol"
            lp_path.write_text(export_lp_file(model))
            argv = shlex.split(self.command.format(lp=lp_path, sol=sol_path, time_limit=time_limit))
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout)
            if proc.returncode != 0:
                raise RuntimeError(f"external solver failed ({proc.returncode}): {proc.stderr.strip()[:500]}")
            if not sol_path.exists():
                raise RuntimeError("external solver wrote no solution file")
            return import_solution(model, sol_path.read_text())

    def solve_lp(self, model: MilpModel) -> MipSolution:
        return self._run(relax(model), None)

    def solve_mip(
        self, model: MilpModel, limits: SolverLimits | None = None, incumbent: Mapping[str, float] | None = None
    ) -> MipSolution:
        return self._run(model, limits)


def get_backend(name: str = "embedded", **kwargs) -> EmbeddedBackend | ExternalBackend:
    if name == "embedded":
        return EmbeddedBackend(**kwargs)
    if name == "external":
        return ExternalBackend(**kwargs)
    raise ValueError(f"unknown backend {name!r}")
