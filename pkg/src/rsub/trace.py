from dataclasses import dataclass, field

CONVERGED = "converged"
ANCHOR_LOCAL_MIN = "anchor_local_min"
MAX_ITERS = "max_iters"
STATUSES = (CONVERGED, ANCHOR_LOCAL_MIN, MAX_ITERS)


@dataclass(frozen=True)
class AnchorInfo:
    """Indices of data aligned with the current iterate and their summed norm."""

    indices: tuple
    alpha: float


@dataclass
class FitTrace:
    """Per-iteration record of an iterative solver.

    ``energies[0]`` is the objective at the start point and ``energies[r+1]``
    the objective after step ``r``; ``step_norms[r]`` and ``anchor_events[r]``
    describe that step. ``iterates`` is filled only on request.
    """

    energies: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    anchor_events: list = field(default_factory=list)
    status: str = MAX_ITERS
    terminal_anchor: AnchorInfo | None = None
    boundary: bool = False
    iterates: list | None = None

    @property
    def iterations(self):
        return len(self.step_norms)

    @property
    def final_energy(self):
        return self.energies[-1]

    def record(self, energy, step_norm, anchor=None, iterate=None):
        self.energies.append(float(energy))
        self.step_norms.append(float(step_norm))
        self.anchor_events.append(anchor)
        if self.iterates is not None and iterate is not None:
            self.iterates.append(iterate.copy())

    def summary(self):
        return {
            "final_energy": self.final_energy,
            "iterations": self.iterations,
            "status": self.status,
            "boundary": self.boundary,
        }
