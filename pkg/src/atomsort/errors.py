"""Exception types shared across the package."""


class AtomsortError(Exception):
    """Base class for package-specific failures."""


class InfeasibleTargetError(AtomsortError):
    """Raised when the loss-aware sizing formula yields an empty target zone."""


class PlanConsistencyError(AtomsortError):
    """Raised when replaying a plan hits an impossible lattice state.

    This always signals a bug in the planner or in batch bookkeeping, never
    a legitimate runtime condition: transport loss can only empty cells, so a
    destination can never be found occupied unless the plan itself is wrong.
    """
