"""
Exception hierarchy for the DWPI toolkit

Every error carries a machine-readable ``error_code``, a ``details`` dict and
the process exit code the CLI maps it to.
"""

from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_ACCEPTANCE = 3


class DWPIError(Exception):
    """Base exception for toolkit errors"""

    exit_code: int = EXIT_RUNTIME

    def __init__(
        self,
        message: str,
        error_code: str = "DWPI_ERROR",
        details: Optional[Dict[str, Any]] = None,
    ):
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": self.message,
            "error_code": self.error_code,
            "details": self.details,
        }


class ConfigurationError(DWPIError):
    """Invalid or missing configuration"""

    exit_code = EXIT_USAGE

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, error_code="CONFIG_ERROR", details=details)


class DimensionMismatchError(DWPIError):
    """Vectors of different objective counts were combined"""

    def __init__(self, expected: int, actual: int, what: str = "vector"):
        super().__init__(
            f"{what} has {actual} components, expected {expected}",
            error_code="DIMENSION_MISMATCH",
            details={"expected": expected, "actual": actual},
        )


class SimplexError(DWPIError):
    """A preference vector is not on the probability simplex"""

    def __init__(self, message: str, weights: Optional[Any] = None):
        super().__init__(
            message,
            error_code="SIMPLEX_INVALID",
            details={"weights": list(weights) if weights is not None else None},
        )


class LatticeError(DWPIError):
    """Simplex lattice parameters are not realisable"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, error_code="LATTICE_INVALID", details=details)


class SnapError(DWPIError):
    """A preference is too far from every lattice point to be snapped"""

    def __init__(self, distance: float, limit: float):
        super().__init__(
            f"Preference is {distance:.6g} from the nearest lattice point (limit {limit:.6g})",
            error_code="SNAP_FAILED",
            details={"distance": distance, "limit": limit},
        )


class InvalidActionError(DWPIError):
    """Action index outside the environment's action range"""

    def __init__(self, action: int, n_actions: int):
        super().__init__(
            f"Action {action} outside [0, {n_actions})",
            error_code="INVALID_ACTION",
            details={"action": action, "n_actions": n_actions},
        )


class OracleBudgetError(DWPIError):
    """Exhaustive oracle search exceeded its node budget"""

    def __init__(self, budget: int, env: str):
        super().__init__(
            f"Oracle search for '{env}' exceeded node budget {budget}",
            error_code="ORACLE_BUDGET_EXCEEDED",
            details={"budget": budget, "environment": env},
        )


class ArtifactError(DWPIError):
    """An artifact on disk is corrupt, of the wrong version or from another config"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, error_code="ARTIFACT_INVALID", details=details)


class EmptySplitError(DWPIError):
    """A required dataset split has no members"""

    def __init__(self, split: str):
        super().__init__(
            f"Split '{split}' is empty",
            error_code="EMPTY_SPLIT",
            details={"split": split},
        )


class NonFiniteInputError(DWPIError):
    """Non-finite values reached the inference model"""

    def __init__(self, values: Any):
        super().__init__(
            "Input contains non-finite values",
            error_code="NON_FINITE_INPUT",
            details={"values": [float(v) for v in values]},
        )


class DivergenceError(DWPIError):
    """Training produced a non-finite loss"""

    def __init__(self, epoch: int, loss: float):
        super().__init__(
            f"Training diverged at epoch {epoch} (loss={loss})",
            error_code="TRAINING_DIVERGED",
            details={"epoch": epoch, "loss": loss},
        )
        self.epoch = epoch


class BaselineError(DWPIError):
    """A baseline inference method could not produce a preference"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, error_code="BASELINE_FAILED", details=details)


class ReturnBoundsError(DWPIError):
    """An observed return lies outside the configured MWAL bounds"""

    def __init__(self, objective: int, value: float, low: float, high: float):
        super().__init__(
            f"Return {value:.6g} of objective {objective} outside bounds [{low:.6g}, {high:.6g}]",
            error_code="RETURN_BOUNDS_VIOLATED",
            details={"objective": objective, "value": value, "low": low, "high": high},
        )
        self.objective = objective


class AcceptanceError(DWPIError):
    """A requested acceptance assertion did not hold"""

    exit_code = EXIT_ACCEPTANCE

    def __init__(self, violations: list[str]):
        super().__init__(
            "Acceptance assertion failed: " + "; ".join(violations),
            error_code="ACCEPTANCE_FAILED",
            details={"violations": violations},
        )
        self.violations = violations
