"""
Pydantic schemas for type distributions, calibrations and equilibria.
"""

from typing import List, Optional, Tuple
from pydantic import BaseModel, Field

from app.engine.games import Calibration, TypeDistribution, TypeGrid

TYPE_DISTRIBUTION_VERSION = 1


class TypeGridSchema(BaseModel):
    capitals: List[float]
    lambda_max: float = Field(..., ge=0)
    n_lambda: int = Field(..., ge=1)
    beliefs: List[int]


class TypeDistributionFile(BaseModel):
    """Exported type distribution; cells are (capital, belief), densities over the lambda grid"""
    schema_version: int = TYPE_DISTRIBUTION_VERSION
    grid: TypeGridSchema
    cell_weights: List[List[float]]
    lambda_density: List[List[List[float]]]
    population: float = Field(1.0, ge=0)

    @classmethod
    def from_distribution(cls, distribution: TypeDistribution) -> "TypeDistributionFile":
        return cls.model_validate(distribution.to_dict())

    def to_distribution(self) -> TypeDistribution:
        return TypeDistribution(
            grid=TypeGrid(
                capitals=tuple(self.grid.capitals),
                lambda_max=self.grid.lambda_max,
                n_lambda=self.grid.n_lambda,
                beliefs=tuple(self.grid.beliefs),
            ),
            cell_weights=self.cell_weights,
            lambda_density=self.lambda_density,
            population=self.population,
        )


class CalibrationOut(BaseModel):
    distribution: TypeDistributionFile
    strategy: List[Tuple[int, int]]
    residual: float
    action_weights: List[float]
    capital_marginal: List[float]
    belief_marginal: List[float]
    w1_to_target: Optional[float] = None

    @classmethod
    def from_calibration(cls, calibration: Calibration, w1_to_target: Optional[float] = None) -> "CalibrationOut":
        distribution = calibration.distribution
        return cls(
            distribution=TypeDistributionFile.from_distribution(distribution),
            strategy=list(calibration.strategy.actions),
            residual=calibration.residual,
            action_weights=calibration.action_weights.tolist(),
            capital_marginal=distribution.capital_marginal().tolist(),
            belief_marginal=distribution.belief_marginal().tolist(),
            w1_to_target=w1_to_target,
        )
