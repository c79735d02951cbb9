from typing import List, Optional

from pydantic import BaseModel, Field

from .inference import Method
from .models import CensoredSample, Direction, Target
from .smoothing import BoundaryMode


class Observation(BaseModel):
    time: float = Field(ge=0)
    event: bool


class SampleIn(BaseModel):
    observations: List[Observation]

    def to_sample(self) -> CensoredSample:
        return CensoredSample.from_observations(self.observations)


class GrenanderRequest(SampleIn):
    target: Target
    direction: Optional[Direction] = None
    end: Optional[float] = None


class MonotoneEstimateRead(BaseModel):
    target: Target
    direction: Direction
    breakpoints: List[float]
    slopes: List[float]


class SmoothRequest(GrenanderRequest):
    bandwidth: float = Field(gt=0)
    grid: List[float] = Field(min_length=1)
    boundary: BoundaryMode = BoundaryMode.NONE
    kernel: str = "triweight"


class SmoothPoint(BaseModel):
    x: float
    value: float


class SmoothRead(BaseModel):
    bandwidth: float
    boundary: BoundaryMode
    points: List[SmoothPoint]


class BandwidthRead(BaseModel):
    scenario: str
    x0: float
    n: int
    c_opt: float
    bandwidth: float
    mu: float
    sigma2: float


class IntervalRequest(GrenanderRequest):
    x0: float
    method: Method = Method.GRENANDER_CHERNOFF
    alpha: float = Field(default=0.05, gt=0, lt=1)
    c: Optional[float] = Field(default=None, gt=0)
    strict: bool = False


class IntervalRead(BaseModel):
    center: float
    lower: float
    upper: float
    length: float
    method: Method
    target: Target
    x0: float
    alpha: float
