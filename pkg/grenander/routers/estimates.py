from typing import Optional

from fastapi import APIRouter, HTTPException, Query

from .. import schemas
from ..asymptotics import oracle_c_opt, oracle_moments
from ..inference import default_end
from ..isotonic import grenander_estimate
from ..models import DEFAULT_DIRECTION, SCENARIOS
from ..smoothing import get_kernel, smooth_curve

router = APIRouter(prefix="/estimates", tags=["estimates"])


def _fit(request: schemas.GrenanderRequest):
    sample = request.to_sample()
    direction = request.direction or DEFAULT_DIRECTION[request.target]
    end = default_end(sample, request.target) if request.end is None else request.end
    return grenander_estimate(sample, request.target, direction, end)


@router.post("/grenander", response_model=schemas.MonotoneEstimateRead)
def grenander(request: schemas.GrenanderRequest):
    estimate = _fit(request).estimate
    return schemas.MonotoneEstimateRead(
        target=request.target,
        direction=estimate.direction,
        breakpoints=estimate.breakpoints.tolist(),
        slopes=estimate.slopes.tolist(),
    )


@router.post("/smooth", response_model=schemas.SmoothRead)
def smooth(request: schemas.SmoothRequest):
    estimate = _fit(request).estimate
    points = smooth_curve(estimate, get_kernel(request.kernel), request.bandwidth, request.grid, request.boundary)
    return schemas.SmoothRead(
        bandwidth=request.bandwidth,
        boundary=request.boundary,
        points=[schemas.SmoothPoint(x=x, value=v) for x, v in points],
    )


@router.get("/bandwidth/{scenario}", response_model=schemas.BandwidthRead)
def bandwidth(scenario: str, x0: Optional[float] = None, n: Optional[int] = Query(default=None, ge=1)):
    named = SCENARIOS.get(scenario)
    if named is None:
        raise HTTPException(status_code=404, detail="Scenario not found")
    kernel = get_kernel("triweight")
    x0 = named.reference_point if x0 is None else x0
    n = n or named.spec.n
    c = oracle_c_opt(named, x0, kernel)
    moments = oracle_moments(named, x0, c, kernel)
    return schemas.BandwidthRead(
        scenario=scenario, x0=x0, n=n, c_opt=c, bandwidth=c * n ** (-1 / 5), mu=moments.mu, sigma2=moments.sigma2
    )
