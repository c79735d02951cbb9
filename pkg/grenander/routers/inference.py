from fastapi import APIRouter

from .. import schemas
from ..inference import Method, compute_interval

router = APIRouter(prefix="/inference", tags=["inference"])


@router.post("/ci", response_model=schemas.IntervalRead)
def confidence_interval(request: schemas.IntervalRequest):
    options = {"direction": request.direction, "end": request.end}
    if request.strict and request.method is Method.SG_BIAS_ESTIMATE:
        options["strict"] = True
    ci = compute_interval(
        request.method, request.to_sample(), request.target, request.x0, request.c, request.alpha, **options
    )
    return schemas.IntervalRead(length=ci.length, **ci.to_dict())
