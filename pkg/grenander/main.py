from contextlib import asynccontextmanager

import numpy as np
from fastapi import FastAPI, Request
from fastapi.encoders import jsonable_encoder
from fastapi.responses import JSONResponse

from .config import configure_logging
from .exceptions import GrenanderError
from .routers import estimates, inference


@asynccontextmanager
async def lifespan(app: FastAPI):
    configure_logging()
    yield


app = FastAPI(title="Smoothed Grenander estimation", lifespan=lifespan)


@app.exception_handler(GrenanderError)
async def grenander_error_handler(request: Request, exc: GrenanderError):
    body = jsonable_encoder(exc.to_dict(), custom_encoder={np.generic: lambda v: v.item()})
    return JSONResponse(status_code=422, content=body)


app.include_router(estimates.router)
app.include_router(inference.router)


@app.get("/healthz")
def health():
    return {"status": "ok"}
