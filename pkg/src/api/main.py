import logging

import uvicorn
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from helpers.config import settings
from helpers.errors import NsMatvecError
from helpers.logs import setup_logging
from routers import bench, task, version
from version import __version__

setup_logging(settings.log_level, settings.log_file)

LOG = logging.getLogger(__name__)
LOG.info("API is starting up")
LOG.info(uvicorn.Config.asgi_version)

app = FastAPI(
    title="NS-MATVEC API",
    version=__version__,
)

origins = [
    "*",
]

app.add_middleware(
    CORSMiddleware,
    allow_origins=origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(NsMatvecError)
async def library_error_handler(request: Request, exc: NsMatvecError):
    LOG.warning(f"{request.url.path}: {type(exc).__name__}: {exc}")
    return JSONResponse(status_code=400, content={"detail": str(exc), "error": type(exc).__name__})


app.include_router(task.router)
app.include_router(version.router)
app.include_router(bench.router)
