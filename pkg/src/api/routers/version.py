import numpy
import psutil
import scipy
from fastapi import APIRouter
from fastapi.responses import JSONResponse

from helpers.config import settings
from version import __version__

router = APIRouter(prefix="/version",
    tags=["version"],)


@router.get("/")
def get_version():
    return JSONResponse(content={"version": __version__})


@router.get("/runtime")
def get_runtime():
    """Library versions and compute resources a benchmark result depends on."""
    memory = psutil.virtual_memory()
    return JSONResponse(content={
        "version": __version__,
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "threads": settings.threads,
        "cpu_count": psutil.cpu_count(logical=True),
        "memory_total_gb": round(memory.total / 1024 ** 3, 2),
        "oracle_cap": settings.oracle_cap,
        "coupling_memory_cap_gb": round(settings.coupling_memory_cap / 1024 ** 3, 2),
    })
