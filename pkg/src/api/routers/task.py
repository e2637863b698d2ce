import json

from celery.result import AsyncResult, GroupResult
from fastapi import APIRouter
from fastapi.responses import JSONResponse

from calculations.calculations import app as celery_app

router = APIRouter(prefix="/task",
    tags=["task"],)

TERMINAL_STATUSES = frozenset({"SUCCESS", "FAILURE", "REVOKED"})


def _result_payload(result):
    """Rows pass through as JSON; exceptions and other objects as text."""
    value = result.result
    try:
        json.dumps(value)
        return value
    except (TypeError, ValueError):
        return str(value)


def _group_payload(group_id: str, group_result: GroupResult) -> dict:
    tasks = [
        {
            "task_id": res.id,
            "task_status": res.status,
            "task_result": _result_payload(res),
        }
        for res in group_result.results
    ]
    failure = next((t for t in tasks if t["task_status"] == "FAILURE"), None)
    completed = group_result.completed_count()

    if failure:
        status = "FAILURE"
    elif completed == len(tasks):
        status = "SUCCESS"
    else:
        status = "PENDING"

    rows = [
        row
        for t in tasks
        if t["task_status"] == "SUCCESS" and isinstance(t["task_result"], list)
        for row in t["task_result"]
    ]
    return {
        "group_id": group_id,
        "tasks": tasks,
        "completed": completed,
        "total": len(tasks),
        "status": status,
        "rows": rows,
        "task_result": failure["task_result"] if failure else None,
    }


@router.get("/{task_id}")
def get_status(task_id):
    task_result = AsyncResult(task_id, app=celery_app)
    return JSONResponse({
        "task_id": task_id,
        "task_status": task_result.status,
        "task_result": _result_payload(task_result),
    })


@router.get("/group/{task_id}")
def get_group_status(task_id):
    group_result = GroupResult.restore(task_id, app=celery_app)
    if group_result is not None:
        return JSONResponse(_group_payload(task_id, group_result))

    # an ablation launch task resolves to the group it started
    task_result = AsyncResult(task_id, app=celery_app)
    raw = task_result.result
    if task_result.status == "SUCCESS" and isinstance(raw, dict) and raw.get("group_id"):
        resolved = GroupResult.restore(raw["group_id"], app=celery_app)
        if resolved is not None:
            return JSONResponse(_group_payload(raw["group_id"], resolved))

    status = task_result.status
    return JSONResponse({
        "group_id": task_id,
        "tasks": [{"task_id": task_id, "task_status": status, "task_result": _result_payload(task_result)}],
        "completed": 1 if status in TERMINAL_STATUSES else 0,
        "total": 1,
        "status": status,
        "rows": [],
        "task_result": str(raw) if status == "FAILURE" else None,
    })
