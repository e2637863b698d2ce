from celery import group

from calculations.benchmarks import (
    RunConfig,
    ablation_config,
    check_ablation_values,
    matvec_bench_task,
    pinned_config,
)
from calculations.calculations import app


def ablation_signatures(config: dict, axis: str, values: list):
    """One matvec task per ablation value, each carrying its fully pinned config."""
    check_ablation_values(values)
    cfg = pinned_config(RunConfig.model_validate(config))
    return [
        matvec_bench_task.s(ablation_config(cfg, axis, value).model_dump(), axis, float(value))
        for value in values
    ]


@app.task(name="launch_ablation", bind=True)
def launch_ablation(self, config: dict, axis: str, values: list):
    """Launch the ablation as a group and return its group id."""
    grp = group(ablation_signatures(config, axis, values)).apply_async()
    grp.save()
    return {"group_id": grp.id}
