"""Reading and writing instance, aggregation, scenario and result documents."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from backend.src.models.domain import Aggregation, SystemInstance
from backend.src.models.schemas import AggregationDocument, InstanceDocument, ScenarioDocument
from backend.src.services.synthetic_service import generate_synthetic
from backend.src.utils.errors import InvalidInstance
from backend.src.utils.logger import Logger


logger: Logger = Logger(__name__)


def write_json_atomic(path: str | Path, data: Any) -> Path:
    """Write JSON through a temp file and ``os.replace`` so readers never see a partial file."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(f".{target.name}.{os.getpid()}.tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, ensure_ascii=False)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)
    finally:
        try:
            if tmp.exists():
                tmp.unlink()
        except OSError:
            pass
    return target


def _read_text(path: str | Path) -> str:
    p = Path(path)
    if not p.is_file():
        raise InvalidInstance(f"file not found: {p}")
    return p.read_text(encoding="utf-8")


def _parse(model: type, path: str | Path) -> Any:
    try:
        return model.model_validate_json(_read_text(path))
    except ValidationError as e:
        raise InvalidInstance(f"{path}: {e.error_count()} validation error(s)\n{e}") from e


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------
def load_instance(path: str | Path) -> SystemInstance:
    doc: InstanceDocument = _parse(InstanceDocument, path)
    instance = doc.to_instance()
    logger.info("instance loaded", path=str(path), hours=instance.n_hours)
    return instance


def save_instance(instance: SystemInstance, path: str | Path) -> Path:
    return write_json_atomic(path, InstanceDocument.from_instance(instance).model_dump())


# ---------------------------------------------------------------------------
# Aggregations
# ---------------------------------------------------------------------------
def load_aggregation(path: str | Path, instance: SystemInstance | None = None) -> Aggregation:
    doc: AggregationDocument = _parse(AggregationDocument, path)
    names = instance.generator_names if instance is not None else None
    return doc.to_aggregation(names)


def save_aggregation(agg: Aggregation, instance: SystemInstance, path: str | Path) -> Path:
    doc = AggregationDocument.from_aggregation(agg, instance.generator_names)
    return write_json_atomic(path, doc.model_dump())


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------
def load_scenario_document(path: str | Path) -> ScenarioDocument:
    return _parse(ScenarioDocument, path)


def resolve_instance(doc: ScenarioDocument, base_dir: str | Path | None = None) -> SystemInstance:
    """The scenario's instance; relative paths resolve against ``base_dir``."""
    source = doc.instance
    if source.synthetic is not None:
        s = source.synthetic
        return generate_synthetic(s.profile, s.hours, s.regions, s.seed, cyclic=s.cyclic)
    path = Path(source.path)
    if not path.is_absolute() and base_dir is not None:
        path = Path(base_dir) / path
    return load_instance(path)
