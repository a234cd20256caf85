"""This file contains utility functions that are used in the application."""

import hashlib
import json
import re
from pathlib import Path
from typing import Any, List, Optional


def get_run_id(config: dict, prefix: str = "run") -> str:
    """Get a stable run identifier from a resolved configuration.

    :param config: json-serializable configuration
    :param prefix: human readable prefix
    :return: string
    """
    digest = hashlib.sha1(canonical_json(config).encode("utf-8")).hexdigest()[:10]
    return f"{sanitize_name(prefix)}-{digest}"


def sanitize_name(name: str) -> str:
    """Strip characters that are unsafe in file names.

    :param name:
    :return: string
    """
    return re.sub("[^A-Za-z0-9_-]+", "", name)


def canonical_json(data: Any) -> str:
    """Serialize with sorted keys so equal objects give equal bytes."""
    return json.dumps(data, sort_keys=True, indent=2)


def write_json(path: Path, data: Any) -> Path:
    """Write a json document, creating parent directories.

    :param path:
    :param data:
    :return: the written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(data) + "\n", encoding="utf-8")
    return path


def read_json(path: Path) -> Any:
    """Read a json document.

    :param path:
    :return: parsed document
    """
    return json.loads(Path(path).read_text(encoding="utf-8"))


def parse_list(value: Optional[str], cast=str) -> List:
    """Parse a comma separated flag value.

    :param value: e.g. "1,2,3"
    :param cast: element type
    :return: list
    """
    if value is None or value == "":
        return []
    if isinstance(value, (list, tuple)):
        return [cast(item) for item in value]
    return [cast(item.strip()) for item in str(value).split(",") if item.strip()]
