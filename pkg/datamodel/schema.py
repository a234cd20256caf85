"""Feature schema of a cohort: continuous markers, categorical attributes and the regression target."""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

from datamodel.constants import ANIC_CATEGORICAL, ANIC_CONTINUOUS, ANIC_TARGET
from errors import SchemaError


@dataclass(frozen=True)
class ContinuousFeature:
    """A real valued feature and its unit."""

    name: str
    unit: str = ""


@dataclass(frozen=True)
class CategoricalFeature:
    """A categorical feature and its number of categories."""

    name: str
    cardinality: int


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered continuous and categorical features plus the target name."""

    continuous: Tuple[ContinuousFeature, ...]
    categorical: Tuple[CategoricalFeature, ...]
    target: str

    def __post_init__(self):
        """Validate name uniqueness, target membership and cardinalities."""
        names = self.feature_names
        duplicated = sorted({name for name in names if names.count(name) > 1})
        if duplicated:
            raise SchemaError(f"duplicated feature names: {', '.join(duplicated)}")
        if self.target not in self.continuous_names:
            raise SchemaError(
                f"target {self.target!r} must be one of the continuous features"
            )
        for feature in self.categorical:
            if feature.cardinality < 2:
                raise SchemaError(
                    f"categorical feature {feature.name!r} needs at least 2 categories"
                )

    @property
    def continuous_names(self) -> List[str]:
        """Continuous feature names in schema order."""
        return [feature.name for feature in self.continuous]

    @property
    def categorical_names(self) -> List[str]:
        """Categorical feature names in schema order."""
        return [feature.name for feature in self.categorical]

    @property
    def feature_names(self) -> List[str]:
        """All feature names, continuous first."""
        return self.continuous_names + self.categorical_names

    @property
    def cardinalities(self) -> List[int]:
        """Category counts in schema order."""
        return [feature.cardinality for feature in self.categorical]

    @property
    def target_index(self) -> int:
        """Column of the target inside the continuous block."""
        return self.continuous_names.index(self.target)

    @property
    def encoded_dim(self) -> int:
        """Width of the scaled continuous block plus every one-hot block."""
        return len(self.continuous) + sum(self.cardinalities)

    def to_dict(self) -> Dict:
        """Serialize to the schema json layout."""
        return {
            "continuous": [
                {"name": feature.name, "unit": feature.unit}
                for feature in self.continuous
            ],
            "categorical": [
                {"name": feature.name, "cardinality": feature.cardinality}
                for feature in self.categorical
            ],
            "target": self.target,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "FeatureSchema":
        """Build a schema from its json layout.

        :param data: {"continuous": [...], "categorical": [...], "target": name}
        :return: FeatureSchema
        """
        try:
            return cls(
                continuous=tuple(
                    ContinuousFeature(item["name"], item.get("unit", ""))
                    for item in data["continuous"]
                ),
                categorical=tuple(
                    CategoricalFeature(item["name"], int(item["cardinality"]))
                    for item in data.get("categorical", [])
                ),
                target=data["target"],
            )
        except (KeyError, TypeError, ValueError) as error:
            raise SchemaError(f"malformed schema document: {error}") from error


def anic_schema() -> FeatureSchema:
    """Schema of the nine biochemical markers and ten categorical attributes."""
    return FeatureSchema(
        continuous=tuple(ContinuousFeature(name, unit) for name, unit, _, _ in ANIC_CONTINUOUS),
        categorical=tuple(CategoricalFeature(name, count) for name, count in ANIC_CATEGORICAL),
        target=ANIC_TARGET,
    )


def load_schema(path: Path) -> FeatureSchema:
    """Load a schema json file.

    :param path:
    :return: FeatureSchema
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as error:
        raise SchemaError(f"cannot read schema {path}: {error}") from error
    return FeatureSchema.from_dict(data)


def save_schema(schema: FeatureSchema, path: Path) -> Path:
    """Write a schema json file.

    :param schema:
    :param path:
    :return: the written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(schema.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path
