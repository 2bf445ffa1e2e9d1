import numpy as np
from humps import camel
from pydantic import BaseModel, ConfigDict


class BaseSchema(BaseModel):
    """Report payloads, serialized with camelCase keys."""

    model_config = ConfigDict(
        alias_generator=camel.case,
        populate_by_name=True,
        from_attributes=True,
    )

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


class ArrayModel(BaseModel):
    """Immutable domain value wrapping numpy arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def as_float_matrix(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    return arr
