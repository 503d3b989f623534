from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from semmap.errors import EvaluationError
from semmap.geometry import Cuboid
from semmap.vocabulary import BACKGROUND_ID, DEFAULT_VOCABULARY


@dataclass(eq=False)
class ObjectMap:
    """A set of cuboids plus the class vocabulary they are labelled with."""

    objects: list[Cuboid] = field(default_factory=list)
    class_vocabulary: tuple[str, ...] = DEFAULT_VOCABULARY

    background_id = BACKGROUND_ID

    def __post_init__(self):
        self.objects = list(self.objects)
        self.class_vocabulary = tuple(self.class_vocabulary)
        if len(set(self.class_vocabulary)) != len(self.class_vocabulary):
            raise ValueError("class vocabulary names must be unique")
        n = len(self.class_vocabulary)
        for i, obj in enumerate(self.objects):
            if not 0 <= obj.class_id <= n:
                raise ValueError(f"object {i}: class id {obj.class_id} outside vocabulary")

    def __len__(self):
        return len(self.objects)

    def __iter__(self):
        return iter(self.objects)

    @property
    def n_classes(self) -> int:
        """Number of label slots including background."""
        return len(self.class_vocabulary) + 1

    @property
    def class_ids(self) -> np.ndarray:
        return np.array([o.class_id for o in self.objects], dtype=np.int64)

    @property
    def confidences(self) -> np.ndarray:
        return np.array([o.confidence for o in self.objects], dtype=np.float64)


def check_vocabulary(est: ObjectMap, gt: ObjectMap):
    if est.class_vocabulary != gt.class_vocabulary:
        raise EvaluationError("estimated and ground-truth maps use different class vocabularies")
