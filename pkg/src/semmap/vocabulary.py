"""Default 30-class object vocabulary.

Class id 0 is background and is not part of any vocabulary; vocabulary
entry ``k`` has class id ``k + 1``.
"""

BACKGROUND_ID = 0
BACKGROUND_NAME = "background"

DEFAULT_VOCABULARY = (
    "bottle", "cup", "knife", "bowl", "wine glass", "fork", "spoon", "banana",
    "apple", "orange", "cake", "potted plant", "mouse", "keyboard", "laptop",
    "cellphone", "book", "clock", "chair", "dining table", "couch", "bed",
    "toilet", "monitor", "microwave", "toaster", "refrigerator", "oven", "sink",
    "person",
)

# Furniture-scale classes used by the synthetic scene generator.
FURNITURE_CLASSES = (
    "chair", "dining table", "couch", "bed", "toilet", "monitor", "microwave",
    "refrigerator", "oven", "sink", "potted plant", "person",
)


def class_id(name: str, vocabulary=DEFAULT_VOCABULARY) -> int:
    if name == BACKGROUND_NAME:
        return BACKGROUND_ID
    try:
        return vocabulary.index(name) + 1
    except ValueError:
        raise KeyError(f"unknown class name {name!r}") from None


def class_name(cid: int, vocabulary=DEFAULT_VOCABULARY) -> str:
    if cid == BACKGROUND_ID:
        return BACKGROUND_NAME
    if not 1 <= cid <= len(vocabulary):
        raise KeyError(f"class id {cid} outside vocabulary of {len(vocabulary)} classes")
    return vocabulary[cid - 1]
