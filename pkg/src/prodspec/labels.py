import enum


class Label(str, enum.Enum):
    SPEC = "spec"
    NON_SPEC = "non_spec"

    @property
    def sign(self) -> int:
        return 1 if self is Label.SPEC else -1
