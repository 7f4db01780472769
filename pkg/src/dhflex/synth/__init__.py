from .generator import GenSpec, defaultMetas, generate  # noqa: F401
