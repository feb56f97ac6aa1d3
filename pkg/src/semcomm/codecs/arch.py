"""Architecture presets."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..errors import ConfigError


@dataclass(frozen=True)
class ArchConfig:
    dim: int = 32
    heads: int = 4
    layers: int = 2
    ff_dim: int = 64
    channel_widths: tuple[int, ...] = (64, 16)
    nam_hidden: tuple[int, int] | None = None
    use_nam: bool = True
    max_len: int = 16

    def __post_init__(self):
        if self.dim < 1 or self.heads < 1 or self.layers < 1 or self.ff_dim < 1:
            raise ConfigError(f"architecture sizes must be positive: {self}")
        if self.dim % self.heads:
            raise ConfigError(f"heads ({self.heads}) must divide dim ({self.dim})")
        if not self.channel_widths or min(self.channel_widths) < 1:
            raise ConfigError(f"channel widths must be non-empty and positive: {self.channel_widths}")
        if self.max_len < 1:
            raise ConfigError("max_len must be >= 1")

    @property
    def symbols_per_token(self) -> int:
        return self.channel_widths[-1]


PRESETS: dict[str, ArchConfig] = {
    "toy": ArchConfig(),
    # 3 layers x 8 heads at width 128, channel stack 256 -> 128, NAM widths 56/128
    "reference": ArchConfig(
        dim=128, heads=8, layers=3, ff_dim=512, channel_widths=(256, 128), nam_hidden=(56, 128), max_len=32
    ),
    "tiny": ArchConfig(dim=8, heads=2, layers=1, ff_dim=12, channel_widths=(12, 6), max_len=6),
}


def preset(name: str, **overrides) -> ArchConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown architecture preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(base, **overrides) if overrides else base
