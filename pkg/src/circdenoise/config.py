"""Run configuration for the denoising pipeline.

DenoiseConfig mirrors the JSON accepted by the bench harness field-for-field,
so everything here must stay plain-serializable.
"""

from dataclasses import dataclass, field, fields, asdict

from .errors import NotPowerOfTwoError, DimsError, FormatError

_SIGMA_SOURCES = ("user", "baseline", "external")


@dataclass(frozen=True)
class AdaptiveConfig:
    """Knobs for per-subimage noise adjustment."""

    adjust_factor: float = 1.2     # divisor applied when a group looks clean
    rank_threshold: int = 13       # adjust when the alternating eigenvalue ranks <= this
    tile: int = 256                # square subimage edge; edge remainders merge into the last tile
    sample_groups: int = 16        # groups sampled per subimage for the vote


@dataclass(frozen=True)
class DenoiseConfig:
    patch_size: int = 8
    group_size: int = 32           # must be a power of two (Haar order)
    search_radius: int = 18        # candidate window is (2*search_radius + 1)^2
    stride_ref: int = 4
    stride_inner: int = 1
    use_gcp: bool = True           # green-channel distance rule for 3-channel sRGB input
    gcp_gamma: float = 1.2
    sigma: float | None = None     # 0-255 scale; required when sigma_source == "user"
    sigma_source: str = "user"
    external_sigmas: tuple[float, ...] | None = None  # one per tile, row-major
    adaptive: bool = False
    adaptive_cfg: AdaptiveConfig = field(default_factory=AdaptiveConfig)
    basis_per_tile: bool | None = None  # None -> train per tile exactly when adaptive
    threads: int = 1
    seed: int = 0

    def validate(self) -> None:
        k = self.group_size
        if not isinstance(k, int) or k < 2 or (k & (k - 1)) != 0:
            raise NotPowerOfTwoError(f"group_size must be a power of two >= 2, got {k!r}")
        if self.patch_size < 2:
            raise DimsError(f"patch_size must be >= 2, got {self.patch_size}")
        if self.search_radius < 0 or self.stride_ref < 1 or self.stride_inner < 1:
            raise DimsError("search_radius must be >= 0 and strides >= 1")
        if self.sigma_source not in _SIGMA_SOURCES:
            raise DimsError(f"sigma_source must be one of {_SIGMA_SOURCES}")
        if self.sigma_source == "user" and self.sigma is None:
            raise DimsError("sigma_source 'user' requires an explicit sigma")
        if self.sigma is not None and not self.sigma >= 0:
            raise DimsError(f"sigma must be >= 0, got {self.sigma}")
        if self.sigma_source == "external" and not self.external_sigmas:
            raise DimsError("sigma_source 'external' requires external_sigmas")
        if self.threads < 1:
            raise DimsError(f"threads must be >= 1, got {self.threads}")
        a = self.adaptive_cfg
        if a.adjust_factor <= 0 or a.rank_threshold < 1 or a.tile < self.patch_size:
            raise DimsError("invalid adaptive configuration")
        if a.sample_groups < 1:
            raise DimsError("sample_groups must be >= 1")

    @property
    def basis_scope_per_tile(self) -> bool:
        if self.basis_per_tile is None:
            return self.adaptive
        return self.basis_per_tile


def config_to_dict(cfg: DenoiseConfig) -> dict:
    d = asdict(cfg)
    if d.get("external_sigmas") is not None:
        d["external_sigmas"] = list(d["external_sigmas"])
    return d


def config_from_dict(d: dict) -> DenoiseConfig:
    d = dict(d)
    known = {f.name for f in fields(DenoiseConfig)}
    unknown = set(d) - known
    if unknown:
        raise FormatError(f"unknown config fields: {sorted(unknown)}")
    if "adaptive_cfg" in d and isinstance(d["adaptive_cfg"], dict):
        d["adaptive_cfg"] = AdaptiveConfig(**d["adaptive_cfg"])
    if d.get("external_sigmas") is not None:
        d["external_sigmas"] = tuple(float(x) for x in d["external_sigmas"])
    return DenoiseConfig(**d)
