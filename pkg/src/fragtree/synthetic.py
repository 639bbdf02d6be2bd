"""Synthetic compounds with a planted fragmentation tree."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .builder import COMMON_LOSSES, Spectrum, build_compound
from .chem import DEFAULT_MASSES, Formula, within_ratios


@dataclass
class GeneratorConfig:
    mass_min: float = 150.0
    mass_max: float = 400.0
    fragments_min: int = 5
    fragments_max: int = 12
    mz_noise_ppm: float = 3.0        # standard deviation of the m/z error
    noise_peaks_min: int = 0
    noise_peaks_max: int = 3
    intensity_mu: float = 0.0        # log-normal intensities
    intensity_sigma: float = 1.0
    noise_intensity_shift: float = -1.0
    common_loss_prob: float = 0.7
    min_fragment_mass: float = 40.0
    min_peak_gap: float = 0.05       # Da, keeps fragment peaks apart

    def validate(self):
        problems = []
        if not 0 < self.mass_min < self.mass_max:
            problems.append("need 0 < mass_min < mass_max")
        if not 0 <= self.fragments_min <= self.fragments_max:
            problems.append("need 0 <= fragments_min <= fragments_max")
        if not 0 <= self.noise_peaks_min <= self.noise_peaks_max:
            problems.append("need 0 <= noise_peaks_min <= noise_peaks_max")
        if self.mz_noise_ppm < 0 or self.intensity_sigma < 0:
            problems.append("noise levels must be nonnegative")
        if not 0 <= self.common_loss_prob <= 1:
            problems.append("common_loss_prob must be in [0, 1]")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names - {"seed", "n", "ppm", "max_peaks"}
        if unknown:
            raise ValueError(f"unknown generator options {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in names}).validate()

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)


@dataclass
class PlantedFragment:
    formula: Formula
    parent: int | None     # index into the fragment list, None for the precursor
    mz: float
    intensity: float


@dataclass
class SyntheticCompound:
    spectrum: Spectrum
    truth: Formula
    fragments: list        # PlantedFragment, precursor first
    seed: int


_COMMON = [Formula.parse(f) for f in COMMON_LOSSES]


def _sample_precursor(rng, cfg, masses):
    for _ in range(10000):
        c = int(rng.integers(4, 26))
        n = int(rng.integers(0, 5))
        o = int(rng.integers(0, 9))
        p = int(rng.random() < 0.08)
        s = int(rng.random() < 0.12)
        h = int(rng.integers(max(2, c // 2), 2 * c + n + 3))
        if c - h / 2 + n / 2 + 1 < 0:
            continue
        f = Formula((c, h, n, o, p, s))
        if not within_ratios(f):
            continue
        if cfg.mass_min <= f.mass(masses) <= cfg.mass_max:
            return f
    raise RuntimeError("could not sample a precursor in the configured mass range")


def _random_loss(rng):
    if rng.random() < 0.5:
        return _COMMON[int(rng.integers(len(_COMMON)))]
    counts = (int(rng.integers(0, 4)), int(rng.integers(0, 7)), int(rng.random() < 0.2),
              int(rng.integers(0, 3)), 0, 0)
    return Formula(counts)


def generate_synthetic_compound(seed, config=None, masses=DEFAULT_MASSES):
    """Random precursor, random fragmentation tree, noisy peak list.

    Everything is drawn from one generator seeded with ``seed``.
    """
    cfg = (config or GeneratorConfig()).validate()
    rng = np.random.default_rng(seed)
    truth = _sample_precursor(rng, cfg, masses)
    want = int(rng.integers(cfg.fragments_min, cfg.fragments_max + 1))

    forms = [truth]
    parents = [None]
    frag_masses = [truth.mass(masses)]
    attempts = 0
    while len(forms) - 1 < want and attempts < 200 * (want + 1):
        attempts += 1
        pi = int(rng.integers(len(forms)))
        if rng.random() < cfg.common_loss_prob:
            loss = _COMMON[int(rng.integers(len(_COMMON)))]
        else:
            loss = _random_loss(rng)
        if loss.is_empty():
            continue
        try:
            child = forms[pi] - loss
        except ValueError:
            continue
        cm = child.mass(masses)
        if cm < cfg.min_fragment_mass or child in forms or child.rdbe < -0.5:
            continue
        if min(abs(cm - m) for m in frag_masses) < cfg.min_peak_gap:
            continue
        forms.append(child)
        parents.append(pi)
        frag_masses.append(cm)

    def noisy(m):
        return m * (1 + rng.normal(0.0, cfg.mz_noise_ppm) * 1e-6)

    fragments = []
    for f, p, m in zip(forms, parents, frag_masses):
        inten = float(np.exp(rng.normal(cfg.intensity_mu, cfg.intensity_sigma)))
        fragments.append(PlantedFragment(f, p, noisy(m), inten))
    precursor_mz = fragments[0].mz

    peaks = [(fr.mz, fr.intensity) for fr in fragments]
    n_noise = int(rng.integers(cfg.noise_peaks_min, cfg.noise_peaks_max + 1))
    for _ in range(n_noise):
        mz = float(rng.uniform(cfg.min_fragment_mass, precursor_mz - 1.0))
        inten = float(np.exp(rng.normal(cfg.intensity_mu + cfg.noise_intensity_shift,
                                        cfg.intensity_sigma)))
        peaks.append((mz, inten))
    peaks.sort(key=lambda p: -p[0])
    return SyntheticCompound(Spectrum(precursor_mz, peaks), truth, fragments, seed)


@dataclass
class CorpusSpec:
    """Everything needed to regenerate a synthetic corpus."""

    seed: int = 0
    n: int = 200
    ppm: float = 10.0
    max_peaks: int = 60
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)

    @classmethod
    def from_dict(cls, d):
        gen = GeneratorConfig.from_dict(d)
        spec = cls(int(d.get("seed", 0)), int(d.get("n", 200)), float(d.get("ppm", 10.0)),
                   int(d.get("max_peaks", 60)), gen)
        if spec.n < 0 or spec.ppm < 0 or spec.max_peaks < 1:
            raise ValueError("need n >= 0, ppm >= 0 and max_peaks >= 1")
        return spec

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {"seed": self.seed, "n": self.n, "ppm": self.ppm, "max_peaks": self.max_peaks,
                **self.generator.to_dict()}


def compound_name(i):
    return f"syn_{i:04d}"


def generate_corpus(spec, scoring=None):
    """Yield ``(SyntheticCompound, CompoundInstance)``; compound ``i`` uses seed ``spec.seed + i``."""
    for i in range(spec.n):
        sc = generate_synthetic_compound(spec.seed + i, spec.generator)
        inst = build_compound(sc.spectrum, spec.ppm, max_peaks=spec.max_peaks, scoring=scoring,
                              truth=sc.truth, name=compound_name(i))
        yield sc, inst
