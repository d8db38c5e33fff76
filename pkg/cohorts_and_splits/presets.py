"""
presets.py — Desk-scale cohort specs shaped after two clinical reference cohorts.

derm6       gender × age (0-40 / 41-60 / 60+). Relative sizes follow the
            dermatology test-set subgroup counts; prevalences run from 0.063
            (female 0-40) to 0.377 (male 60+), the remaining four interpolated.
            Older women present atypically: their lesions barely move along
            the shared disease direction and show instead on a private one,
            which pooled training underweights.
derm6_shift derm6 structure with weaker separations and a different seed,
            used as the external-validation cohort.
oph8        gender × age (0-60 / 60+) × race (white / non-white). Relative
            sizes follow the ophthalmology test-set counts; prevalences span
            0.266 (young non-white males) to 0.769 (older non-white males),
            the other six interpolated from reference positive/test ratios.

Only the extremes quoted above come from reference figures; every other cell
is an interpolation. All presets total 1,200 samples and carry no demographic
offsets.
"""

from cohorts_and_splits.splits import largest_remainder
from cohorts_and_splits.synthetic import CohortSpec, SubgroupSpec
from shared_utils.errors import UnknownSpec
from shared_utils.subgroups import SubgroupKey

DESK_SCALE_TOTAL = 1200

# (key, reference test n, prevalence, separation, atypical)
_DERM6 = [
    (("female", "0-40"), 222, 0.063, 4.4, 0.0),
    (("female", "41-60"), 459, 0.120, 4.2, 0.0),
    (("female", "60+"), 248, 0.270, 0.5, 3.5),
    (("male", "0-40"), 166, 0.070, 4.6, 0.0),
    (("male", "41-60"), 415, 0.159, 4.3, 0.0),
    (("male", "60+"), 480, 0.377, 4.5, 0.0),
]

_OPH8 = [
    (("female", "0-60", "white"), 108, 0.343, 0.7, 0.0),
    (("female", "0-60", "non-white"), 109, 0.394, 0.8, 0.0),
    (("female", "60+", "white"), 266, 0.447, 1.1, 0.0),
    (("female", "60+", "non-white"), 131, 0.496, 0.9, 0.0),
    (("male", "0-60", "white"), 204, 0.377, 0.8, 0.0),
    (("male", "0-60", "non-white"), 226, 0.266, 0.6, 0.0),
    (("male", "60+", "white"), 472, 0.479, 1.2, 0.0),
    (("male", "60+", "non-white"), 110, 0.769, 1.0, 0.0),
]

_SHIFT_FACTORS = (0.7, 0.85, 0.8, 0.75, 0.9, 0.85)


def _build(rows, attribute_names, name, seed, factors=None, direction_seed=None) -> CohortSpec:
    sizes = largest_remainder(DESK_SCALE_TOTAL, [r[1] for r in rows])
    factors = factors or (1.0,) * len(rows)
    subgroups = tuple(
        SubgroupSpec(key=SubgroupKey(key), n=n, prevalence=prev, separation=sep * f, atypical=atyp * f)
        for (key, _, prev, sep, atyp), n, f in zip(rows, sizes, factors)
    )
    return CohortSpec(subgroups=subgroups, attribute_names=attribute_names, offset_scale=0.0, seed=seed,
                      name=name, direction_seed=direction_seed)


def preset_spec(name: str, seed: int = 2024) -> CohortSpec:
    if name == "derm6":
        return _build(_DERM6, ("gender", "age"), name, seed, direction_seed=seed)
    if name == "derm6_shift":
        return _build(_DERM6, ("gender", "age"), name, seed + 1, _SHIFT_FACTORS, direction_seed=seed)
    if name == "oph8":
        return _build(_OPH8, ("gender", "age", "race"), name, seed)
    raise UnknownSpec(f"unknown cohort preset {name!r}; expected derm6, derm6_shift or oph8")


paper_shaped_spec = preset_spec

PRESET_NAMES = ("derm6", "derm6_shift", "oph8")
