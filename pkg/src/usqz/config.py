"""key=value config files for tissue, PSF and display parameters.

Example:

    # tissue acoustic parameters
    lumen.echogenicity = 0.05
    lumen.attenuation_db_mhz_cm = 0.1
    lumen.scatterer_density = 1.0
    media.echogenicity = 0.6
    ...
    psf.axial_sigma = 2.0
    psf.lateral_sigma = 3.0
    psf.speed_of_sound_m_s = 1540.0
    dyn_range_db = 50.0
    radial_step_mm = 0.01
"""

from __future__ import annotations

from dataclasses import replace

from .grid import CLASS_NAMES, EXTERNAL, LUMEN, MEDIA
from .synth import (DEFAULT_DYN_RANGE_DB, DEFAULT_SPEED_OF_SOUND_M_S,
                    DEFAULT_TISSUE_PARAMS, PsfSpec, TissueClassParams,
                    TissueEchoParams)

_NAME_TO_CLASS = {name: cid for cid, name in CLASS_NAMES.items()}


def parse_config(path) -> dict:
    """Read a key=value file into a flat dict of floats."""
    out = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("%s:%d: expected key = value" % (path, lineno))
            key, value = (part.strip() for part in line.split("=", 1))
            out[key] = float(value)
    return out


def synthesis_settings(path=None, center_frequency_mhz: float = 20.0):
    """Resolve (TissueEchoParams, PsfSpec, dyn_range_db, radial_step_mm)
    from an optional config file, falling back to the frozen defaults."""
    cfg = parse_config(path) if path else {}
    classes = {}
    for cid in (LUMEN, MEDIA, EXTERNAL):
        base = DEFAULT_TISSUE_PARAMS[cid]
        name = CLASS_NAMES[cid]
        classes[cid] = TissueClassParams(
            echogenicity=cfg.get(name + ".echogenicity", base.echogenicity),
            attenuation_db_mhz_cm=cfg.get(name + ".attenuation_db_mhz_cm",
                                          base.attenuation_db_mhz_cm),
            scatterer_density=cfg.get(name + ".scatterer_density",
                                      base.scatterer_density))
    params = TissueEchoParams(classes)
    psf = PsfSpec(
        center_frequency_mhz=cfg.get("psf.center_frequency_mhz", center_frequency_mhz),
        speed_of_sound_m_s=cfg.get("psf.speed_of_sound_m_s", DEFAULT_SPEED_OF_SOUND_M_S),
        axial_sigma=cfg.get("psf.axial_sigma", 2.0),
        lateral_sigma=cfg.get("psf.lateral_sigma", 3.0))
    dyn = cfg.get("dyn_range_db", DEFAULT_DYN_RANGE_DB)
    radial_step = cfg.get("radial_step_mm", 0.01)
    return params, psf, dyn, radial_step


def with_frequency(psf: PsfSpec, center_frequency_mhz: float) -> PsfSpec:
    return replace(psf, center_frequency_mhz=center_frequency_mhz)
