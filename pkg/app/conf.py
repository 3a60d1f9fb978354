"""
Access to the numerical settings from library code.

Library modules may be imported without a configured Django project (for
example from a notebook), so every lookup falls back to the defaults below.
"""
import os

from django.conf import ENVIRONMENT_VARIABLE, settings

DEFAULTS = {
    'CLEBSCH_TOL_REL': 1e-12,
    'CLEBSCH_BLOWUP_CAP': 1e12,
    'CLEBSCH_QUAD_TOL': 1e-10,
    'CLEBSCH_QUAD_LIMIT': 200,
    'CLEBSCH_DEGENERACY_TOL': 1e-10,
    'CLEBSCH_LEAF_TOL': 1e-6,
    'CLEBSCH_TURNING_GUARD': 5e-2,
}


def get_setting(name: str):
    """Return a CLEBSCH_* setting, or its default outside a Django project."""
    if settings.configured or os.environ.get(ENVIRONMENT_VARIABLE):
        return getattr(settings, name, DEFAULTS.get(name))
    return DEFAULTS[name]
