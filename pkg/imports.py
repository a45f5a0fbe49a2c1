# ── Future compatibility ─────────────────────────────────────────────
from __future__ import annotations

# ── Standard library ────────────────────────────────────────────────
import datetime
import json
import os
import re
import traceback
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

# ── Third-party libraries ───────────────────────────────────────────
import numpy as np
import scipy.linalg as la
from numpy.polynomial import polynomial as npoly

# ── Interface related ────────────────────────────────────────────────
import typer
from rich.console import Console
from rich.markup import escape
from rich.table import Table
from rich.text import Text

__all__ = [
    # ── Standard library ──
    "dataclass",
    "datetime",
    "Enum",
    "field",
    "fields",
    "json",
    "os",
    "Path",
    "re",
    "traceback",

    # ── Typing ──
    "Any",
    "Dict",
    "Iterable",
    "List",
    "Optional",
    "Sequence",
    "Union",

    # ── Third-party ──
    "la",
    "np",
    "npoly",

    # ── CLI / Interface ──
    "Console",
    "escape",
    "Table",
    "Text",
    "typer",
]
