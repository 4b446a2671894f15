import os
import sys

import pandas as pd

from ..utils.config import get_settings

STDOUT = "-"


def save_frame_to_csv(frame: pd.DataFrame, path: str = STDOUT, float_format: str = None):
    """Write a result table as CSV; ``-`` writes to stdout.

    Floats use 12 significant digits and a ``.`` decimal point whatever the
    locale, so repeated runs produce byte-identical files.
    """
    float_format = float_format or get_settings().csv_float_format
    if path == STDOUT:
        frame.to_csv(sys.stdout, index=False, float_format=float_format, lineterminator="\n")
        return
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame.to_csv(path, index=False, float_format=float_format, lineterminator="\n")

