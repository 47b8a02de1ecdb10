from __future__ import annotations

from typing import Any, List, Sequence, Tuple, Union

import numpy as np
from matplotlib import pyplot as plt
from matplotlib.axes import Axes


def validate_axes_array(axes: Any, shape: Union[int, List[int]]) -> None:
    """
    Checks that `axes` is an array-like of `Axes` objects with the given shape.

    Parameters
    ----------
    axes:
        Nested sequence or object array of `Axes`.
    shape:
        The expected shape; an int for a single row.

    Raises
    ------
    ValueError
        If `axes` does not have the requested shape or holds non-Axes objects.
    """
    expected = (shape,) if isinstance(shape, int) else tuple(shape)
    try:
        grid = np.asarray(axes, dtype=object)
    except (TypeError, ValueError):
        grid = np.empty(0, dtype=object)

    if grid.shape != expected or not all(isinstance(ax, Axes) for ax in grid.flat):
        raise ValueError(
            f"Invalid value for axes argument. Provide an array-like with Axes "
            f"objects and shape {list(expected)}."
        )


def instantiate_axes_row(
    n_axes: int,
    figsize: Tuple[float, float] | None = None,
    axes: Sequence[Axes] | None = None,
    **kwargs: Any,
) -> List[Axes]:
    """
    Validate axes objects if provided, otherwise create a row of new axes.

    Parameters
    ----------
    n_axes:
        The number of axes.
    figsize:
        The figure size (width, height) in inches, by default 4.5 inch per axes.
    axes:
        Optional existing axes, one per plot.
    **kwargs
        Additional keyword arguments to pass to the `plt.subplots()` function.

    Returns
    -------
    list
        `n_axes` Axes objects.
    """
    if axes is not None:
        validate_axes_array(axes, n_axes)
        return list(axes)

    kwargs_subplot = {
        "figsize": figsize if figsize is not None else (4.5 * n_axes, 4.0),
        "tight_layout": True,
        "squeeze": False,
    }
    kwargs_subplot.update(kwargs)

    _, grid = plt.subplots(1, n_axes, **kwargs_subplot)
    created = list(grid[0])
    validate_axes_array(created, n_axes)
    return created
