import pytest
from matplotlib import pyplot as plt
from matplotlib.axes import Axes

from pypctta.plot_utils import instantiate_axes_row, validate_axes_array


def test_validate_axes_array() -> None:
    _, axes = plt.subplots(2, 3)
    validate_axes_array(axes, [2, 3])
    validate_axes_array(list(axes[0]), 3)
    with pytest.raises(ValueError, match="Invalid value for axes"):
        validate_axes_array(axes, [3, 2])
    with pytest.raises(ValueError):
        validate_axes_array(["not an axes"], 1)
    plt.close("all")


def test_instantiate_axes_row() -> None:
    axes = instantiate_axes_row(3)
    assert len(axes) == 3
    assert all(isinstance(ax, Axes) for ax in axes)
    assert axes[0].figure.get_size_inches()[0] == pytest.approx(13.5)
    assert instantiate_axes_row(3, axes=axes) == axes
    with pytest.raises(ValueError):
        instantiate_axes_row(2, axes=axes)
    plt.close("all")
