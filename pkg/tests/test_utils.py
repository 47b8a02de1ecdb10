import pytest

from pypctta.utils import derive_seed, get_thread_count, map_ordered, splitmix64


def test_splitmix64_reference_value() -> None:
    # first output of splitmix64 seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_derive_seed_is_distinct_and_stable() -> None:
    seeds = [derive_seed(7, k) for k in range(1000)]
    assert len(set(seeds)) == len(seeds)
    assert seeds == [derive_seed(7, k) for k in range(1000)]
    assert derive_seed(7, 0) != derive_seed(8, 0)


def test_derive_seed_negative_index() -> None:
    with pytest.raises(ValueError, match="non-negative"):
        derive_seed(0, -1)


@pytest.mark.parametrize(
    "env, requested, expected",
    [("3", None, 3), ("0", 2, 2), ("5", 1, 1)],
    ids=["from-env", "explicit", "explicit-overrides-env"],
)
def test_get_thread_count(monkeypatch, env, requested, expected) -> None:
    monkeypatch.setenv("PCTTA_THREADS", env)
    assert get_thread_count(requested) == expected


def test_get_thread_count_auto(monkeypatch) -> None:
    monkeypatch.setenv("PCTTA_THREADS", "0")
    assert get_thread_count() >= 1


def test_get_thread_count_invalid(monkeypatch) -> None:
    monkeypatch.setenv("PCTTA_THREADS", "many")
    with pytest.raises(ValueError, match="PCTTA_THREADS"):
        get_thread_count()
    with pytest.raises(ValueError):
        get_thread_count(-1)


@pytest.mark.parametrize("threads", [1, 4], ids=["inline", "pool"])
def test_map_ordered_keeps_order(threads) -> None:
    assert map_ordered(lambda x: x * x, list(range(50)), threads) == [
        x * x for x in range(50)
    ]
