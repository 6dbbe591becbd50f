from dataclasses import dataclass


@dataclass(frozen=True)
class GeneratorMonomial:
    """@private"""

    a: tuple[tuple[int, int], ...] = ()
    b: tuple[tuple[int, int], ...] = ()
    f: tuple[tuple[int, int], ...] = ()


def _generators(n: int, g: int, only_a: bool) -> list[tuple[str, int, int, int]]:
    # (family, rank, b-index, degree)
    generators = []
    for r in range(2, n + 1):
        generators.append(("a", r, 0, 2 * r))
        if only_a:
            continue
        generators.extend(("b", r, k, 2 * r - 1) for k in range(1, 2 * g + 1))
        generators.append(("f", r, 0, 2 * r - 2))
    return generators


def monomials_of_degree(n: int, g: int, degree: int, only_a: bool = False) -> list[GeneratorMonomial]:
    """All monomials of a given cohomological degree in the generators a_r, b_r^k and f_r.

    Args:
        n: the rank.
        g: the genus.
        degree: the cohomological degree.
        only_a: restrict to monomials in a_2, ..., a_n.
    Returns:
        the monomials, b-factors are listed in increasing (r, k) order and occur at most once.
    """
    generators = _generators(n, g, only_a)
    found: list[GeneratorMonomial] = []

    def extend(index: int, remaining: int, chosen: list[tuple[str, int, int, int]]) -> None:
        if remaining == 0:
            found.append(_collect(chosen))
            return
        if index == len(generators) or remaining < 0:
            return
        family, r, k, weight = generators[index]
        limit = 1 if family == "b" else remaining // weight
        for count in range(limit + 1):
            if count * weight > remaining:
                break
            extend(index + 1, remaining - count * weight, chosen + [(family, r, k, count)])

    if degree >= 0:
        extend(0, degree, [])
    return found


def _collect(chosen: list[tuple[str, int, int, int]]) -> GeneratorMonomial:
    a = tuple((r, c) for family, r, _, c in chosen if family == "a" and c)
    b = tuple(sorted((r, k) for family, r, k, c in chosen if family == "b" and c))
    f = tuple((r, c) for family, r, _, c in chosen if family == "f" and c)
    return GeneratorMonomial(a, b, f)


def complementary_monomials(n: int, g: int, degree: int) -> list[GeneratorMonomial]:
    """Monomials that complete a class of `degree` to the top degree 2(n²-1)(g-1)."""
    return monomials_of_degree(n, g, 2 * (n * n - 1) * (g - 1) - degree)
