from fractions import Fraction
from pathlib import Path

import pytest

from moduli_py.caches import ResultCache, cache_key
from moduli_py.exceptions import CacheError
from moduli_py.models import EtaSpec, RankDegreeGenus, WeylElement, WeylTerm
from moduli_py.moduli import ModuliClient
from moduli_py.schemas import CacheRecord, RationalPayload, Report, WeylTermPayload


def test_result_cache(tmp_path: Path):
    rdg = RankDegreeGenus(2, 1, 2)
    spec = EtaSpec(a={2: 1}, f={2: 1})
    cache = ResultCache(tmp_path)
    assert len(cache) == 0
    key = cache_key("pair", rdg, spec)
    assert key != cache_key("pair", rdg, EtaSpec(f={2: 3}))
    assert key != cache_key("chern", rdg, spec)
    assert key == cache_key("pair", rdg, EtaSpec(a={2: 1}, f={2: 1}))

    cache.put("pair", rdg, spec, {"num": "1"})
    cache.put("pair", rdg, spec, {"num": "2"})
    assert ResultCache(tmp_path).get(key).value == {"num": "2"}
    assert len(ResultCache(tmp_path)) == 1
    assert cache.get("missing") is None

    (tmp_path / ResultCache.FILENAME).write_text("not json\n", encoding="utf-8")
    with pytest.raises(CacheError):
        ResultCache(tmp_path).get(key)


@pytest.mark.asyncio()
async def test_cached_client(tmp_path: Path):
    rdg = RankDegreeGenus(2, 1, 2)
    spec = EtaSpec(a={2: 1}, f={2: 1})
    cache = ResultCache(tmp_path)
    first = await ModuliClient(threads=2, cache=cache).pair(rdg, spec)
    assert len(cache) == 1

    reloaded = ResultCache(tmp_path)
    second = await ModuliClient(threads=2, cache=reloaded).pair(rdg, spec)
    assert second.value == first.value
    assert second.caps == first.caps
    assert second.terms == first.terms and second.terms

    verified = await ModuliClient(threads=2, cache=reloaded, verify_cache=True).pair(rdg, spec)
    assert verified.value == first.value
    assert len((tmp_path / ResultCache.FILENAME).read_text(encoding="utf-8").splitlines()) == 1

    chern = await ModuliClient(threads=2, cache=reloaded).chern(rdg, EtaSpec())
    again = await ModuliClient(threads=2, cache=ResultCache(tmp_path)).chern(rdg, EtaSpec())
    assert again.coefficients == chern.coefficients


def test_payload_round_trips(tmp_path: Path):
    rdg = RankDegreeGenus(3, 2, 2)
    spec = EtaSpec(a={3: 1}, b=[(2, 4), (3, 1)], f={2: 2})
    term = WeylTerm(WeylElement((1, 0)), Fraction(-7, 12))
    value = {"value": RationalPayload.of(Fraction(-7, 12)).model_dump(), "weyl_terms": [WeylTermPayload.of(term).model_dump()]}
    record = ResultCache(tmp_path).put("pair", rdg, spec, value)
    assert CacheRecord.model_validate_json(record.model_dump_json()) == record
    assert ResultCache(tmp_path).get(record.key) == record
    assert WeylTermPayload.model_validate(record.value["weyl_terms"][0]).to_term() == term

    report = Report(command="pair", n=3, d=2, g=2, eta=str(spec), result=value["value"], metadata={"terms": [value]})
    assert Report.model_validate_json(report.model_dump_json()) == report
    assert RationalPayload.model_validate_json(RationalPayload.of(Fraction(-7, 12)).model_dump_json()).to_fraction() == Fraction(-7, 12)
