import dataclasses
import json
import math

import numpy as np
import pytest

from di_poisson.core.codebook import (
    Codebook,
    CodebookInvalid,
    CodebookSizeOverflow,
    CodeParams,
    GenerationStalled,
    InfeasibleDistance,
    codebook_size,
    derive_params,
    epsilon_prime,
    generate,
    min_distance,
    pairwise_distances,
    precision,
    ratio_separation_ok,
    verify,
)
from di_poisson.core.domain import ParameterError
from di_poisson.core.rng import RandomStream

RHO = 0.01
LAM = 0.2


def table_params(n: int = 19, **kwargs) -> CodeParams:
    return derive_params(n, 0.1, 1000.0, 1000.0, 1e5, 0.99, 1.0 / 3.0, RHO, **kwargs)


def small_params(size: int = 40) -> CodeParams:
    return table_params(10, size=size)


def test_codebook_size():
    assert codebook_size(19, 0.1) == 268
    assert abs(codebook_size(28, 0.1) - 11273) <= 1
    assert codebook_size(1, 0.7) == 1


def test_codebook_size_overflow():
    with pytest.raises(CodebookSizeOverflow):
        codebook_size(100, 1.0)


def test_codebook_size_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        codebook_size(0, 0.1)
    with pytest.raises(ParameterError):
        codebook_size(19, 0.0)


def test_derive_params_reference_values():
    params = table_params(19)

    assert params.amplitude == 1000.0
    assert params.eps_n == pytest.approx(98538.6, abs=0.1)
    assert params.delta_n == pytest.approx(3.2846, abs=0.001)
    assert params.d_min == pytest.approx(27.36, abs=0.01)
    assert params.size == 268


def test_derive_params_at_n_28():
    params = table_params(28)

    assert params.delta_n == pytest.approx(3.278, abs=0.001)
    assert params.d_min == pytest.approx(33.18, abs=0.01)


def test_distance_tied_to_threshold_scale():
    params = table_params(19, a_dist=None)

    assert params.d_min == pytest.approx(2 * (19 * params.eps_n) ** 0.5)


def test_infeasible_distance():
    with pytest.raises(InfeasibleDistance):
        table_params(19, a_dist=1e9)


@pytest.mark.parametrize(
    "overrides",
    [{"b": 1.0}, {"b": 0.0}, {"c": 2.0}, {"c": 0.0}, {"a": -1.0}, {"rho": 0.0}],
)
def test_derive_params_rejects_out_of_range(overrides):
    arguments = dict(
        n=19, rate=0.1, p_ave=1000.0, p_max=1000.0, a=1e5, b=0.99, c=1.0 / 3.0, rho=RHO
    )
    arguments.update(overrides)

    with pytest.raises(ParameterError):
        derive_params(**arguments)


def test_amplitude_is_smaller_power():
    params = derive_params(19, 0.1, 500.0, 1000.0, 1e5, 0.99, 1.0 / 3.0, RHO)

    assert params.amplitude == 500.0


def test_generate_reference_codebook():
    params = table_params(19)

    codebook = generate(params, RandomStream.from_seed(0).child(19, 0, 1))

    assert codebook.size == 268
    assert codebook.n == 19
    assert verify(codebook).ok
    assert min_distance(codebook) >= params.d_min


def test_generate_is_deterministic():
    params = small_params()
    stream = RandomStream.from_seed(7)

    assert np.array_equal(generate(params, stream).codewords, generate(params, stream).codewords)


def test_generated_codebooks_verify_for_many_seeds():
    params = table_params(19)

    for seed in range(100):
        codebook = generate(params, RandomStream.from_seed(seed))

        assert codebook.size == 268
        assert verify(codebook).ok
        separation = ratio_separation_ok(codebook, RHO, LAM, params.b)
        assert separation.summary()["pairs"] == 268 * 267


def test_single_codeword():
    params = small_params(size=1)

    codebook = generate(params, RandomStream.from_seed(1))

    assert codebook.size == 1
    assert verify(codebook).ok
    assert min_distance(codebook) == float("inf")


def test_generation_stalls():
    params = dataclasses.replace(
        small_params(), n=1, size=2, amplitude=1.0, p_ave=1.0, p_max=1.0, d_min=3.0
    )

    with pytest.raises(GenerationStalled) as excinfo:
        generate(params, RandomStream.from_seed(1), max_rejections=100)

    assert excinfo.value.accepted == 1
    assert excinfo.value.budget == 100


def test_verify_reports_peak_violation():
    codebook = generate(small_params(), RandomStream.from_seed(2))
    codebook.codewords[3, 4] = codebook.params.amplitude + 1

    report = verify(codebook)

    assert len(report.of_kind("peak")) == 1
    assert report.of_kind("peak")[0].indices == [4, 5]


def test_verify_reports_duplicate_codewords():
    codebook = generate(small_params(), RandomStream.from_seed(2))
    codebook.codewords[1] = codebook.codewords[0]

    distance = verify(codebook).of_kind("distance")

    assert len(distance) == 1
    assert distance[0].indices == [1, 2]
    assert distance[0].value == 0.0


def test_verify_reports_average_violation():
    codebook = generate(small_params(), RandomStream.from_seed(2))
    codebook.params = dataclasses.replace(codebook.params, p_ave=1.0)

    assert len(verify(codebook).of_kind("average")) == codebook.size


def test_verify_reports_shape_mismatch():
    codebook = generate(small_params(), RandomStream.from_seed(2))
    codebook.codewords = codebook.codewords[:-1]

    assert verify(codebook).of_kind("shape")


def test_codeword_indices_are_one_based():
    codebook = generate(small_params(), RandomStream.from_seed(2))

    assert np.array_equal(codebook.codeword(1), codebook.codewords[0])
    with pytest.raises(IndexError):
        codebook.codeword(0)
    with pytest.raises(IndexError):
        codebook.codeword(codebook.size + 1)


def test_pairwise_distances():
    codebook = generate(small_params(), RandomStream.from_seed(2))

    distances = pairwise_distances(codebook, 1)

    assert distances[0] == 0.0
    assert distances[1:].min() == pytest.approx(
        np.linalg.norm(codebook.codewords[1:] - codebook.codewords[0], axis=1).min()
    )


def test_epsilon_prime():
    assert epsilon_prime(19, 1000.0, 0.99) == pytest.approx(2.854, abs=0.01)


def two_codeword_book(first, second) -> Codebook:
    params = dataclasses.replace(table_params(19), size=2)
    return Codebook(params=params, codewords=np.array([first, second], dtype=np.float64))


def test_ratio_separation_is_ordered():
    codebook = two_codeword_book(np.zeros(19), np.full(19, 1000.0))

    separation = ratio_separation_ok(codebook, RHO, LAM, 0.99)

    # 10.2 / 0.2 = 51 but 0.2 / 10.2 stays within eps_prime of 1
    assert separation[(1, 2)] is True
    assert separation[(2, 1)] is False
    assert len(separation) == 2
    assert list(separation.violations()) == [(2, 1)]


def test_ratio_separation_of_identical_codewords():
    codebook = two_codeword_book(np.full(19, 300.0), np.full(19, 300.0))

    separation = ratio_separation_ok(codebook, RHO, LAM, 0.99)

    assert separation[(1, 2)] is False
    assert separation.summary()["not_separated"] == 2
    with pytest.raises(KeyError):
        separation[(1, 1)]


def test_ratio_separation_rejects_bad_b():
    codebook = two_codeword_book(np.zeros(19), np.full(19, 1000.0))

    with pytest.raises(ParameterError):
        ratio_separation_ok(codebook, RHO, LAM, 0.0)


def test_json_round_trip_is_exact():
    codebook = generate(small_params(), RandomStream.from_seed(4))

    loaded = Codebook.from_json(codebook.to_json())

    assert loaded.params == codebook.params
    assert np.array_equal(loaded.codewords, codebook.codewords)


def test_loading_corrupted_codebook_fails():
    codebook = generate(small_params(), RandomStream.from_seed(4))
    document = codebook.to_dict()
    document["codewords"][0][0] = -5.0

    with pytest.raises(CodebookInvalid) as excinfo:
        Codebook.from_json(json.dumps(document))

    assert excinfo.value.report.of_kind("peak")
    assert not verify(Codebook.from_json(json.dumps(document), validate=False)).ok


def test_loading_codebook_with_inflated_amplitude_fails():
    codebook = generate(small_params(), RandomStream.from_seed(4))
    document = codebook.to_dict()
    document["params"]["amplitude"] = 5000.0
    document["codewords"][0][0] = 3000.0

    with pytest.raises(CodebookInvalid) as excinfo:
        Codebook.from_json(json.dumps(document))

    report = excinfo.value.report
    assert report.of_kind("params.amplitude")
    peak = report.of_kind("peak")
    assert [v.indices for v in peak] == [[1, 1]]
    assert peak[0].limit == 1000.0


@pytest.mark.parametrize(
    "field, value",
    [("delta_n", 100.0), ("eps_n", 1.0), ("d_min", 0.5), ("b", 1.5), ("c", 3.0)],
)
def test_verify_rederives_stored_parameters(field, value):
    codebook = generate(small_params(), RandomStream.from_seed(4))
    codebook.params = dataclasses.replace(codebook.params, **{field: value})

    report = verify(codebook)

    assert report.of_kind(f"params.{field}")
    assert "params" in report.of_kind(f"params.{field}")[0].describe()


def test_verify_rejects_infeasible_stored_distance():
    codebook = generate(small_params(size=1), RandomStream.from_seed(4))
    d_min = 2.0 * math.sqrt(10 * precision(10, 1e9, 0.99))
    codebook.params = dataclasses.replace(codebook.params, a_dist=1e9, d_min=d_min)

    report = verify(codebook)

    assert report.of_kind("params.d_min")
